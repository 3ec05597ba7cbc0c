from pathlib import Path

import pytest

from cavityrotor import RotorModel, load_config, parse_config, default_config
from cavityrotor.runner import resolve_system

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def record_acceptance(number: int, passed: bool, text: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def desk_config():
    return parse_config(default_config())


@pytest.fixture(scope="session")
def desk_calibration():
    return resolve_system(parse_config(default_config()))


@pytest.fixture(scope="session")
def desk_model(desk_calibration):
    return RotorModel.from_params(desk_calibration.params)


@pytest.fixture(scope="session")
def reference_calibration():
    return resolve_system(load_config(CONFIGS / "reference.json"))


def small_config(n_cycles=1, n_points=512, **protocol):
    """Desk configuration shrunk to a sub-second run."""
    cfg = parse_config(default_config())
    cfg.grid.n_points = n_points
    cfg.protocol.n_cycles = n_cycles
    for k, v in protocol.items():
        setattr(cfg.protocol, k, v)
    return cfg
