import numpy as np
import pytest

from cavityrotor.errors import ParameterError
from cavityrotor.oracle import (FockBasis, build_hamiltonian, compare_with_rotor,
                                exact_spectrum, magnetization, raising_operator, rotor_levels,
                                sector_dimension, spin_squared, total_spin_levels)


def test_basis_enumeration():
    b = FockBasis(4, 0)
    assert b.states == ((0, 4, 0), (1, 2, 1), (2, 0, 2))
    assert FockBasis(4, None).dimension == 15
    assert FockBasis(3, 1).dimension == sector_dimension(3, 1) == 2
    assert sector_dimension(3, 5) == 0
    with pytest.raises(ParameterError):
        FockBasis(0)


def test_single_atom():
    # N = 1: the lone m=0 state has F^2 = 2
    assert exact_spectrum(1, 1.0, 0.3) == pytest.approx([2.0 - 0.3], abs=1e-14)


def test_two_atoms_without_field():
    assert np.max(np.abs(exact_spectrum(2, 1.0, 0.0) - [0.0, 3.0])) <= 1e-12


@pytest.mark.parametrize("N", [1, 2, 3, 7, 12, 25, 40])
def test_sector_dimension_and_total_spin_levels(N):
    levels = exact_spectrum(N, 1.0, 0.0)
    assert len(levels) == N // 2 + 1 == sector_dimension(N)
    assert np.max(np.abs(levels - total_spin_levels(N, 1.0))) < 1e-10


def test_total_spin_in_other_sectors():
    levels = exact_spectrum(9, 2.0, 0.0, lz=3)
    assert np.allclose(levels, total_spin_levels(9, 2.0, lz=3), atol=1e-10)


def test_hamiltonian_is_hermitian_and_conserves_magnetization():
    full = FockBasis(6, None)
    h = build_hamiltonian(full, 1.0, 0.7)
    assert np.max(np.abs(h - h.T)) < 1e-12
    mz = magnetization(full)
    assert np.max(np.abs(h @ mz - mz @ h)) < 1e-12


def test_spin_algebra():
    # [F+, F-] = 2 Fz on the full space
    b = FockBasis(5, None)
    up = raising_operator(b, b).toarray()
    fz = magnetization(b)
    assert np.allclose(up @ up.T - up.T @ up, 2 * fz, atol=1e-12)
    f2 = spin_squared(b)
    assert np.allclose(np.sort(np.linalg.eigvalsh(f2))[-1], 5 * 6)


def test_dimension_cap():
    with pytest.raises(ParameterError):
        build_hamiltonian(FockBasis(40, None), 1.0, 0.0, max_dim=100)


def test_rotor_levels_sectors():
    with pytest.raises(ParameterError):
        rotor_levels(10, 1.0, 0.05, "F2", "all_m", 3)
    lv = rotor_levels(20, 1.0, 0.0, "F2_over_N", "even_m", 4)
    # free rotor on period pi: a (2m)^2 with a = c2/N, doubly degenerate
    assert np.allclose(lv, [0.0, 0.2, 0.2, 0.8], atol=1e-10)


def test_rotor_gaps_approach_exact_gaps():
    comps = compare_with_rotor([10, 20, 40], 1.0, 0.05)
    key = ("F2_over_N", "even_m_even_parity")
    assert comps[-1].best == key
    devs = [c.mean_abs_deviation(key) for c in comps]
    assert devs[0] > devs[1] > devs[2]
    assert devs == pytest.approx([0.094, 0.069, 0.038], abs=2e-3)
    assert comps[-1].gap_ratio(key) == pytest.approx(1.0, abs=0.1)
