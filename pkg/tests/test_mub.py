import numpy as np
import pytest

from steerkit.assemblage import assemblage_from_state, maximally_entangled_state
from steerkit.errors import DimensionError, UnsupportedDimension
from steerkit.mub import MubFamily, conjugate_projectors, mub_family, verify_unbiased


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_families_are_unbiased(d):
    f = mub_family(d)
    assert f.n_bases == d + 1
    rep = verify_unbiased(f, 1e-10)
    assert rep.passed, rep.violations
    assert np.allclose(f.bases[d], np.eye(d))


def test_direct_overlaps_d3():
    f = mub_family(3)
    for x in range(4):
        for y in range(4):
            if x != y:
                for a in range(3):
                    for c in range(3):
                        assert abs(np.vdot(f.vector(a, x), f.vector(c, y))) == pytest.approx(1 / np.sqrt(3), abs=1e-12)


def test_d2_are_pauli_eigenbases():
    f = mub_family(2)
    X = np.array([[0, 1], [1, 0]])
    Y = np.array([[0, -1j], [1j, 0]])
    Z = np.diag([1, -1])
    for x, P in enumerate((X, Y, Z)):
        for a in range(2):
            v = f.vector(a, x)
            assert np.allclose(P @ v, (1 - 2 * a) * v)


def test_unsupported_and_invalid():
    with pytest.raises(UnsupportedDimension):
        mub_family(4)
    with pytest.raises(DimensionError):
        mub_family(1)


def test_injected_defect_and_relabeling():
    f = mub_family(5)
    b = np.array(f.bases)
    b[1, 2] *= 1.01
    rep = verify_unbiased(MubFamily(5, b), 1e-10)
    assert not rep.passed and any("orthonormality" in v for v in rep.violations)
    swapped = np.array(f.bases)[[1, 0, 2, 3, 4, 5]]
    assert verify_unbiased(MubFamily(5, swapped), 1e-10).passed


def test_conjugate_projectors():
    f = mub_family(2)
    m = conjugate_projectors(f)
    for x in (0, 2):
        for a in range(2):
            assert np.allclose(m.effect(a, x), f.projector(a, x))
    assert np.allclose(m.effect(0, 1), f.projector(1, 1))
    assert np.allclose(m.effect(1, 1), f.projector(0, 1))
    for x in range(3):
        assert np.abs(m.effects[x].sum(axis=0) - np.eye(2)).max() <= 1e-12


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_maxent_reproduces_family(d):
    f = mub_family(d)
    a = assemblage_from_state(maximally_entangled_state(d), conjugate_projectors(f))
    for x in range(d + 1):
        for b in range(d):
            assert np.abs(a.member(b, x) - f.projector(b, x) / d).max() <= 1e-12


def test_json_round_trip():
    f = mub_family(3)
    g = MubFamily.from_json(f.to_json())
    assert np.array_equal(f.bases, g.bases)
