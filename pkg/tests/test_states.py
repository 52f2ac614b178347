import math

import numpy as np
import pytest

from gaussio.errors import BasisError, DimensionError, InvariantError
from gaussio.states import (
    QUADRATURE,
    CovState,
    db_to_r,
    embed,
    from_quadrature,
    passive_transform,
    product_state,
    quadrature_unitary,
    squeezed_state,
    thermal_state,
    to_quadrature,
    two_mode_squeezed_state,
    vacuum_state,
)


def test_vacuum_stays_identity_in_quadratures():
    np.testing.assert_allclose(to_quadrature(np.eye(4)), np.eye(4), atol=1e-15)


def test_squeezed_ladder_cm_maps_to_diagonal():
    r = 0.37
    lad = np.array([[math.cosh(2 * r), -math.sinh(2 * r)], [-math.sinh(2 * r), math.cosh(2 * r)]])
    np.testing.assert_allclose(to_quadrature(lad), np.diag([math.exp(-2 * r), math.exp(2 * r)]), atol=1e-14)


def test_round_trip_random_hermitian(rng):
    x = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    x = x + x.conj().T
    np.testing.assert_allclose(from_quadrature(to_quadrature(x)), x, atol=1e-14)
    u = quadrature_unitary(3)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(6), atol=1e-15)


def test_state_basis_guard():
    q = to_quadrature(vacuum_state(1))
    assert q.basis == QUADRATURE
    with pytest.raises(BasisError):
        to_quadrature(q)
    with pytest.raises(BasisError):
        from_quadrature(vacuum_state(1))
    with pytest.raises(BasisError):
        CovState(np.eye(2), basis="fock")


def test_covstate_validation():
    with pytest.raises(DimensionError):
        CovState(np.eye(3))
    with pytest.raises(InvariantError):
        CovState(np.array([[1, 1j], [1j, 1]]))
    s = vacuum_state(2)
    with pytest.raises(ValueError):
        s.sigma[0, 0] = 3


def test_squeezed_state_eigenvalues():
    s = squeezed_state(20)
    np.testing.assert_allclose(np.linalg.eigvalsh(s.quadrature_sigma()), [0.01, 100], rtol=1e-12)
    assert db_to_r(20) == pytest.approx(math.log(10))
    p = squeezed_state(20, "p").quadrature_sigma()
    assert p[1, 1] == pytest.approx(0.01)
    assert squeezed_state(7, 0.3).is_physical()


def test_physicality_flags():
    assert vacuum_state(3).is_physical()
    assert thermal_state([0.0, 2.0]).is_physical()
    assert not CovState(0.5 * np.eye(2)).is_physical()
    assert two_mode_squeezed_state(0.8).is_physical()


def test_embed_and_product():
    s = embed(squeezed_state(3), 1, 3)
    np.testing.assert_allclose(s.sigma[2:4, 2:4], squeezed_state(3).sigma)
    np.testing.assert_allclose(s.sigma[:2, :2], np.eye(2))
    assert product_state(vacuum_state(1), thermal_state(1.0)).n_modes == 2
    with pytest.raises(IndexError):
        embed(vacuum_state(1), 3, 3)


def test_passive_transform_preserves_vacuum(rng):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    out = vacuum_state(3).transformed(passive_transform(q))
    np.testing.assert_allclose(out.sigma, np.eye(6), atol=1e-14)
