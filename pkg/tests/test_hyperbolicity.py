import numpy as np
import pytest

from sgswe.hyperbolicity import (
    HyperbolicityError,
    SgState,
    check_positivity,
    sg_flux,
    sg_jacobian,
    spectral_bound_check,
    symmetrized_jacobian,
    wave_speeds,
)
from sgswe.pce import build_basis, gauss_rule, min_quadrature_size


def random_positive_state(basis, rule, rng, q_scale=0.5):
    """Rejection-sample a height expansion positive at all nodes."""
    k = basis.size
    while True:
        h = np.zeros(k)
        h[0] = rng.uniform(0.5, 2.0)
        h[1:] = rng.normal(scale=0.25 / np.arange(1, k), size=k - 1)
        if (rule.node_basis @ h).min() > 0.0:
            break
    q = rng.normal(scale=q_scale, size=k)
    return SgState(h_hat=h, q_hat=q)


def test_certificate_frozen():
    basis = build_basis(0.0, 0.0, 2)
    rule = gauss_rule(basis, 13)
    cert = check_positivity(basis, rule, [1.0, 1.0])
    assert not cert.positive_at_nodes
    assert not cert.spd
    assert cert.min_node_height < 0.0
    cert2 = check_positivity(basis, rule, [1.0, 0.1])
    assert cert2.positive_at_nodes and cert2.spd
    assert cert2.ok()


def test_flux_frozen_k1():
    basis = build_basis(0.0, 0.0, 1)
    state = SgState(h_hat=np.array([2.0]), q_hat=np.array([3.0]))
    flux = sg_flux(basis, state, g=1.0)
    assert np.allclose(flux, [3.0, 6.5], atol=1e-14)


def test_jacobian_frozen_k1():
    basis = build_basis(0.0, 0.0, 1)
    still = SgState(h_hat=np.array([1.0]), q_hat=np.array([0.0]))
    jac = sg_jacobian(basis, still, g=1.0)
    assert np.allclose(jac, [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)
    assert np.allclose(np.sort(np.linalg.eigvals(jac).real), [-1.0, 1.0], atol=1e-14)
    moving = SgState(h_hat=np.array([1.0]), q_hat=np.array([1.0]))
    jac2 = sg_jacobian(basis, moving, g=1.0)
    assert np.allclose(jac2, [[0.0, 1.0], [0.0, 2.0]], atol=1e-14)
    assert np.allclose(np.sort(np.linalg.eigvals(jac2).real), [0.0, 2.0], atol=1e-14)


def test_jacobian_matches_finite_differences():
    basis = build_basis(3.0, 1.0, 4)
    rule = gauss_rule(basis, min_quadrature_size(4))
    rng = np.random.default_rng(2)
    state = random_positive_state(basis, rule, rng)
    jac = sg_jacobian(basis, state, g=2.0)
    k = basis.size
    eps = 1e-6
    stacked = state.stacked()
    num = np.zeros_like(jac)
    for j in range(2 * k):
        up = stacked.copy()
        dn = stacked.copy()
        up[j] += eps
        dn[j] -= eps
        f_up = sg_flux(basis, SgState(up[:k], up[k:]), g=2.0)
        f_dn = sg_flux(basis, SgState(dn[:k], dn[k:]), g=2.0)
        num[:, j] = (f_up - f_dn) / (2.0 * eps)
    assert np.max(np.abs(jac - num)) < 1e-6


def test_symmetrized_frozen_k1():
    basis = build_basis(0.0, 0.0, 1)
    still = SgState(h_hat=np.array([1.0]), q_hat=np.array([0.0]))
    sym = symmetrized_jacobian(basis, still, g=1.0)
    assert np.allclose(sym, [[1.0, 0.0], [0.0, -1.0]], atol=1e-14)


def test_symmetrized_similar_to_jacobian():
    basis = build_basis(0.0, 0.0, 5)
    rule = gauss_rule(basis, min_quadrature_size(5))
    rng = np.random.default_rng(4)
    for _ in range(25):
        state = random_positive_state(basis, rule, rng)
        jac = sg_jacobian(basis, state, g=1.0)
        sym = symmetrized_jacobian(basis, state, g=1.0)
        scale = max(1.0, np.max(np.abs(sym)))
        assert np.max(np.abs(sym - sym.T)) < 1e-9 * scale
        ev_j = np.sort(np.linalg.eigvals(jac).real)
        ev_s = np.sort(np.linalg.eigvalsh(sym))
        assert np.max(np.abs(ev_j - ev_s)) < 1e-9 * max(1.0, np.abs(ev_s).max())


def test_symmetrized_needs_definite_height_matrix():
    basis = build_basis(0.0, 0.0, 2)
    bad = SgState(h_hat=np.array([1.0, 1.0]), q_hat=np.array([0.0, 0.0]))
    with pytest.raises(HyperbolicityError):
        symmetrized_jacobian(basis, bad, g=1.0)


def test_spectral_sandwich():
    basis = build_basis(1.0, 3.0, 6)
    rule = gauss_rule(basis, min_quadrature_size(6))
    rng = np.random.default_rng(8)
    for _ in range(25):
        state = random_positive_state(basis, rule, rng)
        assert spectral_bound_check(basis, state, g=2.0)


def test_wave_speeds_signs_and_rest_state():
    basis = build_basis(0.0, 0.0, 3)
    rule = gauss_rule(basis, min_quadrature_size(3))
    rng = np.random.default_rng(12)
    left = random_positive_state(basis, rule, rng)
    right = random_positive_state(basis, rule, rng)
    a_minus, a_plus = wave_speeds(basis, left, right, g=1.0)
    assert a_minus <= 0.0 <= a_plus
    still = SgState(h_hat=left.h_hat, q_hat=np.zeros(3))
    a_minus, a_plus = wave_speeds(basis, still, still, g=1.0)
    # gravity waves are symmetric about zero for a resting state
    assert abs(a_minus + a_plus) < 1e-12
    assert a_plus > 0.0


def test_node_positivity_implies_spd():
    for alpha, beta in [(0.0, 0.0), (3.0, 1.0)]:
        basis = build_basis(alpha, beta, 9)
        rule = gauss_rule(basis, min_quadrature_size(9))
        rng = np.random.default_rng(21)
        for _ in range(50):
            state = random_positive_state(basis, rule, rng)
            cert = check_positivity(basis, rule, state.h_hat)
            assert cert.positive_at_nodes
            assert cert.spd
            # positivity at the nodes forces a positive mean as well
            assert state.h_hat[0] > 0.0
