"""Flux, Jacobian, and hyperbolicity certificates for the Galerkin system.

State vectors stack the water height expansion on top of the discharge
expansion.  The system is hyperbolic whenever the height multiplication
matrix is symmetric positive definite, which node positivity of the
height expansion guarantees for rules exact on cubes of the truncated
space.
"""

from dataclasses import dataclass

import numpy as np

from .pce import galerkin_matrix


class HyperbolicityError(RuntimeError):
    """Raised when the system leaves its hyperbolic regime."""


@dataclass(frozen=True)
class SgState:
    """Height and discharge expansion coefficients of one state."""

    h_hat: np.ndarray
    q_hat: np.ndarray

    def stacked(self):
        return np.concatenate([self.h_hat, self.q_hat])


@dataclass(frozen=True)
class HyperbolicityCertificate:
    positive_at_nodes: bool
    min_node_height: float
    spd: bool
    min_eigenvalue: float

    def ok(self):
        return self.positive_at_nodes and self.spd


def check_positivity(basis, rule, h_hat):
    """Certify node positivity of the height and definiteness of its matrix."""
    node_heights = rule.node_basis @ np.asarray(h_hat, dtype=float)
    min_height = float(node_heights.min())
    eigenvalues = np.linalg.eigvalsh(galerkin_matrix(basis, h_hat))
    min_eig = float(eigenvalues[0])
    return HyperbolicityCertificate(
        positive_at_nodes=min_height > 0.0,
        min_node_height=min_height,
        spd=min_eig > 0.0,
        min_eigenvalue=min_eig,
    )


def _velocity(basis, state, u_hat):
    if u_hat is not None:
        return np.asarray(u_hat, dtype=float)
    mat = galerkin_matrix(basis, state.h_hat)
    return np.linalg.solve(mat, state.q_hat)


def sg_flux(basis, state, g, u_hat=None):
    """Galerkin flux of the state.

    When the caller already holds a (possibly desingularized) velocity
    expansion it is used as-is instead of solving with the height matrix.
    """
    u = _velocity(basis, state, u_hat)
    ph = galerkin_matrix(basis, state.h_hat)
    pq = galerkin_matrix(basis, state.q_hat)
    top = np.asarray(state.q_hat, dtype=float)
    bottom = 0.5 * g * (ph @ state.h_hat) + pq @ u
    return np.concatenate([top, bottom])


def sg_jacobian(basis, state, g, u_hat=None, p_inv=None):
    """Jacobian of the Galerkin flux with respect to the stacked state."""
    k = basis.size
    ph = galerkin_matrix(basis, state.h_hat)
    pq = galerkin_matrix(basis, state.q_hat)
    u = _velocity(basis, state, u_hat)
    pu = galerkin_matrix(basis, u)
    if p_inv is None:
        x = np.linalg.solve(ph, pq.T).T  # pq @ ph^{-1}, ph symmetric
    else:
        x = pq @ p_inv
    jac = np.zeros((2 * k, 2 * k))
    jac[:k, k:] = np.eye(k)
    jac[k:, :k] = g * ph - x @ pu
    jac[k:, k:] = pu + x
    return jac


def symmetrized_jacobian(basis, state, g):
    """Symmetric matrix similar to the flux Jacobian.

    Exists whenever the height matrix is positive definite; its existence
    is the hyperbolicity proof, so a non-definite height matrix raises.
    """
    k = basis.size
    ph = galerkin_matrix(basis, state.h_hat)
    lam, vec = np.linalg.eigh(g * ph)
    if lam[0] <= 0.0:
        raise HyperbolicityError(
            f"height matrix not positive definite (min eigenvalue {lam[0]:.3e})"
        )
    root = (vec * np.sqrt(lam)) @ vec.T
    root_inv = (vec / np.sqrt(lam)) @ vec.T
    pq = galerkin_matrix(basis, state.q_hat)
    u = np.linalg.solve(ph, state.q_hat)
    a = g * (root_inv @ pq @ root_inv)
    b = galerkin_matrix(basis, u)
    out = np.zeros((2 * k, 2 * k))
    out[:k, :k] = -0.5 * (-2.0 * root - b - a)
    out[:k, k:] = -0.5 * (a - b)
    out[k:, :k] = -0.5 * (a - b)
    out[k:, k:] = -0.5 * (2.0 * root - b - a)
    return out


def _real_spectrum(eigenvalues, imag_tol):
    radius = np.max(np.abs(eigenvalues))
    max_imag = np.max(np.abs(eigenvalues.imag))
    if radius > 0.0 and max_imag > imag_tol * radius:
        raise HyperbolicityError(
            f"complex characteristic speeds: |Im|/radius = {max_imag / radius:.3e}"
        )
    return eigenvalues.real


def wave_speeds(basis, left, right, g, u_hat_left=None, u_hat_right=None, imag_tol=1e-8):
    """One-sided local speeds from the extreme Jacobian eigenvalues."""
    ev_l = _real_spectrum(
        np.linalg.eigvals(sg_jacobian(basis, left, g, u_hat=u_hat_left)), imag_tol
    )
    ev_r = _real_spectrum(
        np.linalg.eigvals(sg_jacobian(basis, right, g, u_hat=u_hat_right)), imag_tol
    )
    a_minus = min(ev_l.min(), ev_r.min(), 0.0)
    a_plus = max(ev_l.max(), ev_r.max(), 0.0)
    return a_minus, a_plus


def spectral_bound_check(basis, state, g, tol=1e-9):
    """Velocity matrix eigenvalues sandwiched by the Jacobian spectrum."""
    u = _velocity(basis, state, None)
    ev_u = np.linalg.eigvalsh(galerkin_matrix(basis, u))
    ev_j = _real_spectrum(np.linalg.eigvals(sg_jacobian(basis, state, g)), 1e-8)
    return ev_j.min() <= ev_u.min() + tol and ev_u.max() <= ev_j.max() + tol
