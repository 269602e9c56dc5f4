"""Orthonormal polynomial chaos for a Beta-distributed random input.

The random input lives on [-1, 1] with probability density proportional
to (1 - xi)**alpha * (1 + xi)**beta, alpha, beta > -1.  All inner
products are taken against the normalized density, so the first basis
function is identically one, expectations are plain first coefficients,
and Gauss weights sum to one.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BasisSpec",
    "QuadratureRule",
    "build_basis",
    "evaluate_basis",
    "gauss_rule",
    "min_quadrature_size",
    "jacobi_recurrence",
    "galerkin_matrix",
    "galerkin_matrices",
    "galerkin_product",
    "galerkin_ratio",
    "project",
    "xi_expansion",
]


def jacobi_recurrence(alpha, beta, n):
    """Monic three-term recurrence coefficients for the Beta weight.

    Returns arrays (a, b) of length n such that the monic orthogonal
    polynomials satisfy pi_{k+1} = (x - a[k]) pi_k - b[k] pi_{k-1}.
    b[0] is set to 1, which normalizes the weight to unit mass.
    """
    if n < 1:
        return np.zeros(0), np.zeros(0)
    a = np.zeros(n)
    b = np.zeros(n)
    apb = alpha + beta
    a[0] = (beta - alpha) / (apb + 2.0)
    b[0] = 1.0
    if n > 1:
        b[1] = 4.0 * (alpha + 1.0) * (beta + 1.0) / ((apb + 2.0) ** 2 * (apb + 3.0))
    for k in range(1, n):
        t = 2.0 * k + apb
        a[k] = (beta * beta - alpha * alpha) / (t * (t + 2.0))
        if k >= 2:
            b[k] = (
                4.0 * k * (k + alpha) * (k + beta) * (k + apb)
                / ((t * t - 1.0) * t * t)
            )
    return a, b


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """Orthonormal basis truncated to `size` functions.

    recurrence_a / recurrence_b hold monic recurrence coefficients to
    depth 3*size, enough for basis evaluation and for the quadrature
    used to assemble the triple product tensor.
    """

    alpha: float
    beta: float
    size: int
    recurrence_a: np.ndarray
    recurrence_b: np.ndarray
    triple_tensor: np.ndarray  # (size, size, size)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss rule for the normalized Beta weight.

    node_basis[m, k] caches the k-th basis function at node m for the
    basis the rule was built from.
    """

    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    node_basis: np.ndarray


def _evaluate_recurrence(a, b, size, x):
    """Orthonormal basis values at x, shape (*x.shape, size)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + (size,))
    out[..., 0] = 1.0
    if size > 1:
        out[..., 1] = (x - a[0]) / math.sqrt(b[1])
    for k in range(1, size - 1):
        out[..., k + 1] = (
            (x - a[k]) * out[..., k] - math.sqrt(b[k]) * out[..., k - 1]
        ) / math.sqrt(b[k + 1])
    return out


def _gauss_from_recurrence(a, b, m):
    """Golub-Welsch: nodes and weights from the symmetric tridiagonal matrix."""
    jacobi = np.diag(a[:m])
    if m > 1:
        off = np.sqrt(b[1:m])
        jacobi += np.diag(off, 1) + np.diag(off, -1)
    nodes, vectors = np.linalg.eigh(jacobi)
    weights = vectors[0, :] ** 2  # unit total mass, b[0] = 1
    return nodes, weights


def build_basis(alpha, beta, size):
    """Construct the orthonormal basis and its triple product tensor.

    Parameters
    ----------
    alpha, beta : float
        Beta density exponents, both > -1.
    size : int
        Number of retained basis functions (max degree size - 1).
    """
    if alpha <= -1.0 or beta <= -1.0:
        raise ValueError("Beta exponents must exceed -1")
    if size < 1:
        raise ValueError("basis size must be at least 1")
    depth = 3 * size
    a, b = jacobi_recurrence(alpha, beta, depth)
    # rule exact for degree 3*(size-1) integrands
    m = max(1, math.ceil((3 * size - 2) / 2))
    nodes, weights = _gauss_from_recurrence(a, b, m)
    phi = _evaluate_recurrence(a, b, size, nodes)  # (m, size)
    tensor = np.einsum("j,jk,jl,jm->klm", weights, phi, phi, phi, optimize=True)
    return BasisSpec(
        alpha=float(alpha),
        beta=float(beta),
        size=size,
        recurrence_a=a,
        recurrence_b=b,
        triple_tensor=tensor,
    )


def evaluate_basis(basis, xi):
    """Basis values at xi; scalar xi gives shape (size,), arrays append an axis.

    xi outside [-1, 1] is rejected, the basis has no meaning there.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < -1.0) or np.any(xi > 1.0):
        raise ValueError("evaluation point outside [-1, 1]")
    return _evaluate_recurrence(basis.recurrence_a, basis.recurrence_b, basis.size, xi)


def min_quadrature_size(size):
    """Smallest Gauss rule exact on cubes of the truncated space."""
    return math.ceil(3 * size / 2) - 1


def gauss_rule(basis, m):
    """M-point Gauss rule for the basis density, with cached basis values."""
    if m < 1:
        raise ValueError("quadrature size must be at least 1")
    if m <= len(basis.recurrence_a):
        a, b = basis.recurrence_a, basis.recurrence_b
    else:
        a, b = jacobi_recurrence(basis.alpha, basis.beta, m)
    nodes, weights = _gauss_from_recurrence(a, b, m)
    phi = _evaluate_recurrence(
        basis.recurrence_a, basis.recurrence_b, basis.size, nodes
    )
    return QuadratureRule(
        nodes=nodes,
        weights=weights,
        exactness_degree=2 * m - 1,
        node_basis=phi,
    )


def galerkin_matrix(basis, coeffs):
    """Matrix of multiplication by the expansion `coeffs` projected back onto the basis."""
    coeffs = np.asarray(coeffs, dtype=float)
    return np.tensordot(coeffs, basis.triple_tensor, axes=(0, 0))


def galerkin_matrices(basis, coeff_rows):
    """Batched galerkin_matrix: (batch, size) -> (batch, size, size)."""
    coeff_rows = np.asarray(coeff_rows, dtype=float)
    return np.tensordot(coeff_rows, basis.triple_tensor, axes=([1], [0]))


def galerkin_product(basis, y, z):
    """Pseudo-spectral product of two expansions."""
    return galerkin_matrix(basis, y) @ np.asarray(z, dtype=float)


def galerkin_ratio(basis, z, y, cond_cap=1e12):
    """Solve the Galerkin division problem: coefficients c with product(y, c) = z.

    Raises ValueError when the multiplication matrix is singular or has a
    condition number above cond_cap.
    """
    mat = galerkin_matrix(basis, y)
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > cond_cap:
        raise ValueError(
            f"multiplication matrix ill conditioned (cond={cond:.3e})"
        )
    return np.linalg.solve(mat, np.asarray(z, dtype=float))


def project(basis, rule, f):
    """Quadrature projection of a callable f(xi) onto the basis."""
    values = np.asarray(f(rule.nodes), dtype=float)
    if values.shape != rule.nodes.shape:
        raise ValueError("f must return one value per quadrature node")
    return rule.node_basis.T @ (rule.weights * values)


def xi_expansion(basis):
    """Expansion coefficients of the identity map xi -> xi."""
    coeffs = np.zeros(basis.size)
    coeffs[0] = basis.recurrence_a[0]
    if basis.size > 1:
        coeffs[1] = math.sqrt(basis.recurrence_b[1])
    return coeffs
