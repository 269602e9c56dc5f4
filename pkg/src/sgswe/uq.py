"""Post-processing of chaos coefficients and a collocation reference solver.

Everything here works on coefficient arrays shaped (..., K) in the same
orthonormal basis produced by :func:`sgswe.pce.build_basis`, so means,
variances and sampled quantiles need no extra normalization bookkeeping.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaincinv

from .pce import build_basis, evaluate_basis, gauss_rule
from .solver import StateField, run


def moments(coeffs):
    """Mean and variance fields from orthonormal expansion coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    mean = coeffs[..., 0].copy()
    var = np.sum(coeffs[..., 1:] ** 2, axis=-1)
    return mean, var


def sample_input(basis, n_samples, seed):
    """Draw input values by inverting the Beta distribution function."""
    u = np.random.default_rng(seed).random(n_samples)
    y = betaincinv(basis.beta + 1.0, basis.alpha + 1.0, u)
    return 2.0 * y - 1.0


def input_probability(basis, lo, hi):
    """Probability mass the input density assigns to [lo, hi]."""
    a, b = basis.beta + 1.0, basis.alpha + 1.0
    lo = max(float(lo), -1.0)
    hi = min(float(hi), 1.0)
    if hi <= lo:
        return 0.0
    return float(
        betainc(a, b, 0.5 * (1.0 + hi)) - betainc(a, b, 0.5 * (1.0 + lo))
    )


@dataclass(frozen=True)
class QuantileBand:
    lower: np.ndarray
    upper: np.ndarray
    level: float
    n_samples: int
    seed: int


def quantile_band(basis, coeffs, level=0.99, n_samples=20000, seed=0,
                  chunk=128):
    """Pointwise sampled central quantile band of the expanded field.

    ``level`` is the probability mass the band covers. Sampling is seeded
    and the evaluation is chunked over the leading axis so wide solution
    arrays do not blow up memory.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    lo = 0.5 * (1.0 - level)
    hi = 1.0 - lo
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    xi = sample_input(basis, n_samples, seed)
    phi = evaluate_basis(basis, xi)
    lower = np.empty(coeffs.shape[0])
    upper = np.empty(coeffs.shape[0])
    for start in range(0, coeffs.shape[0], chunk):
        block = coeffs[start : start + chunk] @ phi.T
        lower[start : start + chunk] = np.quantile(block, lo, axis=1)
        upper[start : start + chunk] = np.quantile(block, hi, axis=1)
    return QuantileBand(lower=lower, upper=upper, level=level,
                        n_samples=n_samples, seed=seed)


@dataclass(frozen=True)
class NegativeRegionReport:
    intervals: tuple
    probability: float
    min_value: float
    argmin_xi: float
    max_node: float | None = None


def negative_region(basis, coeffs, rule=None, n_scan=10001, tol=1e-7):
    """Locate where the pointwise minimum of the field dips below zero.

    The minimum over the leading axis is scanned on a uniform grid of
    input values, each sign change is sharpened by bisection, and the
    probability of the resulting intervals is read off the Beta
    distribution function.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    xs = np.linspace(-1.0, 1.0, n_scan)
    vals = (coeffs @ evaluate_basis(basis, xs).T).min(axis=0)

    def field_min(x):
        return float((coeffs @ evaluate_basis(basis, np.array([x])).T).min())

    def refine(a, b):
        fa = field_min(a)
        while b - a > tol:
            m = 0.5 * (a + b)
            fm = field_min(m)
            if (fa < 0.0) == (fm < 0.0):
                a, fa = m, fm
            else:
                b = m
        return 0.5 * (a + b)

    neg = vals < 0.0
    intervals = []
    i = 0
    while i < n_scan:
        if not neg[i]:
            i += 1
            continue
        j = i
        while j + 1 < n_scan and neg[j + 1]:
            j += 1
        left = xs[i] if i == 0 else refine(xs[i - 1], xs[i])
        right = xs[j] if j == n_scan - 1 else refine(xs[j], xs[j + 1])
        intervals.append((left, right))
        i = j + 1

    prob = sum(input_probability(basis, a, b) for a, b in intervals)
    k = int(np.argmin(vals))
    return NegativeRegionReport(
        intervals=tuple(intervals),
        probability=prob,
        min_value=float(vals[k]),
        argmin_xi=float(xs[k]),
        max_node=float(rule.nodes.max()) if rule is not None else None,
    )


@dataclass(frozen=True)
class CollocationResult:
    h_hat: np.ndarray
    q_hat: np.ndarray
    t: float
    n_nodes: int


def collocation_solve(basis, n_nodes, sample_state, cfg, t_final):
    """Reference chaos coefficients by non-intrusive collocation.

    ``sample_state(xi)`` must build the deterministic single-coefficient
    :class:`StateField` for a fixed input value. Each Gauss node of the
    input density is propagated independently with the deterministic
    pipeline and the results are projected back onto ``basis``.
    """
    rule = gauss_rule(basis, n_nodes)
    det_basis = build_basis(basis.alpha, basis.beta, 1)
    det_rule = gauss_rule(det_basis, 1)
    h_nodes = []
    q_nodes = []
    t_reached = None
    for xi in rule.nodes:
        state = sample_state(float(xi))
        if state.h_bar.shape[1] != 1:
            raise ValueError("sample_state must return a single-coefficient field")
        final, _ = run(state, det_basis, det_rule, cfg, t_final)
        h_nodes.append(final.h_bar[:, 0])
        q_nodes.append(final.q_bar[:, 0])
        t_reached = final.t
    h_nodes = np.array(h_nodes)
    q_nodes = np.array(q_nodes)
    weighted = rule.weights[:, None] * rule.node_basis
    return CollocationResult(
        h_hat=h_nodes.T @ weighted,
        q_hat=q_nodes.T @ weighted,
        t=float(t_reached),
        n_nodes=n_nodes,
    )
