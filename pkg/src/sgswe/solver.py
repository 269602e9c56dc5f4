"""Well-balanced central-upwind scheme for the Galerkin shallow water system.

Cell averages carry expansion coefficients: h_bar and q_bar are (cells,
size) arrays.  The bottom is replaced by its continuous piecewise linear
interpolant, stored through its interface expansions, so cell bottom
averages are interface midpoints by construction.  Reconstruction works
on the free surface, heights at interfaces are kept nonnegative at the
quadrature nodes by a tail-scaling filter, and interface velocities are
desingularized before fluxes and wave speeds are formed.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .hyperbolicity import HyperbolicityError, SgState, sg_flux, wave_speeds
from .pce import galerkin_matrices, galerkin_matrix

_SPEED_FLOOR = 1e-12  # below this the two local speeds are considered collapsed


@dataclass
class Grid:
    """Uniform mesh on [x_left, x_right]."""

    n_cells: int
    x_left: float = 0.0
    x_right: float = 1.0

    def __post_init__(self):
        if self.n_cells < 3:
            raise ValueError("need at least 3 cells")
        if not self.x_right > self.x_left:
            raise ValueError("empty domain")
        self.dx = (self.x_right - self.x_left) / self.n_cells
        self.interfaces = self.x_left + self.dx * np.arange(self.n_cells + 1)
        self.centers = 0.5 * (self.interfaces[:-1] + self.interfaces[1:])


@dataclass
class StateField:
    """Cell-averaged expansions plus the interface bottom expansions."""

    grid: Grid
    h_bar: np.ndarray  # (cells, size)
    q_bar: np.ndarray
    bottom_iface: np.ndarray  # (cells + 1, size)
    t: float = 0.0

    @property
    def bottom_bar(self):
        return 0.5 * (self.bottom_iface[:-1] + self.bottom_iface[1:])

    @property
    def surface_bar(self):
        return self.h_bar + self.bottom_bar

    def replace(self, h_bar, q_bar, t):
        return StateField(
            grid=self.grid,
            h_bar=h_bar,
            q_bar=q_bar,
            bottom_iface=self.bottom_iface,
            t=t,
        )


@dataclass(frozen=True)
class SolverConfig:
    gravity: float = 1.0
    theta: float = 1.3  # minmod limiter parameter in [1, 2]
    delta: float = 1e-10  # safety margin added to active filter weights
    cfl_safety: float = 0.9
    desing_eps: float | None = None  # None means use the grid spacing
    filter_discharge: bool = False
    time_integrator: str = "ssprk2"  # or "forward_euler"
    relaxation: float = 1.0  # optional time step stretch, >= 1
    imag_tol: float = 1e-8
    max_halvings: int = 40

    def __post_init__(self):
        if not 1.0 <= self.theta <= 2.0:
            raise ValueError("theta must lie in [1, 2]")
        if self.relaxation < 1.0:
            raise ValueError("relaxation factor must be >= 1")
        if self.time_integrator not in ("ssprk2", "forward_euler"):
            raise ValueError("unknown time integrator")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")


@dataclass
class StepDiagnostics:
    t: float
    dt: float
    min_node_height: float
    filter_cells: int
    # worst |Im|/radius from the general eigensolve; 0.0 on steps where every
    # interface side had an SPD height matrix and speeds came out real by
    # construction
    max_imag_ratio: float
    halvings: int


def minmod_slopes(values, theta, dx):
    """Generalized minmod slopes; boundary rows get one-sided zero slope."""
    values = np.asarray(values, dtype=float)
    slopes = np.zeros_like(values)
    fwd = theta * (values[2:] - values[1:-1]) / dx
    ctr = (values[2:] - values[:-2]) / (2.0 * dx)
    bwd = theta * (values[1:-1] - values[:-2]) / dx
    lo = np.minimum(np.minimum(fwd, ctr), bwd)
    hi = np.maximum(np.maximum(fwd, ctr), bwd)
    slopes[1:-1] = np.where(lo > 0.0, lo, np.where(hi < 0.0, hi, 0.0))
    return slopes


@dataclass
class Reconstruction:
    """One-sided interface values, before positivity corrections."""

    w_minus: np.ndarray  # (ifaces, size), limit from the left cell
    w_plus: np.ndarray
    h_minus: np.ndarray
    h_plus: np.ndarray
    q_minus: np.ndarray
    q_plus: np.ndarray


def _edges(state, cfg):
    """Per-cell edge values on the ghost-extended mesh.

    Ghost cells copy the edge surface and discharge and continue the
    bottom flat, so a constant free surface stays constant through the
    boundary.  Returns arrays over cells 0..n+1, plus the extended
    bottoms and cell bottom averages.
    """
    h, q = state.h_bar, state.q_bar
    b_if = state.bottom_iface
    dx = state.grid.dx
    b_left = np.concatenate([b_if[:1], b_if], axis=0)
    b_right = np.concatenate([b_if, b_if[-1:]], axis=0)
    b_bar = 0.5 * (b_left + b_right)
    w = h + state.bottom_bar
    w_ext = np.concatenate([w[:1], w, w[-1:]], axis=0)
    q_ext = np.concatenate([q[:1], q, q[-1:]], axis=0)
    h_bar_ext = w_ext - b_bar
    sw = minmod_slopes(w_ext, cfg.theta, dx)
    sq = minmod_slopes(q_ext, cfg.theta, dx)
    w_lo = w_ext - 0.5 * dx * sw
    w_hi = w_ext + 0.5 * dx * sw
    q_lo = q_ext - 0.5 * dx * sq
    q_hi = q_ext + 0.5 * dx * sq
    h_lo = w_lo - b_left
    h_hi = w_hi - b_right
    return w_lo, w_hi, h_lo, h_hi, q_lo, q_hi, b_left, b_right, h_bar_ext, q_ext


def reconstruct_interfaces(state, cfg):
    """Minmod reconstruction of surface and discharge at every interface."""
    w_lo, w_hi, h_lo, h_hi, q_lo, q_hi, _, _, _, _ = _edges(state, cfg)
    return Reconstruction(
        w_minus=w_hi[:-1],
        w_plus=w_lo[1:],
        h_minus=h_hi[:-1],
        h_plus=h_lo[1:],
        q_minus=q_hi[:-1],
        q_plus=q_lo[1:],
    )


def near_dry_correction(h_bar_i, h_minus, h_plus):
    """Redistribute a cell's edge heights when one side has nonpositive mean.

    h_minus is the value at the cell's right interface, h_plus at its
    left interface.  The corrected pair keeps the cell average.
    """
    h_minus = np.array(h_minus, dtype=float)
    h_plus = np.array(h_plus, dtype=float)
    h_bar_i = np.asarray(h_bar_i, dtype=float)
    if h_minus[0] <= 0.0:
        h_minus = np.zeros_like(h_minus)
        h_plus = 2.0 * h_bar_i
    elif h_plus[0] <= 0.0:
        h_plus = np.zeros_like(h_plus)
        h_minus = 2.0 * h_bar_i
    return h_minus, h_plus


def _filter_weights(node_values, means):
    """Smallest tail scalings making each row nonnegative at the nodes.

    node_values is (rows, nodes); a row already nonnegative gets 0.
    """
    neg = node_values < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(neg, -node_values / (means[:, None] - node_values), 0.0)
    return np.clip(np.max(ratios, axis=1), 0.0, 1.0)


def positivity_filter(y_minus, y_plus, rule, delta=1e-10):
    """Filter a cell's pair of edge expansions to be nonnegative at the nodes.

    Both polynomials share one weight: the larger of the two individual
    requirements plus the safety margin delta, capped at 1.  Means are
    kept, tails are scaled by (1 - weight).  Requires positive means.
    """
    y_minus = np.array(y_minus, dtype=float)
    y_plus = np.array(y_plus, dtype=float)
    if y_minus[0] <= 0.0 or y_plus[0] <= 0.0:
        raise ValueError("filter needs positive means")
    vals = np.stack([y_minus, y_plus]) @ rule.node_basis.T
    weights = _filter_weights(vals, np.array([y_minus[0], y_plus[0]]))
    mu = min(weights.max() + delta, 1.0)
    y_minus[1:] *= 1.0 - mu
    y_plus[1:] *= 1.0 - mu
    return y_minus, y_plus, mu


def desingularized_velocity(basis, h_hat, q_hat, eps):
    """Velocity from a regularized inverse of the height matrix.

    Eigenvalues lam of the height matrix are inverted exactly for
    |lam| >= eps and damped toward zero below; the returned discharge is
    recomputed as height times velocity so both stay consistent.
    """
    mat = galerkin_matrix(basis, h_hat)
    lam, vec = np.linalg.eigh(mat)
    lam4 = lam**4
    lam_inv = math.sqrt(2.0) * lam / np.sqrt(lam4 + np.maximum(lam4, eps**4))
    u_hat = (vec * lam_inv) @ (vec.T @ np.asarray(q_hat, dtype=float))
    return u_hat, mat @ u_hat


def well_balanced_source(basis, h_bar, bottom_iface, g, dx):
    """Discharge source from the interface bottom differences."""
    diff = bottom_iface[1:] - bottom_iface[:-1]
    mats = galerkin_matrices(basis, h_bar)
    return -(g / dx) * np.einsum("ikl,il->ik", mats, diff)


def central_upwind_flux(basis, left, right, g, eps=None):
    """Reference single-interface flux; returns (flux, a_minus, a_plus).

    With eps set, velocities are desingularized first and the discharges
    replaced by the recomputed ones, matching the interior of the solver.
    """
    if eps is not None:
        u_l, q_l = desingularized_velocity(basis, left.h_hat, left.q_hat, eps)
        u_r, q_r = desingularized_velocity(basis, right.h_hat, right.q_hat, eps)
        left = SgState(left.h_hat, q_l)
        right = SgState(right.h_hat, q_r)
    else:
        u_l = u_r = None
    a_minus, a_plus = wave_speeds(
        basis, left, right, g, u_hat_left=u_l, u_hat_right=u_r
    )
    f_l = sg_flux(basis, left, g, u_hat=u_l)
    f_r = sg_flux(basis, right, g, u_hat=u_r)
    spread = a_plus - a_minus
    if spread < _SPEED_FLOOR:
        return 0.5 * (f_l + f_r), a_minus, a_plus
    jump = right.stacked() - left.stacked()
    flux = (a_plus * f_l - a_minus * f_r) / spread + (a_plus * a_minus / spread) * jump
    return flux, a_minus, a_plus


@dataclass
class _Stage:
    h_f: np.ndarray  # filtered cell averages, physical cells
    q_f: np.ndarray
    rhs_h: np.ndarray
    rhs_q: np.ndarray
    flux_h: np.ndarray  # (ifaces, size)
    a_minus: np.ndarray
    a_plus: np.ndarray
    filter_cells: int
    max_imag_ratio: float


def _signed_filter_weights(edge_lo, edge_hi, node_basis):
    """Filter weights for the discharge pair, measured against the mean's sign."""
    means_lo = edge_lo[:, 0]
    means_hi = edge_hi[:, 0]
    s_lo = np.sign(means_lo)[:, None]
    s_hi = np.sign(means_hi)[:, None]
    w_lo = _filter_weights((edge_lo @ node_basis.T) * s_lo, np.abs(means_lo))
    w_hi = _filter_weights((edge_hi @ node_basis.T) * s_hi, np.abs(means_hi))
    return np.maximum(w_lo, w_hi)


def _apply_pair_filter(edge_lo, edge_hi, weights, delta):
    # delta only enters where filtering is actually needed; otherwise the
    # pair is left untouched so quiescent regions are not eroded
    mu = np.where(weights > 0.0, np.minimum(weights + delta, 1.0), 0.0)
    factor = (1.0 - mu)[:, None]
    edge_lo[:, 1:] *= factor
    edge_hi[:, 1:] *= factor
    return mu


class FilteredEdges(NamedTuple):
    """Limited edge reconstructions after near-dry redistribution and
    positivity filtering, one ghost cell on each end (n_cells + 2 rows)."""

    h_lo: np.ndarray  # (cells+2, size), left-edge heights
    h_hi: np.ndarray  # right-edge heights
    q_lo: np.ndarray
    q_hi: np.ndarray
    h_bar: np.ndarray  # filter-consistent cell averages
    q_bar: np.ndarray
    mu: np.ndarray  # per-cell height filter strength


def filtered_reconstruction(state, basis, rule, cfg):
    """Edge states the flux evaluation actually sees.

    This is where node positivity of the height is enforced, so studies of
    where the height polynomial turns negative should examine these values
    rather than the evolved cell averages.
    """
    v = rule.node_basis  # (nodes, size)
    w_lo, w_hi, h_lo, h_hi, q_lo, q_hi, b_left, b_right, h_bar_ext, q_ext = _edges(
        state, cfg
    )

    # near-dry redistribution, right edge checked first
    m_hi = h_hi[:, 0] <= 0.0
    h_lo[m_hi] = 2.0 * h_bar_ext[m_hi]
    h_hi[m_hi] = 0.0
    m_lo = (~m_hi) & (h_lo[:, 0] <= 0.0)
    h_hi[m_lo] = 2.0 * h_bar_ext[m_lo]
    h_lo[m_lo] = 0.0

    # positivity filter on the height pair of every cell
    w_pair = np.maximum(
        _filter_weights(h_lo @ v.T, h_lo[:, 0]),
        _filter_weights(h_hi @ v.T, h_hi[:, 0]),
    )
    mu = _apply_pair_filter(h_lo, h_hi, w_pair, cfg.delta)
    h_bar_f_ext = 0.5 * (h_lo + h_hi)

    if cfg.filter_discharge:
        wq = _signed_filter_weights(q_lo, q_hi, v)
        _apply_pair_filter(q_lo, q_hi, wq, cfg.delta)
        q_bar_f_ext = 0.5 * (q_lo + q_hi)
    else:
        q_bar_f_ext = q_ext
    return FilteredEdges(h_lo, h_hi, q_lo, q_hi, h_bar_f_ext, q_bar_f_ext, mu)


def _stage(state, basis, rule, cfg):
    grid = state.grid
    n = grid.n_cells
    k = basis.size
    dx = grid.dx
    g = cfg.gravity
    eps = cfg.desing_eps if cfg.desing_eps is not None else dx

    edges = filtered_reconstruction(state, basis, rule, cfg)
    h_lo, h_hi = edges.h_lo, edges.h_hi
    q_lo, q_hi = edges.q_lo, edges.q_hi
    h_bar_f_ext = edges.h_bar
    q_bar_f_ext = edges.q_bar
    filter_cells = int(np.count_nonzero(edges.mu[1:-1] > 0.0))

    # interface side states: left from cell j's right edge, right from
    # cell j+1's left edge, j = 0..n
    side_h = np.concatenate([h_hi[:-1], h_lo[1:]], axis=0)  # (2(n+1), k)
    side_q = np.concatenate([q_hi[:-1], q_lo[1:]], axis=0)

    mat_h = galerkin_matrices(basis, side_h)
    lam, vec = np.linalg.eigh(mat_h)
    lam4 = lam**4
    lam_inv = math.sqrt(2.0) * lam / np.sqrt(lam4 + np.maximum(lam4, eps**4))
    inv_h = (vec * lam_inv[:, None, :]) @ np.swapaxes(vec, 1, 2)
    side_u = np.einsum("bkl,bl->bk", inv_h, side_q)
    side_q = np.einsum("bkl,bl->bk", mat_h, side_u)

    mat_q = galerkin_matrices(basis, side_q)
    mat_u = galerkin_matrices(basis, side_u)
    flux_top = side_q
    flux_bot = 0.5 * g * np.einsum("bkl,bl->bk", mat_h, side_h) + np.einsum(
        "bkl,bl->bk", mat_q, side_u
    )

    # characteristic speeds via the symmetric matrix similar to the flux
    # Jacobian; its spectrum is real whenever the height matrix is SPD,
    # which the positivity filter maintains away from exactly dry sides.
    # The regularized inverse above serves the velocity only: substituted
    # into the Jacobian it breaks the similarity and can produce genuinely
    # complex eigenvalue pairs at near-dry states.
    spd = lam[:, 0] > 0.0
    sq = np.sqrt(g * np.where(spd[:, None], lam, 1.0))
    root = (vec * sq[:, None, :]) @ np.swapaxes(vec, 1, 2)
    rinv = (vec / sq[:, None, :]) @ np.swapaxes(vec, 1, 2)
    a_sym = g * (rinv @ mat_q @ rinv)
    half_sum = 0.5 * (mat_u + a_sym)
    half_dif = 0.5 * (mat_u - a_sym)
    sym = np.empty((side_h.shape[0], 2 * k, 2 * k))
    sym[:, :k, :k] = root + half_sum
    sym[:, :k, k:] = half_dif
    sym[:, k:, :k] = half_dif
    sym[:, k:, k:] = half_sum - root
    speeds = np.linalg.eigvalsh(sym)
    lam_min = speeds[:, 0]
    lam_max = speeds[:, -1]
    max_ratio = 0.0
    if not spd.all():
        # singular height matrix (exactly dry side): no similarity
        # transform exists, fall back to the plain eigenproblem and
        # demand a real spectrum
        idx = np.flatnonzero(~spd)
        cross = mat_q[idx] @ inv_h[idx]
        jac = np.zeros((idx.size, 2 * k, 2 * k))
        jac[:, :k, k:] = np.eye(k)
        jac[:, k:, :k] = g * mat_h[idx] - cross @ mat_u[idx]
        jac[:, k:, k:] = mat_u[idx] + cross
        ev = np.linalg.eigvals(jac)
        radius = np.max(np.abs(ev), axis=1)
        imag_max = np.max(np.abs(ev.imag), axis=1)
        ratio = np.where(
            radius > 0.0, imag_max / np.where(radius > 0.0, radius, 1.0), 0.0
        )
        worst = int(np.argmax(ratio))
        max_ratio = float(ratio[worst])
        if max_ratio > cfg.imag_tol:
            iface = int(idx[worst]) % (n + 1)
            raise HyperbolicityError(
                f"complex characteristic speeds at interface {iface} "
                f"(t={state.t:.6g}): |Im|/radius = {max_ratio:.3e}"
            )
        re = ev.real
        lam_min[idx] = re.min(axis=1)
        lam_max[idx] = re.max(axis=1)
    half = n + 1
    a_minus = np.minimum(np.minimum(lam_min[:half], lam_min[half:]), 0.0)
    a_plus = np.maximum(np.maximum(lam_max[:half], lam_max[half:]), 0.0)

    f_left = np.concatenate([flux_top[:half], flux_bot[:half]], axis=1)
    f_right = np.concatenate([flux_top[half:], flux_bot[half:]], axis=1)
    u_left = np.concatenate([side_h[:half], side_q[:half]], axis=1)
    u_right = np.concatenate([side_h[half:], side_q[half:]], axis=1)
    spread = a_plus - a_minus
    safe = np.where(spread >= _SPEED_FLOOR, spread, 1.0)
    upwind = (a_plus[:, None] * f_left - a_minus[:, None] * f_right) / safe[:, None]
    diffusion = (a_plus * a_minus / safe)[:, None] * (u_right - u_left)
    flux = np.where(
        (spread >= _SPEED_FLOOR)[:, None],
        upwind + diffusion,
        0.5 * (f_left + f_right),
    )
    flux_h = flux[:, :k]
    flux_q = flux[:, k:]

    h_f = h_bar_f_ext[1:-1]
    q_f = q_bar_f_ext[1:-1]
    src = well_balanced_source(basis, h_f, state.bottom_iface, g, dx)
    rhs_h = -(flux_h[1:] - flux_h[:-1]) / dx
    rhs_q = -(flux_q[1:] - flux_q[:-1]) / dx + src
    return _Stage(
        h_f=h_f,
        q_f=q_f,
        rhs_h=rhs_h,
        rhs_q=rhs_q,
        flux_h=flux_h,
        a_minus=a_minus,
        a_plus=a_plus,
        filter_cells=filter_cells,
        max_imag_ratio=max_ratio,
    )


def compute_dt(h_bar, flux_h, a_minus, a_plus, dx, rule, cfg, sign_aware=False):
    """Time step from the node-positivity bound and the wave speed bound."""
    heights = h_bar @ rule.node_basis.T
    diffs = (flux_h[1:] - flux_h[:-1]) @ rule.node_basis.T
    if sign_aware:
        # only outgoing flux differences can drain a node value
        bound = np.where(diffs > 0.0, diffs, 0.0)
    else:
        bound = np.abs(diffs)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratios = np.where(bound > 0.0, dx * np.abs(heights) / bound, np.inf)
    dt_height = float(ratios.min())
    speed = float(np.maximum(a_plus, -a_minus).max())
    dt_speed = dx / speed if speed > 0.0 else np.inf
    dt = cfg.cfl_safety * min(dt_height, dt_speed) * cfg.relaxation
    if not np.isfinite(dt) or dt <= 0.0:
        raise RuntimeError(f"no admissible time step (dt={dt})")
    return dt


def _node_positive(h_bar, rule):
    return float((h_bar @ rule.node_basis.T).min())


def step(state, basis, rule, cfg, dt=None, max_dt=np.inf):
    """Advance one time step; returns (new_state, StepDiagnostics).

    The step is retried with half the time step whenever a stage loses
    node positivity of the height averages.
    """
    stage1 = _stage(state, basis, rule, cfg)
    if dt is None:
        dt = compute_dt(
            stage1.h_f,
            stage1.flux_h,
            stage1.a_minus,
            stage1.a_plus,
            state.grid.dx,
            rule,
            cfg,
        )
    dt = min(dt, max_dt)
    halvings = 0
    while True:
        h1 = stage1.h_f + dt * stage1.rhs_h
        q1 = stage1.q_f + dt * stage1.rhs_q
        filter_cells = stage1.filter_cells
        imag_ratio = stage1.max_imag_ratio
        if _node_positive(h1, rule) > 0.0:
            if cfg.time_integrator == "forward_euler":
                new_h, new_q = h1, q1
                break
            mid = state.replace(h1, q1, state.t + dt)
            stage2 = _stage(mid, basis, rule, cfg)
            h2 = stage2.h_f + dt * stage2.rhs_h
            q2 = stage2.q_f + dt * stage2.rhs_q
            new_h = 0.5 * (state.h_bar + h2)
            new_q = 0.5 * (state.q_bar + q2)
            filter_cells = max(filter_cells, stage2.filter_cells)
            imag_ratio = max(imag_ratio, stage2.max_imag_ratio)
            if _node_positive(new_h, rule) > 0.0:
                break
        halvings += 1
        if halvings > cfg.max_halvings:
            raise RuntimeError(
                f"positivity could not be restored after {cfg.max_halvings} "
                f"halvings (t={state.t:.6g})"
            )
        dt *= 0.5
    new_state = state.replace(new_h, new_q, state.t + dt)
    diag = StepDiagnostics(
        t=new_state.t,
        dt=dt,
        min_node_height=_node_positive(new_h, rule),
        filter_cells=filter_cells,
        max_imag_ratio=imag_ratio,
        halvings=halvings,
    )
    return new_state, diag


def run(state, basis, rule, cfg, t_final, on_step=None):
    """March to t_final; returns (state, list of per-step diagnostics)."""
    if _node_positive(state.h_bar, rule) <= 0.0:
        raise ValueError("initial heights must be positive at the quadrature nodes")
    tol = 1e-12 * max(1.0, abs(t_final))
    diagnostics = []
    while t_final - state.t > tol:
        state, diag = step(state, basis, rule, cfg, max_dt=t_final - state.t)
        diagnostics.append(diag)
        if on_step is not None:
            on_step(state, diag)
    return state, diagnostics
