"""Preset problem setups for the three benchmark experiments.

All presets share one structure: bottom and initial surface are affine in
the random input, so their chaos expansions are exact with two
coefficients and need no projection step. Fields are described by
callables returning the deterministic part and the coefficient of the
random part at given locations.
"""

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .pce import build_basis, xi_expansion
from .solver import Grid, SolverConfig, StateField


@dataclass(frozen=True)
class Scenario:
    name: str
    alpha: float
    beta: float
    x_left: float
    x_right: float
    gravity: float
    theta: float
    t_final: float
    n_cells: int
    order: int
    quadrature: int
    bottom: Callable
    surface: Callable
    velocity: Callable
    filter_discharge: bool = False
    summary: str = ""


def _zeros(x):
    return np.zeros_like(x)


def _ex1_bottom(x):
    det = np.where(
        np.abs(x) < 0.2, 0.125 * (np.cos(5.0 * np.pi * x) + 2.0), 0.125
    )
    return det, np.full_like(x, 0.125)


def _ex1_surface(x):
    return np.where(x < 0.0, 1.0, 0.5), np.zeros_like(x)


def _ex2_bottom(x):
    det = np.zeros_like(x)
    # clamp the ramps so rounding cannot push them above the crest value 1
    det = np.where(
        (x >= 0.3) & (x <= 0.4), np.minimum(10.0 * (x - 0.3), 1.0), det
    )
    det = np.where(
        (x > 0.4) & (x < 0.6),
        1.0 - 0.0025 * np.sin(25.0 * np.pi * (x - 0.4)) ** 2,
        det,
    )
    det = np.where(
        (x >= 0.6) & (x <= 0.7), np.minimum(-10.0 * (x - 0.7), 1.0), det
    )
    return det, np.zeros_like(x)


def _ex2_surface(x):
    inside = (x > 0.1) & (x < 0.2)
    return np.where(inside, 1.001, 1.0), np.where(inside, 0.001, 0.0)


def _ex3_bottom(x):
    # the jump sits on a cell interface; the interface value is the
    # average of the one-sided limits
    on_jump = np.isclose(x, 0.5, rtol=0.0, atol=1e-12)
    det = np.where(x < 0.5, 1.5, np.where(x > 0.5, 1.1, 1.3))
    det = np.where(on_jump, 1.3, det)
    return det, np.full_like(x, 0.1)


def _ex3_surface(x):
    return np.where(x <= 0.5, 5.0, 1.6), np.zeros_like(x)


def _ex3_velocity(x):
    return np.where(x <= 0.5, 1.0, -2.0)


SCENARIOS = {
    "ex1": Scenario(
        name="ex1",
        alpha=0.0,
        beta=0.0,
        x_left=-1.0,
        x_right=1.0,
        gravity=1.0,
        theta=1.3,
        t_final=0.8,
        n_cells=1600,
        order=9,
        quadrature=17,
        bottom=_ex1_bottom,
        surface=_ex1_surface,
        velocity=_zeros,
        summary="dam break over an uncertain hump bottom",
    ),
    "ex2": Scenario(
        name="ex2",
        alpha=0.0,
        beta=0.0,
        x_left=-1.0,
        x_right=1.0,
        gravity=1.0,
        theta=1.3,
        t_final=1.0,
        n_cells=800,
        order=9,
        quadrature=17,
        bottom=_ex2_bottom,
        surface=_ex2_surface,
        velocity=_zeros,
        summary="small uncertain surface perturbation over a near-dry ridge",
    ),
    "ex3": Scenario(
        name="ex3",
        alpha=3.0,
        beta=1.0,
        x_left=0.0,
        x_right=1.0,
        gravity=2.0,
        theta=1.0,
        t_final=0.15,
        n_cells=400,
        order=9,
        quadrature=17,
        bottom=_ex3_bottom,
        surface=_ex3_surface,
        velocity=_ex3_velocity,
        summary="colliding flows over an uncertain discontinuous step",
    ),
}


def get(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        known = ", ".join(sorted(SCENARIOS))
        raise ValueError(f"unknown scenario {name!r} (choose from {known})") from None


def with_overrides(scenario, **kwargs):
    return replace(scenario, **kwargs)


def solver_config(scenario, **overrides):
    base = dict(
        gravity=scenario.gravity,
        theta=scenario.theta,
        filter_discharge=scenario.filter_discharge,
    )
    base.update(overrides)
    return SolverConfig(**base)


def scenario_basis(scenario, order=None):
    return build_basis(scenario.alpha, scenario.beta, order or scenario.order)


def initial_state(scenario, basis, n_cells=None):
    """Exact chaos coefficients of the initial cell averages."""
    grid = Grid(n_cells or scenario.n_cells, scenario.x_left, scenario.x_right)
    k = basis.size
    unit = np.zeros(k)
    unit[0] = 1.0
    tail = xi_expansion(basis)
    b_det, b_rand = scenario.bottom(grid.interfaces)
    b_iface = np.outer(b_det, unit) + np.outer(b_rand, tail)
    w_det, w_rand = scenario.surface(grid.centers)
    w_bar = np.outer(w_det, unit) + np.outer(w_rand, tail)
    h_bar = w_bar - 0.5 * (b_iface[:-1] + b_iface[1:])
    q_bar = scenario.velocity(grid.centers)[:, None] * h_bar
    return StateField(grid=grid, h_bar=h_bar, q_bar=q_bar, bottom_iface=b_iface)


def deterministic_state(scenario, xi, n_cells=None):
    """Single-coefficient field with the input frozen at one value."""
    grid = Grid(n_cells or scenario.n_cells, scenario.x_left, scenario.x_right)
    b_det, b_rand = scenario.bottom(grid.interfaces)
    b_iface = (b_det + b_rand * xi)[:, None]
    w_det, w_rand = scenario.surface(grid.centers)
    w_bar = (w_det + w_rand * xi)[:, None]
    h_bar = w_bar - 0.5 * (b_iface[:-1] + b_iface[1:])
    q_bar = scenario.velocity(grid.centers)[:, None] * h_bar
    return StateField(grid=grid, h_bar=h_bar, q_bar=q_bar, bottom_iface=b_iface)
