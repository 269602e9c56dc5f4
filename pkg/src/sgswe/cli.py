"""Batch command line front-end.

Runs one of the preset experiments (optionally with overrides from flags
or a flat key = value config file), writes per-cell solution statistics
and per-step diagnostics as CSV, and emits a small matplotlib script that
plots them. All floating point output uses 17 significant digits so reruns
with the same configuration are byte-identical.
"""

import argparse
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import scenarios, uq
from .hyperbolicity import HyperbolicityError
from .pce import gauss_rule, min_quadrature_size
from .solver import filtered_reconstruction, run

CONFIG_CONVERTERS = {
    "experiment": str,
    "K": int,
    "M": int,
    "dx": str,
    "t_final": float,
    "theta": float,
    "g": float,
    "alpha": float,
    "beta": float,
    "collocation": int,
    "negative_region": lambda s: s.lower() in ("1", "true", "yes", "on"),
    "filter_discharge": lambda s: s.lower() in ("1", "true", "yes", "on"),
    "seed": int,
    "samples": int,
    "out": str,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="sgswe",
        description="Chaos-expanded shallow water solver with positivity "
        "filtering and quantile post-processing.",
    )
    p.add_argument("--experiment", choices=sorted(scenarios.SCENARIOS))
    p.add_argument("--config", type=Path, help="flat key = value file; "
                   "explicit flags override its entries")
    p.add_argument("--K", type=int, help="number of expansion coefficients")
    p.add_argument("--M", type=int, help="quadrature size for the positivity nodes")
    p.add_argument("--dx", help="cell size as an exact fraction, e.g. 1/800")
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--theta", type=float, help="minmod limiter parameter")
    p.add_argument("--g", type=float, help="gravitational constant")
    p.add_argument("--alpha", type=float, help="input density exponent at +1")
    p.add_argument("--beta", type=float, help="input density exponent at -1")
    p.add_argument("--collocation", type=int, metavar="S",
                   help="also run an S-node collocation reference")
    p.add_argument("--negative-region", dest="negative_region",
                   action="store_true", default=None,
                   help="report where the height expansion goes negative")
    p.add_argument("--filter-discharge", dest="filter_discharge",
                   action="store_true", default=None)
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--samples", type=int,
                   help="quantile sample count (default 100000)")
    p.add_argument("--out", type=Path, help="output directory (default .)")
    return p


def parse_config_file(path):
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key or not val:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        if key not in CONFIG_CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_CONVERTERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


class ConfigError(Exception):
    pass


def _cells_from_dx(text, x_left, x_right):
    try:
        dx = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse dx {text!r}: {exc}") from exc
    if dx <= 0:
        raise ConfigError("dx must be positive")
    n = (Fraction(x_right) - Fraction(x_left)) / dx
    if n.denominator != 1:
        raise ConfigError(f"dx={text} does not tile [{x_left}, {x_right}] evenly")
    return int(n)


def resolve(args):
    """Merge preset, config file and flags into a concrete run plan."""
    merged = parse_config_file(args.config) if args.config else {}
    for key in CONFIG_CONVERTERS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    name = merged.get("experiment")
    if name is None:
        raise ConfigError("an experiment must be selected (--experiment or config)")
    sc = scenarios.get(name)
    overrides = {}
    if "alpha" in merged:
        overrides["alpha"] = merged["alpha"]
    if "beta" in merged:
        overrides["beta"] = merged["beta"]
    if "theta" in merged:
        overrides["theta"] = merged["theta"]
    if "g" in merged:
        overrides["gravity"] = merged["g"]
    if "t_final" in merged:
        overrides["t_final"] = merged["t_final"]
    if "K" in merged:
        overrides["order"] = merged["K"]
    if "M" in merged:
        overrides["quadrature"] = merged["M"]
    if "dx" in merged:
        overrides["n_cells"] = _cells_from_dx(str(merged["dx"]), sc.x_left, sc.x_right)
    if "filter_discharge" in merged:
        overrides["filter_discharge"] = merged["filter_discharge"]
    sc = scenarios.with_overrides(sc, **overrides)
    if sc.order < 1:
        raise ConfigError("K must be at least 1")
    needed = min_quadrature_size(sc.order)
    if sc.quadrature < needed:
        raise ConfigError(
            f"M={sc.quadrature} is too small to certify positivity for "
            f"K={sc.order}; need at least {needed}"
        )
    return {
        "scenario": sc,
        "collocation": merged.get("collocation"),
        "negative_region": bool(merged.get("negative_region", False)),
        "seed": merged.get("seed", 0),
        "samples": merged.get("samples", 100000),
        "out": Path(merged.get("out", ".")),
    }


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_csv(path, header, columns):
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in zip(*columns):
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _field_columns(basis, coeffs, prefix, samples, seed):
    mean, var = uq.moments(coeffs)
    band = uq.quantile_band(basis, coeffs, level=0.99, n_samples=samples, seed=seed)
    header = [f"{prefix}_mean", f"{prefix}_var", f"{prefix}_lo", f"{prefix}_hi"]
    return header, [mean, var, band.lower, band.upper]


def write_solution_csv(path, basis, x, w_hat, q_hat, b_hat, samples, seed):
    header = ["x"]
    columns = [x]
    for prefix, coeffs in (("B", b_hat), ("w", w_hat), ("q", q_hat)):
        h, c = _field_columns(basis, coeffs, prefix, samples, seed)
        header += h
        columns += c
    _write_csv(path, header, columns)


def write_diagnostics_csv(path, diags):
    header = ["step", "t", "dt", "min_node_height", "filter_cells",
              "max_imag_ratio", "halvings"]
    columns = [
        np.arange(1, len(diags) + 1),
        [d.t for d in diags],
        [d.dt for d in diags],
        [d.min_node_height for d in diags],
        [d.filter_cells for d in diags],
        [d.max_imag_ratio for d in diags],
        [d.halvings for d in diags],
    ]
    _write_csv(path, header, columns)


def write_negative_region_csv(path, report, quadrature):
    header = ["M", "max_node", "left", "right", "probability", "min_value"]
    if report.intervals:
        rows = [
            [quadrature, report.max_node, a, b, uqp, report.min_value]
            for (a, b), uqp in zip(
                report.intervals,
                [report.probability] * len(report.intervals),
            )
        ]
    else:
        rows = [[quadrature, report.max_node, np.nan, np.nan, 0.0,
                 report.min_value]]
    _write_csv(path, header, list(map(list, zip(*rows))))


PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Plot {name} results produced by the sgswe command line tool."""
import csv

import matplotlib.pyplot as plt
import numpy as np


def load(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return {{k: np.array([float(r[k]) for r in rows]) for k in rows[0]}}


sol = load("{solution}")
fig, (ax_w, ax_q) = plt.subplots(1, 2, figsize=(11.0, 4.0))
ax_w.fill_between(sol["x"], sol["w_lo"], sol["w_hi"], alpha=0.35,
                  label="surface 99% band")
ax_w.plot(sol["x"], sol["w_mean"], lw=1.0, label="surface mean")
ax_w.fill_between(sol["x"], sol["B_lo"], sol["B_hi"], alpha=0.35,
                  color="tab:brown", label="bottom 99% band")
ax_w.plot(sol["x"], sol["B_mean"], lw=1.0, color="tab:brown",
          label="bottom mean")
ax_w.set_xlabel("x")
ax_w.legend(loc="best", fontsize=8)
ax_q.fill_between(sol["x"], sol["q_lo"], sol["q_hi"], alpha=0.35,
                  label="discharge 99% band")
ax_q.plot(sol["x"], sol["q_mean"], lw=1.0, label="discharge mean")
ax_q.set_xlabel("x")
ax_q.legend(loc="best", fontsize=8)
{collocation_block}fig.tight_layout()
fig.savefig("{png}", dpi=150)
print("wrote {png}")
'''

COLLOCATION_BLOCK = '''col = load("{collocation}")
ax_w.plot(col["x"], col["w_mean"], lw=1.0, ls="--", label="collocation mean")
ax_q.plot(col["x"], col["q_mean"], lw=1.0, ls="--", label="collocation mean")
ax_w.legend(loc="best", fontsize=8)
ax_q.legend(loc="best", fontsize=8)
'''


def write_plot_script(path, name, solution, collocation=None):
    block = (
        COLLOCATION_BLOCK.format(collocation=collocation) if collocation else ""
    )
    path.write_text(
        PLOT_TEMPLATE.format(
            name=name, solution=solution, collocation_block=block,
            png=f"{name}.png",
        )
    )


def run_experiment(plan, log=print):
    sc = plan["scenario"]
    out = plan["out"]
    out.mkdir(parents=True, exist_ok=True)
    basis = scenarios.scenario_basis(sc)
    rule = gauss_rule(basis, sc.quadrature)
    state = scenarios.initial_state(sc, basis)
    cfg = scenarios.solver_config(sc)
    log(
        f"{sc.name}: {sc.n_cells} cells on [{sc.x_left}, {sc.x_right}], "
        f"K={sc.order}, M={sc.quadrature}, t_final={sc.t_final}"
    )

    diags = []
    diag_path = out / f"{sc.name}_diagnostics.csv"
    try:
        final, diags = run(
            state, basis, rule, cfg, sc.t_final,
            on_step=lambda s, d: diags.append(d),
        )
    except (HyperbolicityError, RuntimeError) as exc:
        write_diagnostics_csv(diag_path, diags)
        log(f"solver failed: {exc}", file=sys.stderr)
        log(f"diagnostics so far: {diag_path}", file=sys.stderr)
        return 1

    write_diagnostics_csv(diag_path, diags)
    sol_path = out / f"{sc.name}_solution.csv"
    write_solution_csv(
        sol_path, basis, final.grid.centers, final.surface_bar, final.q_bar,
        final.bottom_bar, plan["samples"], plan["seed"],
    )
    written = [sol_path, diag_path]

    col_path = None
    if plan["collocation"]:
        col = uq.collocation_solve(
            basis, plan["collocation"],
            lambda xi: scenarios.deterministic_state(sc, xi),
            cfg, sc.t_final,
        )
        col_path = out / f"{sc.name}_collocation.csv"
        write_solution_csv(
            col_path, basis, final.grid.centers, col.h_hat + final.bottom_bar,
            col.q_hat, final.bottom_bar, plan["samples"], plan["seed"],
        )
        written.append(col_path)

    if plan["negative_region"]:
        # scan the filtered edge reconstructions: node positivity is
        # enforced there, so that is where the polynomial first turns
        # negative beyond the largest quadrature node
        edges = filtered_reconstruction(final, basis, rule, cfg)
        field = np.concatenate([edges.h_lo[1:-1], edges.h_hi[1:-1]], axis=0)
        report = uq.negative_region(basis, field, rule=rule)
        neg_path = out / f"{sc.name}_negative_region.csv"
        write_negative_region_csv(neg_path, report, sc.quadrature)
        written.append(neg_path)

    plot_path = out / f"{sc.name}_plot.py"
    write_plot_script(
        plot_path, sc.name, sol_path.name,
        col_path.name if col_path else None,
    )
    written.append(plot_path)

    log(f"finished at t={final.t:g} in {len(diags)} steps")
    for p in written:
        log(f"wrote {p}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    def log(msg, file=None):
        print(msg, file=file or sys.stdout)

    try:
        plan = resolve(args)
    except ConfigError as exc:
        parser.error(str(exc))
    return run_experiment(plan, log=log)


if __name__ == "__main__":
    sys.exit(main())
