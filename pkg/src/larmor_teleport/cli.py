"""Command-line sweeps and oracle checks.

Each subcommand writes one table (CSV or JSON). Output goes to ``--output``,
or to ``<dir>/<subcommand>.<format>`` where ``<dir>`` comes from the
``LARMOR_TELEPORT_OUTPUT_DIR`` environment variable (default: current
directory). ``--output -`` writes to stdout.

Exit codes: 0 success, 1 usage error, 2 an oracle check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import scattering_model as sm
from . import squeezing_readout as sq
from . import teleportation as tp
from .gaussian_core import (
    CANONICAL_LAYOUT,
    HomodyneSpec,
    apply_map,
    entropy_vn,
    gamma_limit_condition,
    homodyne_condition,
    reduce,
    symplectic_eigenvalues,
    vacuum_state,
)
from .slice_chain import SliceChainConfig, oracle_deviation

OUTPUT_DIR_ENV = "LARMOR_TELEPORT_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_CHECK_FAILED = 0, 1, 2
RANGE_TOL = 1e-12
SIG_DIGITS = 12
DEFAULT_SEED = 20240611


class UsageError(Exception):
    pass


def parse_grid(text) -> list[float]:
    """``start:stop:step`` (stop included within 1e-12), ``a,b,c`` or a single number."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(v) for v in text.split(":")]
            if len(parts) != 3:
                raise UsageError(f"range {text!r} must be start:stop:step")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise UsageError(f"range {text!r} is empty or has a non-positive step")
            n = math.floor((stop - start) / step + RANGE_TOL) + 1
            # round to kill accumulated float error in the step sum
            return [round(start + i * step, 12) for i in range(n)]
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse grid {text!r}: {exc}") from None
    if not values:
        raise UsageError(f"grid {text!r} is empty")
    return values


def _single(text, name: str) -> float:
    values = parse_grid(text)
    if len(values) != 1:
        raise UsageError(f"--{name} takes a single value")
    return values[0]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{SIG_DIGITS}g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return float(f"{f:.{SIG_DIGITS}g}") if math.isfinite(f) else str(f)
    return v


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self, meta: dict) -> str:
        rows = [{c: _json_value(v) for c, v in zip(self.columns, row)} for row in self.rows]
        return json.dumps({"meta": meta, "rows": rows}, indent=2) + "\n"


# -- subcommands --------------------------------------------------------------


def run_entanglement(args) -> Table:
    t = Table(("kappa", "nu", "entropy_bits", "entropy_qnd_bits"))
    for k in parse_grid(args.kappa):
        atoms = reduce(apply_map(vacuum_state(CANONICAL_LAYOUT), sm.interaction_map(k)), ["A"])
        qnd = reduce(apply_map(vacuum_state(sm.QND_LAYOUT), sm.qnd_map(k)), ["A"])
        t.rows.append((k, symplectic_eigenvalues(atoms)[0], entropy_vn(atoms), entropy_vn(qnd)))
    return t


def run_fidelity(args) -> Table:
    t = Table(("kappa", "entropy_bits", "F_ours", "F_tms"))
    for k in parse_grid(args.kappa):
        e = tp.atomic_entropy(k)
        t.rows.append((k, e, tp.teleport_closed_form(k, tp.CoherentInput()).fidelity, tp.tms_benchmark_fidelity(e)))
    return t


def run_noisy_sweep(args) -> Table:
    kappa = _single(args.kappa, "kappa")
    n_bar = _single(args.nbar, "nbar")
    if n_bar < 0:
        raise UsageError("--nbar must be >= 0")
    bench = tp.classical_benchmark(n_bar)
    t = Table(("beta", "eps", "F_avg", "g_x_opt", "g_q_opt", "F_classical"))
    for eps in parse_grid(args.eps):
        for beta in parse_grid(args.beta):
            try:
                noise = tp.NoiseParams(beta, eps)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            gains, f = tp.optimize_gains(kappa, noise, n_bar, second_stage=not args.single_decay)
            t.rows.append((beta, eps, f, gains.g_x, gains.g_q, bench))
    return t


def run_squeezing(args) -> Table:
    t = Table(("kappa", "cond_var_X", "cond_var_P", "factor", "factor_qnd", "swapped_var_X"))
    for k in parse_grid(args.kappa):
        r = sq.readout_condition(k, sq.ReadoutSpec("X"))
        swapped = sq.readout_condition(k, sq.ReadoutSpec("X", sq.SWAPPED_SETS["X"]))
        t.rows.append(
            (k, r.conditional_var_X, r.conditional_var_P, sq.squeezing_factor_closed_form(k),
             sq.qnd_squeezing_factor(k), swapped.conditional_var_X)
        )
    return t


_PHYSICAL_FIELDS = ("N_at", "N_ph", "F_spin", "a0", "a1", "sigma", "Gamma", "Delta", "A_beam", "T_pulse", "Omega")


def run_feasibility(args) -> Table:
    overrides = {f: getattr(args, f) for f in _PHYSICAL_FIELDS if getattr(args, f) is not None}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = sm.cesium_d2_example(**overrides)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    kappa, eta = sm.coupling_from_physical(p)
    return Table(("kappa", "eta", "n0", "delta_over_gamma"), [(kappa, eta, p.n0, p.Delta / p.Gamma)])


@dataclass(frozen=True)
class Check:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)


def run_oracles(args) -> list[Check]:
    """Slice chain, averaging quadrature, Monte Carlo and pipeline equivalence."""
    kappa = _single(args.kappa, "kappa")
    n0 = _single(args.n0, "n0")
    n_slices = int(_single(args.n_slices, "n-slices"))
    if args.seed is None:
        raise UsageError("the oracle report needs a seed")
    if args.samples < 1000:
        raise UsageError("--samples must be at least 1000")
    checks = []

    try:
        cfg = SliceChainConfig(n_slices, n0, kappa)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    checks.append(Check("slice_chain_covariance", oracle_deviation(cfg, strict=False), 0.02))

    worst = 0.0
    for beta, eps, n_bar in [(0.0, 0.0, 1.0), (0.1, 0.08, 4.0), (0.2, 0.16, 10.0)]:
        noise = tp.NoiseParams(beta, eps)
        g = tp.Gains(0.9, 0.95)
        worst = max(worst, abs(tp.average_fidelity_gaussian(kappa, noise, g, n_bar)
                               - tp.average_fidelity_quadrature(kappa, noise, g, n_bar)))
    checks.append(Check("average_fidelity_quadrature", worst, 1e-6))

    inp = tp.CoherentInput(3.0, -2.0)
    mc = tp.monte_carlo_feedback(kappa, inp, args.samples, args.seed)
    ref = tp.teleport_closed_form(kappa, inp)
    z_mean = np.abs(mc.mean - ref.final_mean) / mc.mean_stderr
    var_se = ref.final_var * math.sqrt(2 / (args.samples - 1))
    z_var = np.abs(np.diag(mc.cov) - ref.final_var) / var_se
    checks.append(Check("monte_carlo_feedback_sigmas", float(max(z_mean.max(), z_var.max())), 5.0))

    pipe = tp.teleport_pipeline(kappa, inp)
    checks.append(Check("pipeline_vs_closed_form",
                        float(np.abs(pipe.final_var - ref.final_var).max()
                              + np.abs(pipe.final_mean - ref.final_mean).max()), 1e-10))

    state = apply_map(vacuum_state(CANONICAL_LAYOUT), sm.interaction_map(kappa))
    spec = HomodyneSpec(sq.READOUT_SETS["X"], traced=("s1",))
    exact = homodyne_condition(state, spec, trace_var=1.0).cov
    limit = gamma_limit_condition(state, spec, squeeze=1e9, trace_var=1.0).cov
    checks.append(Check("gamma_limit_vs_schur", float(np.abs(exact - limit).max()), 1e-6))
    return checks


def _checks_table(checks: list[Check]) -> Table:
    return Table(("check", "deviation", "tolerance", "passed"),
                 [(c.name, c.deviation, c.tolerance, c.passed) for c in checks])


# -- argument handling --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output", help="output file, or '-' for stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--config", help="JSON file whose keys override flags")

    parser = _Parser(prog="larmor-teleport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("entanglement", parents=[common], help="atom-light entropy vs kappa")
    p.add_argument("--kappa", default="0:3:0.05")
    p = sub.add_parser("fidelity", parents=[common], help="ideal fidelity and two-mode squeezed bound")
    p.add_argument("--kappa", default="0:3:0.02")
    p = sub.add_parser("noisy-sweep", parents=[common], help="optimized average fidelity with noise")
    p.add_argument("--kappa", default="0.96")
    p.add_argument("--nbar", default="4")
    p.add_argument("--eps", default="0.08,0.12,0.16")
    p.add_argument("--beta", default="0:0.3:0.01")
    p.add_argument("--single-decay", action="store_true", help="apply atomic decay once instead of twice")
    p = sub.add_parser("squeezing", parents=[common], help="conditional spin variances vs kappa")
    p.add_argument("--kappa", default="0:3:0.1")
    p = sub.add_parser("feasibility", parents=[common], help="kappa and eta from physical parameters")
    for f in _PHYSICAL_FIELDS:
        p.add_argument(f"--{f}", type=float, default=None)
    p = sub.add_parser("oracle", parents=[common], help="run the validation oracles")
    p.add_argument("--kappa", default="1")
    p.add_argument("--n0", default="350")
    p.add_argument("--n-slices", dest="n_slices", default="8192")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Monte Carlo seed")
    return parser


def _apply_config(args) -> None:
    if not args.config:
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config") or not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r}")
        setattr(args, dest, value)


def _meta(args) -> dict:
    skip = {"config", "output"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write(text: str, args) -> None:
    if args.output == "-":
        sys.stdout.write(text)
        return
    if args.output:
        path = Path(args.output)
    else:
        path = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / f"{args.command}.{args.format}"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


_RUNNERS = {
    "entanglement": run_entanglement,
    "fidelity": run_fidelity,
    "noisy-sweep": run_noisy_sweep,
    "squeezing": run_squeezing,
    "feasibility": run_feasibility,
}


def execute(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _apply_config(args)
        if args.command == "oracle":
            checks = run_oracles(args)
            table = _checks_table(checks)
            code = EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED
        else:
            table = _RUNNERS[args.command](args)
            code = EXIT_OK
        text = table.to_csv() if args.format == "csv" else table.to_json(_meta(args))
        _write(text, args)
        return code
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(execute())
