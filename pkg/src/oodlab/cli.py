"""Command-line front end.

Every command writes ``<out>.csv`` plus a ``<out>.json`` sidecar that records
all effective parameters; ``oodlab <command> --config <out>.json`` (or
``oodlab replay <out>.json``) reproduces the CSV byte for byte. Parameters
come from built-in defaults, then the JSON config, then command-line flags.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .analytic import expected_error_agnostic, expected_error_weighted, mse_decomposition
from .bound import BoundInputs, dh_star, lambda_joint, upper_bound_u
from .errors import (
    ConfigurationError,
    DomainError,
    EstimationError,
    GradientError,
)
from .experiments import (
    OPTIMAL,
    Adaptive,
    AnalyticAgnostic,
    AnalyticWeightedFixed,
    AnalyticWeightedOptimal,
    FineGrid,
    McAgnostic,
    McWeighted,
    alpha_trajectory,
    optimal_alpha_numeric,
    sweep_m,
)
from .mixture import MixtureSpec, bayes_error, sample_balanced
from .montecarlo import ConditionalExact, EmpiricalTestSet, McConfig, McEstimate, mc_threshold_mse
from .svg import line_chart
from .training import AGNOSTIC, SgdConfig, train_logistic

log = logging.getLogger("oodlab")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
CSV_HEADER = ["m", "value", "std_err", "ci95_lo", "ci95_hi", "alpha"]
SIDECAR_KEYS = {"command", "params", "results", "outputs", "oodlab_version"}


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_bytes(buf.getvalue().encode())


def parse_m_grid(text: str) -> list[int]:
    """``start:stop:step`` (stop included when aligned; step defaults to 1) or ``a,b,c``."""
    text = str(text).strip()
    sep = ":" if ":" in text else ","
    try:
        parts = [int(p) for p in text.split(sep) if p.strip()]
    except ValueError:
        raise ConfigurationError(f"cannot parse m-grid {text!r}") from None
    if sep == ",":
        if not parts:
            raise ConfigurationError("m-grid is empty")
        if any(m < 0 for m in parts) or any(b <= a for a, b in zip(parts, parts[1:])):
            raise ConfigurationError(f"m-grid {text!r} must be nonnegative and strictly ascending")
        return parts
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3:
        raise ConfigurationError(f"m-grid {text!r} must be start:stop:step")
    start, stop, step = parts
    if step <= 0 or start > stop or start < 0:
        raise ConfigurationError(f"invalid m-grid {text!r}: need 0 <= start <= stop and step > 0")
    return list(range(start, stop + 1, step))


def _alpha_value(v) -> Any:
    if isinstance(v, str):
        if v in (OPTIMAL, AGNOSTIC):
            return v
        try:
            v = float(v)
        except ValueError:
            raise ConfigurationError(f"alpha must be a number, {OPTIMAL!r} or {AGNOSTIC!r}") from None
    v = float(v)
    if not 0.0 <= v <= 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1], got {v}")
    return v


# ---------------------------------------------------------------- parameters


@dataclass(frozen=True)
class Param:
    type: Callable
    default: Any
    help: str = ""
    choices: tuple | None = None
    flag_type: Callable | None = None  # parser for the command-line string


SPEC_PARAMS = {
    "n": Param(int, 100, "number of target samples"),
    "mu": Param(float, 5.0, "class-mean half-separation"),
    "sigma": Param(float, 10.0, "class standard deviation"),
    "delta": Param(float, 1.6, "OOD translation"),
    "seed": Param(int, 0, "master seed"),
    "out": Param(str, None, "output path prefix (required)"),
    "svg": Param(bool, True, "also write an SVG chart"),
    "m_grid": Param(str, "0:500:1", "OOD counts as start:stop:step or a,b,c"),
    "m": Param(list, None, "explicit OOD count (repeatable); overrides --m-grid", flag_type=int),
}

MC_PARAMS = {
    "replicates": Param(int, 20_000, "Monte-Carlo replicates per point"),
    "estimator": Param(str, "conditional", "replicate scoring", ("conditional", "empirical")),
    "test_n": Param(int, 10_000, "test-set size for the empirical estimator"),
}

COMMANDS: dict[str, dict[str, Param]] = {
    "curve": {
        **SPEC_PARAMS,
        "mode": Param(
            str,
            "analytic-agnostic",
            "curve type",
            ("analytic-agnostic", "analytic-weighted", "analytic-weighted-opt", "mc-agnostic", "mc-weighted"),
        ),
        "alpha": Param(_alpha_value, 0.5, "target weight, or 'optimal' (weighted modes)"),
        **MC_PARAMS,
    },
    "bound": {
        **SPEC_PARAMS,
        "m_grid": Param(str, "0:2000:1", SPEC_PARAMS["m_grid"].help),
        "delta_conf": Param(float, 0.05, "confidence parameter of the bound"),
        "sup_points": Param(int, 257, "lattice points per axis for the divergence supremum"),
        "vc_dim": Param(int, 2, "VC dimension of the threshold class"),
    },
    "mse": {
        **SPEC_PARAMS,
        "delta": Param(float, 1.8, "OOD translation"),
        "m_grid": Param(str, "0:2000:2", SPEC_PARAMS["m_grid"].help),
        "mode": Param(str, "analytic", "how to compute the MSE", ("analytic", "mc")),
        "replicates": MC_PARAMS["replicates"],
    },
    "alpha": {
        **SPEC_PARAMS,
        "m_grid": Param(str, "0:2000:20", SPEC_PARAMS["m_grid"].help),
        "search": Param(str, "fine", "alpha search strategy", ("fine", "adaptive")),
        "initial_prev": Param(float, 0.5, "starting alpha for the adaptive search"),
    },
    "mc": {
        **SPEC_PARAMS,
        "m_grid": Param(str, "0,56,200,1000", SPEC_PARAMS["m_grid"].help),
        "alpha": Param(_alpha_value, AGNOSTIC, "'agnostic', a target weight, or 'optimal'"),
        **MC_PARAMS,
    },
    "train": {
        **SPEC_PARAMS,
        "m_grid": Param(str, "0,20,50,100,400,2000", SPEC_PARAMS["m_grid"].help),
        "alpha": Param(_alpha_value, AGNOSTIC, "'agnostic', a target weight, or 'optimal'"),
        "beta": Param(float, 0.5, "fraction of target samples per mini-batch"),
        "batch_size": Param(int, 20, "mini-batch size"),
        "epochs": Param(int, 50, "training epochs"),
        "learning_rate": Param(float, 0.01, "SGD step size"),
        "seeds": Param(int, 10, "independent runs per OOD count"),
    },
    "plot": {
        "csv": Param(str, None, "input CSV (first column is x)"),
        "columns": Param(list, None, "columns to draw (repeatable); default: all numeric", flag_type=str),
        "title": Param(str, "", "chart title"),
        "out": Param(str, None, "output path prefix (required)"),
        "seed": Param(int, 0, "unused; accepted for uniformity"),
    },
}


def _coerce(cmd: str, name: str, value):
    p = COMMANDS[cmd][name]
    if value is None:
        return None
    if p.type is list:
        if not isinstance(value, list):
            raise ConfigurationError(f"{name} must be a list")
        return [p.flag_type(v) if p.flag_type is not str else str(v) for v in value]
    if p.type is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{name} must be true or false")
        return value
    try:
        value = p.type(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name}: cannot interpret {value!r}") from None
    if p.choices and value not in p.choices:
        raise ConfigurationError(f"{name} must be one of {', '.join(p.choices)}")
    return value


def load_config(path: str, cmd: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    if "params" in raw:
        extra = set(raw) - SIDECAR_KEYS
        if extra:
            raise ConfigurationError(f"unknown sidecar keys: {', '.join(sorted(extra))}")
        if raw.get("command", cmd) != cmd:
            raise ConfigurationError(f"sidecar was written by {raw['command']!r}, not {cmd!r}")
        raw = raw["params"]
    unknown = set(raw) - set(COMMANDS[cmd])
    if unknown:
        raise ConfigurationError(f"unknown config keys for {cmd}: {', '.join(sorted(unknown))}")
    return raw


def resolve_params(cmd: str, ns: argparse.Namespace) -> dict:
    params = {k: p.default for k, p in COMMANDS[cmd].items()}
    if getattr(ns, "config", None):
        params.update(load_config(ns.config, cmd))
    for k in COMMANDS[cmd]:
        if hasattr(ns, k):
            params[k] = getattr(ns, k)
    params = {k: _coerce(cmd, k, v) for k, v in params.items()}
    if not params.get("out"):
        raise ConfigurationError("--out is required")
    return params


def _grid(params) -> list[int]:
    grid = params["m"] if params.get("m") else parse_m_grid(params["m_grid"])
    if any(m < 0 for m in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigurationError("m values must be nonnegative and strictly ascending")
    return grid


def _spec(params) -> MixtureSpec:
    return MixtureSpec(params["mu"], params["sigma"], params["delta"])


def _mc_cfg(params) -> McConfig:
    est = ConditionalExact() if params["estimator"] == "conditional" else EmpiricalTestSet(params["test_n"])
    return McConfig(params["replicates"], params["seed"], est)


def _require_even(params, grid):
    if params["n"] % 2 or any(m % 2 for m in grid):
        raise ConfigurationError("sampling modes need even n and even m values")


# ------------------------------------------------------------------ commands


@dataclass
class Output:
    header: list
    rows: list
    series: dict
    results: dict
    title: str = ""
    ylabel: str = "target error"
    extra_csv: dict | None = None


def _curve_rows(curve):
    rows = []
    ses = curve.std_errs or [None] * len(curve.m_grid)
    alphas = curve.alphas or [None] * len(curve.m_grid)
    for m, v, se, a in zip(curve.m_grid, curve.values, ses, alphas):
        lo = hi = None
        if se is not None:
            lo, hi = v - 1.96 * se, v + 1.96 * se
        rows.append([m, v, se, lo, hi, a])
    return rows


def cmd_curve(params) -> Output:
    spec, grid, n = _spec(params), _grid(params), params["n"]
    mode_name, alpha = params["mode"], params["alpha"]
    if mode_name == "analytic-agnostic":
        mode = AnalyticAgnostic()
    elif mode_name == "analytic-weighted":
        if alpha in (OPTIMAL, AGNOSTIC):
            raise ConfigurationError("analytic-weighted needs a numeric --alpha")
        mode = AnalyticWeightedFixed(alpha)
    elif mode_name == "analytic-weighted-opt":
        mode = AnalyticWeightedOptimal()
    else:
        _require_even(params, grid)
        if mode_name == "mc-agnostic":
            mode = McAgnostic(_mc_cfg(params))
        else:
            if alpha == AGNOSTIC:
                raise ConfigurationError("mc-weighted needs a numeric --alpha or 'optimal'")
            mode = McWeighted(alpha, _mc_cfg(params))
    curve = sweep_m(n, grid, spec, mode)
    return Output(
        CSV_HEADER,
        _curve_rows(curve),
        {mode_name: (curve.m_grid, curve.values)},
        {"argmin_m": curve.argmin_m(), "min_value": min(curve.values)},
        title=f"{mode_name}, n={n}, delta={spec.delta:g}",
    )


def cmd_bound(params) -> Output:
    spec, grid, n = _spec(params), _grid(params), params["n"]
    true = np.atleast_1d(expected_error_agnostic(n, np.asarray(grid), spec))
    ub = [
        upper_bound_u(BoundInputs(n, m, spec, params["delta_conf"], params["vc_dim"], params["sup_points"]))
        for m in grid
    ]
    rows = [[m, t, u] for m, t, u in zip(grid, true, ub)]
    results = {
        "d_h_star": dh_star(abs(spec.delta), spec.mu, spec.sigma, params["sup_points"]),
        "lambda": lambda_joint(spec),
        "bayes_error": bayes_error(spec),
        "min_margin": float(np.min(np.asarray(ub) - true)),
    }
    return Output(
        ["m", "true_error", "upper_bound"],
        rows,
        {"true error": (grid, true), "upper bound": (grid, ub)},
        results,
        title=f"bound vs true error, n={n}, delta={spec.delta:g}",
    )


def cmd_mse(params) -> Output:
    spec, grid, n = _spec(params), _grid(params), params["n"]
    rows, decomp = [], []
    for m in grid:
        d = mse_decomposition(n, m, spec)
        decomp.append([m, d.bias**2, d.variance, d.mse])
    if params["mode"] == "analytic":
        rows = [[m, mse, None, None, None, None] for m, _, _, mse in decomp]
    else:
        _require_even(params, grid)
        cfg = McConfig(params["replicates"], params["seed"])
        for m in grid:
            e = mc_threshold_mse(n, m, spec, cfg)
            rows.append([m, e.mean, e.std_err, e.ci95_lo, e.ci95_hi, None])
    values = [r[1] for r in rows]
    return Output(
        CSV_HEADER,
        rows,
        {
            "mse": (grid, values),
            "squared bias": (grid, [r[1] for r in decomp]),
            "variance": (grid, [r[2] for r in decomp]),
        },
        {"mse_at_0": decomp[0][3] if grid[0] == 0 else None, "argmin_m": grid[int(np.argmin(values))]},
        title=f"threshold MSE, n={n}, delta={spec.delta:g}",
        ylabel="MSE of threshold",
        extra_csv={"decomposition": (["m", "bias_sq", "variance", "mse"], decomp)},
    )


def cmd_alpha(params) -> Output:
    spec, grid, n = _spec(params), _grid(params), params["n"]
    search = FineGrid() if params["search"] == "fine" else Adaptive(params["initial_prev"])
    traj = alpha_trajectory(n, grid, spec, search)
    rows = [[m, e, None, None, None, a] for m, a, e in traj]
    return Output(
        CSV_HEADER,
        rows,
        {"alpha*": ([t[0] for t in traj], [t[1] for t in traj])},
        {"search": params["search"]},
        title=f"optimal alpha, n={n}, delta={spec.delta:g}",
        ylabel="alpha*",
    )


def cmd_mc(params) -> Output:
    spec, grid, n = _spec(params), _grid(params), params["n"]
    _require_even(params, grid)
    alpha = params["alpha"]
    mode = McAgnostic(_mc_cfg(params)) if alpha == AGNOSTIC else McWeighted(alpha, _mc_cfg(params))
    curve = sweep_m(n, grid, spec, mode)
    if alpha == AGNOSTIC:
        analytic = [float(v) for v in np.atleast_1d(expected_error_agnostic(n, np.asarray(grid), spec))]
    else:
        analytic = [expected_error_weighted(n, m, a, spec) for m, a in zip(grid, curve.alphas)]
    z = [abs(v - a) / se if se > 0 else 0.0 for v, a, se in zip(curve.values, analytic, curve.std_errs)]
    return Output(
        CSV_HEADER,
        _curve_rows(curve),
        {"monte carlo": (grid, curve.values), "analytic": (grid, analytic)},
        {"analytic": analytic, "max_abs_z": max(z)},
        title=f"Monte Carlo vs analytic, n={n}, delta={spec.delta:g}",
    )


def cmd_train(params) -> Output:
    spec, grid, n = _spec(params), _grid(params), params["n"]
    _require_even(params, grid)
    rows = []
    for m in grid:
        alpha = params["alpha"]
        if alpha == OPTIMAL:
            alpha = optimal_alpha_numeric(n, m, spec)[0]
        finals = []
        for s in range(params["seeds"]):
            run_seed = params["seed"] * 1_000_003 + s
            data = sample_balanced(spec, n, m, np.random.SeedSequence(run_seed, spawn_key=(m,)))
            cfg = SgdConfig(
                params["learning_rate"], params["epochs"], params["batch_size"], params["beta"], alpha, run_seed
            )
            _, trace = train_logistic(data.target(), data.ood(), cfg, spec)
            finals.append(trace[-1] if trace else 0.5)
        if len(finals) >= 2:
            e = McEstimate.from_values(np.asarray(finals))
            rows.append([m, e.mean, e.std_err, e.ci95_lo, e.ci95_hi, None if alpha == AGNOSTIC else alpha])
        else:
            rows.append([m, finals[0], None, None, None, None if alpha == AGNOSTIC else alpha])
    values = [r[1] for r in rows]
    return Output(
        CSV_HEADER,
        rows,
        {"logistic SGD": (grid, values)},
        {"argmin_m": grid[int(np.argmin(values))]},
        title=f"logistic SGD, n={n}, delta={spec.delta:g}, alpha={params['alpha']}",
    )


def cmd_plot(params) -> Output:
    src = Path(params["csv"] or "")
    if not params["csv"] or not src.is_file():
        raise ConfigurationError(f"--csv must name an existing file, got {params['csv']!r}")
    with src.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError("input CSV is empty") from None
        table = list(reader)
    if len(header) < 2:
        raise ConfigurationError("input CSV needs at least two columns")

    def col(i):
        return [float(r[i]) if i < len(r) and r[i] != "" else float("nan") for r in table]

    try:
        xs = col(0)
        wanted = params["columns"] or [
            h for i, h in enumerate(header[1:], 1) if any(np.isfinite(col(i)))
            and h not in ("std_err", "ci95_lo", "ci95_hi", "alpha")
        ]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise ConfigurationError(f"unknown columns: {', '.join(missing)}")
        series = {c: (xs, col(header.index(c))) for c in wanted}
    except ValueError:
        raise ConfigurationError("input CSV has non-numeric cells") from None
    return Output([], [], series, {"source": str(src)}, title=params["title"], ylabel="")


HANDLERS = {
    "curve": cmd_curve,
    "bound": cmd_bound,
    "mse": cmd_mse,
    "alpha": cmd_alpha,
    "mc": cmd_mc,
    "train": cmd_train,
    "plot": cmd_plot,
}


def _prefix(out: str) -> Path:
    p = Path(out)
    return p.with_suffix("") if p.suffix in (".csv", ".json", ".svg") else p


def execute(cmd: str, params: dict) -> dict:
    """Run a command with fully resolved parameters and write its files."""
    result = HANDLERS[cmd](params)
    prefix = _prefix(params["out"])
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True)
    outputs = {}
    if cmd != "plot":
        path = prefix.with_name(prefix.name + ".csv")
        write_csv(path, result.header, result.rows)
        outputs["csv"] = str(path)
        for tag, (header, rows) in (result.extra_csv or {}).items():
            extra = prefix.with_name(f"{prefix.name}.{tag}.csv")
            write_csv(extra, header, rows)
            outputs[tag] = str(extra)
    if cmd == "plot" or params.get("svg", True):
        path = prefix.with_name(prefix.name + ".svg")
        xlabel = "m (OOD samples)" if cmd != "plot" else ""
        path.write_text(line_chart(result.series, result.title, xlabel, result.ylabel), newline="\n")
        outputs["svg"] = str(path)
    sidecar = {
        "command": cmd,
        "oodlab_version": __version__,
        "params": params,
        "results": result.results,
        "outputs": outputs,
    }
    side_path = prefix.with_name(prefix.name + ".json")
    side_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=_json_default) + "\n")
    outputs["json"] = str(side_path)
    return outputs


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _flag_kwargs(p: Param) -> dict:
    kw: dict = {"default": argparse.SUPPRESS, "help": p.help}
    if p.type is bool:
        kw["action"] = argparse.BooleanOptionalAction
    elif p.type is list:
        kw["action"] = "append"
        kw["type"] = p.flag_type
    else:
        kw["type"] = str if p.type is _alpha_value else p.type
        if p.choices:
            kw["choices"] = p.choices
    return kw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oodlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, spec in COMMANDS.items():
        p = sub.add_parser(cmd, help=HANDLERS[cmd].__name__.replace("cmd_", ""))
        p.add_argument("--config", help="JSON config or sidecar; flags override it")
        for name, param in spec.items():
            p.add_argument("--" + name.replace("_", "-"), dest=name, **_flag_kwargs(param))
    rp = sub.add_parser("replay", help="re-run a command from its JSON sidecar")
    rp.add_argument("sidecar")
    rp.add_argument("--out", default=argparse.SUPPRESS, help="override the output prefix")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if ns.command == "replay":
            try:
                cmd = json.loads(Path(ns.sidecar).read_text())["command"]
            except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ConfigurationError(f"cannot read sidecar {ns.sidecar}: {exc}") from None
            if cmd not in COMMANDS:
                raise ConfigurationError(f"sidecar names unknown command {cmd!r}")
            ns.config = ns.sidecar
            cmd_name = cmd
        else:
            cmd_name = ns.command
        params = resolve_params(cmd_name, ns)
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            outputs = execute(cmd_name, params)
    except (ConfigurationError, DomainError, GradientError) as exc:
        print(f"oodlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, EstimationError, np.linalg.LinAlgError) as exc:
        print(f"oodlab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for kind, path in outputs.items():
        log.info("wrote %s %s", kind, path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
