"""Command-line harness: ``solve``, ``basis``, ``check`` and ``trace-plotdata``.

Exit codes: 0 on clean termination, 2 when the objective fails, 3 on a
configuration or input error.
"""

import argparse
import csv
import dataclasses
import io
import sys
import time
import typing

import numpy as np

from .interp_geometry import (
    DegeneratePointSetError,
    build_newton_basis,
    parse_monomials,
    poisedness_determinant,
    quadratic_basis,
    read_point_set,
)
from .linalg_small import InvalidInputError
from .neural_model import TrainConfig
from .problems import UnknownProblemError, get_problem
from .results import TRACE_COLUMNS
from .tr_blackbox import BlackboxConfig, BlackboxLossWeights, default_train_config, run_algorithm2
from .tr_quadratic import LossWeightsQuad, QuadTrainConfig, TRConfig, run_algorithm1, run_newton_tr

ALGORITHMS = ("newton_tr", "quad_ntr", "blackbox_ntr")
EXIT_OK, EXIT_OBJECTIVE, EXIT_CONFIG = 0, 2, 3
RUN_KEYS = ("problem", "algorithm", "seed", "budget", "dim", "x0", "trace", "summary")


class ConfigError(ValueError):
    """A bad key or value in a run configuration."""


# --------------------------------------------------------------- config


def read_config(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key] = value
    return out


def _convert(value, annotation, default, key):
    if isinstance(value, str):
        text = value.strip()
    else:
        return value
    origin = typing.get_origin(annotation)
    args = typing.get_args(annotation)
    if origin is typing.Union and type(None) in args:
        if text.lower() in ("none", ""):
            return None
        annotation = next(a for a in args if a is not type(None))
    try:
        if annotation is bool or isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if annotation is int or (isinstance(default, int) and not isinstance(default, bool)):
            return int(text)
        if annotation is float or isinstance(default, float):
            return float(text)
        if annotation is tuple or isinstance(default, tuple):
            return tuple(int(t) if t.strip().lstrip("-").isdigit() else float(t) for t in text.split(",") if t.strip())
        return text
    except ValueError:
        raise ConfigError(f"bad value {value!r} for key {key!r}") from None


def _build(cls, values, prefix, base=None):
    hints = typing.get_type_hints(cls)
    kwargs = {}
    names = {f.name for f in dataclasses.fields(cls)}
    for key, value in values.items():
        name = key[len(prefix):]
        if name not in names:
            raise ConfigError(f"unknown key {key!r}")
        default = getattr(base, name) if base is not None else None
        kwargs[name] = _convert(value, hints.get(name), default, key)
    try:
        return dataclasses.replace(base, **kwargs) if base is not None else cls(**kwargs)
    except (InvalidInputError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _engine_classes(algorithm):
    if algorithm == "newton_tr":
        return {"": TRConfig}
    if algorithm == "quad_ntr":
        return {"": TRConfig, "loss.": LossWeightsQuad, "train.": QuadTrainConfig}
    return {"": BlackboxConfig, "loss.": BlackboxLossWeights, "train.": TrainConfig}


def resolve_run(settings):
    """Split a flat settings dict into the problem, start point and engine objects.

    Engine keys are unprefixed; loss-weight keys take ``loss.`` and
    training keys ``train.``. Unknown keys raise :class:`ConfigError`.
    """
    settings = dict(settings)
    algorithm = settings.get("algorithm", "quad_ntr")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r} (key 'algorithm')")
    try:
        dim = int(settings["dim"]) if settings.get("dim") not in (None, "") else None
        problem = get_problem(settings.get("problem", "sphere"), dim)
    except (UnknownProblemError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad problem: {exc} (key 'problem')") from None
    seed = int(_convert(settings.get("seed", "0"), int, 0, "seed"))
    budget = settings.get("budget")
    budget = None if budget in (None, "", "none") else _convert(budget, int, 0, "budget")
    if budget is not None and budget < 1:
        raise ConfigError("budget must be positive (key 'budget')")
    if settings.get("x0") not in (None, ""):
        x0 = np.array([float(t) for t in str(settings["x0"]).split(",")])
        if x0.size != problem.dim:
            raise ConfigError(f"x0 has {x0.size} entries for a {problem.dim}-dimensional problem (key 'x0')")
    else:
        x0 = problem.default_start if problem.default_start is not None else np.zeros(problem.dim)
    classes = _engine_classes(algorithm)
    groups = {p: {} for p in classes}
    for key, value in settings.items():
        if key in RUN_KEYS:
            continue
        prefix = "loss." if key.startswith("loss.") else "train." if key.startswith("train.") else ""
        if prefix not in classes:
            raise ConfigError(f"unknown key {key!r}")
        groups[prefix][key] = value
    engine_base = classes[""](seed=seed, budget=budget)
    engine = _build(classes[""], groups[""], "", engine_base)
    objs = {"": engine}
    if "loss." in classes:
        objs["loss."] = _build(classes["loss."], groups["loss."], "loss.", classes["loss."]())
    if "train." in classes:
        base = QuadTrainConfig(seed=seed) if algorithm == "quad_ntr" else default_train_config(problem.dim, seed)
        objs["train."] = _build(classes["train."], groups["train."], "train.", base)
    return problem, x0, algorithm, objs


def run(settings):
    problem, x0, algorithm, objs = resolve_run(settings)
    if algorithm == "newton_tr":
        return problem, run_newton_tr(problem.evaluate, x0, objs[""])
    if algorithm == "quad_ntr":
        return problem, run_algorithm1(problem.evaluate, x0, objs[""], objs["loss."], objs["train."])
    return problem, run_algorithm2(problem.evaluate, x0, objs[""], objs["loss."], objs["train."])


# --------------------------------------------------------------- output


def trace_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = result.x.size
    w.writerow(TRACE_COLUMNS + [f"x_{i + 1}" for i in range(n)])
    for rec in result.trace:
        w.writerow(rec.row())
    return buf.getvalue()


def summary_text(result, problem, algorithm, wall):
    lines = [
        f"problem={problem.name}",
        f"algorithm={algorithm}",
        "final_x=" + ",".join(f"{v:.17g}" for v in result.x),
        f"final_f={result.f:.17g}",
        f"evals={result.evals}",
        f"iters={result.iters}",
        f"terminated_by={result.terminated_by}",
        f"delta={result.delta:.17g}",
        f"wall_time={wall:.3f}",
    ]
    if result.message:
        lines.append(f"message={result.message}")
    return "\n".join(lines) + "\n"


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# --------------------------------------------------------------- subcommands


def cmd_solve(args):
    settings = read_config(args.config) if args.config else {}
    for key in ("problem", "algorithm", "seed", "budget", "dim", "x0"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = str(val)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        settings[k.strip()] = v.strip()
    trace_path = args.trace or settings.get("trace")
    summary_path = args.summary or settings.get("summary")
    t0 = time.perf_counter()
    problem, result = run(settings)
    wall = time.perf_counter() - t0
    if trace_path:
        _write(trace_path, trace_csv(result))
    _write(summary_path, summary_text(result, problem, settings.get("algorithm", "quad_ntr"), wall))
    if result.terminated_by == "failure":
        print(f"objective failure: {result.message}", file=sys.stderr)
        return EXIT_OBJECTIVE
    return EXIT_OK


def cmd_basis(args):
    try:
        points = read_point_set(args.points)
        n = points.n
        initial = parse_monomials(args.monomials, n) if args.monomials else None
        basis = build_newton_basis(points, args.threshold, paper_order=args.paper_order, initial_basis=initial,
                                   pivot_pool=args.pivot_pool)
        full = initial if initial is not None else quadratic_basis(n)
        d = poisedness_determinant(points, full[: points.p])
    except (OSError, InvalidInputError, DegeneratePointSetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    names = [str(m) for m in quadratic_basis(n)]
    out = [f"points={points.p} dim={n}"]
    out.append("poly\tpivot\t" + "\t".join(names))
    for l, (polys, pivots) in enumerate(zip(basis.polys, basis.pivots)):
        for i, (q, k) in enumerate(zip(polys, pivots)):
            pivot = "(" + ",".join(f"{v:.6g}" for v in basis.points[k]) + ")"
            coeffs = "\t".join(f"{c + 0.0:.12g}" for c in q.coeffs)
            out.append(f"N_{i + 1}^[{l}]\t{pivot}\t{coeffs}")
    out.append(f"D={d:.12g}")
    status = "complete" if basis.complete else "incomplete"
    if basis.failed_at is not None:
        status += f" (no pivot for {basis.failed_label})"
    out.append(f"status={status}")
    print("\n".join(out))
    return EXIT_OK


def cmd_check(args):
    from .diagnostics import run_checks

    rows = run_checks(seed=args.seed, force_fail=args.force_fail)
    ok = True
    for name, status, detail in rows:
        print(f"{name}: {status} {detail}".rstrip())
        ok = ok and status != "fail"
    return EXIT_OK if ok else 1


def cmd_trace_plotdata(args):
    try:
        with open(args.trace, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    series = {"f_vs_evals": ("evals", "f"), "delta_vs_iter": ("iter", "delta"), "rho_vs_iter": ("iter", "rho")}
    header = rows[0].keys() if rows else []
    missing = sorted({c for pair in series.values() for c in pair} - set(header))
    if missing:
        print(f"error: trace lacks columns {', '.join(missing)}", file=sys.stderr)
        return EXIT_CONFIG
    prefix = args.out or args.trace.rsplit(".", 1)[0]
    for name, (xc, yc) in series.items():
        lines = [f"# {xc} {yc}"]
        lines += [f"{r[xc]} {r[yc]}" for r in rows if r[yc] != ""]
        path = f"{prefix}_{name}.dat"
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(path)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="neuraltr", description="Trust-region solvers with neural and interpolation models.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run an engine on a benchmark problem")
    s.add_argument("--problem")
    s.add_argument("--algorithm", choices=ALGORITHMS)
    s.add_argument("--config", help="flat key=value file")
    s.add_argument("--seed", type=int)
    s.add_argument("--budget", type=int)
    s.add_argument("--dim", type=int)
    s.add_argument("--x0", help="comma-separated start point")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    s.add_argument("--trace", help="trace CSV path")
    s.add_argument("--summary", help="summary path (default stdout)")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("basis", help="Newton fundamental polynomials of a point-set file")
    b.add_argument("points")
    b.add_argument("--paper-order", action="store_true", help="pair polynomials with points in listed order")
    b.add_argument("--monomials", help="initial basis, e.g. 1,x1,x2,x1^2,x2^2,x1*x2")
    b.add_argument("--threshold", type=float, default=1e-8)
    b.add_argument("--pivot-pool", choices=("block", "all"), default="block")
    b.set_defaults(func=cmd_basis)

    c = sub.add_parser("check", help="derivative, eigen and seam diagnostics")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--force-fail", action="store_true", help=argparse.SUPPRESS)
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("trace-plotdata", help="column series from a trace CSV")
    t.add_argument("trace")
    t.add_argument("--out", help="output prefix")
    t.set_defaults(func=cmd_trace_plotdata)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
