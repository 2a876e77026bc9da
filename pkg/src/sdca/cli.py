"""Experiment harness: run matrices over (algorithm, schedule, lambda, seed),
per-epoch CSV traces, cached high-precision reference solutions, and a table
printer for the iteration-count bounds.

Exit status: 0 success, 2 invalid configuration, 3 I/O failure (unreadable or
malformed input, unwritable output).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from .data import DataFormatError, Dataset, load_svmlight, normalize_to_unit_ball
from .losses import LOSS_NAMES, make_loss
from .solver import (
    ConfigError,
    SolverConfig,
    dual_objective,
    primal_objective,
    run_sgd_baseline,
    solve,
)

ALGORITHMS = ("sdca", "sdca-sgd-init", "sgd")
CSV_COLUMNS = ("epoch", "primal", "dual", "gap", "primal_subopt",
               "dual_subopt", "bound", "test_error", "wall_seconds")
REFERENCE_TARGET_GAP = 1e-10
REFERENCE_EPOCH_CAP = 10_000
REFERENCE_SEED = 271828


def _version():
    try:
        from importlib.metadata import version

        return version("sdca")
    except Exception:
        return "unknown"


@dataclass(frozen=True)
class ExperimentPlan:
    """One experiment grid; everything needed to reproduce the run matrix."""

    train_path: str
    loss_name: str
    lambdas: tuple
    out_dir: str
    test_path: str = None
    gamma: float = 1.0
    schedules: tuple = ("random",)
    algorithms: tuple = ("sdca",)
    epochs: int = 10
    seeds: tuple = (0,)
    gap_every: int = 1
    stop_gap: float = None
    emit_bounds: bool = False
    normalize: bool = True

    def validate(self):
        if not self.lambdas:
            raise ConfigError("at least one lambda is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if not self.schedules:
            raise ConfigError("at least one schedule is required")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        for s in self.schedules:
            if s not in ("random", "perm", "cyclic"):
                raise ConfigError(f"unknown schedule {s!r}")
        if self.loss_name not in LOSS_NAMES:
            raise ConfigError(f"unknown loss {self.loss_name!r}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.gap_every < 1:
            raise ConfigError("gap_every must be >= 1")
        for lam in self.lambdas:
            if not lam > 0:
                raise ConfigError("lambdas must be > 0")
        return self


@dataclass
class ReferenceSolution:
    """High-precision solution used to compute suboptimality columns."""

    lam: float
    loss_name: str
    gamma: float
    w_ref: np.ndarray
    dual_ref: float
    primal_ref: float
    gap_achieved: float
    degraded: bool


def evaluate_test_error(w, dataset: Dataset):
    """Zero-one error of sign(w . x) against the labels; sign(0) is an error."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape[0] < dataset.dim:
        w = np.concatenate([w, np.zeros(dataset.dim - w.shape[0])])
    margins = dataset.margins(w)
    return float(np.mean(margins * dataset.labels <= 0.0))


def solve_reference(loss, lam, dataset, target_gap=REFERENCE_TARGET_GAP,
                    max_epochs=REFERENCE_EPOCH_CAP) -> ReferenceSolution:
    """Run SDCA (random schedule, fixed internal seed) until the duality gap
    certifies target_gap, or mark the solution degraded at the epoch cap."""
    config = SolverConfig(loss=loss, lam=lam, schedule="random", epochs=max_epochs,
                          output="final", stop_gap=target_gap, seed=REFERENCE_SEED)
    result = solve(config, dataset)
    gap = result.final_gap
    return ReferenceSolution(
        lam=lam,
        loss_name=loss.name,
        gamma=getattr(loss, "gamma", 0.0),
        w_ref=result.w_final,
        dual_ref=result.trace[-1].dual,
        primal_ref=result.trace[-1].primal,
        gap_achieved=gap,
        degraded=gap > target_gap,
    )


def _reference_path(out_dir, digest, loss_name, gamma, lam, normalized):
    tag = f"{loss_name}_g{gamma:g}" if loss_name == "smoothed-hinge" else loss_name
    norm = "norm" if normalized else "raw"
    return Path(out_dir) / f"ref_{digest}_{tag}_lam{lam:g}_{norm}.json"


def get_reference(out_dir, digest, loss, lam, dataset, normalized=True):
    """Load the cached reference for (data digest, loss, gamma, lambda) or
    solve and cache it."""
    path = _reference_path(out_dir, digest, loss.name,
                           getattr(loss, "gamma", 0.0), lam, normalized)
    if path.exists():
        blob = json.loads(path.read_text())
        return ReferenceSolution(
            lam=blob["lambda"],
            loss_name=blob["loss"],
            gamma=blob["gamma"],
            w_ref=np.array(blob["w_ref"]),
            dual_ref=blob["dual_ref"],
            primal_ref=blob["primal_ref"],
            gap_achieved=blob["gap_achieved"],
            degraded=blob["degraded"],
        )
    ref = solve_reference(loss, lam, dataset)
    blob = {
        "lambda": ref.lam,
        "loss": ref.loss_name,
        "gamma": ref.gamma,
        "dual_ref": ref.dual_ref,
        "primal_ref": ref.primal_ref,
        "gap_achieved": ref.gap_achieved,
        "degraded": ref.degraded,
        "w_ref": [float(v) for v in ref.w_ref],
    }
    path.write_text(json.dumps(blob))
    return ref


def _fmt(value):
    return "" if value is None else f"{value:.17g}"


def render_trace_csv(trace):
    lines = [",".join(CSV_COLUMNS)]
    for r in trace:
        lines.append(",".join([
            str(r.epoch), _fmt(r.primal), _fmt(r.dual), _fmt(r.gap),
            _fmt(r.primal_subopt), _fmt(r.dual_subopt), _fmt(r.bound),
            _fmt(r.test_error), f"{r.wall_seconds:.6f}",
        ]))
    return "\n".join(lines) + "\n"


def cell_filename(algo, schedule, lam, seed):
    return f"{algo}_{schedule}_lam{lam:g}_seed{seed}.csv"


def _run_cell(plan, algo, schedule, lam, seed, dataset, test_dataset, ref):
    loss = make_loss(plan.loss_name, plan.gamma)

    def epoch_callback(state, record):
        if test_dataset is not None:
            record.test_error = evaluate_test_error(state.w, test_dataset)

    if algo == "sgd":
        config = SolverConfig(loss=loss, lam=lam, epochs=plan.epochs, seed=seed,
                              gap_every=plan.gap_every, output="final")
        _, trace = run_sgd_baseline(config, dataset, epoch_callback=epoch_callback)
    else:
        config = SolverConfig(
            loss=loss, lam=lam, schedule=schedule,
            init="sgd" if algo == "sdca-sgd-init" else "zero",
            epochs=plan.epochs, output="final", stop_gap=plan.stop_gap,
            seed=seed, gap_every=plan.gap_every,
        )
        trace = solve(config, dataset, epoch_callback=epoch_callback).trace
    for r in trace:
        if ref is not None:
            r.primal_subopt = r.primal - ref.primal_ref
            if r.dual is not None:
                r.dual_subopt = ref.dual_ref - r.dual
        if plan.emit_bounds and algo != "sgd":
            r.bound = bounds_mod.gap_bound_curve(loss, dataset.n, lam,
                                                 r.epoch * dataset.n)
    return trace


def write_manifest(path, plan, scale, references):
    lines = [
        "# sdca experiment manifest",
        f"# version={_version()} numpy={np.__version__}",
        f"# normalization_scale={scale!r}",
    ]
    for lam, ref in sorted(references.items()):
        lines.append(f"# reference lam={lam:g}: gap_achieved={ref.gap_achieved:.6g} "
                     f"degraded={ref.degraded}")
    lines.append(f"train={plan.train_path}")
    if plan.test_path is not None:
        lines.append(f"test={plan.test_path}")
    lines.append(f"loss={plan.loss_name}")
    lines.append(f"gamma={plan.gamma!r}")
    lines.append("lambdas=" + ",".join(repr(v) for v in plan.lambdas))
    lines.append("schedules=" + ",".join(plan.schedules))
    lines.append("algos=" + ",".join(plan.algorithms))
    lines.append(f"epochs={plan.epochs}")
    lines.append("seeds=" + ",".join(str(s) for s in plan.seeds))
    lines.append(f"gap_every={plan.gap_every}")
    if plan.stop_gap is not None:
        lines.append(f"stop_gap={plan.stop_gap!r}")
    lines.append(f"emit_bounds={'true' if plan.emit_bounds else 'false'}")
    lines.append(f"normalize={'on' if plan.normalize else 'off'}")
    lines.append(f"out_dir={plan.out_dir}")
    Path(path).write_text("\n".join(lines) + "\n")


def parse_manifest(text) -> ExperimentPlan:
    """Rebuild the plan from manifest key=value lines (comments ignored)."""
    values = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"bad manifest line {raw!r}")
        values[key.strip()] = val.strip()
    return ExperimentPlan(
        train_path=values["train"],
        test_path=values.get("test"),
        loss_name=values["loss"],
        gamma=float(values["gamma"]),
        lambdas=tuple(float(v) for v in values["lambdas"].split(",")),
        schedules=tuple(values["schedules"].split(",")),
        algorithms=tuple(values["algos"].split(",")),
        epochs=int(values["epochs"]),
        seeds=tuple(int(v) for v in values["seeds"].split(",")),
        gap_every=int(values["gap_every"]),
        stop_gap=float(values["stop_gap"]) if "stop_gap" in values else None,
        emit_bounds=values["emit_bounds"] == "true",
        normalize=values["normalize"] == "on",
        out_dir=values["out_dir"],
    ).validate()


def run_plan(plan: ExperimentPlan, jobs=1):
    """Execute every (algorithm, schedule, lambda, seed) cell; returns the
    list of files written (trace CSVs, references, manifest)."""
    plan.validate()
    out_dir = Path(plan.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_bytes = Path(plan.train_path).read_bytes()
    digest = hashlib.sha256(train_bytes).hexdigest()[:12]
    dataset = load_svmlight(plan.train_path)
    scale = 1.0
    if plan.normalize:
        dataset, scale = normalize_to_unit_ball(dataset)
    test_dataset = load_svmlight(plan.test_path) if plan.test_path else None

    loss = make_loss(plan.loss_name, plan.gamma)
    references = {}
    written = []
    for lam in sorted(set(plan.lambdas)):
        ref_path = _reference_path(plan.out_dir, digest, loss.name,
                                   getattr(loss, "gamma", 0.0), lam, plan.normalize)
        references[lam] = get_reference(plan.out_dir, digest, loss, lam, dataset,
                                        plan.normalize)
        written.append(str(ref_path))

    cells = [(algo, sched, lam, seed)
             for algo in plan.algorithms
             for sched in plan.schedules
             for lam in plan.lambdas
             for seed in plan.seeds]

    def worker(cell):
        algo, sched, lam, seed = cell
        trace = _run_cell(plan, algo, sched, lam, seed, dataset, test_dataset,
                          references[lam])
        path = out_dir / cell_filename(algo, sched, lam, seed)
        path.write_text(render_trace_csv(trace))
        return str(path)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            written.extend(pool.map(worker, cells))
    else:
        written.extend(worker(cell) for cell in cells)

    manifest = out_dir / "manifest.txt"
    write_manifest(manifest, plan, scale, references)
    written.append(str(manifest))
    return written


# ---------------------------------------------------------------------------
# Command line front end. Options may also come from a key=value config file
# (--config); explicit flags win on conflict.

def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v)

def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v)

def _str_list(text):
    return tuple(v for v in text.split(",") if v)


# (dest, flag, converter, default) per subcommand; converters also apply to
# config-file values.
_SOLVE_OPTS = [
    ("train", "--train", str, None),
    ("test", "--test", str, None),
    ("loss", "--loss", str, None),
    ("gamma", "--gamma", float, 1.0),
    ("lam", "--lambda", float, None),
    ("schedule", "--schedule", str, "random"),
    ("algo", "--algo", str, "sdca"),
    ("epochs", "--epochs", int, 10),
    ("t0_fraction", "--t0-fraction", float, 0.5),
    ("output", "--output", str, "average"),
    ("seed", "--seed", int, 0),
    ("stop_gap", "--stop-gap", float, None),
    ("gap_every", "--gap-every", int, 1),
    ("normalize", "--normalize", str, "on"),
    ("out_dir", "--out-dir", str, None),
]

_EXPERIMENT_OPTS = [
    ("train", "--train", str, None),
    ("test", "--test", str, None),
    ("loss", "--loss", str, None),
    ("gamma", "--gamma", float, 1.0),
    ("lambdas", "--lambdas", _float_list, None),
    ("schedules", "--schedules", _str_list, ("random",)),
    ("algos", "--algos", _str_list, ("sdca",)),
    ("epochs", "--epochs", int, 10),
    ("seeds", "--seeds", _int_list, (0,)),
    ("stop_gap", "--stop-gap", float, None),
    ("gap_every", "--gap-every", int, 1),
    ("emit_bounds", "--emit-bounds", bool, False),
    ("normalize", "--normalize", str, "on"),
    ("out_dir", "--out-dir", str, None),
    ("jobs", "--jobs", int, 1),
]

_REFERENCE_OPTS = [
    ("train", "--train", str, None),
    ("loss", "--loss", str, None),
    ("gamma", "--gamma", float, 1.0),
    ("lam", "--lambda", float, None),
    ("normalize", "--normalize", str, "on"),
    ("out_dir", "--out-dir", str, None),
]

_BOUNDS_OPTS = [
    ("n", "--n", int, None),
    ("lam", "--lambda", float, None),
    ("eps", "--eps", float, 1e-3),
    ("lipschitz", "--lipschitz", float, 1.0),
    ("gamma_smooth", "--gamma-smooth", float, None),
    ("hinge", "--hinge", bool, False),
    ("train", "--train", str, None),
    ("loss", "--loss", str, None),
    ("gamma", "--gamma", float, 1.0),
    ("normalize", "--normalize", str, "on"),
    ("out_dir", "--out-dir", str, None),
    ("eps_d", "--eps-d", float, None),
]


def _add_options(parser, opts):
    parser.add_argument("--config", type=str, default=None,
                        help="key=value file; explicit flags win")
    for dest, flag, conv, _default in opts:
        if conv is bool:
            parser.add_argument(flag, dest=dest, action="store_const", const=True,
                                default=None)
        else:
            parser.add_argument(flag, dest=dest, type=str, default=None)


def _read_config_file(path):
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _resolve(args, opts):
    file_values = _read_config_file(args.config) if args.config else {}
    resolved = {}
    for dest, flag, conv, default in opts:
        raw = getattr(args, dest)
        file_key = flag.lstrip("-").replace("-", "_")
        if raw is not None:
            resolved[dest] = raw if conv is bool else conv(raw)
        elif file_key in file_values or dest in file_values:
            value = file_values.get(file_key, file_values.get(dest))
            resolved[dest] = value.lower() in ("1", "true", "yes") if conv is bool \
                else conv(value)
        else:
            resolved[dest] = default
    return resolved


def _require_opt(resolved, key, flag):
    if resolved[key] is None:
        raise ConfigError(f"{flag} is required")
    return resolved[key]


def _load_train(path, normalize):
    dataset = load_svmlight(path)
    scale = 1.0
    if normalize:
        dataset, scale = normalize_to_unit_ball(dataset)
    return dataset, scale


def _cmd_solve(args):
    opt = _resolve(args, _SOLVE_OPTS)
    train = _require_opt(opt, "train", "--train")
    loss_name = _require_opt(opt, "loss", "--loss")
    lam = _require_opt(opt, "lam", "--lambda")
    if opt["algo"] not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {opt['algo']!r}")
    normalize = opt["normalize"] == "on"
    dataset, scale = _load_train(train, normalize)
    test_dataset = load_svmlight(opt["test"]) if opt["test"] else None
    loss = make_loss(loss_name, opt["gamma"])

    def epoch_callback(state, record):
        if test_dataset is not None:
            record.test_error = evaluate_test_error(state.w, test_dataset)

    print(f"n={dataset.n} dim={dataset.dim} normalization_scale={scale:g}")
    if opt["algo"] == "sgd":
        config = SolverConfig(loss=loss, lam=lam, epochs=opt["epochs"],
                              seed=opt["seed"], gap_every=opt["gap_every"],
                              output="final")
        w, trace = run_sgd_baseline(config, dataset, epoch_callback=epoch_callback)
        print(f"final: primal={trace[-1].primal:.12g} epochs={trace[-1].epoch}")
    else:
        config = SolverConfig(
            loss=loss, lam=lam, schedule=opt["schedule"],
            init="sgd" if opt["algo"] == "sdca-sgd-init" else "zero",
            epochs=opt["epochs"], t0_fraction=opt["t0_fraction"],
            output=opt["output"], stop_gap=opt["stop_gap"], seed=opt["seed"],
            gap_every=opt["gap_every"],
        )
        result = solve(config, dataset, epoch_callback=epoch_callback)
        trace = result.trace
        last = trace[-1]
        print(f"final: primal={last.primal:.12g} dual={last.dual:.12g} "
              f"gap={last.gap:.12g} epochs={last.epoch} steps={result.steps_run}")
        p_out = primal_objective(loss, lam, dataset, result.w)
        d_out = dual_objective(loss, lam, dataset, result.alpha)
        print(f"output({config.output}): primal={p_out:.12g} dual={d_out:.12g} "
              f"gap={p_out - d_out:.12g}")
        if test_dataset is not None:
            print(f"test_error={evaluate_test_error(result.w, test_dataset):.6g}")
    if opt["out_dir"]:
        out_dir = Path(opt["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / cell_filename(opt["algo"], opt["schedule"], lam, opt["seed"])
        path.write_text(render_trace_csv(trace))
        print(f"trace written to {path}")
    return 0


def _cmd_experiment(args):
    opt = _resolve(args, _EXPERIMENT_OPTS)
    plan = ExperimentPlan(
        train_path=_require_opt(opt, "train", "--train"),
        test_path=opt["test"],
        loss_name=_require_opt(opt, "loss", "--loss"),
        gamma=opt["gamma"],
        lambdas=_require_opt(opt, "lambdas", "--lambdas"),
        schedules=opt["schedules"],
        algorithms=opt["algos"],
        epochs=opt["epochs"],
        seeds=opt["seeds"],
        gap_every=opt["gap_every"],
        stop_gap=opt["stop_gap"],
        emit_bounds=opt["emit_bounds"],
        normalize=opt["normalize"] == "on",
        out_dir=_require_opt(opt, "out_dir", "--out-dir"),
    )
    written = run_plan(plan, jobs=opt["jobs"])
    for path in written:
        print(path)
    return 0


def _cmd_reference(args):
    opt = _resolve(args, _REFERENCE_OPTS)
    train = _require_opt(opt, "train", "--train")
    loss_name = _require_opt(opt, "loss", "--loss")
    lam = _require_opt(opt, "lam", "--lambda")
    out_dir = _require_opt(opt, "out_dir", "--out-dir")
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    normalize = opt["normalize"] == "on"
    digest = hashlib.sha256(Path(train).read_bytes()).hexdigest()[:12]
    dataset, scale = _load_train(train, normalize)
    loss = make_loss(loss_name, opt["gamma"])
    ref = get_reference(out_dir, digest, loss, lam, dataset, normalize)
    path = _reference_path(out_dir, digest, loss.name, getattr(loss, "gamma", 0.0),
                           lam, normalize)
    status = "degraded" if ref.degraded else "ok"
    print(f"reference {path} [{status}] primal={ref.primal_ref:.12g} "
          f"dual={ref.dual_ref:.12g} gap={ref.gap_achieved:.3g} "
          f"normalization_scale={scale:g}")
    return 0


def _cmd_bounds(args):
    opt = _resolve(args, _BOUNDS_OPTS)
    n = _require_opt(opt, "n", "--n")
    lam = _require_opt(opt, "lam", "--lambda")
    eps = opt["eps"]
    rows = []
    b = bounds_mod.BoundInputs(n=n, lam=lam, eps_p=eps, lipschitz=opt["lipschitz"],
                               gamma_smooth=opt["gamma_smooth"],
                               hinge_constants=opt["hinge"])
    t0, t = bounds_mod.lipschitz_iteration_bound(b)
    label = "lipschitz (hinge constants)" if opt["hinge"] else "lipschitz"
    rows.append((label, t0, t))
    wt0, wt = bounds_mod.warmstart_iteration_bound(b)
    rows.append(("lipschitz + sgd warm start", wt0, wt))
    if opt["gamma_smooth"] is not None:
        rows.append(("smooth", "-", bounds_mod.smooth_iteration_bound(b)))
    print(f"n={n} lambda={lam:g} eps={eps:g} L={opt['lipschitz']:g}"
          + (f" gamma={opt['gamma_smooth']:g}" if opt["gamma_smooth"] else ""))
    print(f"{'bound':<30}{'T0':>12}{'T':>14}")
    for label, t0, t in rows:
        print(f"{label:<30}{t0!s:>12}{t!s:>14}")
    warm = bounds_mod.sgd_warmstart_dual_bound(n, opt["lipschitz"], lam)
    print(f"sgd warm-start dual suboptimality <= {warm:.6g}")

    if opt["train"] and opt["loss"]:
        normalize = opt["normalize"] == "on"
        digest = hashlib.sha256(Path(opt["train"]).read_bytes()).hexdigest()[:12]
        dataset, _ = _load_train(opt["train"], normalize)
        loss = make_loss(opt["loss"], opt["gamma"])
        out_dir = opt["out_dir"] or "."
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        ref = get_reference(out_dir, digest, loss, lam, dataset, normalize)
        diag = bounds_mod.refined_diagnostics(loss, dataset, ref.w_ref)
        eps_d = opt["eps_d"] if opt["eps_d"] is not None else eps
        t_ref = bounds_mod.refined_dual_iteration_bound(
            dataset.n, lam, opt["lipschitz"], diag.gammas_sorted, eps_d)
        resid = bounds_mod.refined_primal_residual(
            diag.gammas_sorted, lam, diag.rho, opt["lipschitz"], eps_d)
        print(f"refined: rho={diag.rho:.6g} (converged={diag.rho_converged}) "
              f"median_modulus={float(np.median(diag.gammas_sorted)):.6g}")
        t_str = str(t_ref) if t_ref is not None else "unattained on grid"
        print(f"refined dual iterations for eps_d={eps_d:g}: {t_str}")
        print(f"refined primal residual: {resid:.6g}")
        if ref.degraded:
            print("warning: reference solution is degraded")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sdca",
        description="Stochastic dual coordinate ascent for regularized linear "
                    "prediction, with duality-gap stopping and bound diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts, fn in (
        ("solve", _SOLVE_OPTS, _cmd_solve),
        ("experiment", _EXPERIMENT_OPTS, _cmd_experiment),
        ("bounds", _BOUNDS_OPTS, _cmd_bounds),
        ("reference", _REFERENCE_OPTS, _cmd_reference),
    ):
        p = sub.add_parser(name)
        _add_options(p, opts)
        p.set_defaults(fn=fn)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
