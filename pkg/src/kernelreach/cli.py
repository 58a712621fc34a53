"""Command-line front end: simulate, fit, query, contour, validate, sweep.

All commands are deterministic given their input files and flags; wall-time
reports go to the terminal, never into data files.  Exit codes: 0 success,
2 validation or configuration error, 3 I/O error, 4 numerical error.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .estimator import (
    RECIPROCAL_M,
    FitConfig,
    ModelFormatError,
    classify_batch,
    decision_values,
    fit,
    load_model,
    save_model,
)
from .geometry import (
    GridSpec,
    containment_rate,
    convergence_sweep,
    extract_contour,
    grid_decision_values,
    hausdorff,
    write_contour_csv,
    write_contour_sidecar,
    write_sweep_csv,
)
from .kernels import KernelSpec
from .systems import (
    BoxInitial,
    CwhSystem,
    ExternalSource,
    GaussianDisturbance,
    NoDisturbance,
    PointInitial,
    SaturatedFeedback,
    ScaledBetaDisturbance,
    SystemConfig,
    ToraSystem,
    load_mlp_controller,
    load_sample_csv,
    sample_terminal_states,
    save_sample_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    """Configuration problem, annotated with the offending file and field."""


@dataclass
class RunConfig:
    system: SystemConfig
    sample_size: int
    master_seed: int
    fit: FitConfig
    grid: GridSpec  # may be None


def _field(doc, key, path, where, required=True, default=None):
    if key not in doc:
        if required:
            raise ConfigError(f"{path}: missing field {where}{key}")
        return default
    return doc[key]


def _parse_disturbance(doc, path):
    if doc is None:
        return NoDisturbance()
    kind = _field(doc, "kind", path, "disturbance.")
    if kind == "none":
        return NoDisturbance()
    if kind == "gaussian":
        return GaussianDisturbance(
            mean=_field(doc, "mean", path, "disturbance."),
            covariance_diagonal=_field(doc, "covariance_diagonal", path, "disturbance."),
        )
    if kind == "scaled-beta":
        return ScaledBetaDisturbance(
            alpha=float(_field(doc, "alpha", path, "disturbance.")),
            beta=float(_field(doc, "beta", path, "disturbance.")),
            scale=float(_field(doc, "scale", path, "disturbance.")),
            dims=int(_field(doc, "dims", path, "disturbance.", required=False, default=4)),
            mask=_field(doc, "mask", path, "disturbance.", required=False),
        )
    raise ConfigError(f"{path}: unknown disturbance.kind {kind!r}")


def _parse_initial(doc, path):
    if doc is None:
        return None
    kind = _field(doc, "kind", path, "initial.")
    if kind == "point":
        return PointInitial(x=_field(doc, "x", path, "initial."))
    if kind == "uniform-box":
        return BoxInitial(
            lo=_field(doc, "lo", path, "initial."),
            hi=_field(doc, "hi", path, "initial."),
        )
    raise ConfigError(f"{path}: unknown initial.kind {kind!r}")


def _parse_controller(doc, path, base_dir):
    if doc is None:
        return SaturatedFeedback()
    kind = _field(doc, "kind", path, "system.controller.")
    if kind == "builtin-feedback":
        return SaturatedFeedback(
            k1=float(doc.get("k1", 1.0)),
            k2=float(doc.get("k2", 1.0)),
            saturation=float(doc.get("saturation", 1.0)),
        )
    if kind == "mlp":
        weight_path = base_dir / _field(doc, "path", path, "system.controller.")
        return load_mlp_controller(weight_path)
    raise ConfigError(f"{path}: unknown system.controller.kind {kind!r}")


def _parse_system(doc, path, base_dir):
    kind = _field(doc, "kind", path, "system.")
    if kind == "cwh":
        return CwhSystem(
            omega=float(doc.get("omega", 0.00113)),
            mass=float(doc.get("mass", 300.0)),
            dt=float(doc.get("dt", 20.0)),
            input_sequence=doc.get("input_sequence"),
        )
    if kind == "tora":
        return ToraSystem(
            controller=_parse_controller(doc.get("controller"), path, base_dir),
            control_period=float(doc.get("control_period", 0.1)),
            integrator_substeps=int(doc.get("integrator_substeps", 10)),
        )
    if kind == "external":
        return ExternalSource(path=str(base_dir / _field(doc, "path", path, "system.")))
    raise ConfigError(f"{path}: unknown system.kind {kind!r}")


def _parse_fit(doc, path):
    doc = doc or {}
    regularization = doc.get("lambda", RECIPROCAL_M)
    if isinstance(regularization, str) and regularization != RECIPROCAL_M:
        raise ConfigError(
            f"{path}: fit.lambda must be a positive number or {RECIPROCAL_M!r}"
        )
    return FitConfig(
        kernel=KernelSpec(doc.get("kernel_family", "abel"), float(doc.get("bandwidth", 0.1))),
        regularization=regularization,
    )


def grid_from_dict(doc, path="grid"):
    return GridSpec(
        dim_i=int(_field(doc, "dim_i", path, "")),
        dim_j=int(_field(doc, "dim_j", path, "")),
        fixed=_field(doc, "fixed", path, ""),
        range_i=_field(doc, "range_i", path, ""),
        range_j=_field(doc, "range_j", path, ""),
        resolution_i=int(doc.get("resolution_i", 100)),
        resolution_j=int(doc.get("resolution_j", 100)),
    )


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc


def load_run_config(path) -> RunConfig:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    base_dir = Path(path).resolve().parent
    try:
        system = SystemConfig(
            system=_parse_system(_field(doc, "system", path, ""), path, base_dir),
            horizon=int(_field(doc, "horizon", path, "")),
            disturbance=_parse_disturbance(doc.get("disturbance"), path),
            initial=_parse_initial(doc.get("initial"), path),
        )
        sample_size = int(_field(doc, "sample_size", path, ""))
        if sample_size < 1:
            raise ConfigError(f"{path}: sample_size must be at least 1")
        grid = doc.get("grid")
        return RunConfig(
            system=system,
            sample_size=sample_size,
            master_seed=int(_field(doc, "master_seed", path, "")),
            fit=_parse_fit(doc.get("fit"), path),
            grid=None if grid is None else grid_from_dict(grid, f"{path}: grid"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_lambda_flag(text):
    if text == RECIPROCAL_M:
        return RECIPROCAL_M
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(
            f"--lambda must be a positive number or {RECIPROCAL_M!r}, got {text!r}"
        ) from None
    return value


def _parse_int_list(text, flag):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"{flag} must be a comma-separated integer list, got {text!r}") from None


def cmd_simulate(args) -> int:
    config = load_run_config(args.config)
    seed = config.master_seed if args.seed is None else args.seed
    start = time.perf_counter()
    samples = sample_terminal_states(config.system, config.sample_size, seed)
    elapsed = time.perf_counter() - start
    save_sample_csv(samples, args.out)
    print(f"simulate: M={samples.size} n={samples.dim} elapsed={elapsed:.3f}s -> {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    samples = load_sample_csv(args.samples)
    config = FitConfig(
        kernel=KernelSpec(args.kernel, args.sigma),
        regularization=_parse_lambda_flag(args.lam),
    )
    start = time.perf_counter()
    model = fit(samples, config)
    elapsed = time.perf_counter() - start
    save_model(model, args.out)
    print(
        f"fit: M={model.size} lambda={model.lam:.6g} tau={model.tau:.12g} "
        f"elapsed={elapsed:.3f}s -> {args.out}"
    )
    return EXIT_OK


def cmd_query(args) -> int:
    model = load_model(args.model)
    points = load_sample_csv(args.points)
    if points.dim != model.dim:
        raise ConfigError(
            f"{args.points}: points have dimension {points.dim}, model expects {model.dim}"
        )
    start = time.perf_counter()
    values = decision_values(model, points.points)
    inside = classify_batch(model, points.points)
    elapsed = time.perf_counter() - start
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("value,inside\n")
        for value, flag in zip(values, inside):
            fh.write(f"{float(value)!r},{int(flag)}\n")
    print(
        f"query: {points.size} points, {int(inside.sum())} inside, "
        f"elapsed={elapsed:.3f}s -> {args.out}"
    )
    return EXIT_OK


def cmd_contour(args) -> int:
    model = load_model(args.model)
    grid = grid_from_dict(_load_json(args.grid), str(args.grid))
    if grid.dim != model.dim:
        raise ConfigError(
            f"{args.grid}: grid is {grid.dim}-dimensional, model expects {model.dim}"
        )
    level = (1.0 - model.tau) if args.level is None else args.level
    start = time.perf_counter()
    values = grid_decision_values(model, grid)
    contour = extract_contour(values, grid, level)
    elapsed = time.perf_counter() - start
    write_contour_csv(contour, args.out)
    sidecar = Path(args.out).with_suffix(".json")
    write_contour_sidecar(contour, grid, model.tau, sidecar)
    print(
        f"contour: {values.size} nodes, {contour.segments.shape[0]} segments at "
        f"level={level:.12g}, elapsed={elapsed:.3f}s -> {args.out} (+ {sidecar})"
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    model = load_model(args.model)
    fresh = load_sample_csv(args.samples)
    if fresh.dim != model.dim:
        raise ConfigError(
            f"{args.samples}: points have dimension {fresh.dim}, model expects {model.dim}"
        )
    rate = containment_rate(model, fresh.points)
    distance = hausdorff(fresh.points, model.support, metric=model.kernel)
    print(f"validate: containment_rate={rate:.6f} hausdorff_kernel_metric={distance!r}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_run_config(args.config)
    m_list = _parse_int_list(args.m_list, "--m-list")
    seeds = _parse_int_list(args.seeds, "--seeds")
    if not m_list or not seeds:
        raise ConfigError("--m-list and --seeds must be nonempty")
    start = time.perf_counter()
    rows = convergence_sweep(config.system, m_list, seeds, kernel=config.fit.kernel)
    elapsed = time.perf_counter() - start
    write_sweep_csv(rows, args.out)
    print(f"sweep: {len(rows)} rows, elapsed={elapsed:.3f}s -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernelreach",
        description="Estimate forward reachable sets of stochastic systems from terminal-state samples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample terminal states from a configured system")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config master seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a support classifier to a sample CSV")
    p.add_argument("--samples", required=True)
    p.add_argument("--sigma", type=float, default=0.1, help="kernel bandwidth")
    p.add_argument("--kernel", choices=("abel", "gaussian"), default="abel")
    p.add_argument("--lambda", dest="lam", default=RECIPROCAL_M,
                   help=f"positive value or {RECIPROCAL_M!r} (default)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("query", help="evaluate the classifier at points from a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("contour", help="extract the membership boundary on a 2-d grid")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True, help="JSON grid specification")
    p.add_argument("--level", type=float, default=None,
                   help="override the default 1 - tau membership level")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_contour)

    p = sub.add_parser("validate", help="containment rate and Hausdorff distance of fresh draws")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="convergence table over sample sizes and seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--m-list", required=True, help="comma-separated sample sizes, ascending")
    p.add_argument("--seeds", required=True, help="comma-separated master seeds")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except np.linalg.LinAlgError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
