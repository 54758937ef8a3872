"""Command-line frontend: fit, eval, converge, and demo subcommands.

Exit codes: 1 for configuration problems, 2 for numerical failures,
3 for I/O errors.  All numeric output is deterministic given the inputs;
only the reported timings vary between runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import harness, serialize
from .curved import eval_curved, fit_curved, fit_diagonal, trace_curve
from .errors import ConfigError, LitfitError, NumericalError, ParameterError
from .harness import builtin, fit_preset, max_error_grid
from .piecewise import PiecewiseApproximant, eval_piecewise, fit_piecewise
from .solver import TsvdOptions
from .tensor_fit import (
    GridSpec,
    TensorApproximant,
    eval_tensor,
    fit_tensor,
    fit_tensor_samples,
)

EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

_TOP_KEYS = (
    "scheme", "function", "output", "solver", "nq", "np", "ns", "sigma",
    "domain", "x_basis", "y_basis", "grid", "samples_file",
    "mesh", "mesh_file", "q", "q_file", "resolution", "max_entries",
    "sampling",
)


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _solver_options(config: dict, args) -> TsvdOptions:
    block = config.get("solver", {})
    serialize._check_keys(block, ("epsilon", "mode"), "solver")
    epsilon = block.get("epsilon", 1e-14)
    mode = block.get("mode", "kronecker")
    if getattr(args, "epsilon", None) is not None:
        epsilon = args.epsilon
    if getattr(args, "mode", None) is not None:
        mode = {"kron": "kronecker", "sep": "separable"}.get(args.mode, args.mode)
    return TsvdOptions(epsilon=float(epsilon), mode=str(mode))


def _load_samples_csv(path: str):
    """Tabulated samples x,y,f on a full product grid."""
    xs, ys, fs = [], [], []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["x", "y", "f"]:
            raise ConfigError(f"{path}: expected CSV header x,y,f")
        for row in reader:
            if not row or row[0].startswith("#"):
                continue
            xs.append(float(row[0]))
            ys.append(float(row[1]))
            fs.append(float(row[2]))
    x_nodes = np.unique(xs)
    y_nodes = np.unique(ys)
    if len(x_nodes) * len(y_nodes) != len(fs):
        raise ConfigError(
            f"{path}: {len(fs)} samples do not fill the "
            f"{len(x_nodes)}x{len(y_nodes)} product grid of their coordinates"
        )
    F = np.full((len(x_nodes), len(y_nodes)), np.nan, dtype=complex)
    xi = np.searchsorted(x_nodes, xs)
    yi = np.searchsorted(y_nodes, ys)
    F[xi, yi] = fs
    if np.any(np.isnan(F)):
        raise ConfigError(f"{path}: duplicate or missing product-grid samples")
    return x_nodes, y_nodes, F


def _preset_overrides(config, args):
    sigma = config.get("sigma")
    if getattr(args, "sigma", None) is not None:
        sigma = args.sigma
    return dict(
        nq=config.get("nq"),
        np_deg=config.get("np"),
        sigma=sigma,
        threads=getattr(args, "threads", 1),
    )


def _run_fit_config(config: dict, args):
    serialize._check_keys(config, _TOP_KEYS, "config", required=("scheme",))
    scheme = config["scheme"]
    opts = _solver_options(config, args)
    if scheme in ("tensor", "piecewise", "curved", "diagonal") and \
            isinstance(config.get("function"), str):
        preset = builtin(config["function"])
        expected = {
            "tensor": ("square", "disk"),
            "piecewise": ("piecewise_diagonal",),
            "curved": ("curved_elliptic",),
            "diagonal": ("curved_diagonal",),
        }[scheme]
        if preset.geometry not in expected:
            raise ConfigError(
                f"preset {preset.name!r} does not run under scheme {scheme!r}"
            )
        return fit_preset(preset, opts=opts, **_preset_overrides(config, args))
    if scheme == "tensor":
        if "samples_file" not in config:
            raise ConfigError(
                "tensor configs need either a builtin function name or a "
                "samples_file"
            )
        x_nodes, y_nodes, F = _load_samples_csv(config["samples_file"])
        if "x_basis" not in config or "y_basis" not in config:
            raise ConfigError("tabulated fits need explicit x_basis/y_basis")
        x_spec = serialize.axis_from_dict(config["x_basis"], "x_basis")
        y_spec = serialize.axis_from_dict(config["y_basis"], "y_basis")
        return fit_tensor_samples(x_nodes, y_nodes, F, x_spec, y_spec, opts)
    if scheme == "piecewise":
        raise ConfigError("piecewise configs take a builtin function name")
    if scheme in ("curved", "diagonal"):
        raise ConfigError(f"{scheme} configs take a builtin function name")
    raise ConfigError(f"unknown scheme {scheme!r}")


def cmd_fit(args) -> int:
    config = _load_json(args.config)
    if not isinstance(config, dict):
        raise ConfigError(f"{args.config}: config must be a JSON object")
    start = time.perf_counter()
    approx = _run_fit_config(config, args)
    out_path = args.out or config.get("output")
    if not out_path:
        raise ConfigError("no output path: pass --out or set \"output\"")
    serialize.save_approximant(out_path, approx)
    report = getattr(approx, "report", None)
    if report is None and isinstance(approx, PiecewiseApproximant):
        residual_max = max(t.report.residual_max for _, t in approx.patches)
        coeff = float(np.sqrt(sum(t.report.coeff_frobenius ** 2
                                  for _, t in approx.patches)))
    else:
        residual_max = report.residual_max
        coeff = report.coeff_frobenius
    print(json.dumps({
        "residual_max": residual_max,
        "coeff_frobenius": coeff,
        "seconds": time.perf_counter() - start,
    }))
    return 0


def _grid_for_eval(approx, preset, n: int):
    if isinstance(approx, TensorApproximant):
        (ax, bx) = approx.x_spec.interval
        (ay, by) = approx.y_spec.interval
    elif isinstance(approx, PiecewiseApproximant):
        corners = np.vstack([p.corners for p, _ in approx.patches])
        ax, bx = corners[:, 0].min(), corners[:, 0].max()
        ay, by = corners[:, 1].min(), corners[:, 1].max()
    else:
        (ax, bx), (ay, by) = approx.curve.domain
    gx = ax + (bx - ax) * (np.arange(n) + 0.5) / n
    gy = ay + (by - ay) * (np.arange(n) + 0.5) / n
    if preset is not None:
        (pax, pbx), (pay, pby) = preset.domain
        if not (np.isclose(pax, ax) and np.isclose(pbx, bx)
                and np.isclose(pay, ay) and np.isclose(pby, by)):
            raise ConfigError(
                f"approximant domain [{ax},{bx}]x[{ay},{by}] does not match "
                f"preset {preset.name!r} domain"
            )
    return gx, gy


def _eval_points(approx, pts: np.ndarray) -> np.ndarray:
    if isinstance(approx, TensorApproximant):
        return eval_tensor(approx, pts)
    if isinstance(approx, PiecewiseApproximant):
        values, owner = eval_piecewise(approx, pts)
        return values
    return eval_curved(approx, pts)


def cmd_eval(args) -> int:
    approx = serialize.load_approximant(args.approx)
    preset = builtin(args.function)
    f = preset.function
    n = args.grid
    gx, gy = _grid_for_eval(approx, preset, n)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    truth = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=complex)
    finite = np.isfinite(truth)
    vals = np.full(len(pts), np.nan, dtype=complex)
    vals[finite] = _eval_points(approx, pts[finite])
    valid = finite & np.isfinite(vals)
    abs_err = np.abs(truth[valid] - vals[valid])
    max_error = float(abs_err.max())
    mean_error = float(abs_err.mean())

    step = max(1, int(args.downsample))
    rows = np.flatnonzero(valid)[::step]
    err_all = np.full(len(pts), np.nan)
    err_all[valid] = abs_err
    _write_csv_atomic(args.out, ["x,y,abs_error"], (
        f"{float(pts[i, 0])!r},{float(pts[i, 1])!r},{float(err_all[i])!r}"
        for i in rows
    ), [
        "# max_error,mean_error,n_points",
        f"# {max_error!r},{mean_error!r},{int(valid.sum())}",
    ])
    print(max_error)
    return 0


def _write_csv_atomic(path, header_lines, row_iter, trailer_lines=()):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            for line in header_lines:
                fh.write(line + "\n")
            for line in row_iter:
                fh.write(line + "\n")
            for line in trailer_lines:
                fh.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_nq_range(text: str):
    """Either a comma list of integers or start:stop:sqrt (square numbers)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) == 3 and parts[2] == "sqrt":
            lo, hi = int(parts[0]), int(parts[1])
            ks = range(int(np.ceil(np.sqrt(lo))), int(np.floor(np.sqrt(hi))) + 1)
            return [k * k for k in ks]
        if len(parts) == 2:
            return list(range(int(parts[0]), int(parts[1]) + 1))
        raise ConfigError(f"cannot parse degree range {text!r}")
    return [int(v) for v in text.split(",")]


def _parse_values(text: str):
    if ":" in text and "," not in text:
        lo, hi = text.split(":")
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok in ("2pi", "2*pi"):
            out.append(2.0 * np.pi)
        else:
            out.append(float(tok))
    return out


def cmd_converge(args) -> int:
    preset = builtin(args.preset)
    if args.sweep == "nq":
        nq_list = _parse_nq_range(args.nq)
        opts = TsvdOptions(epsilon=args.epsilon) if args.epsilon else TsvdOptions()
        rows = harness.convergence_sweep(preset, nq_list, opts=opts,
                                         threads=args.threads)
        rate = harness.fit_rate(rows)
        rate_line = (f"# rate C={rate[0]!r} r2={rate[1]!r}"
                     if rate is not None else "# rate C=undefined")
        _write_csv_atomic(args.out, ["nq,np,max_error,residual,coeff_norm,seconds"], (
            f"{r.nq},{r.np_deg},{r.max_error!r},{r.residual!r},"
            f"{r.coeff_norm!r},{r.seconds:.3f}"
            for r in rows
        ), [rate_line])
        print(rate_line.lstrip("# "))
        return 0
    values = _parse_values(args.values)
    try:
        fixed_nq = int(args.nq)
    except ValueError:
        raise ConfigError(
            "sigma/epsilon sweeps take a single --nq value"
        ) from None
    pairs = harness.parameter_sweep(preset, args.sweep, values, nq=fixed_nq)
    _write_csv_atomic(
        args.out,
        ["sweep_value,nq,np,max_error,residual,coeff_norm,seconds"],
        (
            f"{v!r},{r.nq},{r.np_deg},{r.max_error!r},{r.residual!r},"
            f"{r.coeff_norm!r},{r.seconds:.3f}"
            for v, r in pairs
        ),
    )
    print(max(r.max_error for _, r in pairs))
    return 0


_DEMO_GRIDS = {
    "f1": ("equispaced", 1000),
    "f2": ("equispaced", 1000),
    "f3": ("equispaced", 1000),
    "piecewise": ("equispaced", 500),
    "elliptic": ("equispaced", 400),
    "diagonal": ("equispaced", 400),
}


def cmd_demo(args) -> int:
    preset = builtin(args.name)
    grid_kind, n = _DEMO_GRIDS[args.name]
    start = time.perf_counter()
    approx = fit_preset(preset, threads=args.threads)
    err = max_error_grid(approx, preset, grid_kind, n=n)
    seconds = time.perf_counter() - start
    ok = err <= preset.accept_tol
    print(
        f"{preset.name}: max_error={err:.3e} reference={preset.reference_error:.3e} "
        f"tolerance={preset.accept_tol:.1e} [{seconds:.1f}s] "
        f"{'PASS' if ok else 'FAIL'}"
    )
    return 0 if ok else EXIT_NUMERICAL


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="litfit2d",
        description="Bivariate rational approximation with clustered poles",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="cap for internal parallelism (default 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit from a JSON config")
    p_fit.add_argument("--config", required=True)
    p_fit.add_argument("--out", help="approximant output path")
    p_fit.add_argument("--epsilon", type=float, help="override solver epsilon")
    p_fit.add_argument("--sigma", type=float, help="override pole spacing")
    p_fit.add_argument("--mode", choices=("kron", "sep"),
                       help="override solver mode")
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser("eval", help="evaluate a stored approximant")
    p_eval.add_argument("--approx", required=True)
    p_eval.add_argument("--function", required=True,
                        help="builtin preset providing the reference values")
    p_eval.add_argument("--grid", type=int, default=1000,
                        help="n for the n x n cell-centered grid")
    p_eval.add_argument("--downsample", type=int, default=1,
                        help="write every k-th grid row to the CSV")
    p_eval.add_argument("--out", required=True, help="CSV output path")
    p_eval.set_defaults(func=cmd_eval)

    p_conv = sub.add_parser("converge", help="degree or parameter sweeps")
    p_conv.add_argument("--preset", required=True)
    p_conv.add_argument("--sweep", choices=("nq", "sigma", "epsilon"),
                        default="nq")
    p_conv.add_argument("--nq", default="16:144:sqrt",
                        help="degree list or start:stop:sqrt (nq sweeps)")
    p_conv.add_argument("--values", help="comma list for sigma/epsilon sweeps")
    p_conv.add_argument("--epsilon", type=float, default=None)
    p_conv.add_argument("--out", required=True, help="CSV output path")
    p_conv.set_defaults(func=cmd_converge)

    p_demo = sub.add_parser("demo", help="run a named built-in reproduction")
    p_demo.add_argument("name", choices=sorted(_DEMO_GRIDS))
    p_demo.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "converge" and args.sweep != "nq" and not args.values:
        print("error: --values is required for sigma/epsilon sweeps",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LitfitError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
