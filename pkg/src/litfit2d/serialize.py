"""JSON file formats: fitted approximants, fit configs, meshes, polynomials.

All numbers are serialized through Python's repr-based JSON encoder, which
emits shortest roundtrip decimals, and complex values as [re, im] pairs,
so saving and reloading an approximant reproduces evaluations bit for bit.
Writes are atomic (write to a sibling temp file, then rename).
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .basis import AxisBasisSpec, PolyFamily
from .curved import CurvedApproximant, ImplicitCurve, poly_table
from .errors import ConfigError
from .piecewise import PiecewiseApproximant, QuadPatch
from .poles import ClusterSpec, materialize_poles
from .solver import FitReport
from .tensor_fit import TensorApproximant

FORMAT_VERSION = 1


def _check_keys(d: dict, allowed, where: str, required=()):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in {where}")


def _complex_out(arr: np.ndarray):
    a = np.asarray(arr, dtype=complex)
    stacked = np.stack([a.real, a.imag], axis=-1)
    return stacked.tolist()


def _complex_in(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.shape[-1] != 2:
        raise ConfigError("complex arrays must be nested [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _report_out(report: FitReport):
    if report is None:
        return None
    return {
        "residual_frobenius": report.residual_frobenius,
        "residual_max": report.residual_max,
        "coeff_frobenius": report.coeff_frobenius,
        "kept_singular_pairs": report.kept_singular_pairs,
        "sigma1_A": report.sigma1_A,
        "sigma1_B": report.sigma1_B,
    }


def _report_in(data):
    if data is None:
        return None
    _check_keys(data, ("residual_frobenius", "residual_max", "coeff_frobenius",
                       "kept_singular_pairs", "sigma1_A", "sigma1_B"),
                "report", required=("residual_frobenius", "residual_max",
                                    "coeff_frobenius"))
    return FitReport(
        residual_frobenius=float(data["residual_frobenius"]),
        residual_max=float(data["residual_max"]),
        coeff_frobenius=float(data["coeff_frobenius"]),
        kept_singular_pairs=int(data.get("kept_singular_pairs", 0)),
        sigma1_A=float(data.get("sigma1_A", 0.0)),
        sigma1_B=float(data.get("sigma1_B", 0.0)),
    )


def _cluster_out(spec: ClusterSpec):
    return {
        "location": spec.location,
        "n_levels": spec.n_levels,
        "sigma": spec.sigma,
        "taper": spec.taper,
        "orientation": spec.orientation,
        "side_scale": spec.side_scale,
    }


def cluster_from_dict(data, where: str = "cluster") -> ClusterSpec:
    _check_keys(data, ("location", "n_levels", "sigma", "taper",
                       "orientation", "side_scale"), where,
                required=("location", "n_levels"))
    from .poles import DEFAULT_SIGMA

    return ClusterSpec(
        location=float(data["location"]),
        n_levels=int(data["n_levels"]),
        sigma=float(data.get("sigma", DEFAULT_SIGMA)),
        taper=str(data.get("taper", "tapered")),
        orientation=str(data.get("orientation", "imaginary_pair")),
        side_scale=float(data.get("side_scale", 1.0)),
    )


def _axis_out(spec: AxisBasisSpec):
    out = {
        "poly_kind": spec.poly.kind,
        "degree": spec.poly.degree,
        "clusters": [_cluster_out(ps.spec) for ps in spec.clusters],
    }
    if spec.poly.kind == "chebyshev":
        out["interval"] = list(spec.poly.interval)
    return out


def axis_from_dict(data, where: str = "axis basis") -> AxisBasisSpec:
    _check_keys(data, ("poly_kind", "degree", "interval", "clusters"), where,
                required=("poly_kind", "degree"))
    kind = str(data["poly_kind"])
    if kind == "chebyshev":
        interval = tuple(float(v) for v in data.get("interval", (-1.0, 1.0)))
        poly = PolyFamily("chebyshev", int(data["degree"]), interval)
    else:
        poly = PolyFamily(kind, int(data["degree"]))
    clusters = tuple(
        materialize_poles(cluster_from_dict(c, f"{where}.clusters[{i}]"))
        for i, c in enumerate(data.get("clusters", []))
    )
    return AxisBasisSpec(poly=poly, clusters=clusters)


def _tensor_out(approx: TensorApproximant):
    return {
        "x_basis": _axis_out(approx.x_spec),
        "y_basis": _axis_out(approx.y_spec),
        "coeffs": _complex_out(approx.coeffs),
        "report": _report_out(approx.report),
    }


def _tensor_in(data, where: str = "tensor approximant") -> TensorApproximant:
    _check_keys(data, ("x_basis", "y_basis", "coeffs", "report"), where,
                required=("x_basis", "y_basis", "coeffs"))
    x_spec = axis_from_dict(data["x_basis"], f"{where}.x_basis")
    y_spec = axis_from_dict(data["y_basis"], f"{where}.y_basis")
    coeffs = _complex_in(data["coeffs"])
    if coeffs.shape != (x_spec.n_columns, y_spec.n_columns):
        raise ConfigError(
            f"coefficient shape {coeffs.shape} does not match the basis "
            f"({x_spec.n_columns}, {y_spec.n_columns}) in {where}"
        )
    return TensorApproximant(x_spec=x_spec, y_spec=y_spec, coeffs=coeffs,
                             report=_report_in(data.get("report")))


def patch_from_dict(data, where: str = "patch") -> QuadPatch:
    _check_keys(data, ("corners", "singular_edges", "nq", "np"), where,
                required=("corners",))
    return QuadPatch(
        corners=tuple(tuple(float(v) for v in p) for p in data["corners"]),
        singular_edges=tuple(str(e) for e in data.get("singular_edges", [])),
        n_levels=int(data.get("nq", 150)),
        poly_degree=int(data.get("np", 25)),
    )


def _patch_out(patch: QuadPatch):
    return {
        "corners": [list(p) for p in patch.corners],
        "singular_edges": list(patch.singular_edges),
        "nq": patch.n_levels,
        "np": patch.poly_degree,
    }


def load_mesh(data) -> list[QuadPatch]:
    """Mesh format: a JSON list of patch objects."""
    if not isinstance(data, list) or not data:
        raise ConfigError("a mesh is a nonempty JSON list of patches")
    return [patch_from_dict(p, f"mesh[{i}]") for i, p in enumerate(data)]


def load_poly_terms(data) -> np.ndarray:
    """Polynomial format: {"terms": [{"i": px, "j": py, "c": coeff}, ...]}."""
    _check_keys(data, ("terms",), "polynomial", required=("terms",))
    triples = []
    for k, t in enumerate(data["terms"]):
        _check_keys(t, ("i", "j", "c"), f"polynomial.terms[{k}]",
                    required=("i", "j", "c"))
        triples.append((int(t["i"]), int(t["j"]), float(t["c"])))
    return poly_table(triples)


def _curved_out(approx: CurvedApproximant):
    return {
        "q_table": np.asarray(approx.curve.q_coeffs).tolist(),
        "domain": [list(approx.curve.domain[0]), list(approx.curve.domain[1])],
        "scale": approx.curve.scale,
        "nq_levels": approx.levels.spec.n_levels if approx.levels.spec else 0,
        "sigma": approx.levels.spec.sigma if approx.levels.spec else 0.0,
        "np": approx.np_deg,
        "ns": approx.ns_deg,
        "form": approx.form,
        "coeffs": _complex_out(approx.coeffs),
        "report": _report_out(approx.report),
    }


def _curved_in(data, where: str = "curved approximant") -> CurvedApproximant:
    _check_keys(data, ("q_table", "domain", "scale", "nq_levels", "sigma",
                       "np", "ns", "form", "coeffs", "report"), where,
                required=("q_table", "domain", "nq_levels", "np", "ns",
                          "form", "coeffs"))
    domain = (tuple(float(v) for v in data["domain"][0]),
              tuple(float(v) for v in data["domain"][1]))
    curve = ImplicitCurve(
        q_coeffs=np.asarray(data["q_table"], dtype=float),
        domain=domain,
        components=(),
        scale=float(data.get("scale", 1.0)),
    )
    from .curved import _levels_for

    levels = _levels_for(int(data["nq_levels"]),
                         float(data.get("sigma", 2.0 * np.pi)) or 2.0 * np.pi)
    approx = CurvedApproximant(
        curve=curve, levels=levels,
        np_deg=int(data["np"]), ns_deg=int(data["ns"]),
        coeffs=_complex_in(data["coeffs"]), form=str(data["form"]),
        report=_report_in(data.get("report")),
    )
    if approx.coeffs.shape != (approx.n_columns,):
        raise ConfigError(
            f"coefficient length {approx.coeffs.shape} does not match the "
            f"declared degrees ({approx.n_columns} columns) in {where}"
        )
    return approx


def approximant_to_dict(approx) -> dict:
    """Serializable payload for any fitted approximant."""
    if isinstance(approx, TensorApproximant):
        body = _tensor_out(approx)
        scheme = "tensor"
    elif isinstance(approx, PiecewiseApproximant):
        scheme = "piecewise"
        body = {
            "patches": [
                {**_patch_out(patch), "tensor": _tensor_out(tensor)}
                for patch, tensor in approx.patches
            ],
        }
    elif isinstance(approx, CurvedApproximant):
        body = _curved_out(approx)
        scheme = approx.form if approx.form == "diagonal" else "curved"
    else:
        raise ConfigError(f"cannot serialize object of type {type(approx)}")
    return {"format_version": FORMAT_VERSION, "scheme": scheme, **body}


def approximant_from_dict(data):
    """Inverse of :func:`approximant_to_dict`."""
    if not isinstance(data, dict):
        raise ConfigError("approximant file must hold a JSON object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(
            f"unsupported approximant format_version {version!r}; "
            f"this build reads version {FORMAT_VERSION}"
        )
    scheme = data.get("scheme")
    rest = {k: v for k, v in data.items()
            if k not in ("format_version", "scheme")}
    if scheme == "tensor":
        return _tensor_in(rest)
    if scheme == "piecewise":
        _check_keys(rest, ("patches",), "piecewise approximant",
                    required=("patches",))
        pairs = []
        for i, p in enumerate(rest["patches"]):
            p = dict(p)
            tensor = _tensor_in(p.pop("tensor"), f"patches[{i}].tensor")
            pairs.append((patch_from_dict(p, f"patches[{i}]"), tensor))
        return PiecewiseApproximant(patches=tuple(pairs))
    if scheme in ("curved", "diagonal"):
        return _curved_in(rest)
    raise ConfigError(f"unknown scheme {scheme!r} in approximant file")


def write_json_atomic(path: str, payload) -> None:
    """Serialize to JSON and atomically replace the destination file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, separators=(",", ":"))
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_approximant(path: str, approx) -> None:
    write_json_atomic(path, approximant_to_dict(approx))


def load_approximant(path: str):
    with open(path) as fh:
        return approximant_from_dict(json.load(fh))
