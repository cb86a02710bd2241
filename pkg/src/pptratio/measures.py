"""Eigenvalue-density weights for the supported measure families.

All densities are unnormalized: every reported probability is a ratio of
weighted sums over the same point stream, so global constants cancel.  The
Hilbert-Schmidt density is the squared Vandermonde determinant of the
eigenvalues; on the rank-deficient boundary the zero eigenvalue is kept in
the product, which turns each (lambda_i - 0)^2 factor into lambda_i^2.

Monotone metrics multiply the squared Vandermonde by the Morozova-Chentsov
kernel c(lambda_i, lambda_j) for every pair and by the radial Fisher factor
prod_i lambda_i^(-1/2).  They diverge on the boundary, so they are defined
for strictly positive spectra only; points with min(lambda) below the clip
threshold get weight zero and are counted separately.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .states import SpectrumPoint

# Monotone weights are only evaluated when min(lambda) is above this; the
# singularities are integrable, so the clipped mass is a diagnostic, not a
# correction.  Halve it to measure the clipping bias.
CLIP_THRESHOLD = 1e-12

# Relative eigenvalue gap below which the Kubo-Mori kernel switches from the
# log-difference form to its series expansion.
_KM_SERIES_CUTOFF = 1e-6


def c_bures(x, y):
    return 2.0 / (x + y)


def c_kubo_mori(x, y):
    """(ln x - ln y)/(x - y), series-guarded near the diagonal.

    Near x = y the direct form loses all significant digits, so for
    |x - y| < 1e-6 (x + y) it is replaced by the expansion
    2/(x+y) * (1 + delta^2/3 + delta^4/5), delta = (x-y)/(x+y), which is
    continuous against the log form to better than 1e-10 at the switch.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    s = x + y
    diff = x - y
    near = np.abs(diff) < _KM_SERIES_CUTOFF * s
    delta = np.where(near, np.divide(diff, s, out=np.zeros_like(s), where=s > 0), 0.0)
    series = 2.0 / s * (1.0 + delta**2 / 3.0 + delta**4 / 5.0)
    safe_diff = np.where(near, 1.0, diff)
    direct = np.where(near, series, (np.log(x) - np.log(y)) / safe_diff)
    if direct.ndim == 0:
        return float(direct)
    return direct


def c_wigner_yanase(x, y):
    return 4.0 / (np.sqrt(x) + np.sqrt(y)) ** 2


_BUILTIN_C = {
    "bures": c_bures,
    "kubo_mori": c_kubo_mori,
    "wigner_yanase": c_wigner_yanase,
}

# Named monotone metrics whose Morozova-Chentsov function must be supplied
# explicitly in the run configuration; no default formula is asserted.
_C_REQUIRED = ("arithmetic_average", "quasi_bures")

KNOWN_METRICS = ("hs",) + tuple(_BUILTIN_C) + _C_REQUIRED


@dataclass(frozen=True)
class MetricKind:
    """A named measure family with its eigenvalue-density ingredients."""

    name: str
    c_function: Callable | None = None
    include_fisher_factor: bool = False

    @property
    def is_monotone(self) -> bool:
        return self.name != "hs"


HS = MetricKind("hs")


def metric_from_name(name: str, c_expr: str | None = None) -> MetricKind:
    """Build a MetricKind from a config name plus optional c(x, y) expression."""
    name = name.lower()
    if name == "hs":
        if c_expr is not None:
            raise ValueError("the Hilbert-Schmidt metric takes no c function")
        return HS
    if c_expr is not None:
        return MetricKind(name, compile_c_expr(c_expr), include_fisher_factor=True)
    if name in _BUILTIN_C:
        return MetricKind(name, _BUILTIN_C[name], include_fisher_factor=True)
    if name in _C_REQUIRED:
        raise ValueError(
            f"metric {name!r} has no built-in Morozova-Chentsov function; "
            "supply one explicitly as c_expr in the run configuration"
        )
    raise ValueError(f"unknown metric {name!r}")


_ALLOWED_CALLS = {"sqrt": np.sqrt, "log": np.log, "exp": np.exp, "abs": np.abs}
_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
)


def compile_c_expr(expr: str) -> Callable:
    """Compile a c(x, y) arithmetic expression (sqrt/log/exp/abs allowed)."""
    tree = ast.parse(expr, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"disallowed syntax in c expression: {expr!r}")
        if isinstance(node, ast.Name) and node.id not in ("x", "y", *_ALLOWED_CALLS):
            raise ValueError(f"unknown name {node.id!r} in c expression")
        if isinstance(node, ast.Call) and (
            not isinstance(node.func, ast.Name) or node.func.id not in _ALLOWED_CALLS
        ):
            raise ValueError(f"disallowed call in c expression: {expr!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError("only numeric constants are allowed in c expressions")
    code = compile(tree, "<c_expr>", "eval")

    def c(x, y):
        return eval(code, {"__builtins__": {}}, {"x": x, "y": y, **_ALLOWED_CALLS})

    return c


def _vandermonde_sq(lam: np.ndarray) -> np.ndarray:
    """prod_{i<j} (lambda_i - lambda_j)^2 over the last axis."""
    d = lam.shape[-1]
    out = np.ones(lam.shape[:-1])
    for i in range(d):
        for j in range(i + 1, d):
            out = out * (lam[..., i] - lam[..., j]) ** 2
    return out


def hs_density_batch(lam: np.ndarray) -> np.ndarray:
    """Squared-Vandermonde HS weight; rank-deficiency needs no special case
    because the pinned zero eigenvalue is part of the product."""
    return _vandermonde_sq(np.asarray(lam, dtype=np.float64))


def hs_density(spec: SpectrumPoint) -> float:
    return float(hs_density_batch(spec.lambdas[None, :])[0])


def monotone_density_batch(lam: np.ndarray, metric: MetricKind) -> np.ndarray:
    """Monotone-metric weight for strictly positive spectra (vectorized)."""
    if not metric.is_monotone or metric.c_function is None:
        raise ValueError(f"metric {metric.name!r} is not a usable monotone metric")
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam <= 0.0):
        raise ValueError("monotone densities require strictly positive spectra")
    d = lam.shape[-1]
    out = np.ones(lam.shape[:-1])
    for i in range(d):
        for j in range(i + 1, d):
            x, y = lam[..., i], lam[..., j]
            out = out * (x - y) ** 2 * metric.c_function(x, y)
    if metric.include_fisher_factor:
        out = out * np.prod(lam, axis=-1) ** -0.5
    return out


def monotone_density(spec: SpectrumPoint, metric: MetricKind) -> float:
    if spec.rank_deficient:
        raise ValueError(
            "monotone densities diverge on the rank-deficient boundary"
        )
    return float(monotone_density_batch(spec.lambdas[None, :], metric)[0])


def weight(
    spec: SpectrumPoint,
    metric: MetricKind,
    rank_deficient: bool | None = None,
    clip: float = CLIP_THRESHOLD,
) -> float:
    """Dispatch to the HS or monotone density; clipped monotone points get 0."""
    if rank_deficient is None:
        rank_deficient = spec.rank_deficient
    if not metric.is_monotone:
        return hs_density(spec)
    if rank_deficient:
        raise ValueError("monotone metrics are undefined on the boundary stream")
    if spec.lambdas.min() < clip:
        return 0.0
    return monotone_density(spec, metric)


def weight_batch(
    lam: np.ndarray,
    metric: MetricKind,
    rank_deficient: bool,
    clip: float = CLIP_THRESHOLD,
):
    """Vectorized weights; returns (weights, clipped mask or None)."""
    if not metric.is_monotone:
        return hs_density_batch(lam), None
    if rank_deficient:
        raise ValueError("monotone metrics are undefined on the boundary stream")
    lam = np.asarray(lam, dtype=np.float64)
    clipped = lam.min(axis=-1) < clip
    safe = np.where(clipped[..., None], 0.5, lam)
    w = monotone_density_batch(safe, metric)
    w[clipped] = 0.0
    return w, clipped


def kubo_mori_series_gap(x: float) -> float:
    """Absolute gap |series - log form| at the switch point, for diagnostics."""
    y = x * (1.0 - 2.0 * _KM_SERIES_CUTOFF)  # just outside the cutoff
    direct = (math.log(x) - math.log(y)) / (x - y)
    s = x + y
    delta = (x - y) / s
    series = 2.0 / s * (1.0 + delta**2 / 3.0 + delta**4 / 5.0)
    return abs(direct - series)
