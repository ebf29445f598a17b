"""Kernel-weighted local linear regression.

Fits a straight line through weighted neighbors of a query point and returns
the line's value there. Weights come from a kernel whose reach is either a
fixed radius ``h`` or adaptive: the distance to the k-th nearest observation,
so a compact kernel's window always spans the query point's k neighbors.

History parameters stack several values at the same x (one per stored cycle),
so degenerate geometry is structural here, not an error. ``llr_fit`` never
fails on nonempty input: when the weighted system is singular it walks a
fallback chain (widen the bandwidth up to 3 doublings, then a kernel-weighted
mean, then a global unweighted line) and reports which step produced the
value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "Fallback",
    "LocalFit",
    "kernel_weight",
    "effective_bandwidth",
    "llr_fit",
    "llr_fit_predict",
    "llr_curve",
]

_GAUSS_NORM = 1.0 / math.sqrt(2.0 * math.pi)


class KernelFamily(enum.Enum):
    EPANECHNIKOV = "epanechnikov"
    BIWEIGHT = "biweight"
    GAUSSIAN = "gaussian"


class Fallback(enum.Enum):
    """Which step of the singular-system fallback chain produced a fit."""

    NONE = "none"
    WIDENED_H = "widened_h"
    WEIGHTED_MEAN = "weighted_mean"
    GLOBAL_LINE = "global_line"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth mode.

    Exactly one of ``h`` (fixed radius) and ``k`` (nearest-neighbor count)
    must be set. k-nearest is the forecaster's default mode: history offsets
    are integers with replicates stacked per cycle, so counting points is a
    steadier locality control than a radius.
    """

    family: KernelFamily = KernelFamily.EPANECHNIKOV
    h: float | None = None
    k: int | None = None

    def __post_init__(self) -> None:
        if (self.h is None) == (self.k is None):
            raise ValueError("exactly one of h (fixed radius) or k (nearest count) must be set")
        if self.h is not None and not self.h > 0:
            raise ValueError(f"fixed radius must be positive, got {self.h}")
        if self.k is not None and self.k < 1:
            raise ValueError(f"nearest-neighbor count must be >= 1, got {self.k}")

    @property
    def bandwidth_label(self) -> str:
        return f"h={self.h!r}" if self.h is not None else f"k={self.k}"


def kernel_weight(spec: KernelSpec, x_u: float, x_i: float, h: float) -> float:
    """Weight of observation ``x_i`` for a fit at ``x_u`` with bandwidth ``h``.

    Nonincreasing in ``|x_i - x_u|`` for every family; the compact-support
    families are exactly zero at and beyond one bandwidth.
    """
    if not h > 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    u = abs(x_i - x_u) / h
    if spec.family is KernelFamily.EPANECHNIKOV:
        return 0.75 * (1.0 - u * u) if u < 1.0 else 0.0
    if spec.family is KernelFamily.BIWEIGHT:
        return (15.0 / 16.0) * (1.0 - u * u) ** 2 if u < 1.0 else 0.0
    return _GAUSS_NORM * math.exp(-0.5 * u * u)


def effective_bandwidth(spec: KernelSpec, x_u: float, xs: Sequence[float]) -> float:
    """Resolve the spec's bandwidth mode to a numeric bandwidth at ``x_u``.

    Fixed-radius mode returns ``h`` unchanged. k-nearest mode returns the
    distance from ``x_u`` to its k-th nearest x. A zero k-th distance (cycle
    replicates stacked at the query x) is promoted to the smallest positive
    spacing between distinct xs; if every x coincides there is no usable
    bandwidth and 0.0 is returned so callers can fall back to a local mean.

    Raises
    ------
    ValueError
        If ``xs`` is empty, or k exceeds the number of observations.
    """
    if not xs:
        raise ValueError("no observations to derive a bandwidth from")
    if spec.h is not None:
        return spec.h
    k = spec.k
    assert k is not None
    if k > len(xs):
        raise ValueError(f"k={k} exceeds the {len(xs)} available observations")
    dists = sorted(abs(x - x_u) for x in xs)
    h = dists[k - 1]
    if h > 0:
        return h
    uniq = sorted(set(xs))
    gaps = [b - a for a, b in zip(uniq, uniq[1:])]
    return min(gaps) if gaps else 0.0


def _solve_weighted_line(
    points: Sequence[tuple[float, float]], weights: Sequence[float], x_u: float
) -> float | None:
    """Weighted least-squares line evaluated at x_u, or None if singular.

    Solves the 2x2 normal equations in coordinates centered on the weighted
    mean of x, which keeps the system conditioned at large period indices.
    """
    support = [(x, y, w) for (x, y), w in zip(points, weights) if w > 0]
    if len({x for x, _, _ in support}) < 2:
        return None
    s0 = math.fsum(w for _, _, w in support)
    xbar = math.fsum(w * x for x, _, w in support) / s0
    s1 = math.fsum(w * (x - xbar) for x, _, w in support)
    s2 = math.fsum(w * (x - xbar) ** 2 for x, _, w in support)
    sy = math.fsum(w * y for _, y, w in support)
    sxy = math.fsum(w * (x - xbar) * y for x, y, w in support)
    det = s0 * s2 - s1 * s1
    if det <= 0:
        return None
    alpha = (s2 * sy - s1 * sxy) / det
    beta = (s0 * sxy - s1 * sy) / det
    return alpha + beta * (x_u - xbar)


@dataclass(frozen=True)
class LocalFit:
    value: float
    fallback: Fallback


def llr_fit(
    points: Sequence[tuple[float, float]], x_u: float, spec: KernelSpec
) -> LocalFit:
    """Local linear fit at ``x_u``; always yields a value for nonempty input.

    Raises
    ------
    ValueError
        If ``points`` is empty, or a k-nearest spec asks for more neighbors
        than there are points.
    """
    if not points:
        raise ValueError("cannot fit with zero points")
    xs = [x for x, _ in points]
    h0 = effective_bandwidth(spec, x_u, xs)

    weights: list[float] = [0.0] * len(points)
    if h0 > 0:
        for widen in range(4):
            h = h0 * (2.0**widen)
            weights = [kernel_weight(spec, x_u, x, h) for x in xs]
            value = _solve_weighted_line(points, weights, x_u)
            if value is not None:
                return LocalFit(value, Fallback.NONE if widen == 0 else Fallback.WIDENED_H)

    wsum = math.fsum(weights)
    if wsum > 0:
        mean = math.fsum(w * y for (_, y), w in zip(points, weights)) / wsum
        return LocalFit(mean, Fallback.WEIGHTED_MEAN)
    if h0 == 0:
        # Every observation sits at one x: the local constant fit is the mean.
        mean = math.fsum(y for _, y in points) / len(points)
        return LocalFit(mean, Fallback.WEIGHTED_MEAN)

    value = _solve_weighted_line(points, [1.0] * len(points), x_u)
    if value is None:
        value = math.fsum(y for _, y in points) / len(points)
    return LocalFit(value, Fallback.GLOBAL_LINE)


def llr_fit_predict(
    points: Sequence[tuple[float, float]], x_u: float, spec: KernelSpec
) -> float:
    """Fitted value at ``x_u`` (see ``llr_fit`` for the fallback behavior)."""
    return llr_fit(points, x_u, spec).value


def llr_curve(
    points: Sequence[tuple[float, float]], query_xs: Sequence[float], spec: KernelSpec
) -> list[float]:
    """Element-wise ``llr_fit_predict`` over a list of query points."""
    return [llr_fit(points, x_u, spec).value for x_u in query_xs]
