"""Seeded synthetic traces with known cyclic ground-truth rates.

The generated intensity repeats exactly every pattern period: a base rate
modulated by one sinusoid per pattern period ("weekly") and one at seven
cycles per pattern period ("daily"), shapes that mimic the peaks and troughs
of production request traces. Per-period multiplicative lognormal noise
(mean 1) models week-over-week drift without breaking the cycle.

Every pipeline stage can be validated against the returned true rate
sequence. Draws come from numpy's PCG64 via ``default_rng(seed)``; the
generator name is recorded in run manifests so streams are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .trace import US_PER_SECOND, TraceEvent

__all__ = ["SyntheticSpec", "generate", "true_rate", "write_truth", "read_truth", "RNG_NAME"]

RNG_NAME = "numpy-pcg64"


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a synthetic trace; validated on construction.

    ``tps`` is the total number of target periods to emit; ``pp_tps`` the
    pattern-period length in target periods. Amplitudes must sum below 1 so
    the intensity stays positive.
    """

    pp_tps: int = 336
    tps: int = 1008
    base_rate: float = 20.0
    daily_amplitude: float = 0.4
    weekly_amplitude: float = 0.2
    noise_sigma: float = 0.0
    seed: int = 0
    tp_minutes: int = 30
    sub_bin_seconds: int = 60
    cpu_per_event: float = 0.01
    mem_per_event: float = 0.005

    def __post_init__(self) -> None:
        if self.pp_tps < 1 or self.tps < 1:
            raise ValueError(f"pp_tps and tps must be positive, got {self.pp_tps}, {self.tps}")
        if self.base_rate <= 0:
            raise ValueError(f"base rate must be positive, got {self.base_rate}")
        for name, amp in (("daily", self.daily_amplitude), ("weekly", self.weekly_amplitude)):
            if not 0 <= amp < 1:
                raise ValueError(f"{name} amplitude must lie in [0, 1), got {amp}")
        if self.daily_amplitude + self.weekly_amplitude >= 1:
            raise ValueError("amplitudes must sum below 1 to keep the rate positive")
        if self.noise_sigma < 0:
            raise ValueError(f"noise sigma must be nonnegative, got {self.noise_sigma}")
        if self.tp_minutes < 1 or self.sub_bin_seconds < 1:
            raise ValueError("tp_minutes and sub_bin_seconds must be positive")
        if (self.tp_minutes * 60) % self.sub_bin_seconds != 0:
            raise ValueError(
                f"target period of {self.tp_minutes}min is not a whole number of "
                f"{self.sub_bin_seconds}s sub-bins"
            )


def true_rate(spec: SyntheticSpec, tp: int) -> float:
    """Noiseless intensity of target period ``tp`` (0-based); period pp_tps."""
    phase = (tp % spec.pp_tps) / spec.pp_tps
    return spec.base_rate * (
        1.0
        + spec.weekly_amplitude * math.sin(2.0 * math.pi * phase)
        + spec.daily_amplitude * math.sin(2.0 * math.pi * phase * 7.0)
    )


def generate(spec: SyntheticSpec) -> tuple[list[TraceEvent], list[float]]:
    """Draw a trace and return (events, true rate per target period).

    Per period, one lognormal noise factor scales the intensity, then each
    sub-bin count is Poisson-drawn at that rate. Events are placed at evenly
    spaced offsets inside their sub-bin, so per-period event totals match
    the drawn counts exactly and output is byte-stable under a fixed seed.
    """
    rng = np.random.default_rng(spec.seed)
    sub_bins = spec.tp_minutes * 60 // spec.sub_bin_seconds
    sub_bin_us = spec.sub_bin_seconds * US_PER_SECOND
    truths = [true_rate(spec, tp) for tp in range(spec.tps)]

    events: list[TraceEvent] = []
    for tp, rate in enumerate(truths):
        if spec.noise_sigma > 0:
            # Mean-one lognormal: exp(sigma*Z - sigma^2/2).
            noise = math.exp(spec.noise_sigma * rng.standard_normal() - spec.noise_sigma**2 / 2.0)
        else:
            noise = 1.0
        counts = rng.poisson(rate * noise, size=sub_bins)
        job = f"j{tp + 1}"
        tp_start = tp * sub_bins * sub_bin_us
        for b, count in enumerate(counts):
            if count == 0:
                continue
            bin_start = tp_start + b * sub_bin_us
            step = sub_bin_us / count
            for i in range(count):
                ts = bin_start + int((i + 0.5) * step)
                events.append(TraceEvent(ts, job, job, spec.cpu_per_event, spec.mem_per_event))
    return events, truths


def write_truth(path: str | Path, truths: Sequence[float]) -> None:
    """Write the true rate sequence, one line per target period."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tp,true_rate\n")
        for tp, rate in enumerate(truths, start=1):
            fh.write(f"{tp},{rate!r}\n")


def read_truth(path: str | Path) -> list[float]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header.startswith("tp,"):
            raise ValueError(f"{path}: not a truth file")
        return [float(line.split(",")[1]) for line in fh if line.strip()]
