"""Two-mirror cavity geometry and the exact golden-rule emission rate.

Units: lengths in units of the standard mirror separation d0 = lambda0
(so k0 * d0 = 2*pi), rates in units of the vacuum rate W_vac.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class CavityConfig:
    """Refractive index ``n``, scale ``alpha = d / d0`` and asymmetry ``r_asym``.

    ``r_asym = (d2 - d1) / (d2 + d1)`` where ``d1`` (``d2``) is the distance
    from the atom to the upper (lower) mirror.
    """

    n: float
    alpha: float
    r_asym: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.n) or self.n < 1.0:
            raise ValueError(f"refractive index must be >= 1, got {self.n!r}")
        if not math.isfinite(self.alpha) or self.alpha <= 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha!r}")
        if not math.isfinite(self.r_asym) or abs(self.r_asym) > 1.0:
            raise ValueError(f"R must lie in [-1, 1], got {self.r_asym!r}")

    @classmethod
    def from_distances(cls, n: float, d1: float, d2: float) -> "CavityConfig":
        if d1 < 0 or d2 < 0 or d1 + d2 <= 0:
            raise ValueError("mirror distances must be non-negative with positive sum")
        return cls(n=n, alpha=d1 + d2, r_asym=(d2 - d1) / (d2 + d1))

    @property
    def d(self) -> float:
        return self.alpha

    @property
    def d1(self) -> float:
        return self.alpha * (1.0 - self.r_asym) / 2.0

    @property
    def d2(self) -> float:
        return self.alpha * (1.0 + self.r_asym) / 2.0

    @property
    def z(self) -> float:
        """Atom coordinate measured from the cavity midplane."""
        return self.alpha * self.r_asym / 2.0

    @property
    def k0(self) -> float:
        return 2.0 * math.pi

    def with_alpha(self, alpha: float) -> "CavityConfig":
        return CavityConfig(self.n, alpha, self.r_asym)


@dataclass
class RateCurve:
    """Emission rate sampled on a uniform alpha grid."""

    alphas: np.ndarray
    rates: np.ndarray
    n: float
    r_asym: float
    d_alpha: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.rates = np.asarray(self.rates, dtype=float)
        if self.alphas.shape != self.rates.shape or self.alphas.ndim != 1:
            raise ValueError("alphas and rates must be 1-D arrays of equal length")

    def __len__(self):
        return self.alphas.size

    @property
    def window(self) -> tuple[float, float, float]:
        return float(self.alphas[0]), float(self.alphas[-1]), self.d_alpha

    def check_uniform(self, rtol: float = 1e-9) -> None:
        if self.alphas.size < 2:
            raise ValueError("rate curve needs at least two samples")
        steps = np.diff(self.alphas)
        if np.any(steps <= 0):
            raise ValueError("alphas must be strictly increasing")
        if np.max(np.abs(steps - self.d_alpha)) > rtol * max(abs(self.d_alpha), 1.0):
            raise ValueError("alpha grid is not uniform")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_curve_csv(fh, self.alphas, self.rates)

    @classmethod
    def from_csv(cls, path, n: float, r_asym: float = float("nan")) -> "RateCurve":
        alphas, rates = [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["alpha", "rate"]:
                raise ValueError(f"{path}: expected header 'alpha,rate'")
            for row in reader:
                alphas.append(float(row["alpha"]))
                rates.append(float(row["rate"]))
        alphas = np.array(alphas)
        if alphas.size < 2:
            raise ValueError(f"{path}: need at least two samples")
        d_alpha = (alphas[-1] - alphas[0]) / (alphas.size - 1)
        curve = cls(alphas, np.array(rates), n=n, r_asym=r_asym, d_alpha=float(d_alpha))
        curve.check_uniform(rtol=1e-9)
        return curve


def write_curve_csv(fh, alphas: Sequence[float], rates: Sequence[float]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["alpha", "rate"])
    for a, w in zip(alphas, rates):
        writer.writerow([repr(float(a)), repr(float(w))])


def mode_count(cfg: CavityConfig) -> int:
    """Number of guided branches ``M = floor(2 n alpha)``."""
    return max(int(math.floor(2.0 * cfg.n * cfg.alpha)), 0)


def golden_rule_rate(cfg: CavityConfig) -> float:
    """Exact emission rate of a dipole parallel to the mirrors, in units of W_vac.

    W / W_vac = 3/(4 alpha) * sum_{j=1}^{M} (1 + j^2/(4 n^2 alpha^2)) sin^2(j pi (R-1)/2)
    """
    m = mode_count(cfg)
    # exact zero at the mirrors; sin(j*pi*k) is not exactly 0 in floating point
    if m == 0 or abs(cfg.r_asym) == 1.0:
        return 0.0
    j = np.arange(1, m + 1, dtype=float)
    n, a = cfg.n, cfg.alpha
    weight = 1.0 + j**2 / (4.0 * n * n * a * a)
    shape = np.sin(j * math.pi * (cfg.r_asym - 1.0) / 2.0) ** 2
    return float(0.75 / a * np.sum(weight * shape))


def golden_rule_curve(n: float, r_asym: float, alphas) -> np.ndarray:
    """Vectorised :func:`golden_rule_rate` over an array of alphas."""
    alphas = np.asarray(alphas, dtype=float)
    return np.array([golden_rule_rate(CavityConfig(n, a, r_asym)) for a in alphas.ravel()]).reshape(
        alphas.shape
    )


def background_rate(n: float) -> float:
    """Rate in the unbounded medium, ``W_bg = n W_vac``."""
    if n < 1.0:
        raise ValueError(f"refractive index must be >= 1, got {n!r}")
    return float(n)


def uniform_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Uniform grid ``lo + k * step``.

    ``hi`` is included when the span is an integer number of steps (within
    1e-9), otherwise the grid stops at the last point below it.
    """
    if not step > 0:
        raise ValueError("grid step must be positive")
    if not hi > lo:
        raise ValueError(f"empty window [{lo}, {hi}]")
    steps = (hi - lo) / step
    n_steps = round(steps)
    if abs(steps - n_steps) > 1e-9 * max(1.0, steps):
        n_steps = math.floor(steps)
    return lo + step * np.arange(n_steps + 1)


alpha_grid = uniform_grid


def sample_rate_curve(
    n: float, r_asym: float, alpha_min: float, alpha_max: float, d_alpha: float
) -> RateCurve:
    alphas = alpha_grid(alpha_min, alpha_max, d_alpha)
    rates = golden_rule_curve(n, r_asym, alphas)
    return RateCurve(alphas, rates, n=n, r_asym=r_asym, d_alpha=d_alpha)
