"""Windowed Fourier analysis of rate-vs-scale curves and peak extraction.

The transform is

    W~(gamma) = integral_{a1}^{a2} [W(alpha) - W_bg] * alpha * exp(i alpha gamma) d alpha

evaluated with the composite trapezoid rule on the curve's own grid.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cavity import CavityConfig, RateCurve, background_rate, sample_rate_curve, uniform_grid
from .orbits import PredictedPeak, enumerate_orbits, group_degenerate, predicted_peaks

WORKERS_ENV = "CAVITYORBITS_MAX_WORKERS"
_CHUNK = 512


@dataclass
class Spectrum:
    gammas: np.ndarray
    values: np.ndarray
    window: tuple[float, float, float]
    background: float

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["gamma", "re", "im", "abs"])
        for g, v in zip(self.gammas, self.values):
            writer.writerow([repr(float(g)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v)))])


@dataclass
class Peak:
    position: float
    height: float
    matched_action: float | None = None
    matched: bool = False

    @property
    def delta(self) -> float | None:
        if self.matched_action is None:
            return None
        return self.position - self.matched_action

    def to_record(self) -> dict:
        return {
            "position": self.position,
            "height": self.height,
            "matched_action": self.matched_action,
            "delta": self.delta,
        }


def gamma_grid(gamma_min: float, gamma_max: float, d_gamma: float) -> np.ndarray:
    return uniform_grid(gamma_min, gamma_max, d_gamma)


def trapezoid_weights(n_points: int, step: float) -> np.ndarray:
    w = np.full(n_points, step)
    w[0] = w[-1] = step / 2.0
    return w


def modified_fourier_transform(curve: RateCurve, w_bg: float, gammas) -> Spectrum:
    """Transform of ``(W - w_bg) * alpha`` on the curve's grid.

    ``gammas`` is either an array or a ``(gamma_min, gamma_max, d_gamma)`` triple.
    """
    if len(curve) == 0:
        raise ValueError("empty rate curve")
    curve.check_uniform()
    if isinstance(gammas, tuple):
        gammas = gamma_grid(*gammas)
    gammas = np.asarray(gammas, dtype=float)
    if gammas.size == 0 or gammas[0] <= 0:
        raise ValueError("gamma grid must be non-empty and start above zero")
    if np.any(np.diff(gammas) <= 0):
        raise ValueError("gamma grid must be strictly increasing")
    alphas = curve.alphas
    f = (curve.rates - w_bg) * alphas * trapezoid_weights(alphas.size, curve.d_alpha)
    values = np.empty(gammas.size, dtype=complex)
    # fixed chunking keeps each output sample an identical dot product
    for start in range(0, gammas.size, _CHUNK):
        g = gammas[start : start + _CHUNK]
        values[start : start + _CHUNK] = np.exp(1j * np.outer(g, alphas)) @ f
    return Spectrum(gammas, values, curve.window, w_bg)


def window_kernel(x, window: tuple[float, float, float]) -> np.ndarray:
    """Trapezoid-rule transform of ``exp(-i x0 alpha)`` evaluated at offset ``x = gamma - x0``."""
    a1, a2, da = window
    n_steps = round((a2 - a1) / da)
    x = np.asarray(x, dtype=float)
    half = 0.5 * x * da
    s = np.sin(half)
    small = np.abs(s) < 1e-12
    dirichlet = np.where(small, n_steps + 1.0, np.sin((n_steps + 1) * half) / np.where(small, 1.0, s))
    centre = 0.5 * (a1 + a1 + n_steps * da)
    return da * np.exp(1j * x * centre) * (dirichlet - np.cos(0.5 * x * n_steps * da))


@dataclass
class SamplingRule:
    name: str
    ok: bool
    value: float
    limit: float
    text: str

    @property
    def margin(self) -> float:
        return self.value - self.limit


@dataclass
class SamplingReport:
    rules: list[SamplingRule]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rules)

    def violations(self) -> list[SamplingRule]:
        return [r for r in self.rules if not r.ok]


def validate_sampling(window: tuple[float, float, float], gamma_first: float, gamma_max: float) -> SamplingReport:
    """Check the window-length and step-size rules for resolving ``[gamma_first, gamma_max]``."""
    a1, a2, da = window
    span_limit = 2.0 * math.pi / gamma_first
    step_limit = 0.1 * 2.0 * math.pi / gamma_max
    return SamplingReport(
        [
            SamplingRule(
                "window",
                (a2 - a1) >= span_limit,
                a2 - a1,
                span_limit,
                f"alpha2 - alpha1 = {a2 - a1:g} must be >= 2*pi/gamma' = {span_limit:.6g}",
            ),
            SamplingRule(
                "step",
                da <= step_limit,
                da,
                step_limit,
                f"d_alpha = {da:g} must be <= 0.1*2*pi/gamma_max = {step_limit:.6g}",
            ),
        ]
    )


def _parabola(y0: float, y1: float, y2: float) -> tuple[float, float]:
    """Vertex offset (in samples) and value of the parabola through three points."""
    den = y0 - 2.0 * y1 + y2
    if den >= 0:
        return 0.0, y1
    off = 0.5 * (y0 - y2) / den
    return off, y1 - 0.25 * (y0 - y2) * off


def _interp_complex(values: np.ndarray, i: int, off: float) -> complex:
    """Four-point Lagrange interpolation at fractional index ``i + off``."""
    n = values.size
    lo = i - 1 if off >= 0 else i - 2
    lo = min(max(lo, 0), n - 4)
    if n < 4:
        return complex(values[i])
    t = i + off - lo
    nodes = np.arange(4.0)
    out = 0j
    for k in range(4):
        others = np.delete(nodes, k)
        out += values[lo + k] * np.prod((t - others) / (nodes[k] - others))
    return complex(out)


@dataclass
class Component:
    position: float
    amplitude: float


def clean_components(spec: Spectrum, floor: float, max_components: int = 200) -> tuple[list[Component], np.ndarray]:
    """Iteratively explain the spectrum as a sum of windowed real tones.

    Each step takes the largest residual sample, fits a tone
    ``c exp(-i g alpha) + conj(c) exp(i g alpha)`` there, and subtracts its
    exact windowed response, side lobes included. Stops once the residual
    falls below ``floor``.
    """
    g = spec.gammas
    dg = g[1] - g[0] if g.size > 1 else 1.0
    res = spec.values.copy()
    t0 = window_kernel(0.0, spec.window).real
    comps: list[Component] = []
    for _ in range(max_components):
        mag = np.abs(res)
        i = int(np.argmax(mag))
        if mag[i] < floor:
            break
        off = 0.0
        if 0 < i < g.size - 1:
            off, _ = _parabola(mag[i - 1], mag[i], mag[i + 1])
            off = max(-1.0, min(1.0, off))
        pos = g[i] + off * dg
        v = _interp_complex(res, i, off) / t0
        b = complex(window_kernel(2.0 * pos, spec.window)) / t0
        c = (v - b * np.conj(v)) / (1.0 - abs(b) ** 2)
        res -= c * window_kernel(g - pos, spec.window) + np.conj(c) * window_kernel(g + pos, spec.window)
        comps.append(Component(float(pos), float(abs(c) * t0)))
    return comps, res


def find_peaks(
    spec: Spectrum,
    threshold_frac: float = 0.05,
    min_separation: float = 0.5,
    edge_guard: float | None = None,
    span: tuple[float, float] | None = None,
) -> list[Peak]:
    """Peaks of ``|W~|`` that correspond to genuine tones rather than window side lobes.

    A local maximum of ``|W~|`` is reported when it lies within half a main
    lobe of a fitted tone (see :func:`clean_components`) whose amplitude is at
    least ``threshold_frac`` of the largest ``|W~|`` in ``span``. Tones closer
    than ``min_separation`` are merged into the stronger one. Positions and
    heights come from a three-point parabola through ``|W~|`` itself.

    ``span`` (default: the whole grid) limits which peaks are reported; a
    spectrum computed on a wider grid lets tones just outside the span be
    modelled instead of leaking side lobes into it. Peaks within
    ``edge_guard`` of either end of the span (default half a main lobe,
    ``pi / (a2 - a1)``) are dropped because their lobe is cut off.
    """
    mag = spec.magnitude
    g = spec.gammas
    if g.size < 3 or not np.any(mag > 0):
        return []
    lo, hi = (g[0], g[-1]) if span is None else span
    a1, a2, _ = spec.window
    half_lobe = math.pi / (a2 - a1)
    if edge_guard is None:
        edge_guard = half_lobe
    inside = (g >= lo) & (g <= hi)
    if not np.any(inside):
        return []
    floor = threshold_frac * float(mag[inside].max())
    comps, _ = clean_components(spec, floor)

    sources: list[Component] = []
    for comp in sorted(comps, key=lambda c: -c.amplitude):
        if comp.amplitude < floor:
            continue
        if all(abs(comp.position - s.position) >= min_separation for s in sources):
            sources.append(comp)

    interior = np.arange(1, g.size - 1)
    is_max = (mag[interior] > mag[interior - 1]) & (mag[interior] >= mag[interior + 1])
    maxima = interior[is_max]
    if maxima.size == 0:
        return []
    dg = g[1] - g[0]
    used: set[int] = set()
    peaks: list[Peak] = []
    for src in sources:
        j = int(maxima[np.argmin(np.abs(g[maxima] - src.position))])
        if abs(g[j] - src.position) > half_lobe or j in used:
            continue
        used.add(j)
        off, height = _parabola(mag[j - 1], mag[j], mag[j + 1])
        pos = float(g[j] + off * dg)
        if height < floor or pos < lo + edge_guard or pos > hi - edge_guard:
            continue
        peaks.append(Peak(pos, float(height)))
    peaks.sort(key=lambda p: p.position)
    return peaks


def padded_gammas(gammas: tuple[float, float, float], pad: float = 2.0) -> np.ndarray:
    """The grid ``gammas`` extended by about ``pad`` on each side (never below half its start)."""
    g_min, g_max, dg = gammas
    base = gamma_grid(g_min, g_max, dg)
    k_lo = int(min(pad, 0.5 * g_min) / dg)
    k_hi = int(pad / dg)
    return g_min + dg * np.arange(-k_lo, base.size + k_hi)


@dataclass
class MatchPair:
    peak: Peak
    position: float
    height: float

    @property
    def d_position(self) -> float:
        return self.peak.position - self.position

    @property
    def rel_height(self) -> float:
        return (self.peak.height - self.height) / self.height


@dataclass
class MatchReport:
    pairs: list[MatchPair] = field(default_factory=list)
    unmatched_peaks: list[Peak] = field(default_factory=list)
    unmatched_predicted: list[tuple[float, float]] = field(default_factory=list)

    @property
    def n_matched(self) -> int:
        return len(self.pairs)

    @property
    def max_abs_dposition(self) -> float:
        return max((abs(p.d_position) for p in self.pairs), default=0.0)


def _as_pair(pred) -> tuple[float, float]:
    if isinstance(pred, PredictedPeak):
        return pred.position, pred.height
    pos, height = pred
    return float(pos), float(height)


def match_peaks(peaks: list[Peak], predicted, tolerance: float = 0.1) -> MatchReport:
    """Greedy nearest-first pairing of detected and predicted peaks within ``tolerance``."""
    preds = [_as_pair(p) for p in predicted]
    candidates = sorted(
        (abs(pk.position - pr[0]), i, j)
        for i, pk in enumerate(peaks)
        for j, pr in enumerate(preds)
        if abs(pk.position - pr[0]) <= tolerance
    )
    used_peaks: set[int] = set()
    used_preds: set[int] = set()
    report = MatchReport()
    for _, i, j in candidates:
        if i in used_peaks or j in used_preds:
            continue
        used_peaks.add(i)
        used_preds.add(j)
        peaks[i].matched_action = preds[j][0]
        peaks[i].matched = True
        report.pairs.append(MatchPair(peaks[i], *preds[j]))
    report.pairs.sort(key=lambda p: p.position)
    report.unmatched_peaks = [pk for i, pk in enumerate(peaks) if i not in used_peaks]
    report.unmatched_predicted = [pr for j, pr in enumerate(preds) if j not in used_preds]
    return report


def peaks_to_json(peaks: list[Peak]) -> str:
    return json.dumps([p.to_record() for p in peaks], indent=2)


def max_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


@dataclass
class Analysis:
    curve: RateCurve
    spectrum: Spectrum
    peaks: list[Peak]
    predicted: list[PredictedPeak]
    report: MatchReport


def analyze(
    n: float,
    r_asym: float,
    window: tuple[float, float, float] = (1.0, 16.0, 0.01),
    gammas: tuple[float, float, float] = (2.0, 50.0, 0.01),
    threshold_frac: float = 0.05,
    min_separation: float = 0.5,
    tolerance: float = 0.1,
    curve: RateCurve | None = None,
) -> Analysis:
    """Sample the exact rate, transform it, detect peaks and pair them with closed orbits."""
    if curve is None:
        curve = sample_rate_curve(n, r_asym, *window)
    g_min, g_max, _ = gammas
    wide = modified_fourier_transform(curve, background_rate(n), padded_gammas(gammas))
    peaks = find_peaks(wide, threshold_frac, min_separation, span=(g_min, g_max))
    keep = slice(int(np.searchsorted(wide.gammas, g_min - 1e-9)), int(np.searchsorted(wide.gammas, g_max + 1e-9)))
    spec = Spectrum(wide.gammas[keep], wide.values[keep], wide.window, wide.background)
    a1, a2, _ = curve.window
    predicted = [
        p
        for p in predicted_in_window(n, r_asym, (a1, a2), spec.gammas[-1])
        if p.position >= spec.gammas[0]
    ]
    report = match_peaks(peaks, predicted, tolerance)
    return Analysis(curve, spec, peaks, predicted, report)


def predicted_in_window(n: float, r_asym: float, window: tuple[float, float], gamma_max: float):
    return predicted_peaks(CavityConfig(n, 1.0, r_asym), window, gamma_max)


def family_action_curves(n: float, r_values, gamma_max: float) -> list[dict]:
    """Actions ``S0(R)`` of every orbit below ``gamma_max``, for overlay on a sweep."""
    rows = []
    for r in r_values:
        for orb in enumerate_orbits(CavityConfig(n, 1.0, float(r)), gamma_max):
            rows.append({"R": float(r), "family": orb.family.label, "k": orb.k, "action": orb.action})
    return rows


def distinct_actions(n: float, r_asym: float, gamma_max: float) -> list[float]:
    groups = group_degenerate(enumerate_orbits(CavityConfig(n, 1.0, r_asym), gamma_max))
    return [grp.action for grp in groups]


@dataclass
class SweepRow:
    r_asym: float
    peaks: list[Peak]
    predicted_actions: list[float]


def r_sweep(
    n: float,
    r_values,
    window: tuple[float, float, float] = (1.0, 16.0, 0.005),
    gammas: tuple[float, float, float] = (2.0, 100.0, 0.01),
    threshold_frac: float = 0.05,
    min_separation: float = 0.5,
    tolerance: float = 0.1,
    workers: int | None = None,
) -> list[SweepRow]:
    """Peak positions against the configuration parameter R."""
    r_values = [float(r) for r in r_values]
    for r in r_values:
        if not -1.0 < r < 1.0:
            raise ValueError(f"R must lie strictly inside (-1, 1), got {r}")

    def one(r: float) -> SweepRow:
        res = analyze(n, r, window, gammas, threshold_frac, min_separation, tolerance)
        # orbits slightly past the grid end still shape peaks near the edge
        actions = distinct_actions(n, r, gammas[1] + 1.0)
        return SweepRow(r, res.peaks, actions)

    workers = workers or max_workers()
    if workers == 1:
        return [one(r) for r in r_values]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, r_values))


def write_sweep_csv(fh, rows: list[SweepRow]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["R", "peak_index", "position", "predicted_action"])
    for row in rows:
        for i, pk in enumerate(row.peaks, start=1):
            nearest = min(row.predicted_actions, key=lambda s: abs(s - pk.position), default=None)
            writer.writerow([repr(row.r_asym), i, repr(pk.position), "" if nearest is None else repr(nearest)])


__all__ = [
    "Analysis",
    "MatchReport",
    "Peak",
    "SamplingReport",
    "Spectrum",
    "SweepRow",
    "analyze",
    "clean_components",
    "distinct_actions",
    "family_action_curves",
    "find_peaks",
    "match_peaks",
    "modified_fourier_transform",
    "r_sweep",
    "validate_sampling",
    "window_kernel",
]
