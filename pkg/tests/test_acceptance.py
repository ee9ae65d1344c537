"""Acceptance gate: one test per criterion, each at its stated tolerance."""
import math

import numpy as np

from cavityorbits.cavity import CavityConfig, golden_rule_curve, golden_rule_rate, uniform_grid
from cavityorbits.cli import table1_rows
from cavityorbits.fields import (
    image_field,
    near_field_bound,
    one_mirror_rate_exact,
    one_mirror_rate_semiclassical,
    rate_from_fields,
)
from cavityorbits.modes import numeric_golden_rule, run_mode_checks
from cavityorbits.orbits import literal_phase_rate, semiclassical_rate
from cavityorbits.spectral import distinct_actions, r_sweep
from synthetic import tone_errors

N = 1.49

# reference peak table: R -> rows of (FT position, orbit position, FT height, orbit height)
TABLE = {
    0.0: [
        (9.35, 9.36, 3.5987, 3.5993),
        (18.72, 18.72, 1.8175, 1.7977),
        (28.08, 28.09, 1.1957, 1.1984),
        (37.45, 37.45, 0.90616, 0.8986),
        (46.81, 46.81, 0.72541, 0.7189),
    ],
    1 / 3: [
        (6.23, 6.24, 2.6839, 2.7009),
        (12.50, 12.48, 1.3692, 1.3461),
        (18.72, 18.72, 1.8102, 1.7977),
        (24.95, 24.97, 0.65365, 0.6744),
        (31.22, 31.21, 0.55291, 0.5390),
        (37.45, 37.45, 0.90279, 0.8986),
        (43.67, 43.69, 0.37436, 0.3853),
    ],
    0.6: [
        (3.73, 3.74, 4.5112, 4.5112),
        (14.94, 14.98, 1.1261, 1.1263),
        (18.72, 18.72, 1.7920, 1.7977),
        (22.50, 22.47, 0.7551, 0.7479),
        (33.66, 33.70, 0.50151, 0.4999),
        (37.44, 37.45, 0.8917, 0.8989),
        (41.22, 41.19, 0.40507, 0.4082),
    ],
}


def _rms(a, b):
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _convergence(r, rate_fn):
    alphas = uniform_grid(1.0, 16.0, 0.01)
    exact = golden_rule_curve(N, r, alphas)
    cfg = CavityConfig(N, 1.0, r)
    errs = [_rms(rate_fn(cfg, k, alphas), exact) for k in (4, 16, 100)]
    ok = errs[0] > errs[1] > errs[2] and errs[2] < 0.25 * errs[0]
    return ok, errs


def test_criterion_1_fourier_peaks(analyses, criterion):
    counts = {r: len(a.peaks) for r, a in analyses.items()}
    count_ok = counts == {0.0: 5, 1 / 3: 7, 0.6: 7}
    ours, ref, dpos = [], [], []
    for r, rows in TABLE.items():
        peaks = analyses[r].peaks
        for pk, row in zip(peaks, rows):
            dpos.append(abs(pk.position - row[0]))
            ours.append(pk.height)
            ref.append(row[2])
    ours, ref = np.array(ours), np.array(ref)
    scale = float(ours @ ref / (ours @ ours))
    rel = np.abs(scale * ours / ref - 1)
    ok = count_ok and max(dpos) <= 0.05 and rel.max() <= 0.02
    criterion(
        1,
        ok,
        f"counts {list(counts.values())}, max |dpos| {max(dpos):.4f} (<= 0.05), "
        f"scale {scale:.5f}, max height dev {100 * rel.max():.3f}% (<= 2%)",
    )
    assert ok


def test_criterion_2_orbit_predictions(criterion):
    rows = table1_rows(N)
    by_r = {r: [row for row in rows if row["R"] == r] for r in TABLE}
    pos_ok = True
    worst = 0.0
    for r, ref in TABLE.items():
        got = by_r[r]
        actions = distinct_actions(N, r, 50.0)
        if len(got) != len(ref):
            pos_ok = False
            continue
        for row, (_, pos, _, height) in zip(got, ref):
            if row["orbit_position"] is None:
                pos_ok = False
                continue
            # every predicted position is one of the 2 pi n L0 group actions
            pos_ok &= any(math.isclose(row["orbit_position"], s, rel_tol=1e-12) for s in actions)
            pos_ok &= round(row["orbit_position"], 2) == pos
            worst = max(worst, abs(row["orbit_height"] / height - 1))
    lengths_ok = round(2 * math.pi * N * 0.4, 2) == 3.74 and round(2 * math.pi * N * (2 / 3), 2) == 6.24
    ok = pos_ok and lengths_ok and worst <= 0.02
    criterion(2, ok, f"positions to 2 decimals {'match' if pos_ok else 'differ'}, max calibrated height dev {100 * worst:.3f}% (<= 2%)")
    assert ok


def test_criterion_3_orbit_sum_convergence(criterion):
    ok, errs = _convergence(0.0, semiclassical_rate)
    others = {r: _convergence(r, semiclassical_rate)[1] for r in (1 / 3, 0.6)}
    extra = ", ".join(f"R={r:.3g}: ratio {e[2] / e[0]:.4f}" for r, e in others.items())
    criterion(
        3,
        ok,
        f"R=0 RMS N=4/16/100 = {errs[0]:.5f}/{errs[1]:.5f}/{errs[2]:.5f}, "
        f"ratio {errs[2] / errs[0]:.4f} (< 0.25); [{extra}]",
    )
    assert ok


def test_criterion_4_sweep(criterion):
    r_values = [round(0.05 * i, 2) for i in range(17)]
    rows = r_sweep(N, r_values, window=(1.0, 16.0, 0.005), gammas=(2.0, 100.0, 0.01))
    worst = 0.0
    n_peaks = 0
    for row in rows:
        for pk in row.peaks:
            n_peaks += 1
            worst = max(worst, min(abs(pk.position - s) for s in row.predicted_actions))
    n_generic = len(distinct_actions(N, 0.35, 100.0))
    ok = worst <= 0.1 and n_generic == 16 and n_peaks > 0
    criterion(4, ok, f"{n_peaks} peaks over {len(rows)} R values, max distance {worst:.4f} (<= 0.1); R=0.35 actions {n_generic} (== 16)")
    assert ok


def test_criterion_5_oracles(criterion):
    rng = np.random.default_rng(2024)
    points = []
    while len(points) < 20:
        alpha, r = rng.uniform(0.5, 5.0), rng.uniform(-0.95, 0.95)
        x = 2 * N * alpha
        if abs(x - round(x)) >= 0.1:
            points.append((alpha, r))
    worst = max(
        abs(numeric_golden_rule(CavityConfig(N, a, r)) / golden_rule_rate(CavityConfig(N, a, r)) - 1) for a, r in points
    )
    s = np.linspace(0.1, 100.0, 20000)
    ident = float(np.max(np.abs(rate_from_fields(image_field(s)) - one_mirror_rate_exact(s))))
    ok = worst <= 0.01 and ident <= 1e-12
    criterion(5, ok, f"mode sum max rel dev {100 * worst:.4f}% (<= 1%) at 20 points; field identity {ident:.2e} (<= 1e-12)")
    assert ok


def test_criterion_6_properties(criterion):
    alphas = np.linspace(0.1, 20.0, 400)
    quench_r = all(golden_rule_rate(CavityConfig(N, a, r)) == 0.0 for a in alphas for r in (-1.0, 1.0))
    quench_s = one_mirror_rate_exact(1e-6) < 1e-9

    period = 1 / (2 * N)
    mean = float(np.mean(golden_rule_curve(N, 0.0, np.linspace(10.0, 10.0 + 12 * period, 20001))))
    mean_ok = abs(mean / N - 1) <= 0.02

    s = np.concatenate([np.geomspace(1e-4, 0.1, 400), np.linspace(0.1, 1000.0, 20000)])
    gap = np.abs(one_mirror_rate_exact(s) - one_mirror_rate_semiclassical(s))
    bound_ok = bool(np.all(gap <= near_field_bound(s)))

    modes_ok = all(c["passed"] for c in run_mode_checks())

    pos_err, height_err = tone_errors(np.arange(5.0, 50.0 + 1e-9, 0.05), np.arange(24) * np.pi / 12)
    tone_ok = pos_err <= 0.02 and height_err <= 0.01

    parts = {
        "quench": quench_r and quench_s,
        "mean": mean_ok,
        "near-field": bound_ok,
        "modes": modes_ok,
        "tone": tone_ok,
    }
    ok = all(parts.values())
    flags = " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in parts.items())
    criterion(
        6,
        ok,
        f"{flags}; mean/n = {mean / N:.4f}, tone max |dpos| {pos_err:.4f} (<= 0.02), "
        f"max height dev {100 * height_err:.3f}% (<= 1%)",
    )
    assert ok


def test_criterion_7_sign_convention(criterion):
    adopted_ok, good = _convergence(0.0, semiclassical_rate)
    literal_ok, bad = _convergence(0.0, literal_phase_rate)
    ok = adopted_ok and not literal_ok
    criterion(
        7,
        ok,
        f"adopted sign meets criterion 3: {adopted_ok} (ratio {good[2] / good[0]:.4f}); "
        f"literal sign fails it: {not literal_ok} (RMS {bad[0]:.4f}/{bad[1]:.4f}/{bad[2]:.4f})",
    )
    assert ok
