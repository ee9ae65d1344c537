"""Photon closed orbits between two plane mirrors and the orbit-sum rate."""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cavity import CavityConfig

DEGENERACY_RTOL = 1e-9


class Family(enum.IntEnum):
    """Orbit families, in tie-break order."""

    UPPER_FIRST = 0
    LOWER_FIRST = 1
    ROUND_TRIP_UP = 2
    ROUND_TRIP_DOWN = 3

    @property
    def label(self) -> str:
        return {0: "UpperFirst", 1: "LowerFirst", 2: "RoundTripUp", 3: "RoundTripDown"}[self.value]

    @classmethod
    def from_label(cls, label: str) -> "Family":
        for fam in cls:
            if fam.label == label:
                return fam
        raise ValueError(f"unknown orbit family {label!r}")


@dataclass(frozen=True)
class ClosedOrbit:
    """Normal-incidence orbit leaving the atom and returning after ``reflections`` bounces.

    ``length`` and ``action`` refer to the scale ``alpha`` the orbit was
    enumerated at; at ``alpha = 1`` they are the standard-size L0 and S0.
    """

    family: Family
    k: int
    length: float
    reflections: int
    action: float

    def scaled(self, factor: float) -> "ClosedOrbit":
        return ClosedOrbit(self.family, self.k, self.length * factor, self.reflections, self.action * factor)

    @property
    def sign(self) -> int:
        """Parity ``(-1)**(m - 1)``: a parallel dipole image flips at each reflection."""
        return 1 if self.reflections % 2 == 1 else -1


@dataclass
class OrbitGroup:
    action: float
    length: float
    members: list[ClosedOrbit] = field(default_factory=list)

    @property
    def degeneracy(self) -> int:
        return len(self.members)


def _unit_lengths(r_asym: float, fam: Family, k: int) -> float:
    if fam is Family.UPPER_FIRST:
        return 2 * k + (1.0 - r_asym)
    if fam is Family.LOWER_FIRST:
        return 2 * k + (1.0 + r_asym)
    return 2.0 * k


def enumerate_orbits(cfg: CavityConfig, max_action: float) -> list[ClosedOrbit]:
    """All closed orbits with action ``<= max_action``, sorted by (action, family)."""
    if abs(cfg.r_asym) >= 1.0:
        raise ValueError("atom sits on a mirror (|R| = 1); closed orbits are degenerate")
    if not max_action > 0:
        raise ValueError("max_action must be positive")
    scale = 2.0 * math.pi * cfg.n * cfg.alpha
    orbits = []
    k = 0
    while True:
        # the shortest orbit of round k bounds all longer rounds
        if scale * min(_unit_lengths(cfg.r_asym, f, k) for f in Family if k > 0 or f < 2) > max_action:
            break
        for fam in Family:
            if k == 0 and fam >= Family.ROUND_TRIP_UP:
                continue
            unit = _unit_lengths(cfg.r_asym, fam, k)
            action = scale * unit
            if action <= max_action:
                m = 2 * k if fam >= Family.ROUND_TRIP_UP else 2 * k + 1
                orbits.append(ClosedOrbit(fam, k, cfg.alpha * unit, m, action))
        k += 1
    orbits.sort(key=lambda o: (o.action, o.family))
    return orbits


def first_orbits(cfg: CavityConfig, count: int) -> list[ClosedOrbit]:
    """The ``count`` orbits of smallest action (degenerate partners count separately)."""
    if count < 0:
        raise ValueError("orbit count must be >= 0")
    if count == 0:
        return []
    # each round k >= 1 contributes four orbits with action <= 2*pi*n*alpha*(2k+2)
    rounds = count // 4 + 2
    limit = 2.0 * math.pi * cfg.n * cfg.alpha * (2 * rounds + 2)
    return enumerate_orbits(cfg, limit)[:count]


def group_degenerate(orbits: list[ClosedOrbit], rtol: float = DEGENERACY_RTOL) -> list[OrbitGroup]:
    groups: list[OrbitGroup] = []
    for orb in orbits:
        if groups and math.isclose(orb.action, groups[-1].action, rel_tol=rtol):
            groups[-1].members.append(orb)
        else:
            groups.append(OrbitGroup(orb.action, orb.length, [orb]))
    return groups


def semiclassical_rate(cfg: CavityConfig, n_orbits: int, alphas=None):
    """Closed-orbit approximation to the rate, in units of W_vac.

    W = n - (3/2) n sum_j (-1)**(m_j - 1) sin(S_j) / S_j over the ``n_orbits``
    shortest orbits. With ``alphas`` given, the same orbit set is evaluated
    at every scale (actions scale linearly with alpha) and an array is returned.
    """
    if abs(cfg.r_asym) >= 1.0:
        raise ValueError("atom sits on a mirror (|R| = 1); closed orbits are degenerate")
    orbits = first_orbits(cfg.with_alpha(1.0), n_orbits)
    if alphas is None:
        a = np.array([cfg.alpha])
    else:
        a = np.asarray(alphas, dtype=float)
    total = np.zeros_like(a)
    for orb in orbits:
        s = orb.action * a
        total += orb.sign * np.sin(s) / s
    rate = cfg.n - 1.5 * cfg.n * total
    return float(rate[0]) if alphas is None else rate


def literal_phase_rate(cfg: CavityConfig, n_orbits: int, alphas):
    """Orbit sum with phase ``-m pi`` taken at face value, i.e. sign ``(-1)**m``.

    Kept as a negative control for the sign convention.
    """
    a = np.asarray(alphas, dtype=float)
    total = np.zeros_like(a)
    for orb in first_orbits(cfg.with_alpha(1.0), n_orbits):
        s = orb.action * a
        total += np.sin(s - orb.reflections * math.pi) / s
    return cfg.n - 1.5 * cfg.n * total


@dataclass
class PredictedPeak:
    position: float
    height: float
    degeneracy: int
    members: list[ClosedOrbit]

    def to_record(self) -> dict:
        return {
            "position": self.position,
            "height": self.height,
            "degeneracy": self.degeneracy,
            "members": [f"{o.family.label}:{o.k}" for o in self.members],
        }


def height_constant(n: float, window: tuple[float, float]) -> float:
    """Modulus of the windowed transform per unit ``g / S0``: ``(3/4) n (a2 - a1)``."""
    a1, a2 = window
    return 0.75 * n * (a2 - a1)


def predicted_peaks(
    cfg: CavityConfig,
    window: tuple[float, float],
    max_action: float,
    calibrate: tuple[int, float] | None = None,
) -> list[PredictedPeak]:
    """Peak positions ``S0`` and heights ``C g / S0`` for each degenerate group.

    ``calibrate=(index, height)`` rescales all heights so that peak ``index``
    has the given height, i.e. heights become ``h g / L0`` with a fitted h.
    """
    a1, a2 = window
    if not a2 > a1:
        raise ValueError("window must satisfy alpha2 > alpha1")
    unit = cfg.with_alpha(1.0)
    groups = group_degenerate(enumerate_orbits(unit, max_action))
    c = height_constant(cfg.n, window)
    peaks = [PredictedPeak(g.action, c * g.degeneracy / g.action, g.degeneracy, g.members) for g in groups]
    if calibrate is not None:
        index, ref = calibrate
        factor = ref / peaks[index].height
        for p in peaks:
            p.height *= factor
    return peaks


def write_orbits_csv(fh, orbits: list[ClosedOrbit]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["family", "k", "length", "reflections", "action"])
    for o in orbits:
        writer.writerow([o.family.label, o.k, repr(o.length), o.reflections, repr(o.action)])


def peaks_to_json(peaks: list[PredictedPeak]) -> str:
    return json.dumps([p.to_record() for p in peaks], indent=2)
