"""Cavity mode functions and a mode-sum evaluation of the golden-rule rate.

This is an independent route to the closed-form rate in :mod:`cavity`:
build the mode functions, weight each mode by its squared dipole matrix
element and sum over modes with a broadened energy-conserving delta.
Positions are measured from the cavity midplane, mirrors at ``z = +-d/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .cavity import CavityConfig, golden_rule_rate, mode_count


@dataclass(frozen=True)
class ModeIndex:
    """Mode ``(j, k_par, phi, pol)``; ``k_par`` points along x rotated by ``phi`` from the dipole."""

    j: int
    k_par: float
    phi: float = 0.0
    pol: int = 1

    def __post_init__(self):
        if self.j < 1:
            raise ValueError(f"transverse index j must be >= 1, got {self.j}")
        if self.pol not in (1, 2):
            raise ValueError(f"polarization must be 1 or 2, got {self.pol}")
        if self.k_par < 0:
            raise ValueError("k_par must be non-negative")

    def k3(self, d: float) -> float:
        return self.j * math.pi / d

    def k(self, d: float) -> float:
        return math.hypot(self.k_par, self.k3(d))

    def unit_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """In-plane direction of ``k_par`` and ``k_par_hat x z_hat``, dipole along x."""
        k_hat = np.array([math.cos(self.phi), math.sin(self.phi), 0.0])
        return k_hat, np.cross(k_hat, [0.0, 0.0, 1.0])


def mode_function(m: ModeIndex, position, d: float, k3: float | None = None) -> np.ndarray:
    """Unnormalised mode shape at ``position = (x, y, z)`` (or an array of them, shape ``(..., 3)``).

    pol 1: (k_hat x z) sin k3(z - d/2) exp(i k_par . x)
    pol 2: [k_par z cos k3(z - d/2) - i k3 k_hat sin k3(z - d/2)] exp(i k_par . x) / k

    ``k3`` overrides ``j pi / d`` (used to build deliberately wrong modes).
    """
    pos = np.asarray(position, dtype=float)
    x, y, z = pos[..., 0], pos[..., 1], pos[..., 2]
    if np.any(np.abs(z) > d / 2 * (1 + 1e-12)):
        raise ValueError("position outside the cavity")
    k3 = m.k3(d) if k3 is None else k3
    k_hat, t_hat = m.unit_vectors()
    phase = np.exp(1j * m.k_par * (k_hat[0] * x + k_hat[1] * y))[..., None]
    arg = (k3 * (z - d / 2))[..., None]
    if m.pol == 1:
        return t_hat * np.sin(arg) * phase
    k = math.hypot(m.k_par, k3)
    z_hat = np.array([0.0, 0.0, 1.0])
    return (m.k_par * z_hat * np.cos(arg) - 1j * k3 * k_hat * np.sin(arg)) * phase / k


@dataclass
class PdeReport:
    helmholtz: float
    divergence: float
    points: int

    @property
    def passed(self) -> bool:
        return self.helmholtz <= 1e-6 and self.divergence <= 1e-6


def check_mode_pde(
    m: ModeIndex,
    d: float,
    n_points: int = 16,
    step: float = 1e-4,
    k3_scale: float = 1.0,
    seed: int = 0,
) -> PdeReport:
    """Finite-difference Helmholtz and divergence residuals at random interior points.

    Residuals are relative: ``|lap A + k^2 A| / (k^2 max|A|)`` and
    ``|div A| / (k max|A|)`` with k taken from the nominal mode. ``k3_scale``
    perturbs the evaluated mode away from the nominal one.
    """
    rng = np.random.default_rng(seed)
    k = m.k(d)
    k3 = m.k3(d) * k3_scale
    f = lambda p: mode_function(m, p, d, k3=k3)  # noqa: E731
    eye = np.eye(3) * step
    worst_h = worst_div = 0.0
    for _ in range(n_points):
        p = np.array([rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.4 * d, 0.4 * d)])
        centre = f(p)
        lap = np.zeros(3, dtype=complex)
        div = 0j
        for axis in range(3):
            plus, minus = f(p + eye[axis]), f(p - eye[axis])
            lap += (plus - 2.0 * centre + minus) / step**2
            div += (plus[axis] - minus[axis]) / (2.0 * step)
        # |A| can vanish at a sample point; scale by the mode's peak amplitude
        scale = 1.0 if m.pol == 1 else max(m.k_par, k3) / math.hypot(m.k_par, k3)
        worst_h = max(worst_h, float(np.linalg.norm(lap + k**2 * centre)) / (k**2 * scale))
        worst_div = max(worst_div, abs(div) / (k * scale))
    return PdeReport(worst_h, worst_div, n_points)


def tangential_at_mirrors(m: ModeIndex, d: float) -> tuple[float, float]:
    """Largest tangential and normal components at the two mirror planes."""
    tang = norm = 0.0
    for z in (-d / 2, d / 2):
        a = mode_function(m, (0.3, -0.2, z), d)
        tang = max(tang, float(np.hypot(abs(a[0]), abs(a[1]))))
        norm = max(norm, float(abs(a[2])))
    return tang, norm


def mode_overlap(j: int, j2: int, pol: int, d: float, k_par: float = 1.0, n_points: int = 10_001) -> float:
    """Normalised overlap ``(2/d) int A_j* . A_j2 dz`` of the z-dependence of two modes."""
    if j < 1 or j2 < 1:
        raise ValueError("transverse indices must be >= 1")
    z = np.linspace(-d / 2, d / 2, n_points)
    pts = np.stack([np.zeros_like(z), np.zeros_like(z), z], axis=-1)
    a = mode_function(ModeIndex(j, k_par, 0.0, pol), pts, d)
    b = mode_function(ModeIndex(j2, k_par, 0.0, pol), pts, d)
    integrand = np.sum(np.conj(a) * b, axis=1)
    return float(np.real(2.0 / d * trapezoid(integrand, z)))


def matrix_element_sq(m: ModeIndex, z: float, d: float) -> float:
    """``(sin^2 phi + (k3/k)^2 cos^2 phi) sin^2 k3(z - d/2)``, the pol-summed weight."""
    if abs(z) > d / 2 * (1 + 1e-12):
        raise ValueError("atom outside the cavity")
    k3 = m.k3(d)
    k = m.k(d)
    ang = math.sin(m.phi) ** 2 + (k3 / k) ** 2 * math.cos(m.phi) ** 2
    return ang * math.sin(k3 * (z - d / 2)) ** 2


def dipole_coupling_sq(m: ModeIndex, z: float, d: float) -> float:
    """``|x_hat . A(0, 0, z)|^2`` for one polarization; summing both gives :func:`matrix_element_sq`."""
    return float(abs(mode_function(m, (0.0, 0.0, z), d)[0]) ** 2)


def numeric_golden_rule(
    cfg: CavityConfig,
    broadening: float = 1e-3,
    n_k: int = 100_000,
    extra_branches: int = 5,
    k_margin: float = 1.0,
) -> float:
    """Mode-sum rate in units of W_vac with a Lorentzian in place of the energy delta.

    W / W_vac = 3/(2 k0 d) * sum_j int dk_par k_par * Phi_j(k_par) * s_j / k * L_eps(k - n k0)

    where ``Phi_j = pi (1 + k3^2/k^2)`` is the azimuthal integral of the
    matrix element and ``s_j = sin^2 k3(z - d/2)``. Branches above cutoff are
    kept (``extra_branches``) since the Lorentzian tails reach them.
    """
    if broadening <= 0:
        raise ValueError("broadening must be positive")
    d, z = cfg.d, cfg.z
    k_emit = cfg.n * cfg.k0
    k_par = np.linspace(0.0, k_emit + k_margin, n_k)
    total = 0.0
    for j in range(1, mode_count(cfg) + extra_branches + 1):
        k3 = j * math.pi / d
        k = np.hypot(k_par, k3)
        azimuthal = math.pi * (1.0 + k3**2 / k**2)
        s_j = math.sin(k3 * (z - d / 2)) ** 2
        lorentz = (broadening / math.pi) / ((k - k_emit) ** 2 + broadening**2)
        total += s_j * trapezoid(k_par * azimuthal / k * lorentz, k_par)
    return 3.0 / (2.0 * cfg.k0 * d) * total


def azimuthal_weight(k3: float, k: float, n_phi: int = 4096) -> float:
    """Numerical ``int_0^{2pi} (sin^2 phi + (k3/k)^2 cos^2 phi) dphi``; equals ``pi (1 + k3^2/k^2)``."""
    phi = np.linspace(0.0, 2.0 * math.pi, n_phi + 1)
    return float(trapezoid(np.sin(phi) ** 2 + (k3 / k) ** 2 * np.cos(phi) ** 2, phi))


def run_mode_checks(d: float = 1.0, j_max: int = 10) -> list[dict]:
    """Orthonormality, boundary and PDE residual checks as pass/fail records."""
    checks = []
    worst = 0.0
    for pol in (1, 2):
        for j in range(1, j_max + 1):
            for j2 in range(1, j_max + 1):
                ov = mode_overlap(j, j2, pol, d)
                worst = max(worst, abs(ov - (1.0 if j == j2 else 0.0)))
    checks.append({"name": "orthonormality", "value": worst, "limit": 1e-8, "passed": worst <= 1e-8})

    tang = 0.0
    for pol in (1, 2):
        for j in range(1, 6):
            tang = max(tang, tangential_at_mirrors(ModeIndex(j, 2.0, 0.4, pol), d)[0])
    checks.append({"name": "tangential_boundary", "value": tang, "limit": 1e-12, "passed": tang <= 1e-12})

    resid = 0.0
    for pol in (1, 2):
        for j in (1, 2, 3):
            rep = check_mode_pde(ModeIndex(j, 1.7, 0.3, pol), d)
            resid = max(resid, rep.helmholtz, rep.divergence)
    checks.append({"name": "pde_residual", "value": resid, "limit": 1e-6, "passed": resid <= 1e-6})

    cfg = CavityConfig(1.49, 1.3, 0.2)
    rel = float(abs(numeric_golden_rule(cfg) / golden_rule_rate(cfg) - 1.0))
    checks.append({"name": "numeric_golden_rule", "value": rel, "limit": 0.01, "passed": rel <= 0.01})
    return checks
