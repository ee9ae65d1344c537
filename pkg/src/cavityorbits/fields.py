"""Dipole fields, the one-mirror image field and the damping rates built from them.

Fields are complex amplitudes in units of ``d k^3 / (4 pi eps)``; positions
are in units of ``1/k`` with ``k = n k0`` inside the medium. Rates are in
units of the unbounded-medium rate W0.
"""
from __future__ import annotations

import numpy as np


def _check_action(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("action S must be positive")
    return s


def direct_field(d_hat, r) -> np.ndarray:
    """Field of a unit oscillating dipole ``d_hat`` at displacement ``r``.

    E0 = {(r x d) x r / kr + [d - 3 r (r.d)] (i/(kr)^2 - 1/(kr)^3)} exp(i kr)
    """
    d_hat = np.asarray(d_hat, dtype=float)
    r = np.asarray(r, dtype=float)
    rho = float(np.linalg.norm(r))
    if rho == 0.0:
        raise ValueError("field point coincides with the dipole")
    d_hat = d_hat / np.linalg.norm(d_hat)
    r_hat = r / rho
    u = float(r_hat @ d_hat)
    far = np.cross(np.cross(r_hat, d_hat), r_hat) / rho
    near = (d_hat - 3.0 * r_hat * u) * (1j / rho**2 - 1.0 / rho**3)
    return (far + near) * np.exp(1j * rho)


def image_field(s):
    """Projection on the dipole axis of the field returned by one mirror.

    ``s`` is the round-trip action ``2 n k0 l`` for an atom at distance ``l``.
    """
    s = _check_action(s)
    out = -(1.0 / s + 1j / s**2 - 1.0 / s**3) * np.exp(1j * s)
    return complex(out) if out.ndim == 0 else out


def rate_from_fields(returning_projection):
    """Damping rate from the returning field: ``1 + (3/2) Im(d . E_ret)``.

    The ``1`` is the self-field term, ``(3/2) * 2/3``.
    """
    out = 1.0 + 1.5 * np.imag(returning_projection)
    return float(out) if np.ndim(out) == 0 else out


def one_mirror_rate_exact(s):
    """``1 - (3/2)[sin S/S + cos S/S^2 - sin S/S^3]`` for a dipole parallel to one mirror."""
    s = _check_action(s)
    with np.errstate(invalid="ignore", divide="ignore"):
        bracket = np.sin(s) / s + np.cos(s) / s**2 - np.sin(s) / s**3
    # series 2/3 - 2 S^2/15 + S^4/140 avoids the 1/S^3 cancellation
    small = s < 1e-2
    bracket = np.where(small, 2.0 / 3.0 - 2.0 * s**2 / 15.0 + s**4 / 140.0, bracket)
    out = 1.0 - 1.5 * bracket
    return float(out) if out.ndim == 0 else out


def one_mirror_rate_semiclassical(s):
    """Far-zone one-mirror rate ``1 - (3/2) sin S / S``."""
    s = _check_action(s)
    out = 1.0 - 1.5 * np.sin(s) / s
    return float(out) if out.ndim == 0 else out


def near_field_bound(s):
    """Upper bound ``(3/2)(1/S^2 + 1/S^3)`` on ``|exact - semiclassical|``."""
    s = _check_action(s)
    return 1.5 * (1.0 / s**2 + 1.0 / s**3)


def run_field_checks(seed: int = 0) -> list[dict]:
    """Numerical checks of the field-level identities, as pass/fail records."""
    rng = np.random.default_rng(seed)
    s = np.linspace(0.1, 100.0, 2000)
    checks = []

    err = float(np.max(np.abs(rate_from_fields(image_field(s)) - one_mirror_rate_exact(s))))
    checks.append({"name": "image_field_identity", "value": err, "limit": 1e-12, "passed": err <= 1e-12})

    s_all = np.concatenate([np.geomspace(1e-4, 0.1, 200), s])
    gap = np.abs(one_mirror_rate_exact(s_all) - one_mirror_rate_semiclassical(s_all))
    excess = float(np.max(gap - near_field_bound(s_all)))
    checks.append({"name": "near_field_bound", "value": excess, "limit": 0.0, "passed": excess <= 0.0})

    dirs = rng.normal(size=(100, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    d_hat = np.array([1.0, 0.0, 0.0])
    dev = max(abs(float(np.imag(d_hat @ direct_field(d_hat, 1e-3 * v))) - 2.0 / 3.0) for v in dirs)
    checks.append({"name": "direct_field_limit", "value": dev, "limit": 1e-6, "passed": dev <= 1e-6})

    tiny = one_mirror_rate_exact(1e-6)
    rates = one_mirror_rate_exact(s_all)
    ok = tiny < 1e-9 and bool(np.all(rates >= 0.0))
    checks.append({"name": "quench", "value": float(tiny), "limit": 1e-9, "passed": ok})
    return checks
