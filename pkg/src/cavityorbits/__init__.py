"""Spontaneous emission in a planar dielectric cavity, exact and through closed orbits.

Rates are in units of the vacuum rate and lengths in units of the cavity
scale ``d0`` (so ``k0 = 2 pi``).
"""
from .cavity import (
    CavityConfig,
    RateCurve,
    background_rate,
    golden_rule_curve,
    golden_rule_rate,
    mode_count,
    sample_rate_curve,
    uniform_grid,
)
from .fields import (
    direct_field,
    image_field,
    one_mirror_rate_exact,
    one_mirror_rate_semiclassical,
    rate_from_fields,
    run_field_checks,
)
from .modes import ModeIndex, check_mode_pde, mode_function, mode_overlap, numeric_golden_rule, run_mode_checks
from .orbits import (
    ClosedOrbit,
    Family,
    enumerate_orbits,
    first_orbits,
    group_degenerate,
    predicted_peaks,
    semiclassical_rate,
)
from .spectral import (
    Peak,
    Spectrum,
    analyze,
    find_peaks,
    match_peaks,
    modified_fourier_transform,
    r_sweep,
    validate_sampling,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
