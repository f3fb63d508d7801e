"""Conversions from laboratory units to atomic units.

Pulse areas are dimensionless products of atomic-unit quantities, so every
physical input passes through one of these helpers first.
"""
from scipy import constants

AU_TIME_S: float = constants.physical_constants['atomic unit of time'][0]
AU_FIELD_V_PER_M: float = constants.physical_constants['atomic unit of electric field'][0]
AU_DIPOLE_C_M: float = constants.physical_constants['atomic unit of electric dipole mom.'][0]
HARTREE_INVERSE_METER: float = constants.physical_constants['hartree-inverse meter relationship'][0]
# 1 D = 1e-21 / c  C m
DEBYE_C_M: float = 1e-21 / constants.c


def ps_to_au(picoseconds: float) -> float:
    return picoseconds * constants.pico / AU_TIME_S


def v_per_cm_to_au(field: float) -> float:
    return field * 100.0 / AU_FIELD_V_PER_M


def debye_to_au(dipole: float) -> float:
    return dipole * DEBYE_C_M / AU_DIPOLE_C_M


def wavenumber_to_au(wavenumber: float) -> float:
    """Convert an energy given in cm^-1 (for example a rotational constant) to hartree."""
    return wavenumber * 100.0 / HARTREE_INVERSE_METER
