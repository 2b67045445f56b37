"""Physical constants (CODATA 2018 via scipy) and unit helpers."""

from scipy import constants as _sc

E_CHARGE = _sc.e
HBAR = _sc.hbar
H_PLANCK = _sc.h
M_ELECTRON = _sc.m_e
EPS0 = _sc.epsilon_0
C_LIGHT = _sc.c

# 1 e*Angstrom in C*m
E_ANGSTROM = E_CHARGE * 1e-10

TWO_PI = 2.0 * 3.141592653589793

LENGTH_UNITS = {
    "m": 1.0,
    "mm": 1e-3,
    "um": 1e-6,
    "µm": 1e-6,
    "nm": 1e-9,
    "pm": 1e-12,
}


def eA_to_si(mu_eA):
    """Dipole moment in e*Angstrom -> C*m."""
    return mu_eA * E_ANGSTROM


def si_to_eA(mu):
    return mu / E_ANGSTROM
