"""Unit conversion helpers.

Everything internal is SI (m, s, rad/s, J, V, W). The helpers below convert
the interface units used in files and on the command line.
"""

import numpy as np

import scipy.constants as const

TWO_PI = 2.0 * np.pi


def um_to_m(x):
    return np.asarray(x, dtype=float) * 1e-6


def m_to_um(x):
    return np.asarray(x, dtype=float) * 1e6


def mhz_to_rad_s(f):
    """Frequency in MHz to angular frequency in rad/s."""
    return TWO_PI * np.asarray(f, dtype=float) * 1e6


def rad_s_to_mhz(w):
    return np.asarray(w, dtype=float) / (TWO_PI * 1e6)


def khz_to_rad_s(f):
    return TWO_PI * np.asarray(f, dtype=float) * 1e3


def rad_s_to_khz(w):
    return np.asarray(w, dtype=float) / (TWO_PI * 1e3)


def mev_to_joule(e):
    return np.asarray(e, dtype=float) * 1e-3 * const.e


def joule_to_mev(e):
    return np.asarray(e, dtype=float) / (1e-3 * const.e)


def db_to_fraction(db):
    """Power transmission fraction for a loss of `db` decibels."""
    return 10.0 ** (-np.asarray(db, dtype=float) / 10.0)
