"""Decay-fit protocol shared by the correlation and dispersion checks.

Least squares on log|value| against log x (power law) or against x
(exponential rate), discarding samples below 1e-13 in absolute value.
"""

from __future__ import annotations

import numpy as np

DISCARD_FLOOR = 1e-13


def _mask(xs, values):
    xs = np.asarray(xs, dtype=float)
    vals = np.abs(np.asarray(values))
    keep = vals > DISCARD_FLOOR
    return xs[keep], vals[keep]


def fit_power_law(xs, values):
    """Fit |value| ~ c * x**p; returns (exponent p, log-prefactor)."""
    x, v = _mask(xs, values)
    if len(x) < 2:
        raise ValueError("not enough samples above discard floor for a fit")
    coeffs = np.polyfit(np.log(x), np.log(v), 1)
    return coeffs[0], coeffs[1]


def fit_exponential_rate(xs, values):
    """Fit |value| ~ c * exp(-rate * x); returns (rate, log-prefactor).

    The returned rate is positive for decaying data.
    """
    x, v = _mask(xs, values)
    if len(x) < 2:
        raise ValueError("not enough samples above discard floor for a fit")
    coeffs = np.polyfit(x, np.log(v), 1)
    return -coeffs[0], coeffs[1]


def loglog_slope(xs, values):
    """Slope of log|value| vs log x (alias used by growth-law scans)."""
    return fit_power_law(xs, values)[0]
