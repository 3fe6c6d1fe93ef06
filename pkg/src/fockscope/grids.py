"""Discretized single-particle momentum space.

A :class:`MomentumGrid` is a uniform midpoint lattice on [-L, L]^s; the
midpoint convention with an even number of points per axis guarantees that
p = 0 is never sampled, which protects omega^{-1/2} factors in the
massless case.  Integration is the Riemann midpoint sum.
"""

from __future__ import annotations

import hashlib

import numpy as np


class ConfigurationError(ValueError):
    """Raised when grid or family parameters are inconsistent."""


class MomentumGrid:
    """Uniform midpoint lattice in momentum space.

    Parameters
    ----------
    s : int
        Spatial dimension (1, 2 or 3).
    m : float
        Mass, >= 0 in natural units.
    half_width : float
        Momentum cutoff L; cells midpoint-tile [-L, L]^s.
    n_per_axis : int
        Points per axis; must be even so no cell midpoint sits at p = 0.
    """

    def __init__(self, s, m, half_width, n_per_axis):
        if s not in (1, 2, 3):
            raise ConfigurationError("spatial dimension must be 1, 2 or 3")
        if m < 0:
            raise ConfigurationError("mass must be nonnegative")
        if half_width <= 0:
            raise ConfigurationError("half_width must be positive")
        if n_per_axis < 2 or n_per_axis % 2 != 0:
            raise ConfigurationError("n_per_axis must be even and >= 2")
        self.s = s
        self.m = float(m)
        self.half_width = float(half_width)
        self.n_per_axis = int(n_per_axis)

        self.dp = 2.0 * self.half_width / self.n_per_axis
        axis = -self.half_width + (np.arange(self.n_per_axis) + 0.5) * self.dp
        self.axis = axis
        mesh = np.meshgrid(*([axis] * s), indexing="ij")
        self.points = np.stack([mm.ravel() for mm in mesh], axis=1)
        self.n_cells = self.points.shape[0]
        self.cell_weight = self.dp ** s
        self.abs_p = np.linalg.norm(self.points, axis=1)
        self.omega = np.sqrt(self.abs_p ** 2 + self.m ** 2)
        if self.m == 0.0 and np.any(self.omega <= 0):
            raise ConfigurationError("massless grid sampled p = 0")

        # index of the cell containing -p, for the conjugation J
        self._neg_index = self._build_negation_index()
        # dual configuration lattice (exact discrete Plancherel partner)
        self.dx = np.pi / self.half_width
        x_axis = (np.arange(self.n_per_axis) - self.n_per_axis // 2) * self.dx
        self.x_axis = x_axis
        xmesh = np.meshgrid(*([x_axis] * s), indexing="ij")
        self.x_points = np.stack([mm.ravel() for mm in xmesh], axis=1)
        self.x_weight = self.dx ** s

    def _build_negation_index(self):
        n = self.n_per_axis
        rev = n - 1 - np.arange(n)
        idx = np.arange(self.n_cells).reshape((n,) * self.s)
        for ax in range(self.s):
            idx = np.take(idx, rev, axis=ax)
        return idx.ravel()

    # -- integration -----------------------------------------------------

    def inner(self, f, g):
        """<f|g> = sum_cells conj(f) g * cell_weight."""
        return self.cell_weight * np.vdot(f, g)

    def norm(self, f):
        return float(np.sqrt(abs(self.inner(f, f).real)))

    def conjugate_J(self, f):
        """J f (complex conjugation in configuration space): conj(f(-p))."""
        return np.conj(np.asarray(f))[self._neg_index]

    def translation_phase(self, x0, xvec):
        """Phase array exp(i(omega x^0 - p.x)) over cells."""
        xvec = np.atleast_1d(np.asarray(xvec, dtype=float))
        if xvec.shape != (self.s,):
            raise ConfigurationError("translation vector has wrong dimension")
        return np.exp(1j * (self.omega * x0 - self.points @ xvec))

    def cell_index(self, coords):
        """Index of the cell whose midpoint is closest to ``coords``."""
        coords = np.atleast_1d(np.asarray(coords, dtype=float))
        d = np.linalg.norm(self.points - coords, axis=1)
        return int(np.argmin(d))

    def digest(self):
        """Stable hash of the grid geometry, for provenance blocks."""
        h = hashlib.sha256()
        h.update(repr((self.s, self.m, self.half_width,
                       self.n_per_axis)).encode())
        h.update(np.ascontiguousarray(self.omega).tobytes())
        return h.hexdigest()[:16]

    def __repr__(self):
        return ("MomentumGrid(s=%d, m=%g, half_width=%g, n_per_axis=%d)"
                % (self.s, self.m, self.half_width, self.n_per_axis))


class SPVector:
    """Complex single-particle wavefunction sampled on a MomentumGrid."""

    def __init__(self, grid, amps):
        amps = np.asarray(amps, dtype=complex)
        if amps.shape != (grid.n_cells,):
            raise ConfigurationError("amplitude array does not match grid")
        self.grid = grid
        self.amps = amps

    # -- algebra ----------------------------------------------------------

    def __add__(self, other):
        self._check(other)
        return SPVector(self.grid, self.amps + other.amps)

    def __sub__(self, other):
        self._check(other)
        return SPVector(self.grid, self.amps - other.amps)

    def __mul__(self, scalar):
        return SPVector(self.grid, self.amps * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if other.grid is not self.grid:
            raise ConfigurationError("vectors live on different grids")

    def inner(self, other):
        self._check(other)
        return self.grid.inner(self.amps, other.amps)

    def norm(self):
        return self.grid.norm(self.amps)

    def normalized(self):
        n = self.norm()
        if n == 0:
            raise ConfigurationError("cannot normalize the zero vector")
        return SPVector(self.grid, self.amps / n)

    # -- operations from the contract --------------------------------------

    def sobolev_norm(self, l):
        """|| f ||_{2,l} = (sum (1+|p|^2)^l |f|^2 w)^{1/2}; equals the
        plain L2 norm at l = 0."""
        if l < 0:
            raise ValueError("Sobolev order must be nonnegative")
        g = self.grid
        val = g.cell_weight * np.sum(
            (1.0 + g.abs_p ** 2) ** l * np.abs(self.amps) ** 2)
        return float(np.sqrt(val))

    def translate(self, x0, xvec=None):
        """Apply exp(i(omega x^0 - p.x)); norm preserving."""
        if xvec is None:
            xvec = np.zeros(self.grid.s)
        return SPVector(self.grid,
                        self.grid.translation_phase(x0, xvec) * self.amps)

    def conjugate_J(self):
        return SPVector(self.grid, self.grid.conjugate_J(self.amps))

    def is_J_invariant(self, tol=1e-10):
        d = self.conjugate_J().amps - self.amps
        return self.grid.norm(d) <= tol * max(1.0, self.norm())

    def multiply(self, profile):
        """Pointwise multiplication by an array or callable of p."""
        if callable(profile):
            profile = profile(self.grid.points)
        return SPVector(self.grid, self.amps * np.asarray(profile))


def indicator_vector(grid, cell, normalized=True):
    """Unit (or raw) indicator of a single grid cell."""
    amps = np.zeros(grid.n_cells, dtype=complex)
    amps[cell] = 1.0
    v = SPVector(grid, amps)
    return v.normalized() if normalized else v


def random_vector(grid, rng, support_mask=None):
    """Random complex vector, optionally restricted to a cell mask."""
    amps = rng.standard_normal(grid.n_cells) + 1j * rng.standard_normal(grid.n_cells)
    if support_mask is not None:
        amps = amps * support_mask
    return SPVector(grid, amps).normalized()


def pair_correlation_lattice(f, g, x0, xvec):
    """<f | U(x) g> on the grid (valid while |x| stays below pi/dp)."""
    return f.inner(g.translate(x0, xvec))


def grid_cells_below_energy(grid, energy):
    """Indices of cells with omega <= energy."""
    return np.nonzero(grid.omega <= energy)[0]
