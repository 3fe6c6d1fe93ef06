"""Spectral densities, infrared-order estimation and convolution
threshold checks for Wick powers of the field.

Witness computations use the closed-form symmetric-power matrix elements
of the scaling families H_n(p) = n^{s/2} h(n p), which reduce every
density to radial quadrature and scale to n = 64 cheaply; battery checks
on generic finite-rank functionals go through the grid route of
:mod:`fockscope.weyl`.
"""

from __future__ import annotations

import numpy as np

from .fits import loglog_slope
from .grids import ConfigurationError
from .localization import mollifier_profile
from .quadrature import gauss_legendre, midpoint_nodes


# ----------------------------------------------------------------------
# radial witness machinery
# ----------------------------------------------------------------------

def radial_witness_profile(E, n_r=2000):
    """Normalized radial mollifier h with supp h in {|p| <= E} (s = 3).

    Returns (k nodes, weights, samples) with int |h|^2 d^3p = 1.
    """
    k, w = midpoint_nodes(0.0, E, n_r)
    h = mollifier_profile(k / E)
    norm2 = 4.0 * np.pi * np.sum(w * k ** 2 * h ** 2)
    return k, w, h / np.sqrt(norm2)


def sphere_area(d):
    """Surface area of the unit sphere S^{d-1}."""
    from math import gamma, pi
    return 2.0 * pi ** (d / 2.0) / gamma(d / 2.0)


def witness_density_phi1(n, beta, E, s=3, n_r=2000):
    """Density of the n-th scaling witness against the field phi+.

    phi_n^(1) = <H_n^{(n-1)} | . | H_n^{n}> gives |value(p)|^2 =
    n H_n(p)^2 / (2 omega(p)) massless; the density integral is done by
    radial quadrature after the exact n-scaling substitution.
    """
    k, w, h = radial_witness_profile(E, n_r)
    # int |p|^beta * n * H_n^2/(2|p|) d^sp = (n^{2-beta}/2) int |q|^{beta-1} h^2 d^sq
    base = sphere_area(s) * np.sum(w * k ** (beta - 1 + s - 1) * h ** 2)
    return 0.5 * n ** (2.0 - beta) * base


def witness_density_phi1_closed_form(n, eps, E, s=3, n_r=2000):
    """(n^eps / 2) int |p|^{1-eps} |h|^2 d^sp, the closed scaling law at
    beta = 2 - eps."""
    k, w, h = radial_witness_profile(E, n_r)
    integral = sphere_area(s) * np.sum(w * k ** (1.0 - eps + s - 1) * h ** 2)
    return 0.5 * n ** eps * integral


def witness_density_phi1_grid(n, beta, E, n_per_axis=32, s=3):
    """Honest 3-d midpoint evaluation of the phi1 witness density.

    The grid is rescaled with the witness (supp H_n shrinks like 1/n), so
    the relative quadrature error is n-independent.
    """
    if s != 3:
        raise ConfigurationError("grid witness evaluation implemented for s=3")
    from .grids import MomentumGrid
    grid = MomentumGrid(s=s, m=0.0, half_width=1.2 * E / n,
                        n_per_axis=n_per_axis)
    base = mollifier_profile(n * grid.abs_p / E)
    # normalize like the continuum profile: int |H_n|^2 = 1 up to grid error
    k, w, _ = radial_witness_profile(E)
    norm2 = 4.0 * np.pi * np.sum(w * k ** 2 * mollifier_profile(k / E) ** 2)
    H = n ** (s / 2.0) * base / np.sqrt(norm2)
    vals = grid.cell_weight * np.sum(
        grid.abs_p ** beta * n * H ** 2 / (2.0 * grid.omega))
    return float(vals)


def _radial_convolution_3d(k, w, f, g, out_k):
    """(f * g)(r) for radial profiles in 3 dimensions.

    Uses the shell formula (f*g)(r) = (2 pi / r) int ds s f(s)
    [G(r+s) - G(|r-s|)] with G the cumulative of t g(t).
    """
    t_cum = np.concatenate([[0.0], np.cumsum(w * k * g)])
    grid_edges = np.concatenate([[0.0], k + 0.5 * (k[1] - k[0])])

    def G(t):
        return np.interp(t, grid_edges, t_cum)

    out = np.zeros_like(out_k)
    for i, r in enumerate(out_k):
        if r <= 0:
            continue
        upper = G(r + k)
        lower = G(np.abs(r - k))
        out[i] = 2.0 * np.pi / r * np.sum(w * k * f * (upper - lower))
    return out


def _radial_convolution_d(k, w, f, g, out_k, d, n_theta=64):
    """(f * g)(r) for radial profiles in d >= 2 dimensions (angular rule)."""
    theta, wt = gauss_legendre(n_theta, 0.0, np.pi)
    sin_pow = np.sin(theta) ** (d - 2)
    pref = sphere_area(d - 1)
    out = np.zeros_like(out_k)
    for i, r in enumerate(out_k):
        rad = np.sqrt(np.maximum(
            r ** 2 + k[:, None] ** 2 - 2.0 * r * k[:, None]
            * np.cos(theta)[None, :], 0.0))
        gv = np.interp(rad, k, g, left=g[0], right=0.0)
        inner = (gv * (sin_pow * wt)[None, :]).sum(axis=1)
        out[i] = pref * np.sum(w * k ** (d - 1) * f * inner)
    return out


def witness_density_wickpower(n_power, m, beta, E, s=3, n_r=600,
                              normalize_falling=False):
    """Density of the scaling witness <H_m^{(m-n)}| :phi+^n~:(p) |H_m^{m}>.

    Reduced by the exact m-scaling to an m-independent radial integral
    over the n-fold convolution of u(k) = h(k)/sqrt(k); the returned
    value carries the full m-dependence m^{2n - s(n-1) - beta} times the
    falling factorial m!/(m-n)!.  ``normalize_falling`` replaces the
    falling factorial by its leading power m^n, which removes the known
    finite-size correction from growth-slope fits.
    """
    if n_power < 2:
        raise ValueError("use witness_density_phi1 for the linear field")
    if m < n_power:
        raise ValueError("witness needs m >= wick power")
    k, w, h = radial_witness_profile(E, n_r)
    u = h / np.sqrt(np.maximum(k, 1e-300))
    out_k = np.linspace(1e-6, n_power * E, 4 * n_r)
    dk = out_k[1] - out_k[0]
    u_out = np.interp(out_k, k, u, right=0.0)
    if s == 3:
        conv_fn = _radial_convolution_3d
    else:
        conv_fn = lambda kk, ww, f, g, ok: _radial_convolution_d(kk, ww, f, g, ok, s)
    conv = conv_fn(k, w, u, u, out_k)
    for _ in range(n_power - 2):
        conv = conv_fn(out_k, np.full_like(out_k, dk), conv, u_out, out_k)
    shape_integral = sphere_area(s) * np.sum(
        dk * out_k ** (beta + s - 1) * conv ** 2)
    # falling factorial m!/(m-n)! and the wick prefactor (2 pi)^{-s(n-1)}
    # reduced by scaling: prefactors independent of m are kept for level
    if normalize_falling:
        fall = float(m) ** n_power
    else:
        fall = 1.0
        for j in range(n_power):
            fall *= (m - j)
    scale = m ** (n_power * (s + 1) - 2 * (n_power - 1) * s - s - beta)
    pref = (2.0 * np.pi) ** (-s * (n_power - 1)) / 2.0 ** n_power
    return pref * fall * scale * shape_integral


def wick_threshold(n, s):
    """Convolution sufficiency threshold: density bounded for
    beta > 2 - (s-2)(n-1)."""
    return 2.0 - (s - 2.0) * (n - 1.0)


def wick2_threshold_check(n, s, beta, E=2.0, m_values=(8, 16, 32),
                          slope_tol=0.05):
    """Threshold condition for :phi+^n~: square-integrability at weight
    |p|^beta, with numeric confirmation from the witness growth slope.

    Returns a dict with the boolean condition, its margin, the fitted
    witness slope and whether the numeric evidence agrees (slope <=
    slope_tol exactly when the condition holds on these witnesses).
    """
    if s < 3 or n < 2:
        raise ConfigurationError("threshold check needs s >= 3, n >= 2")
    thr = wick_threshold(n, s)
    condition = beta > thr
    vals = [witness_density_wickpower(n, mv, beta, E, s=s,
                                      normalize_falling=True)
            for mv in m_values]
    slope = loglog_slope(m_values, vals)
    bounded = slope <= slope_tol
    return {
        "condition": condition,
        "threshold": thr,
        "margin": beta - thr,
        "witness_slope": slope,
        "bounded_evidence": bounded,
        "agrees": bounded == condition or abs(beta - thr) < 0.05,
    }


# ----------------------------------------------------------------------
# infrared-order estimation
# ----------------------------------------------------------------------

class SpectralDensityScan:
    """Scan of witness densities over (beta, n) with growth slopes."""

    def __init__(self, witness, betas, n_values, values):
        self.witness = witness
        self.betas = list(betas)
        self.n_values = list(n_values)
        self.values = values          # shape (len(betas), len(n_values))
        self.slopes = [loglog_slope(n_values, row) for row in values]

    def as_rows(self):
        rows = []
        for b, row, sl in zip(self.betas, self.values, self.slopes):
            for nv, val in zip(self.n_values, row):
                rows.append((self.witness, b, nv, val, sl))
        return rows


def estimate_order(field_power, witness_family, n_values, betas,
                   E=2.0, s=3, slope_tol=0.05):
    """Bracket the infrared order from witness growth slopes.

    The order is the beta at which the fitted log-growth slope of the
    density against log n crosses zero; a bracketing interval
    [last beta with slope > tol, first beta with slope < -tol] is
    returned, never a point value.
    """
    betas = sorted(betas)
    if len(n_values) < 3:
        raise ConfigurationError("need at least three witness sizes "
                                 "for a stable slope fit")
    values = []
    for b in betas:
        if field_power == 1:
            if witness_family != "phi1":
                raise ConfigurationError("field power 1 uses witness phi1")
            row = [witness_density_phi1(nv, b, E, s=s) for nv in n_values]
        else:
            if witness_family != "phi2":
                raise ConfigurationError("higher powers use witness phi2")
            row = [witness_density_wickpower(field_power, nv, b, E, s=s,
                                             normalize_falling=True)
                   for nv in n_values]
        values.append(row)
    scan = SpectralDensityScan(witness_family, betas, n_values, values)

    lo = None
    hi = None
    for b, sl in zip(scan.betas, scan.slopes):
        if sl > slope_tol:
            lo = b
        if sl < -slope_tol and hi is None:
            hi = b
    if lo is None and hi is not None:
        bracket = (0.0, hi)
    elif lo is None and hi is None:
        raise ConfigurationError("no slope crossing found in the beta scan")
    elif hi is None:
        raise ConfigurationError("witness growth never stabilized; "
                                 "extend the beta scan upward")
    else:
        bracket = (lo, hi)
    return {"bracket": bracket, "scan": scan}


def upper_scan_bounded(field_power, n_values, betas, E=2.0, s=4,
                       slope_tol=0.05):
    """Certify bounded witness density at every scanned beta (order 0)."""
    out = {}
    for b in betas:
        vals = [witness_density_wickpower(field_power, nv, b, E, s=s,
                                          normalize_falling=True)
                for nv in n_values]
        out[b] = loglog_slope(n_values, vals)
    return {"slopes": out,
            "all_bounded": all(sl <= slope_tol for sl in out.values())}


# ----------------------------------------------------------------------
# grid batteries (energy bound, sup transfer, n-fold densities)
# ----------------------------------------------------------------------

def phi_plus_density_functional(phi, beta):
    """sum_cells w |p|^beta |phi(phi+~(p))|^2 for a finite-rank functional
    on a cell-indicator mode basis."""
    from .weyl import wick_field_density
    basis = phi.terms[0][1].basis
    grid = basis.grid
    cells = set()
    for _, bra, ket in phi.terms:
        for st in (bra, ket):
            for occ in st.amps:
                for kmode, _ in occ:
                    c = int(np.argmax(np.abs(st.basis.modes[kmode - 1].amps)))
                    cells.add(c)
                    cells.add(int(grid._neg_index[c]))
    total = 0.0
    for c in sorted(cells):
        val = phi.evaluate_me(
            lambda bra, ket, cc=c: wick_field_density(bra, ket, 1, cc))
        total += grid.cell_weight * grid.abs_p[c] ** beta * abs(val) ** 2
    return float(total)


def energy1_product_density(grid, u, v, k, l, n, E):
    """n-fold mollified density between symmetric product states.

    Psi_1 = u^{(x) k} (normalized), Psi_2 = v^{(x) l}; the weighted
    integral int prod |p_i|^2 |<Psi_1| :prod phi+~(p_i): |Psi_2>|^2 is
    evaluated by expanding the 2^n creator/annihilator assignments into
    products of single-momentum integrals.  Returns (value, (2E)^n).
    """
    if (k - l + n) % 2 != 0 or not (abs(k - l) <= n):
        return 0.0, (2.0 * E) ** n
    a = (n + k - l) // 2          # creators pairing against Psi_1
    b = n - a
    if a > k or b > l:
        return 0.0, (2.0 * E) ** n
    w = grid.cell_weight
    weight = grid.abs_p ** 2 / (2.0 * grid.omega)
    uu = w * np.sum(weight * np.abs(u.amps) ** 2)
    vv_neg = w * np.sum(weight * np.abs(v.amps[grid._neg_index]) ** 2)
    uv = w * np.sum(weight * np.conj(u.amps) *
                    np.conj(v.amps[grid._neg_index]))
    ov = u.inner(v)

    import math
    from itertools import combinations as comb
    pref = math.sqrt(math.factorial(k) / math.factorial(k - a)) \
        * math.sqrt(math.factorial(l) / math.factorial(l - b))
    total = 0.0
    subsets = list(comb(range(n), a))
    for S in subsets:
        for Sp in subsets:
            term = pref ** 2 * ov ** (k - a) * np.conj(ov ** (k - a))
            for i in range(n):
                in_s = i in S
                in_sp = i in Sp
                if in_s and in_sp:
                    term *= uu
                elif not in_s and not in_sp:
                    term *= vv_neg
                elif in_s and not in_sp:
                    term *= uv
                else:
                    term *= np.conj(uv)
            total += term.real
    norm = (u.norm() ** k * v.norm() ** l) ** 2
    return float(total / norm), (2.0 * E) ** n


def sup_transfer_check(rank_ones, mixtures, beta):
    """Sup over convex/absolute mixtures is attained on rank-one terms.

    ``rank_ones`` are normalized finite-rank functionals with a single
    term; ``mixtures`` combine them with coefficients of total weight 1.
    Returns the worst excess of a mixture density over the rank-one sup.
    """
    sup_rank_one = max(phi_plus_density_functional(phi, beta)
                       for phi in rank_ones)
    worst = 0.0
    for mix in mixtures:
        val = phi_plus_density_functional(mix, beta)
        worst = max(worst, val - sup_rank_one)
    return {"sup_rank_one": sup_rank_one, "worst_excess": worst}


def phi_square_density_functional(phi, beta):
    """sum over the momentum-transfer lattice of w |p|^beta
    |phi(:phi+^2~:(p))|^2 for a finite-rank functional on indicator
    modes.

    Candidate transfer points are the pairwise sums/differences of the
    occupied cells and their negatives; all other matrix elements vanish.
    """
    from .weyl import wick_field_density
    basis = phi.terms[0][1].basis
    grid = basis.grid
    cells = set()
    for _, bra, ket in phi.terms:
        for st in (bra, ket):
            for occ in st.amps:
                for kmode, _ in occ:
                    c = int(np.argmax(np.abs(st.basis.modes[kmode - 1].amps)))
                    cells.add(c)
                    cells.add(int(grid._neg_index[c]))
    cells = sorted(cells)
    transfers = {}
    for c1 in cells:
        for c2 in cells:
            p = grid.points[c1] + grid.points[c2]
            transfers[tuple(np.round(p, 12))] = p
        for c2 in cells:
            p = grid.points[c1] - grid.points[c2]
            transfers[tuple(np.round(p, 12))] = p
    total = 0.0
    for p in transfers.values():
        val = phi.evaluate_me(
            lambda bra, ket, pp=p: wick_field_density(bra, ket, 2, pp))
        total += grid.cell_weight * np.linalg.norm(p) ** beta \
            * abs(val) ** 2
    return float(total)


def spectral_density(target, field_power, beta, n=None, E=2.0, s=3):
    """Dispatch: sum_cells w |p|^beta |phi(field density at p)|^2.

    ``target`` is a finite-rank functional (grid route, field powers 1
    and 2) or a witness label 'phi1'/'phi2' with the scaling index ``n``
    (closed-form route).
    """
    if isinstance(target, str):
        if n is None:
            raise ValueError("witness route needs the scaling index n")
        if target == "phi1":
            if field_power != 1:
                raise ValueError("witness phi1 pairs with the linear field")
            return witness_density_phi1(n, beta, E, s=s)
        if target == "phi2":
            return witness_density_wickpower(field_power, n, beta, E, s=s)
        raise ValueError("unknown witness label %r" % target)
    if field_power == 1:
        return phi_plus_density_functional(target, beta)
    if field_power == 2:
        return phi_square_density_functional(target, beta)
    raise ValueError("functional route implements field powers 1 and 2; "
                     "use witness labels for higher powers")
