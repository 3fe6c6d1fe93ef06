"""Klein-Gordon wavepackets, dispersion fits, velocity-support splits,
free-field asymptotic-state stabilization and detector integrals.

The free theory makes the late-time machinery exact: smeared creation
operators stabilize once the time-averaging window drops below the mass
gap, so every construction (h_T averages, velocity cones, smooth
spacetime cutoffs) is exercised as a numerical object without implying
any interacting claim.
"""

from __future__ import annotations

import numpy as np

from .grids import ConfigurationError
from .localization import mollifier_profile, smooth_step
from .quadrature import gauss_legendre


class KGWavepacket:
    """Radial positive-energy wavepacket on a momentum grid.

    ``profile`` maps |p| to the smooth amplitude; its support must stay
    clear of the grid cutoff (aliasing guard).  Configuration-space
    samples are produced by momentum quadrature refined for the requested
    times and radii, so late-time dispersion is not limited by the
    carrier lattice.
    """

    def __init__(self, grid, profile, support_radius):
        if support_radius > grid.half_width - 2.0 * grid.dp:
            raise ConfigurationError(
                "wavepacket support within two cells of the cutoff")
        self.grid = grid
        self.profile = profile
        self.support_radius = float(support_radius)
        self._cache = {}

    def amps_on_grid(self):
        return self.profile(self.grid.abs_p).astype(complex)

    def grid_norm(self):
        amps = self.amps_on_grid()
        return float(np.sqrt(self.grid.cell_weight
                             * np.sum(np.abs(amps) ** 2)))

    def propagate_grid(self, t):
        """Exact phase multiplication on the lattice (unitary)."""
        return np.exp(-1j * self.grid.omega * t) * self.amps_on_grid()

    def config_samples(self, t, radii, n_quad=None):
        """f(t, r) by radial momentum quadrature (s = 3).

        f(t, x) = (2 pi)^{-3/2} int e^{-i omega t + i p x} f~(p) d^3p
        reduces to a 1-d oscillatory integral for radial profiles; the
        node count follows the total phase variation over the support.
        """
        if self.grid.s != 3:
            raise ConfigurationError("radial propagation implemented for s=3")
        if n_quad is None:
            r_max = float(np.max(np.abs(radii))) if len(radii) else 0.0
            om_max = np.sqrt(self.support_radius ** 2 + self.grid.m ** 2)
            n_quad = max(800, int((self.support_radius * r_max
                                   + om_max * abs(t)) / 2.0))
        key = (round(float(t), 12), len(radii), float(radii[0]),
               float(radii[-1]), n_quad)
        if key in self._cache:
            return self._cache[key]
        k, w = gauss_legendre(n_quad, 0.0, self.support_radius)
        om = np.sqrt(k ** 2 + self.grid.m ** 2)
        f_k = self.profile(k)
        phase_t = np.exp(-1j * om * t)
        radii = np.asarray(radii, dtype=float)
        out = np.empty(len(radii), dtype=complex)
        small = radii < 1e-12
        if np.any(~small):
            rr = radii[~small]
            sin_kr = np.sin(np.outer(rr, k))
            out[~small] = (sin_kr @ (w * k * f_k * phase_t)) / rr
        if np.any(small):
            out[small] = np.sum(w * k ** 2 * f_k * phase_t)
        out *= 4.0 * np.pi / (2.0 * np.pi) ** 1.5
        self._cache[key] = out
        return out

    def sup_norm(self, t, n_r=500, margin=6.0):
        radii = np.linspace(0.0, abs(t) + margin, n_r)
        return float(np.max(np.abs(self.config_samples(t, radii))))

    def l1_norm(self, t, n_r=800, margin=6.0):
        r_max = abs(t) + margin
        radii, w = gauss_legendre(n_r, 0.0, r_max)
        vals = np.abs(self.config_samples(t, radii))
        return float(4.0 * np.pi * np.sum(w * radii ** 2 * vals))


def dispersion_exponents(packet, t_values):
    """Fitted decay/growth exponents of sup|f_t| and int |f_t| d^3x."""
    from .fits import fit_power_law
    sups = [packet.sup_norm(t) for t in t_values]
    l1s = [packet.l1_norm(t) for t in t_values]
    sup_expo, _ = fit_power_law(t_values, sups)
    l1_expo, _ = fit_power_law(t_values, l1s)
    return {"sup_exponent": sup_expo, "l1_exponent": l1_expo,
            "sup_values": sups, "l1_values": l1s}


class HRCreationSpec:
    """Creation-operator data: wavepacket, slow time average, exponent.

    s(T) = T^nu; h_T(t) = h((t - T)/s(T)) / s(T) keeps int h_T = int h.
    The time profile is specified by its transform, a smooth bump with
    h~(0) = (2 pi)^{-2}.
    """

    def __init__(self, packet, nu, freq_support, n_time_quad=300):
        if not (0.0 < nu < 1.0):
            raise ConfigurationError("nu must lie in (0, 1)")
        self.packet = packet
        self.nu = float(nu)
        self.freq_support = float(freq_support)
        self.n_time_quad = n_time_quad

    def s_of(self, T):
        return T ** self.nu

    def h_tilde(self, xi):
        """Transform of the time average: bump of the given support with
        h~(0) = (2 pi)^{-2}."""
        base = mollifier_profile(np.asarray(xi, dtype=float)
                                 / self.freq_support)
        return base * (2.0 * np.pi) ** -2 / mollifier_profile(0.0)

    def h_values(self, u):
        """h(u) by quadrature of the inverse transform (even profile)."""
        xi, w = gauss_legendre(self.n_time_quad, 0.0, self.freq_support)
        hv = self.h_tilde(xi)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        vals = (2.0 / np.sqrt(2.0 * np.pi)) \
            * (np.cos(np.outer(u, xi)) @ (w * hv))
        return vals

    def velocity_interval(self, k_lo, k_hi):
        m = self.packet.grid.m
        return (k_lo / np.sqrt(k_lo ** 2 + m ** 2),
                k_hi / np.sqrt(k_hi ** 2 + m ** 2))


def velocity_split(spec, delta, T, k_lo, k_hi, n_r=None, n_t=40):
    """Split f_T into the cone part and the tail, returning the tail's
    spacetime L1 mass.

    f_T(x) = h_T(x^0) f(x^0, x); the smooth cutoff chi_delta(x/T) equals
    1 on the velocity support of the packet and 0 outside its
    delta-enlargement.  The integration box grows with the horizon,
    |x| <= 2 T + support + margin; mass beyond it is controlled by the
    packet's integrated far tail.
    """
    v_lo, v_hi = spec.velocity_interval(k_lo, k_hi)
    if delta <= 0:
        raise ConfigurationError("delta must be positive")
    if v_lo - delta <= 0 and v_lo > 1e-9:
        raise ConfigurationError(
            "delta swallows the lower edge of the velocity cone")

    def chi_delta(speed):
        inner_lo, inner_hi = v_lo, v_hi
        up = smooth_step((speed - (inner_lo - delta)) / delta) \
            if v_lo > 1e-9 else np.ones_like(speed)
        down = smooth_step(((inner_hi + delta) - speed) / delta)
        return up * down

    s_T = spec.s_of(T)
    t_nodes, t_w = gauss_legendre(n_t, T - s_T, T + s_T)
    h_vals = spec.h_values((t_nodes - T) / s_T) / s_T
    r_max = 2.0 * T + spec.packet.support_radius + 6.0
    if n_r is None:
        n_r = max(700, int(0.6 * spec.packet.support_radius * r_max))
    tail = 0.0
    check_point = None
    for tn, tw, hv in zip(t_nodes, t_w, h_vals):
        radii, rw = gauss_legendre(n_r, 0.0, r_max)
        f_vals = spec.packet.config_samples(tn, radii)
        # chi_delta is evaluated at x / T; with t = T (1 + O(T^{nu-1}))
        # this is the standard cone cutoff
        cut = chi_delta(radii / T)
        tail += tw * abs(hv) * 4.0 * np.pi * np.sum(
            rw * radii ** 2 * (1.0 - cut) * np.abs(f_vals))
        if check_point is None:
            # pointwise reconstruction f_hat + f_check = f_T
            probe = f_vals[: 5] * hv
            check_point = np.max(np.abs(
                probe * cut[:5] + probe * (1 - cut[:5]) - probe))
    return {"tail_l1": float(tail), "reconstruction_defect":
            float(check_point), "velocity_interval": (v_lo, v_hi)}


def velocity_tail_slope(spec, delta, T_values, k_lo, k_hi):
    from .fits import fit_power_law
    tails = [velocity_split(spec, delta, T, k_lo, k_hi)["tail_l1"]
             for T in T_values]
    slope, _ = fit_power_law(T_values, tails)
    return {"tails": tails, "slope": slope}


# ----------------------------------------------------------------------
# free-field asymptotic states on the truncated Fock space
# ----------------------------------------------------------------------

def hr_operator_parts(spec, g_amps, T):
    """(creator profile, annihilator profile) of A(f_T) in the free field.

    A = a*(g) + a(g) smeared with f_T gives the T-independent creator
    a*(f~ g) plus the annihilator a(w_T) with w_T(p) = (2 pi)^2
    h~(2 omega s(T)) e^{2 i omega T} conj(f~(-p)) g(p); the annihilator
    dies once 2 m s(T) leaves the h~ support, which is the exact
    free-field stabilization.
    """
    grid = spec.packet.grid
    f_amps = spec.packet.amps_on_grid()
    creator = f_amps * g_amps
    f_neg = f_amps[grid._neg_index]
    s_T = spec.s_of(T)
    w = (2.0 * np.pi) ** 2 * spec.h_tilde(2.0 * grid.omega * s_T) \
        * np.exp(2.0j * grid.omega * T) * np.conj(f_neg) * g_amps
    return creator, w


def asymptotic_state_convergence(specs, g_amps_list, T_values, basis, n_max,
                                 windows):
    """Cauchy diagnostics of Psi(T) = A_1(f_1T)...A_n(f_nT) Omega.

    ``windows`` are the (k_lo, k_hi) supports used to confirm pairwise
    disjoint velocity intervals.  Returns the difference sequence, the
    distance to the exact free-field limit, and the limit state.
    """
    from .fock import FockState, apply_annihilator, apply_creator
    from .grids import SPVector
    intervals = [spec.velocity_interval(*win)
                 for spec, win in zip(specs, windows)]
    for i in range(len(intervals)):
        for j in range(i + 1, len(intervals)):
            lo1, hi1 = intervals[i]
            lo2, hi2 = intervals[j]
            if not (hi1 < lo2 or hi2 < lo1):
                raise ConfigurationError(
                    "velocity supports overlap; spec %d and %d" % (i, j))
    grid = specs[0].packet.grid

    def build(T):
        psi = FockState.vacuum(basis, n_max)
        for spec, g_amps in zip(reversed(specs), reversed(g_amps_list)):
            crea, anni = hr_operator_parts(spec, g_amps, T)
            up, _ = apply_creator(SPVector(grid, crea), psi)
            down = apply_annihilator(SPVector(grid, anni), psi)
            psi = up.add(down)
        return psi

    states = [build(T) for T in T_values]
    diffs = [states[k + 1].add(states[k], -1.0).norm()
             for k in range(len(states) - 1)]

    limit = FockState.vacuum(basis, n_max)
    for spec, g_amps in zip(reversed(specs), reversed(g_amps_list)):
        crea = spec.packet.amps_on_grid() * g_amps
        limit, _ = apply_creator(SPVector(grid, crea), limit)
    dist_last = states[-1].add(limit, -1.0).norm()
    ratios = [b / a for a, b in zip(diffs, diffs[1:]) if a > 1e-14]
    summable = (not ratios) or max(ratios) < 1.0
    return {"differences": diffs, "distance_to_limit": dist_last,
            "limit": limit, "states": states,
            "summability_ratio": max(ratios) if ratios else 0.0,
            "summable": summable}


def scalar_product_permanent(q_list, qhat_list, grid):
    """sum over permutations of prod <q_i | qhat_{sigma(i)}>."""
    from itertools import permutations
    n = len(q_list)
    total = 0.0 + 0.0j
    for sigma in permutations(range(n)):
        term = 1.0 + 0.0j
        for i in range(n):
            term *= grid.cell_weight * np.vdot(q_list[i],
                                               qhat_list[sigma[i]])
        total += term
    return total


# ----------------------------------------------------------------------
# detector integrals
# ----------------------------------------------------------------------

def detector_integral(phi, g_det, t_values, E):
    """sigma^(t)(B*B) = sum_x w_x phi(alpha_{t,x}(a*(g) a(g))) per t.

    The x-sum runs over the dual configuration lattice (exact discrete
    Plancherel); also returns the energy-route majorant
    ||phi|| (2 pi)^s sup_{omega <= E} (|g|^2/omega) E, uniform in t.
    """
    basis = phi.terms[0][1].basis
    grid = basis.grid
    if not basis.is_cell_basis():
        raise ConfigurationError("detector integrals need indicator modes")
    cells = [int(np.argmax(np.abs(m.amps))) for m in basis.modes]
    d = basis.dim
    # quadratic mode matrix M[j,k] = sum_terms c <bra| a*_j a_k |ket>
    from .fock import apply_mode_annihilator
    M = np.zeros((d, d), dtype=complex)
    for c, bra, ket in phi.terms:
        for j in range(1, d + 1):
            low_b = apply_mode_annihilator(j, bra)
            for k in range(1, d + 1):
                low_k = apply_mode_annihilator(k, ket)
                val = low_b.inner(low_k)
                if val != 0.0:
                    M[j - 1, k - 1] += c * val

    g_at = np.asarray([g_det[c] for c in cells])
    om = grid.omega[cells]
    p_at = grid.points[cells]
    w_root = np.sqrt(grid.cell_weight)
    out = []
    for t in t_values:
        total = 0.0 + 0.0j
        for x in grid.x_points:
            alpha = w_root * g_at * np.exp(1j * (om * t - p_at @ x))
            total += grid.x_weight * np.einsum(
                "j,k,jk->", alpha, np.conj(alpha), M)
        out.append(total)
    norm_phi = phi.norm_bound()
    mask = grid.omega <= E
    majorant = 0.0
    if np.any(mask):
        majorant = norm_phi * (2.0 * np.pi) ** grid.s \
            * float(np.max(np.abs(g_det[mask]) ** 2 / grid.omega[mask])) * E
    return {"values": out, "majorant": majorant}


def kg_propagate(packet, t, radii=None):
    """Configuration-space samples of the evolved packet at time t.

    Returns (radii, samples); the L2 norm on the carrier grid is
    preserved exactly (pure phase on the lattice).
    """
    if radii is None:
        radii = np.linspace(0.0, abs(t) + 6.0, 400)
    return radii, packet.config_samples(t, radii)


def regularity_deficit(state, delta_primes, mass):
    """Spectral-measure deficit || P(m^2 - d' <= p^2 <= m^2 + d')
    (1 - P_[m]) Psi || per window half-width, with an exponent fit.

    On cell-indicator bases the per-occupation mass squared
    (sum omega)^2 - |sum p|^2 is sharp, so the window projection is
    exact.  This only reports the fit; no regularity hypothesis is
    claimed.
    """
    basis = state.basis
    grid = basis.grid
    if not basis.is_cell_basis():
        raise ConfigurationError("deficit needs indicator modes")
    cells = [int(np.argmax(np.abs(m.amps))) for m in basis.modes]
    deficits = []
    for dp in delta_primes:
        total = 0.0
        for occ, amp in state.amps.items():
            if occ.length == 1:
                continue              # single-particle part is P_[m]
            energy = 0.0
            mom = np.zeros(grid.s)
            for k, c in occ:
                energy += c * grid.omega[cells[k - 1]]
                mom = mom + c * grid.points[cells[k - 1]]
            p2 = energy ** 2 - float(mom @ mom)
            if mass ** 2 - dp <= p2 <= mass ** 2 + dp:
                total += abs(amp) ** 2
        deficits.append(np.sqrt(total))
    exponent = None
    if max(deficits) > 0:
        from .fits import fit_power_law
        try:
            exponent, _ = fit_power_law(delta_primes, deficits)
        except ValueError:
            exponent = None
    return {"deficits": deficits, "exponent": exponent}
