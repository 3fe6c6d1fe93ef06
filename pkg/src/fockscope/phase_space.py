"""Rank-one expansion bookkeeping, nuclear p-norms, collective norms,
the energy-transfer identity and time-smearing annihilation checks."""

from __future__ import annotations

import math

import numpy as np

from .grids import ConfigurationError
from .quadrature import gauss_hermite, tanh_sinh_nodes


# ----------------------------------------------------------------------
# expansion term bounds and nuclear partial sums
# ----------------------------------------------------------------------

def expansion_term_bounds(mu_bar, nu_bar, top, E, massive_vanishing=True):
    """(tau_bound, S_bound) for one rank-one term of the energy-window
    expansion.

    tau_bound = 2^{(5/2) K} / sqrt(mubar! nubar!) and S_bound =
    E^{K/2} t^mubar t^nubar with K the combined length; in the massive
    theory terms with |mubar| or |nubar| beyond [E/m] carry S = 0.
    """
    t = top.eigenvalues
    K = mu_bar.length + nu_bar.length
    tau = 2.0 ** (2.5 * K) / math.sqrt(mu_bar.factorial() * nu_bar.factorial())
    if massive_vanishing and top.grid.m > 0:
        cap = int(np.floor(E / top.grid.m))
        if mu_bar.length > cap or nu_bar.length > cap:
            return tau, 0.0
    def tpow(bar):
        out = 1.0
        for k, c in bar.plus:
            out *= t[k - 1] ** c
        for k, c in bar.minus:
            out *= t[k - 1] ** c
        return out
    s_bound = E ** (K / 2.0) * tpow(mu_bar) * tpow(nu_bar)
    return tau, s_bound


class RankOneExpansion:
    """Ordered list of (tau_bound, S_bound, label) term bounds with
    nondecreasing partial sums of (tau S)^p."""

    def __init__(self, p_values=(0.25, 0.5, 1.0)):
        self.terms = []
        self.p_values = tuple(p_values)
        self.partial = {p: [0.0] for p in self.p_values}

    def append(self, tau_bound, S_bound, label=None):
        if tau_bound < 0 or S_bound < 0:
            raise ValueError("term bounds must be nonnegative")
        self.terms.append((tau_bound, S_bound, label))
        for p in self.p_values:
            inc = (tau_bound * S_bound) ** p
            self.partial[p].append(self.partial[p][-1] + inc)

    def partial_sum(self, p):
        return self.partial[p][-1]


def _family_poly(eigs, p, coeff, k_max):
    """Truncated generating polynomial of one multiindex family:
    prod_j sum_m z^m (coeff t_j)^{p m} / (m!)^{p/2}."""
    poly = np.zeros(k_max + 1)
    poly[0] = 1.0
    for t in eigs:
        base = (coeff * t) ** p if t > 0 else 0.0
        factor = np.array([base ** m / math.factorial(m) ** (p / 2.0)
                           for m in range(k_max + 1)])
        poly = np.convolve(poly, factor)[: k_max + 1]
    return poly


def p_norm_partial_sum(top, E, p, k_max, massive_vanishing=True):
    """Partial sum of (tau S)^p over all 2-multiindex pairs with combined
    length <= k_max, plus a tail estimate from the closed majorant.

    The sum factorizes over the four plain multiindex families, so it is
    evaluated through truncated generating polynomials rather than term
    enumeration.  Returns a dict with the partial value, the tail
    estimate and the majorant (sum_k (2^5 E)^{pk/2} ||T^p||_1^k /
    (k!)^{p/2})^4.
    """
    if not (0 < p <= 1):
        raise ValueError("p must lie in (0, 1]")
    eigs = np.asarray(top.eigenvalues)
    eigs = eigs[eigs > 0]
    if eigs.size == 0:
        return {"value": 0.0, "tail": 0.0, "majorant": 1.0,
                "tail_over_value": 0.0}
    coeff = 2.0 ** 2.5 * math.sqrt(E)
    fam = _family_poly(eigs, p, coeff, k_max)
    # pair polynomial per 2-multiindex, with the massive vanishing cap
    pair = np.convolve(fam, fam)[: k_max + 1]
    if massive_vanishing and top.grid.m > 0:
        cap = int(np.floor(E / top.grid.m))
        capped = np.convolve(fam[: cap + 1], fam[: cap + 1])[: k_max + 1]
        pair = capped
    total = np.convolve(pair, pair)[: k_max + 1]
    value = float(np.sum(total))

    # majorant series and its tail beyond k_max
    tp_norm1 = float(np.sum(eigs ** p))
    a = [(2.0 ** 5 * E) ** (p * k / 2.0) * tp_norm1 ** k
         / math.factorial(k) ** (p / 2.0) for k in range(4 * k_max + 80)]
    a = np.asarray(a)
    quad = np.convolve(np.convolve(a, a), np.convolve(a, a))
    majorant = float(np.sum(quad))
    tail = float(np.sum(quad[k_max + 1:]))
    if massive_vanishing and top.grid.m > 0:
        cap = int(np.floor(E / top.grid.m))
        if k_max >= 2 * cap:
            tail = 0.0        # every admissible term is already included
    return {"value": value, "tail": tail, "majorant": majorant,
            "tail_over_value": tail / value if value > 0 else 0.0}


# ----------------------------------------------------------------------
# N-point configurations and collective norms
# ----------------------------------------------------------------------

class NPointConfig:
    """Spacetime points x_1..x_N with the spacelike separation margin
    delta(x) = min over pairs of (|xi - xj| - |xi^0 - xj^0|)."""

    def __init__(self, points):
        pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
        if len(pts) < 1:
            raise ValueError("need at least one point")
        self.points = pts

    @property
    def n(self):
        return len(self.points)

    def delta(self):
        if self.n < 2:
            return np.inf
        best = np.inf
        for i in range(self.n):
            for j in range(i + 1, self.n):
                xi, xj = self.points[i], self.points[j]
                spatial = np.linalg.norm(xi[1:] - xj[1:])
                best = min(best, spatial - abs(xi[0] - xj[0]))
        return best

    def is_spacelike(self):
        return self.delta() > 0


class SectorSpace:
    """Exact energy-capped multi-particle space over grid cells (s = 1).

    The Hamiltonian is diagonal in cells, so the energy projection is a
    genuine spectral projection here; used for measured collective norms.
    """

    def __init__(self, grid, E, n_cap):
        self.grid = grid
        self.E = float(E)
        self.n_cap = int(n_cap)
        cells = np.nonzero(grid.omega <= E)[0]
        basis = [()]

        def extend(prefix, start, energy):
            if len(prefix) >= self.n_cap:
                return
            for c in cells[np.searchsorted(cells, start):]:
                en = energy + grid.omega[c]
                if en <= E + 1e-12:
                    nxt = prefix + (int(c),)
                    basis.append(nxt)
                    extend(nxt, c, en)

        extend((), 0, 0.0)
        self.basis = basis
        self.index = {b: i for i, b in enumerate(basis)}
        self.dim = len(basis)

    def quadratic_operator(self, profiles):
        """Matrix of sum_k a*(q_k) a(q_k) for grid profiles q_k.

        Profiles carry the delta-normalized pairing [a(q), a*(e_c)] =
        sqrt(w) conj(q(c)) per occupied cell.
        """
        w = self.grid.cell_weight
        # creator component q(c2) against annihilator pairing conj(q(c))
        Q = np.zeros((self.grid.n_cells, self.grid.n_cells), dtype=complex)
        for q in profiles:
            Q += np.outer(q, np.conj(q))
        Q *= w
        mat = np.zeros((self.dim, self.dim), dtype=complex)
        for idx, occ in enumerate(self.basis):
            if not occ:
                continue
            occ_arr = np.array(occ)
            uniq, counts = np.unique(occ_arr, return_counts=True)
            for c, mult in zip(uniq, counts):
                removed = list(occ)
                removed.remove(int(c))
                for c2 in range(self.grid.n_cells):
                    val = Q[c2, c]
                    if val == 0.0:
                        continue
                    new_occ = tuple(sorted(removed + [c2]))
                    j = self.index.get(new_occ)
                    if j is None:
                        continue
                    mult2 = new_occ.count(c2)
                    mat[j, idx] += val * np.sqrt(mult * mult2)
        return mat

    def operator_norm(self, profiles):
        mat = self.quadratic_operator(profiles)
        mat = 0.5 * (mat + mat.conj().T)
        return float(np.max(np.abs(np.linalg.eigvalsh(mat))))


def collective_majorant(E, h_sup_inv2, g_norm2, n_points, max_pair_corr):
    """E sup|h|^2 { ||g||^2 + (N-1) sup_{i!=j} |<g|U(xi-xj)g>| }."""
    return E * h_sup_inv2 * (g_norm2 + (n_points - 1) * max_pair_corr)


def collective_norm_measured(grid, q_profile, config, E, n_cap=3):
    """Exact || P_E sum_k (a*(q) a(q))(x_k) P_E || on the cell sectors.

    Translations act by exact phases on cells, so the N translated
    profiles stay grid-exact.
    """
    if grid.s != 1:
        raise ConfigurationError("measured collective norm implemented "
                                 "for s = 1")
    sector = SectorSpace(grid, E, n_cap)
    profiles = []
    for x in config.points:
        phase = grid.translation_phase(x[0], x[1:])
        profiles.append(phase * q_profile)
    return sector.operator_norm(profiles)


def pair_separations(config):
    """All pairwise spacetime differences x_i - x_j, i < j."""
    out = []
    for i in range(config.n):
        for j in range(i + 1, config.n):
            out.append(config.points[i] - config.points[j])
    return out


def pair_correlations_lattice(grid, g_profile, config):
    """|<g | U(xi - xj) g>| for all pairs via the carrier lattice.

    Valid while pair separations stay below the lattice resolution
    pi/dp; for larger separations use the analytic-profile route in
    :mod:`fockscope.localization`.
    """
    seps = pair_separations(config)
    if not seps:
        return np.array([])
    xmax = max(float(np.max(np.abs(sp))) for sp in seps)
    if xmax > 0.8 * np.pi / grid.dp:
        raise ConfigurationError(
            "pair separation %.1f exceeds the lattice resolution; use the "
            "analytic correlation route" % xmax)
    dens = grid.cell_weight * np.abs(g_profile) ** 2
    out = []
    for sp in seps:
        phase = np.exp(1j * (grid.omega * sp[0] - grid.points @ sp[1:]))
        out.append(abs(np.sum(dens * phase)))
    return np.asarray(out)


# ----------------------------------------------------------------------
# energy-transfer (mollifier) identity
# ----------------------------------------------------------------------

def _segment_integrals(lams, beta, delta, order=700):
    """I1(lam) over [0,gamma] u [pi-gamma,pi] and I2(lam) over
    [gamma, pi-gamma] of exp(i lam g(theta))."""
    gamma = 2.0 * np.arctan(np.exp(-np.pi * delta / (2.0 * beta)))

    def g(theta):
        val = np.abs(np.tan((theta + gamma) / 2.0)
                     * np.tan((theta - gamma) / 2.0))
        val = np.where(val == 0, 1e-300, val)
        return -(beta / np.pi) * np.log(val)

    x, w = tanh_sinh_nodes(order)
    lams = np.asarray(lams, dtype=float)

    def seg(a, b):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        theta = mid + half * x
        gv = g(theta)
        phases = np.exp(1j * np.outer(lams, gv))
        return half * phases @ w

    i1 = seg(0.0, gamma) + seg(np.pi - gamma, np.pi)
    i2 = seg(gamma, np.pi - gamma)
    return gamma, i1, i2


def mollifier_identity_check(A, B, energies, psi1, psi2, beta, delta,
                             order=700):
    """Discrepancy of the energy-transfer identity for commuting A(t), B.

    ``A``, ``B`` are matrices in the eigenbasis of the diagonal
    Hamiltonian with the given ``energies``; the functional is
    phi(X) = <e^{-beta H} psi1 | X e^{-beta H} psi2>, which lies in
    e^{-beta H} T e^{-beta H} by construction.  Requires [A(t), B] = 0
    for all t (e.g. a tensor split), so every delta > 0 is admissible.
    """
    energies = np.asarray(energies, dtype=float)
    dE = energies[:, None] - energies[None, :]
    lams, inv = np.unique(np.round(dE, 12), return_inverse=True)
    gamma, i1, i2 = _segment_integrals(lams, beta, delta, order=order)
    I1 = i1[inv].reshape(dE.shape)
    I2 = i2[inv].reshape(dE.shape)
    B_ring = (B * I1) / (2.0 * np.pi)
    B_beta = (B * I2) / (2.0 * np.pi)

    damp = np.exp(-beta * energies)
    v1 = damp * np.asarray(psi1)
    v2 = damp * np.asarray(psi2)

    def phi(X):
        return np.vdot(v1, X @ v2)

    ebh = np.exp(beta * energies)
    embh = np.exp(-beta * energies)
    mid1 = A @ (embh[:, None] * B_beta * ebh[None, :])
    mid2 = (ebh[:, None] * B_beta * embh[None, :]) @ A
    lhs = phi(A @ B)
    rhs = phi(A @ B_ring + B_ring @ A) + phi(mid1) + phi(mid2)
    return {"discrepancy": abs(lhs - rhs), "gamma": gamma,
            "lhs": lhs, "rhs": rhs}


def tensor_split_instance(rng, d1, d2, energy_scale=3.0):
    """Random (A, B, energies, psi1, psi2) with A = A1 (x) 1, B = 1 (x) B2
    and H = H1 (x) 1 + 1 (x) H2, guaranteeing [A(t), B] = 0."""
    e1 = np.sort(rng.uniform(0.0, energy_scale, d1))
    e2 = np.sort(rng.uniform(0.0, energy_scale, d2))
    a1 = rng.standard_normal((d1, d1)) + 1j * rng.standard_normal((d1, d1))
    b2 = rng.standard_normal((d2, d2)) + 1j * rng.standard_normal((d2, d2))
    a1 /= np.linalg.norm(a1, 2)
    b2 /= np.linalg.norm(b2, 2)
    A = np.kron(a1, np.eye(d2))
    B = np.kron(np.eye(d1), b2)
    energies = (e1[:, None] + e2[None, :]).ravel()
    psi1 = rng.standard_normal(d1 * d2) + 1j * rng.standard_normal(d1 * d2)
    psi2 = rng.standard_normal(d1 * d2) + 1j * rng.standard_normal(d1 * d2)
    psi1 /= np.linalg.norm(psi1)
    psi2 /= np.linalg.norm(psi2)
    return A, B, energies, psi1, psi2


# ----------------------------------------------------------------------
# time-smearing annihilation
# ----------------------------------------------------------------------

def frequency_bump(center, half_width):
    """Smooth frequency profile supported in (center - hw, center + hw),
    normalized to peak value (2 pi)^{-1/2} at the center."""
    from .localization import mollifier_profile
    peak = mollifier_profile(0.0)

    def gt(xi):
        base = mollifier_profile((np.asarray(xi, dtype=float) - center)
                                 / half_width)
        return base * (2.0 * np.pi) ** -0.5 / peak
    return gt


def time_smeared_word_norm(word, g_tilde, E, basis, n_max):
    """|| P_E word(g) P_E || for a word smeared with the time profile g.

    Matrix elements between sharp-energy occupation states pick up the
    exact factor sqrt(2 pi) g~(E_bra - E_ket); the norm is the largest
    singular value of the assembled block.
    """
    from .fock import _occupations_below, FockState, project_energy
    occs = _occupations_below(basis, n_max, E)
    index = {occ: i for i, occ in enumerate(occs)}
    dim = len(occs)
    mat = np.zeros((dim, dim), dtype=complex)
    for j, occ in enumerate(occs):
        psi = FockState(basis, n_max, {occ: 1.0})
        res, _ = word.apply(psi)
        res = project_energy(res, E)
        e_ket = basis.occupation_energy(occ)
        for occ2, amp in res.amps.items():
            i = index.get(occ2)
            if i is None:
                continue
            e_bra = basis.occupation_energy(occ2)
            mat[i, j] = amp * np.sqrt(2.0 * np.pi) * g_tilde(e_bra - e_ket)
    if dim == 0:
        return 0.0
    return float(np.linalg.svd(mat, compute_uv=False)[0])


def verify_support(g_tilde, lo, hi, margin, n_scan=2000):
    """Numerically confirm supp g~ inside (lo + margin, hi - margin)."""
    xi = np.linspace(lo - 5 * abs(hi - lo), hi + 5 * abs(hi - lo), n_scan)
    vals = np.abs(np.asarray(g_tilde(xi)))
    outside = (xi <= lo + margin) | (xi >= hi - margin)
    return float(np.max(vals[outside])) == 0.0


# ----------------------------------------------------------------------
# moment witness (Gram-Schmidt against Gaussian-weighted powers)
# ----------------------------------------------------------------------

def moment_witness(c, M_E, n_quad=80):
    """Schwartz-class h with int e^{-u^2 c/2} u^n h(u) du = -i delta_{n,1}
    for n in {0, ..., 2 M_E}.

    Constructed by Gram-Schmidt on the Gaussian-weighted powers
    f_n = e^{-u^2 c/2} u^n: project f_1 off the span of all the others
    and normalize.  Returns the Gauss-Hermite representation and the
    achieved moment vector.
    """
    if c <= 0 or M_E < 1:
        raise ValueError("need c > 0 and M_E >= 1")
    n_top = 2 * M_E
    # Gauss-Hermite with weight e^{-t^2} after u = t / sqrt(c)
    t, wt = gauss_hermite(n_quad)
    u = t / np.sqrt(c)
    du_weight = wt / np.sqrt(c)          # int F(u) e^{-c u^2} du

    def pair(mu, nu):
        # <f_mu | f_nu> = int e^{-c u^2} u^{mu+nu} du
        return float(np.sum(du_weight * u ** (mu + nu)))

    others = [n for n in range(n_top + 1) if n != 1]
    # Gram-Schmidt in coefficient space over the f_n family
    basis_coeffs = []
    for n in others:
        coeff = np.zeros(n_top + 1)
        coeff[n] = 1.0
        for b in basis_coeffs:
            ov = _coeff_pair(b, coeff, pair)
            coeff = coeff - ov * b
        nrm = math.sqrt(max(_coeff_pair(coeff, coeff, pair), 0.0))
        if nrm < 1e-13:
            raise FloatingPointError("Gram-Schmidt breakdown in the "
                                     "moment construction")
        basis_coeffs.append(coeff / nrm)
    f1 = np.zeros(n_top + 1)
    f1[1] = 1.0
    resid = f1.copy()
    for b in basis_coeffs:
        resid = resid - _coeff_pair(b, f1, pair) * b
    nrm2 = _coeff_pair(resid, resid, pair)
    if nrm2 < 1e-13:
        raise FloatingPointError("Gram-Schmidt breakdown: f_1 lies in the "
                                 "span of the remaining moments")
    h_coeffs = -1j * resid / nrm2
    # achieved moments int e^{-u^2 c/2} u^n h(u) du
    moments = np.array([
        complex(np.sum(du_weight * u ** n
                       * np.polyval(h_coeffs[::-1], u)))
        for n in range(n_top + 1)])
    h_values = np.exp(-0.5 * c * u ** 2) * np.polyval(h_coeffs[::-1], u)
    return {"u_nodes": u, "h_values": h_values, "coeffs": h_coeffs,
            "moments": moments}


def _coeff_pair(ca, cb, pair):
    total = 0.0
    for mu, a in enumerate(ca):
        if a == 0:
            continue
        for nu, b in enumerate(cb):
            if b == 0:
                continue
            total += a * b * pair(mu, nu)
    return total


def collective_seminorm(q_profile, config, battery):
    """sup over the battery of (sum_k |phi_{x_k}(a*(q) a(q))|^2)^{1/2}.

    ``q_profile`` is a grid array; battery members are finite-rank
    functionals on cell-indicator bases, so the quadratic matrix elements
    reduce to projected annihilator pairings.
    """
    from .fock import apply_annihilator
    from .grids import SPVector
    best = 0.0
    for phi in battery:
        grid = phi.terms[0][1].basis.grid
        total = 0.0
        for x in config.points:
            phase = grid.translation_phase(x[0], x[1:])
            u = SPVector(grid, phase * q_profile)
            val = phi.evaluate_me(
                lambda bra, ket, uu=u: apply_annihilator(
                    uu, bra, allow_projection=True).inner(
                        apply_annihilator(uu, ket, allow_projection=True)))
            total += abs(val) ** 2
        best = max(best, float(np.sqrt(total)))
    return best
