"""Weyl operators, Wick monomials, generating functionals and the
coincidence / stress-energy checks.

Two evaluation backends coexist and are cross-validated: an exact
symbolic one (Weyl composition law plus coherent-state matrix elements,
fully reduced to single-particle inner products) and truncated Fock
numerics with explicit leakage accounting.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .grids import ConfigurationError, indicator_vector
from .fock import (FockState, apply_annihilator, apply_creator,
                   hamiltonian_and_projection)
from .multiindex import MultiIndex, TwoMultiIndex, splittings, split_weight


# ----------------------------------------------------------------------
# Weyl words and the exact symbolic backend
# ----------------------------------------------------------------------

class WeylWord:
    """Ordered product W(f_1)...W(f_N) with the accumulated scalar phase.

    Reduction uses W(f) W(g) = exp(-i Im<f|g>) W(f+g); the phase stays
    unit modulus.
    """

    def __init__(self, fs, phase=1.0 + 0.0j):
        self.fs = list(fs)
        self.phase = phase

    def reduce(self):
        """Collapse to (phase, f_total); empty words give W(0)."""
        phase = self.phase
        if not self.fs:
            return phase, None
        acc = self.fs[0]
        for g in self.fs[1:]:
            phase = phase * np.exp(-1j * acc.inner(g).imag)
            acc = acc + g
        return phase, acc


def composition_phase(f, g):
    """Scalar phase in W(f) W(g) = phase * W(f+g)."""
    return np.exp(-1j * f.inner(g).imag)


def vacuum_weyl_expectation(word):
    """omega_0(W(f_1)...W(f_N)) in exact closed form."""
    phase, f = word.reduce()
    if f is None:
        return phase
    return phase * np.exp(-0.5 * f.inner(f).real)


def coherent_weyl_me(us, ws, vs, f, inner=None, f_is_zero=False):
    """<Omega| a(u_1)..a(u_k) a*(w_1)..a*(w_m) W(f) a*(v_1)..a*(v_l) |Omega>.

    Evaluated by summing over partial matchings: every w must pair with
    some u; unmatched u contributes i<u|f>, unmatched v contributes
    i<f|v>; matched pairs contribute <u|w> or <u|v>.  The overall factor
    is exp(-||f||^2/2).
    """
    if inner is None:
        inner = lambda a, b: a.inner(b)
    if f_is_zero or f is None:
        uf = [0.0] * len(us)
        fv = [0.0] * len(vs)
        pref = 1.0
    else:
        uf = [1j * inner(u, f) for u in us]
        fv = [1j * inner(f, v) for v in vs]
        pref = np.exp(-0.5 * inner(f, f).real)
    rights = list(ws) + list(vs)
    n_w = len(ws)
    uw = [[inner(u, r) for r in rights] for u in us]

    def rec(i, used):
        if i == len(us):
            # all w's must be consumed; leftover v's take their f factor
            total = 1.0 + 0.0j
            for j in range(len(rights)):
                if not used[j]:
                    if j < n_w:
                        return 0.0
                    total *= fv[j - n_w]
            return total
        total = uf[i] * rec(i + 1, used)
        for j in range(len(rights)):
            if not used[j]:
                used[j] = True
                total += uw[i][j] * rec(i + 1, used)
                used[j] = False
        return total

    return pref * rec(0, [False] * len(rights))


# ----------------------------------------------------------------------
# Truncated-Fock backend
# ----------------------------------------------------------------------

def apply_exp_annihilator(f, psi):
    """exp(i a(f)) psi; the series terminates at the particle cap."""
    out = psi
    term = psi
    k = 1
    while True:
        term = apply_annihilator(f, term).scale(1j / k)
        if term.norm() == 0.0:
            break
        out = out.add(term)
        k += 1
    return out


def weyl_apply(f, psi):
    """W(f) psi = e^{-||f||^2/2} e^{i a*(f)} e^{i a(f)} psi.

    Returns (state, leakage mass); leakage is the unitarity deficit of
    the truncated creator series.
    """
    norm_in2 = psi.norm2()
    low = apply_exp_annihilator(f, psi)
    out = low
    term = low
    k = 1
    while True:
        term, _ = apply_creator(f, term)
        term = term.scale(1j / k)
        if term.norm() == 0.0 and k > psi.n_max:
            break
        out = out.add(term)
        k += 1
        if k > 4 * psi.n_max + 40:
            break
    out = out.scale(np.exp(-0.5 * f.inner(f).real))
    leak = max(norm_in2 - out.norm2(), 0.0)
    return out, leak


def normal_ordered_weyl_me(bra, ket, f):
    """<bra| :W(f): |ket> = <bra| e^{i a*(f)} e^{i a(f)} |ket>.

    Exact on finite-particle states: both series terminate, and only
    annihilators act, so f may project onto the mode span.
    """
    if f is None:
        return bra.inner(ket)
    left = [bra]
    cur = bra
    while True:
        cur = apply_annihilator(f, cur, allow_projection=True)
        if cur.norm() == 0.0:
            break
        left.append(cur)
    right = [ket]
    cur = ket
    while True:
        cur = apply_annihilator(f, cur, allow_projection=True)
        if cur.norm() == 0.0:
            break
        right.append(cur)
    total = 0.0 + 0.0j
    for k, lk in enumerate(left):
        for l, rl in enumerate(right):
            total += (1j ** k / math.factorial(k)) \
                * (1j ** l / math.factorial(l)) * lk.inner(rl)
    return total


# ----------------------------------------------------------------------
# Finite-rank functionals of bounded energy
# ----------------------------------------------------------------------

class FiniteRankFunctional:
    """phi = sum_i c_i <bra_i| . |ket_i> with occupation energies <= E."""

    def __init__(self, terms, energy_bound):
        self.terms = list(terms)
        self.energy_bound = float(energy_bound)
        for _, bra, ket in self.terms:
            for st in (bra, ket):
                for occ in st.amps:
                    if st.basis.occupation_energy(occ) > energy_bound + 1e-9:
                        raise ConfigurationError(
                            "functional term leaves the energy shell")

    def norm_bound(self):
        return float(sum(abs(c) * bra.norm() * ket.norm()
                         for c, bra, ket in self.terms))

    def evaluate_me(self, me):
        """sum_i c_i me(bra_i, ket_i) for a matrix-element callable."""
        return sum(c * me(bra, ket) for c, bra, ket in self.terms)

    def evaluate_apply(self, apply_fn):
        """sum_i c_i <bra_i| apply_fn(ket_i)>."""
        return sum(c * bra.inner(apply_fn(ket)) for c, bra, ket in self.terms)

    def max_particles(self):
        n = 0
        for _, bra, ket in self.terms:
            for st in (bra, ket):
                for occ in st.amps:
                    n = max(n, occ.length)
        return n


def vacuum_functional(basis, n_max):
    vac = FockState.vacuum(basis, n_max)
    return FiniteRankFunctional([(1.0, vac, vac)], 0.0)


# ----------------------------------------------------------------------
# The generating-functional sigma_{mu+, mu-}
# ----------------------------------------------------------------------

def sigma_functional(mu_plus, mu_minus, b_plus, b_minus, target,
                     numeric=None):
    """Evaluate sigma_{mu+,mu-} on a Weyl word or a numeric operator.

    The finite combinatorial sum runs over splittings
    alphabar + alphabar' + alphabar'' = mubar; each term is a vacuum
    matrix element of annihilators/creators around the operator.  On
    Weyl words it reproduces e^{-||f||^2/2} <b+|f+>^{mu+} <b-|f->^{mu-}
    for J-invariant b families.

    ``target`` is a WeylWord, None for the identity, or a callable
    state -> state evaluated numerically on the truncated Fock carrier
    given by ``numeric`` = (basis, n_max).
    """
    for b in list(b_plus) + list(b_minus):
        if not b.is_J_invariant(1e-8):
            raise ConfigurationError("b family must be J-invariant")
    mubar = TwoMultiIndex(mu_plus, mu_minus)
    apply_fn = None  # set for numeric targets
    if isinstance(target, WeylWord):
        phase, f_tot = target.reduce()
    elif target is None:
        phase, f_tot = 1.0, None
    elif callable(target):
        if numeric is None:
            raise ConfigurationError(
                "numeric targets need a (basis, n_max) carrier")
        phase, f_tot = None, None
        apply_fn = target
    else:
        raise TypeError("target must be a WeylWord, None or a callable")

    total = 0.0 + 0.0j
    for ap in splittings(mu_plus, 3):
        wp = split_weight(mu_plus, ap)
        for am in splittings(mu_minus, 3):
            wm = split_weight(mu_minus, am)
            alpha = TwoMultiIndex(ap[0], am[0])
            alpha_p = TwoMultiIndex(ap[1], am[1])
            alpha_pp = TwoMultiIndex(ap[2], am[2])
            sign = (-1.0) ** (ap[0].length + ap[2].length + am[2].length)
            us = _family_list(alpha, b_plus, b_minus)
            ws = _family_list(alpha_p, b_plus, b_minus)
            vs = _family_list(alpha_pp, b_plus, b_minus)
            if phase is not None:
                me = phase * coherent_weyl_me(us, ws, vs, f_tot,
                                              f_is_zero=f_tot is None)
            else:
                me = _numeric_me(us, ws, vs, apply_fn, numeric)
            total += sign * wp * wm * me
    pref = (0.5 ** mubar.length) * 1j ** (mu_plus.length + 2 * mu_minus.length)
    return pref * total


def _family_list(bar, b_plus, b_minus):
    out = []
    for k, c in bar.plus:
        out.extend([b_plus[k - 1]] * c)
    for k, c in bar.minus:
        out.extend([b_minus[k - 1]] * c)
    return out


def _numeric_me(us, ws, vs, apply_fn, numeric):
    """<Omega| a(us) a*(ws) X a*(vs) |Omega> on the truncated Fock space.

    The bra vector is (a(us) a*(ws))^dagger Omega = a(ws) a*(us) Omega.
    """
    basis, n_max = numeric
    ket = FockState.vacuum(basis, n_max)
    for v in reversed(vs):
        ket, _ = apply_creator(v, ket)
    ket = apply_fn(ket)
    bra = FockState.vacuum(basis, n_max)
    for u in us:
        bra, _ = apply_creator(u, bra)
    for w in ws:
        bra = apply_annihilator(w, bra)
    return bra.inner(ket)


def sigma_term_bound(mu_plus, mu_minus, b_plus, b_minus, basis, n_max):
    """Triangle-inequality bound (1/2)^{|mubar|} sum |weights| ||X|| ||Y||.

    |X> = a(b)^{alpha'} a*(b)^{alpha} Omega and |Y> = a*(b)^{alpha''} Omega
    are the bra/ket vectors of the splitting terms.  For an orthonormal
    J-invariant family with b+ = b- the accumulated bound stays below
    4^{|mubar|} sqrt(mu+! mu-!).
    """
    mubar = TwoMultiIndex(mu_plus, mu_minus)
    total = 0.0
    for ap in splittings(mu_plus, 3):
        wp = split_weight(mu_plus, ap)
        for am in splittings(mu_minus, 3):
            wm = split_weight(mu_minus, am)
            us = _family_list(TwoMultiIndex(ap[0], am[0]), b_plus, b_minus)
            ws = _family_list(TwoMultiIndex(ap[1], am[1]), b_plus, b_minus)
            vs = _family_list(TwoMultiIndex(ap[2], am[2]), b_plus, b_minus)
            x = FockState.vacuum(basis, n_max)
            for u in us:
                x, _ = apply_creator(u, x)
            for w in ws:
                x = apply_annihilator(w, x)
            y = FockState.vacuum(basis, n_max)
            for v in vs:
                y, _ = apply_creator(v, y)
            total += wp * wm * x.norm() * y.norm()
    return 0.5 ** mubar.length * total


# ----------------------------------------------------------------------
# Wick powers of the field as momentum densities
# ----------------------------------------------------------------------

def _cell_me_maps(bra, ket):
    """Matrix-element dictionaries of quadratic cell operators.

    Returns (aa, ada, adad) where aa[(p, q)] = <bra| a_p a_q |ket>,
    ada[(p, q)] = <bra| a*_p a_q |ket>, adad[(p, q)] = <bra| a*_p a*_q
    |ket> for unit cell modes a_p = a(e_p); keys are cell indices of the
    underlying grid (mode bases must be cell-indicator bases).
    """
    basis = ket.basis
    if not basis.is_cell_basis():
        raise ConfigurationError("cell matrix elements need indicator modes")
    cells = [int(np.argmax(np.abs(m.amps))) for m in basis.modes]

    def mode_annihilate(state, j):
        out = {}
        for occ, amp in state.amps.items():
            c = occ[j]
            if c:
                occ2 = MultiIndex({**occ.as_dict(), j: c - 1})
                out[occ2] = out.get(occ2, 0.0) + np.sqrt(c) * amp
        return FockState(basis, state.n_max, out)

    aa, ada, adad = {}, {}, {}
    dim = basis.dim
    lowered = {j: mode_annihilate(ket, j) for j in range(1, dim + 1)}
    lowered_bra = {j: mode_annihilate(bra, j) for j in range(1, dim + 1)}
    for j1 in range(1, dim + 1):
        for j2 in range(1, dim + 1):
            p, q = cells[j1 - 1], cells[j2 - 1]
            v_aa = bra.inner(mode_annihilate(lowered[j1], j2))
            if v_aa != 0.0:
                # normalization: a(p) = a(e_p)/sqrt(w)
                aa[(p, q)] = v_aa / basis.grid.cell_weight
            v_ada = lowered_bra[j1].inner(lowered[j2])
            if v_ada != 0.0:
                ada[(p, q)] = v_ada / basis.grid.cell_weight
            v_adad = mode_annihilate(lowered_bra[j1], j2).inner(ket)
            if v_adad != 0.0:
                adad[(p, q)] = v_adad / basis.grid.cell_weight
    return aa, ada, adad


def wick_field_density(bra, ket, n, p_transfer):
    """<bra| :phi+^n~:(p) |ket> on the grid for n in {1, 2}.

    n = 1: p_transfer indexes a grid cell.  n = 2: p_transfer is a point
    of the momentum-transfer lattice (s-vector, integer multiples of the
    cell spacing), and the convolution runs over grid cells.  Higher Wick
    powers are evaluated through the closed-form witness reductions in
    :mod:`fockscope.infrared`.
    """
    if n < 1:
        raise ValueError("Wick power must be >= 1")
    basis = ket.basis
    grid = basis.grid
    if n == 1:
        # a(p) = a(e_p)/sqrt(w); phi+~(p) = (a*(p) + a(-p)) / sqrt(2 omega)
        cell = int(p_transfer)
        om = grid.omega[cell]
        member = {int(np.argmax(np.abs(m.amps))) for m in basis.modes} \
            if basis.is_cell_basis() else None
        val = 0.0 + 0.0j
        neg = int(grid._neg_index[cell])
        if member is None or cell in member:
            up, _ = apply_creator(indicator_vector(grid, cell), ket)
            val += bra.inner(up)
        if member is None or neg in member:
            val += bra.inner(
                apply_annihilator(indicator_vector(grid, neg), ket))
        return val / np.sqrt(2.0 * om) / np.sqrt(grid.cell_weight)
    if n != 2:
        raise NotImplementedError(
            "grid route implements n <= 2; use witness closed forms")
    p_vec = np.atleast_1d(np.asarray(p_transfer, dtype=float))
    aa, ada, adad = _cell_me_maps(bra, ket)
    w = grid.cell_weight
    pref = (2.0 * np.pi) ** (-grid.s / 2.0)
    total = 0.0 + 0.0j

    # a*(k1) a*(k2) term with k1 = p - q, k2 = q, plus cross and aa terms
    for (c1, c2), val in adad.items():
        k1, k2 = grid.points[c1], grid.points[c2]
        if np.max(np.abs((k1 + k2) - p_vec)) < 1e-9 * grid.dp:
            total += w * val / np.sqrt(4 * grid.omega[c1] * grid.omega[c2])
    for (c1, c2), val in ada.items():
        # a*(k1) a(-k2): k1 + (-k2 reflected) ... transfer k1 - (-k2)?
        k1 = grid.points[c1]
        k2 = -grid.points[c2]
        if np.max(np.abs((k1 + k2) - p_vec)) < 1e-9 * grid.dp:
            total += 2.0 * w * val / np.sqrt(
                4 * grid.omega[c1] * grid.omega[c2])
    for (c1, c2), val in aa.items():
        k1 = -grid.points[c1]
        k2 = -grid.points[c2]
        if np.max(np.abs((k1 + k2) - p_vec)) < 1e-9 * grid.dp:
            total += w * val / np.sqrt(4 * grid.omega[c1] * grid.omega[c2])
    return pref * total


def wick2_density_oracle(bra, ket, p_transfer):
    """Explicit double-sum oracle for :phi+^2~:(p).

    Literal transcription of the convolution: for every cell q, the four
    normal-ordered operator combinations at (k1, k2) = (p - q, q) are
    applied to the ket state.  Independent of the matrix-element maps
    used by :func:`wick_field_density`.
    """
    basis = ket.basis
    grid = basis.grid
    p_vec = np.atleast_1d(np.asarray(p_transfer, dtype=float))
    pref = (2.0 * np.pi) ** (-grid.s / 2.0)
    w = grid.cell_weight

    def cell_at(vec):
        idx = np.round((vec + grid.half_width) / grid.dp - 0.5).astype(int)
        if np.any(idx < 0) or np.any(idx >= grid.n_per_axis):
            return None
        cell = 0
        for ax in range(grid.s):
            cell = cell * grid.n_per_axis + idx[ax]
        if np.max(np.abs(grid.points[cell] - vec)) > 1e-9 * grid.dp:
            return None
        return int(cell)

    basis_cells = {int(np.argmax(np.abs(m.amps))) for m in basis.modes}

    def op_vec(cell):
        # in-span indicator, or None when the matrix element must vanish
        return indicator_vector(grid, cell) if cell in basis_cells else None

    total = 0.0 + 0.0j
    for q_cell in range(grid.n_cells):
        q = grid.points[q_cell]
        c1 = cell_at(p_vec - q)
        if c1 is None:
            continue
        scale = w / np.sqrt(4.0 * grid.omega[c1] * grid.omega[q_cell])
        mc1 = int(grid._neg_index[c1])
        mq = int(grid._neg_index[q_cell])
        val = 0.0 + 0.0j
        # a*(k1) a*(k2)
        ek1, ek2 = op_vec(c1), op_vec(q_cell)
        if ek1 is not None and ek2 is not None:
            up, _ = apply_creator(ek2, ket)
            up, _ = apply_creator(ek1, up)
            val += bra.inner(up)
        # a*(k1) a(-k2)
        emk2 = op_vec(mq)
        if ek1 is not None and emk2 is not None:
            mid = apply_annihilator(emk2, ket)
            mid, _ = apply_creator(ek1, mid)
            val += bra.inner(mid)
        # a*(k2) a(-k1)
        emk1 = op_vec(mc1)
        if ek2 is not None and emk1 is not None:
            mid = apply_annihilator(emk1, ket)
            mid, _ = apply_creator(ek2, mid)
            val += bra.inner(mid)
        # a(-k1) a(-k2)
        if emk1 is not None and emk2 is not None:
            low = apply_annihilator(emk1, apply_annihilator(emk2, ket))
            val += bra.inner(low)
        total += scale * val / w
    return pref * total


# ----------------------------------------------------------------------
# Coincidence N-linear forms
# ----------------------------------------------------------------------

def coincidence_form(phi, xs, fs, spacelike_delta=None, direct_route=True):
    """Centered Weyl coincidence form, evaluated two ways.

    Route (i): the truncated-Fock product of (W(f_k, x_k) -
    omega_0(W(f_k)) 1) applied right to left; it requires the translated
    arguments to stay in the functional's mode span and can be switched
    off for clustering scans.  Route (ii): the exact partition sum over
    ordered subsets, with Weyl composition phases and correlation factors
    reduced to normal-ordered Weyl matrix elements.  Also returns the
    residual partition sum S and the spacelike commutation defect
    max |Im<f_i,xi | f_j,xj>|.
    """
    n = len(fs)
    if len(xs) != n:
        raise ValueError("one translation per Weyl argument required")
    translated = [f.translate(0.0, x) for f, x in zip(fs, xs)]
    omegas = [np.exp(-0.5 * f.inner(f).real) for f in fs]

    # route (i): truncated product
    def centered_product(ket):
        for f_t, c in zip(reversed(translated), reversed(omegas)):
            wk, _ = weyl_apply(f_t, ket)
            ket = wk.add(ket, -c)
        return ket

    direct = phi.evaluate_apply(centered_product) if direct_route else None

    # route (ii): partition sum
    all_norm2 = sum(f.inner(f).real for f in fs)
    partition = 0.0 + 0.0j
    s_residual = 0.0 + 0.0j
    for size in range(n + 1):
        for subset in combinations(range(n), size):
            sign = (-1.0) ** (n - size)
            phase = 1.0 + 0.0j
            corr = 0.0
            for a in range(size):
                for b in range(a + 1, size):
                    ov = translated[subset[a]].inner(translated[subset[b]])
                    phase *= np.exp(-1j * ov.imag)
                    corr += ov.real
            if size:
                g = translated[subset[0]]
                for idx in subset[1:]:
                    g = g + translated[idx]
            else:
                g = None
            me = phi.evaluate_me(
                lambda bra, ket, gg=g: normal_ordered_weyl_me(bra, ket, gg))
            partition += sign * phase * np.exp(-0.5 * all_norm2 - corr) * me
            s_residual += sign * me
    defect = 0.0
    for a in range(n):
        for b in range(a + 1, n):
            defect = max(defect,
                         abs(translated[a].inner(translated[b]).imag))
    return {
        "direct": direct,
        "partition": partition,
        "discrepancy": abs(direct - partition) if direct_route else None,
        "residual_sum": s_residual,
        "commutation_defect": defect,
        "delta": spacelike_delta,
    }


# ----------------------------------------------------------------------
# Stress-energy integral
# ----------------------------------------------------------------------

def _field_coefficients(grid, x):
    """Creator/annihilator coefficient arrays of the T^00 constituents.

    Each entry is (A, B) with X(x) = sum_p [A_p a*(e_p) + B_p a(e_p)].
    """
    w_half = np.sqrt(grid.cell_weight)
    pref = w_half * (2.0 * np.pi) ** (-grid.s / 2.0)
    phase = np.exp(-1j * grid.points @ np.asarray(x, dtype=float))
    om = grid.omega
    out = []
    # phi-: momentum field
    a_minus = 1j * pref * np.sqrt(om / 2.0) * phase
    out.append((a_minus, np.conj(a_minus)))
    # spatial derivatives of phi+
    for ax in range(grid.s):
        a_d = pref * (-1j * grid.points[:, ax]) * phase / np.sqrt(2.0 * om)
        out.append((a_d, np.conj(a_d)))
    # mass term m phi+
    if grid.m > 0:
        a_m = grid.m * pref * phase / np.sqrt(2.0 * om)
        out.append((a_m, np.conj(a_m)))
    return out


def stress_energy_integral(phi):
    """(lhs, rhs) with lhs = sum_x w_x phi(T^00(x)) and rhs = phi(H).

    T^00 = (1/2)(:phi-^2: + sum_j :(d_j phi+)^2: + m^2 :phi+^2:); the
    spatial sum runs over the dual configuration lattice, where the
    momentum-space delta reduction is exact.
    """
    basis = phi.terms[0][1].basis
    grid = basis.grid
    if grid.m <= 0:
        raise ConfigurationError("stress-energy check needs a massive grid")

    # x-independent quadratic matrix elements, summed over phi terms
    aa, ada, adad = {}, {}, {}
    for c, bra, ket in phi.terms:
        m_aa, m_ada, m_adad = _cell_me_maps(bra, ket)
        for store, add_in in ((aa, m_aa), (ada, m_ada), (adad, m_adad)):
            for key, val in add_in.items():
                store[key] = store.get(key, 0.0) + c * val
    # convert back to unit-mode normalization (cell maps divide by w)
    w = grid.cell_weight
    lhs = 0.0 + 0.0j
    for x in grid.x_points:
        fields = _field_coefficients(grid, x)
        val = 0.0 + 0.0j
        for A, B in fields:
            for (p, q), me in adad.items():
                val += A[p] * A[q] * me * w
            for (p, q), me in ada.items():
                val += 2.0 * A[p] * B[q] * me * w
            for (p, q), me in aa.items():
                val += B[p] * B[q] * me * w
        lhs += 0.5 * grid.x_weight * val

    rhs = phi.evaluate_apply(
        lambda ket: hamiltonian_and_projection(ket, 0.0)[0])
    return lhs, rhs
