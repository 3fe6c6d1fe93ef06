"""Truncated symmetric Fock space over a finite orthonormal mode set.

Mode energies are sharp scalars, so the Hamiltonian is diagonal in the
occupation basis and the energy projection is exact.  Creation above the
particle cap returns explicit leakage mass instead of erroring, since
Weyl series need it accounted.
"""

from __future__ import annotations

import numpy as np

from .grids import ConfigurationError, SPVector, indicator_vector
from .multiindex import MultiIndex

SPAN_RESIDUAL_TOL = 1e-8


class SpanError(ValueError):
    """A single-particle vector does not expand in the mode basis."""


class ModeBasis:
    """Finite list of orthonormal SPVectors with sharp per-mode energies."""

    def __init__(self, modes, energies):
        if len(modes) == 0 or len(modes) > 16:
            raise ConfigurationError("mode count must lie in 1..16")
        if len(energies) != len(modes):
            raise ConfigurationError("one energy per mode required")
        self.grid = modes[0].grid
        self.modes = list(modes)
        self.energies = np.asarray(energies, dtype=float)
        gram = np.array([[a.inner(b) for b in modes] for a in modes])
        if np.max(np.abs(gram - np.eye(len(modes)))) > 1e-10:
            raise ConfigurationError("mode basis is not orthonormal to 1e-10")
        if np.any(self.energies < self.grid.m - 1e-12):
            raise ConfigurationError("mode energies must be >= m")

    @classmethod
    def from_cells(cls, grid, cells):
        """Indicator modes on distinct grid cells (exact sharp energies)."""
        modes = [indicator_vector(grid, c) for c in cells]
        energies = [grid.omega[c] for c in cells]
        return cls(modes, energies)

    @property
    def dim(self):
        return len(self.modes)

    def expand(self, f):
        """Coefficients of f in the basis; SpanError if the residual
        exceeds 1e-8 of ||f||."""
        coeffs = np.array([m.inner(f) for m in self.modes])
        approx = sum(c * m.amps for c, m in zip(coeffs, self.modes))
        residual = self.grid.norm(f.amps - approx)
        if residual > SPAN_RESIDUAL_TOL * max(f.norm(), 1e-300):
            raise SpanError("vector leaves the mode span (residual %.2e)"
                            % residual)
        return coeffs

    def occupation_energy(self, occ):
        return float(sum(c * self.energies[k - 1] for k, c in occ))

    def is_cell_basis(self):
        return all(np.count_nonzero(m.amps) == 1 for m in self.modes)


class FockState:
    """Truncated symmetric Fock vector: occupation MultiIndex -> amplitude."""

    def __init__(self, basis, n_max, amps=None):
        self.basis = basis
        self.n_max = int(n_max)
        self.amps = dict(amps) if amps else {}

    @classmethod
    def vacuum(cls, basis, n_max):
        return cls(basis, n_max, {MultiIndex(): 1.0 + 0.0j})

    def copy(self):
        return FockState(self.basis, self.n_max, self.amps)

    def norm2(self):
        return float(sum(abs(a) ** 2 for a in self.amps.values()))

    def norm(self):
        return float(np.sqrt(self.norm2()))

    def inner(self, other):
        if other.basis is not self.basis:
            raise ConfigurationError("states live on different bases")
        small, big = (self.amps, other.amps) \
            if len(self.amps) <= len(other.amps) else (other.amps, self.amps)
        total = 0.0 + 0.0j
        for occ, a in small.items():
            b = big.get(occ)
            if b is not None:
                if small is self.amps:
                    total += np.conj(a) * b
                else:
                    total += np.conj(self.amps[occ]) * a
        return total

    def scale(self, c):
        return FockState(self.basis, self.n_max,
                         {k: c * v for k, v in self.amps.items()})

    def add(self, other, coeff=1.0):
        out = dict(self.amps)
        for k, v in other.amps.items():
            out[k] = out.get(k, 0.0) + coeff * v
        return FockState(self.basis, self.n_max, out)

    def normalized(self):
        n = self.norm()
        if n == 0:
            raise ConfigurationError("cannot normalize the zero state")
        return self.scale(1.0 / n)

    def prune(self, floor=0.0):
        return FockState(self.basis, self.n_max,
                         {k: v for k, v in self.amps.items()
                          if abs(v) > floor})

    def sector_norms(self):
        out = {}
        for occ, a in self.amps.items():
            n = occ.length
            out[n] = out.get(n, 0.0) + abs(a) ** 2
        return out


def _mode_delta(j):
    return MultiIndex({j: 1})


def apply_mode_annihilator(j, psi):
    out = {}
    for occ, amp in psi.amps.items():
        c = occ[j]
        if c >= 1:
            occ2 = MultiIndex({**occ.as_dict(), j: c - 1})
            out[occ2] = out.get(occ2, 0.0) + np.sqrt(c) * amp
    return FockState(psi.basis, psi.n_max, out)


def apply_mode_creator(j, psi):
    """Returns (state, leakage mass) with the above-cap weight dropped."""
    out = {}
    leak = 0.0
    for occ, amp in psi.amps.items():
        c = occ[j]
        new_amp = np.sqrt(c + 1) * amp
        if occ.length + 1 > psi.n_max:
            leak += abs(new_amp) ** 2
            continue
        occ2 = MultiIndex({**occ.as_dict(), j: c + 1})
        out[occ2] = out.get(occ2, 0.0) + new_amp
    return FockState(psi.basis, psi.n_max, out), leak


def apply_annihilator(f, psi, allow_projection=False):
    """a(f) psi = sum_j conj(<mode_j|f>) a_j psi; a(f) vacuum = 0.

    ``allow_projection`` skips the span check: on a span-supported state
    a(f) = a(P f) exactly, which matrix-element evaluators exploit.
    """
    if isinstance(f, SPVector):
        if allow_projection:
            coeffs = np.array([m.inner(f) for m in psi.basis.modes])
        else:
            coeffs = psi.basis.expand(f)
    else:
        coeffs = np.asarray(f)
    out = FockState(psi.basis, psi.n_max)
    for j, c in enumerate(coeffs, start=1):
        if c == 0:
            continue
        out = out.add(apply_mode_annihilator(j, psi), np.conj(c))
    return out


def apply_creator(f, psi):
    """a*(f) psi, plus the leakage mass pushed above n_max."""
    coeffs = psi.basis.expand(f) if isinstance(f, SPVector) else np.asarray(f)
    # collect the would-be (n+1)-amplitudes exactly, then split off overflow
    out = {}
    overflow = {}
    for occ, amp in psi.amps.items():
        target = overflow if occ.length + 1 > psi.n_max else out
        for j, c in enumerate(coeffs, start=1):
            if c == 0:
                continue
            cnt = occ[j]
            occ2 = MultiIndex({**occ.as_dict(), j: cnt + 1})
            target[occ2] = target.get(occ2, 0.0) + c * np.sqrt(cnt + 1) * amp
    leak = float(sum(abs(v) ** 2 for v in overflow.values()))
    return FockState(psi.basis, psi.n_max, out), leak


def number_operator(psi):
    return FockState(psi.basis, psi.n_max,
                     {occ: occ.length * amp for occ, amp in psi.amps.items()})


def hamiltonian_and_projection(psi, E):
    """(H psi, P_E psi): H acts diagonally with sharp mode energies and
    P_E keeps occupations of total energy <= E."""
    if E < 0:
        raise ValueError("energy bound must be nonnegative")
    h_amps = {}
    p_amps = {}
    for occ, amp in psi.amps.items():
        en = psi.basis.occupation_energy(occ)
        h_amps[occ] = en * amp
        if en <= E:
            p_amps[occ] = amp
    return (FockState(psi.basis, psi.n_max, h_amps),
            FockState(psi.basis, psi.n_max, p_amps))


def apply_hamiltonian(psi):
    return hamiltonian_and_projection(psi, 0.0)[0]


def project_energy(psi, E):
    return hamiltonian_and_projection(psi, E)[1]


def apply_translation(x0, xvec, psi):
    """U(x) on a cell-indicator basis: diagonal phase per occupied mode."""
    basis = psi.basis
    if not basis.is_cell_basis():
        raise ConfigurationError(
            "translations are exact only on cell-indicator mode bases")
    cells = [int(np.argmax(np.abs(m.amps))) for m in basis.modes]
    grid = basis.grid
    phase = grid.translation_phase(x0, xvec)
    out = {}
    for occ, amp in psi.amps.items():
        ph = 1.0 + 0.0j
        for k, c in occ:
            ph *= phase[cells[k - 1]] ** c
        out[occ] = amp * ph
    return FockState(basis, psi.n_max, out)


class OperatorWord:
    """Finite word of 'a', 'a*' and 'U' factors acting on FockStates.

    Stored left-to-right in operator order: word = F_1 F_2 ... F_k applied
    as F_1(F_2(...px)).  The adjoint reverses the word, swaps a <-> a*,
    and inverts translations.
    """

    def __init__(self, factors=()):
        self.factors = list(factors)

    @classmethod
    def annihilators(cls, fs):
        return cls([("a", f) for f in fs])

    @classmethod
    def creators(cls, fs):
        return cls([("a*", f) for f in fs])

    def creation_count(self):
        return sum(1 for kind, _ in self.factors if kind == "a*")

    def adjoint(self):
        out = []
        for kind, payload in reversed(self.factors):
            if kind == "a":
                out.append(("a*", payload))
            elif kind == "a*":
                out.append(("a", payload))
            else:
                x0, xvec = payload
                out.append(("U", (-x0, tuple(-np.asarray(xvec)))))
        return OperatorWord(out)

    def apply(self, psi):
        """Returns (state, accumulated leakage mass)."""
        leak = 0.0
        for kind, payload in reversed(self.factors):
            if kind == "a":
                psi = apply_annihilator(payload, psi)
            elif kind == "a*":
                psi, dl = apply_creator(payload, psi)
                leak += dl
            elif kind == "U":
                x0, xvec = payload
                psi = apply_translation(x0, np.asarray(xvec), psi)
            else:
                raise ValueError("unknown factor kind %r" % kind)
        return psi, leak


def operator_norm_on_PE(word, E, basis, n_max, tol=1e-6, max_iter=400,
                        seed=0):
    """|| P_E word P_E || by power iteration on (P_E W)*(P_E W).

    Returns (estimate, converged).  Non-convergence within the cap is
    flagged, never silent.
    """
    if E < 0:
        raise ValueError("energy bound must be nonnegative")
    if not word.factors:
        return 1.0, True

    rng = np.random.default_rng(seed)
    # deterministic seed state spread over the P_E occupation basis
    psi = FockState(basis, n_max)
    occs = _occupations_below(basis, n_max, E)
    if not occs:
        return 0.0, True
    amps = rng.standard_normal(len(occs)) + 1j * rng.standard_normal(len(occs))
    psi = FockState(basis, n_max, dict(zip(occs, amps))).normalized()
    adj = word.adjoint()

    def bop(state):
        state = project_energy(state, E)
        state, _ = word.apply(state)
        state = project_energy(state, E)
        state, _ = adj.apply(state)
        state = project_energy(state, E)
        return state

    lam = 0.0
    for _ in range(max_iter):
        nxt = bop(psi)
        nrm = nxt.norm()
        if nrm == 0.0:
            return 0.0, True
        new_lam = nrm
        nxt = nxt.scale(1.0 / nrm)
        if abs(new_lam - lam) <= tol * max(new_lam, 1e-300):
            return float(np.sqrt(new_lam)), True
        lam = new_lam
        psi = nxt
    return float(np.sqrt(lam)), False


def _occupations_below(basis, n_max, E):
    """All occupation multiindices with |mu| <= n_max and energy <= E."""
    out = []

    def rec(mode, occ, n_used, energy):
        if energy > E + 1e-12:
            return
        if mode > basis.dim:
            out.append(MultiIndex(occ))
            return
        e = basis.energies[mode - 1]
        max_c = n_max - n_used
        for c in range(max_c + 1):
            if energy + c * e > E + 1e-12:
                break
            if c:
                occ[mode] = c
            rec(mode + 1, occ, n_used + c, energy + c * e)
            occ.pop(mode, None)

    rec(1, {}, 0, 0.0)
    return out


def dense_matrix_on_PE(word, E, basis, n_max):
    """Dense matrix of P_E word P_E in the occupation basis (SVD oracle)."""
    occs = _occupations_below(basis, n_max, E)
    index = {occ: i for i, occ in enumerate(occs)}
    dim = len(occs)
    mat = np.zeros((dim, dim), dtype=complex)
    for j, occ in enumerate(occs):
        psi = FockState(basis, n_max, {occ: 1.0})
        res, _ = word.apply(psi)
        res = project_energy(res, E)
        for occ2, amp in res.amps.items():
            i = index.get(occ2)
            if i is not None:
                mat[i, j] = amp
    return mat, occs


def random_state(basis, n_max, rng, max_energy=None):
    """Normalized random state, optionally restricted to energy <= bound."""
    occs = _occupations_below(basis, n_max,
                              max_energy if max_energy is not None
                              else float("inf"))
    amps = rng.standard_normal(len(occs)) + 1j * rng.standard_normal(len(occs))
    return FockState(basis, n_max, dict(zip(occs, amps))).normalized()


def gl_damping_check(l, states):
    """Verify <psi| R^{-l} e^{-G_l} psi> <= ||psi||^2 with R = (1+H)^{-1}
    and G_l = dGamma(log((2+omega)^l)); both sides diagonal.

    Returns a report dict with the worst ratio.
    """
    if l < 0:
        raise ValueError("l must be nonnegative")
    worst = 0.0
    for psi in states:
        val = 0.0
        for occ, amp in psi.amps.items():
            en = psi.basis.occupation_energy(occ)
            damp = (1.0 + en) ** l
            for k, c in occ:
                damp *= (2.0 + psi.basis.energies[k - 1]) ** (-l * c)
            val += damp * abs(amp) ** 2
        ratio = val / psi.norm2() if psi.norm2() > 0 else 0.0
        worst = max(worst, ratio)
    return {"l": l, "worst_ratio": worst, "passes": worst <= 1.0 + 1e-12}


def vacuum_word_expectation(word_ops, inner):
    """<Omega| X_1 ... X_M |Omega> for X_i in {('a', key), ('a*', key)}.

    ``inner(u, v)`` supplies the single-particle pairings <u|v>.  The
    recursion contracts each leading annihilator with the creators to its
    right; a leading creator kills the vacuum expectation.
    """
    ops = tuple(word_ops)
    memo = {}

    def rec(seq):
        if not seq:
            return 1.0 + 0.0j
        if seq in memo:
            return memo[seq]
        kind, key = seq[0]
        if kind == "a*":
            memo[seq] = 0.0 + 0.0j
            return memo[seq]
        total = 0.0 + 0.0j
        for idx in range(1, len(seq)):
            k2, key2 = seq[idx]
            if k2 == "a*":
                rest = seq[1:idx] + seq[idx + 1:]
                total += inner(key, key2) * rec(rest)
        memo[seq] = total
        return total

    return rec(ops)
