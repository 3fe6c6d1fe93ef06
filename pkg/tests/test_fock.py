import math

import numpy as np
import pytest

from fockscope.fock import (
    FockState, ModeBasis, OperatorWord, SpanError, apply_annihilator,
    apply_creator, dense_matrix_on_PE, gl_damping_check,
    hamiltonian_and_projection, operator_norm_on_PE, random_state,
    vacuum_word_expectation,
)
from fockscope.grids import MomentumGrid, SPVector, random_vector


def small_basis(d=3, n=16, m=1.0):
    grid = MomentumGrid(s=1, m=m, half_width=4.0, n_per_axis=n)
    cells = list(range(2, 2 + d))
    return grid, ModeBasis.from_cells(grid, cells)


def mode_vector(basis, coeffs):
    amps = sum(c * m.amps for c, m in zip(coeffs, basis.modes))
    return SPVector(basis.grid, amps)


def test_annihilator_kills_vacuum_and_sqrt_n():
    grid, basis = small_basis()
    vac = FockState.vacuum(basis, n_max=4)
    e1 = basis.modes[0]
    assert apply_annihilator(e1, vac).norm() == 0.0

    # two-particle state a*(e1)^2 vac / sqrt(2): annihilating gives sqrt(2)
    one, leak = apply_creator(e1, vac)
    two, leak2 = apply_creator(e1, one)
    assert leak == 0.0 and leak2 == 0.0
    two = two.scale(1.0 / math.sqrt(2.0))
    assert abs(two.norm() - 1.0) < 1e-12
    lowered = apply_annihilator(e1, two)
    assert abs(lowered.norm() - math.sqrt(2.0)) < 1e-12


def test_span_error():
    grid, basis = small_basis()
    rng = np.random.default_rng(0)
    stray = random_vector(grid, rng)
    with pytest.raises(SpanError):
        apply_annihilator(stray, FockState.vacuum(basis, 4))


def test_adjointness_and_ccr():
    grid, basis = small_basis()
    rng = np.random.default_rng(1)
    for _ in range(5):
        f = mode_vector(basis, rng.standard_normal(3)
                        + 1j * rng.standard_normal(3))
        g = mode_vector(basis, rng.standard_normal(3)
                        + 1j * rng.standard_normal(3))
        phi = random_state(basis, 4, rng)
        psi = random_state(basis, 4, rng)
        # <phi| a(f) psi> = conj(<psi| a*(f) phi>)
        lhs = phi.inner(apply_annihilator(f, psi))
        rhs = np.conj(psi.inner(apply_creator(f, phi)[0]))
        assert abs(lhs - rhs) < 1e-12

        # CCR on states with one particle of headroom below n_max
        psi_low = random_state(basis, 2, rng)
        psi_low = FockState(basis, 4, psi_low.amps)
        term1, _ = apply_creator(g, psi_low)
        term1 = apply_annihilator(f, term1)
        term2, _ = apply_creator(g, apply_annihilator(f, psi_low))
        comm = term1.add(term2, -1.0)
        expected = psi_low.scale(f.inner(g))
        diff = comm.add(expected, -1.0)
        assert diff.norm() < 1e-11


def test_creator_norm_and_leakage():
    grid, basis = small_basis()
    rng = np.random.default_rng(2)
    # ||a*(b_1)...a*(b_n) vac|| <= sqrt(n!) prod ||b_i||
    for n in range(1, 6):
        psi = FockState.vacuum(basis, n_max=6)
        prod = 1.0
        for _ in range(n):
            b = mode_vector(basis, rng.standard_normal(3)
                            + 1j * rng.standard_normal(3))
            prod *= b.norm()
            psi, leak = apply_creator(b, psi)
            assert leak == 0.0
        assert psi.norm() <= math.sqrt(math.factorial(n)) * prod + 1e-10

    # orthonormal single mode: ||a(e)^alpha a*(e)^beta vac|| with alpha = 0
    e1 = basis.modes[0]
    psi = FockState.vacuum(basis, n_max=6)
    for _ in range(4):
        psi, _ = apply_creator(e1, psi)
    assert abs(psi.norm() - math.sqrt(math.factorial(4))) < 1e-10
    # mixed alpha, beta stays below sqrt((alpha+beta)!)
    mixed = apply_annihilator(e1, psi)
    assert mixed.norm() <= math.sqrt(math.factorial(5)) + 1e-10

    # leakage is zero whenever the input leaves creation headroom
    psi = random_state(basis, 2, rng)
    psi = FockState(basis, 3, psi.amps)
    _, leak = apply_creator(e1, psi)
    assert leak == 0.0
    # and positive when the cap is hit
    top = FockState(basis, 2, random_state(basis, 2, rng).amps)
    state2, leak2 = apply_creator(e1, top)
    total = state2.norm2() + leak2
    full, _ = apply_creator(e1, FockState(basis, 3, top.amps))
    assert abs(total - full.norm2()) < 1e-12


def test_hamiltonian_and_projection():
    grid, basis = small_basis()
    vac = FockState.vacuum(basis, 4)
    h, p = hamiltonian_and_projection(vac, 0.5)
    assert h.norm() == 0.0
    assert abs(p.inner(vac) - 1.0) < 1e-14

    e1 = basis.modes[0]
    w0 = basis.energies[0]
    psi = vac
    for n in range(1, 4):
        psi, _ = apply_creator(e1, psi)
        hn, _ = hamiltonian_and_projection(psi, 0.0)
        # diagonal action: eigenvalue n * omega_0
        assert abs(hn.inner(psi) - n * w0 * psi.norm2()) < 1e-10

    rng = np.random.default_rng(3)
    psi = random_state(basis, 4, rng)
    E = 2.5
    _, pe = hamiltonian_and_projection(psi, E)
    _, pe2 = hamiltonian_and_projection(pe, E)
    assert pe.add(pe2, -1.0).norm() < 1e-14      # idempotent
    h1, _ = hamiltonian_and_projection(pe, E)
    _, hp = hamiltonian_and_projection(psi, E)
    hp2, _ = hamiltonian_and_projection(psi, E)
    hp2, _ = hamiltonian_and_projection(hp, E)
    assert h1.add(hp2, -1.0).norm() < 1e-14      # commutes with H
    # number conservation: sectors map to themselves
    for occ in pe.amps:
        assert occ.length <= 4


def test_operator_norm_identity_and_energy_bound():
    grid, basis = small_basis(d=3)
    E = 3.2
    val, ok = operator_norm_on_PE(OperatorWord(), E, basis, 4)
    assert ok and val == 1.0

    rng = np.random.default_rng(4)
    omega_half = grid.omega ** 0.5
    for _ in range(10):
        n = rng.integers(1, 4)
        hs, word_fs, bound = [], [], 1.0
        for _ in range(n):
            h = mode_vector(basis, rng.standard_normal(3)
                            + 1j * rng.standard_normal(3))
            hs.append(h)
            bound *= h.norm()
            word_fs.append(h.multiply(omega_half))
        word = OperatorWord.annihilators(word_fs)
        val, ok = operator_norm_on_PE(word, E, basis, 4, seed=5)
        assert ok
        assert val <= E ** (n / 2.0) * bound * (1 + 1e-6)


def test_power_iteration_matches_svd_oracle():
    grid, basis = small_basis(d=3)
    rng = np.random.default_rng(6)
    E = 3.2
    omega_half = grid.omega ** 0.5
    fs = [mode_vector(basis, rng.standard_normal(3)
                      + 1j * rng.standard_normal(3)).multiply(omega_half)
          for _ in range(2)]
    word = OperatorWord.annihilators(fs)
    val, ok = operator_norm_on_PE(word, E, basis, 4, seed=7)
    mat, _ = dense_matrix_on_PE(word, E, basis, 4)
    sv = np.linalg.svd(mat, compute_uv=False)
    assert ok
    assert abs(val - sv[0]) < 1e-5 * max(sv[0], 1.0)


def test_near_saturation_two_annihilators():
    # four quanta at energy E/4 fill the projection window; the two-
    # annihilator bound E ||h||^2 is then approached within sqrt(3)/2
    grid = MomentumGrid(s=1, m=1.0, half_width=4.0, n_per_axis=16)
    cell = int(np.argmin(np.abs(grid.omega - 1.2)))
    basis = ModeBasis.from_cells(grid, [cell])
    w0 = grid.omega[cell]
    E = 4.0 * w0 + 1e-9
    h = basis.modes[0]
    word = OperatorWord.annihilators(
        [h.multiply(grid.omega ** 0.5)] * 2)
    mat, _ = dense_matrix_on_PE(word, E, basis, 4)
    sv = np.linalg.svd(mat, compute_uv=False)[0]
    bound = E
    assert sv <= bound + 1e-9
    # oracle value: sqrt(4*3) * w0 = E sqrt(3)/2
    assert abs(sv - np.sqrt(12.0) * w0) < 1e-10
    assert sv >= 0.86 * bound


def test_energy_bound_battery_mixed_words():
    grid, basis = small_basis(d=4, n=16)
    rng = np.random.default_rng(8)
    E = 3.0
    omega_half = grid.omega ** 0.5
    for _ in range(20):
        n = int(rng.integers(1, 5))
        fs, bound = [], 1.0
        for _ in range(n):
            h = mode_vector(basis, rng.standard_normal(4)
                            + 1j * rng.standard_normal(4))
            bound *= h.norm()
            fs.append(h.multiply(omega_half))
        word = OperatorWord.annihilators(fs)
        val, ok = operator_norm_on_PE(word, E, basis, 4, seed=9)
        assert ok and val <= E ** (n / 2.0) * bound * (1 + 1e-6)


def test_gl_damping():
    grid, basis = small_basis()
    vac = FockState.vacuum(basis, 4)
    rep = gl_damping_check(0.0, [vac])
    assert abs(rep["worst_ratio"] - 1.0) < 1e-14

    # single particle at energy w0: (1+w0)^l / (2+w0)^l <= 1
    one, _ = apply_creator(basis.modes[0], vac)
    w0 = basis.energies[0]
    for l in (1.0, 2.0):
        rep = gl_damping_check(l, [one])
        assert abs(rep["worst_ratio"] - ((1 + w0) / (2 + w0)) ** l) < 1e-12

    rng = np.random.default_rng(10)
    states = [random_state(basis, 4, rng) for _ in range(50)]
    for l in (0.0, 1.0, 2.0, 4.0):
        rep = gl_damping_check(l, states)
        assert rep["worst_ratio"] <= 1.0 + 1e-12


def test_vacuum_word_expectation_engine():
    rng = np.random.default_rng(11)
    vecs = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))

    def inner(i, j):
        return np.vdot(vecs[i], vecs[j])

    # <a(u) a*(v)> = <u|v>
    assert abs(vacuum_word_expectation(
        [("a", 0), ("a*", 1)], inner) - inner(0, 1)) < 1e-12
    # leading creator kills it
    assert vacuum_word_expectation([("a*", 0), ("a", 0)], inner) == 0.0
    # permanent structure for <a(u1)a(u2) a*(v1)a*(v2)>
    val = vacuum_word_expectation(
        [("a", 0), ("a", 1), ("a*", 2), ("a*", 3)], inner)
    perm = inner(0, 2) * inner(1, 3) + inner(0, 3) * inner(1, 2)
    assert abs(val - perm) < 1e-12


def test_operator_word_translations():
    # unitary conjugation by U(x) leaves || P_E word P_E || unchanged
    # when P_E commutes with the translation (sharp cell energies)
    grid, basis = small_basis(d=3)
    rng = np.random.default_rng(12)
    E = 3.2
    omega_half = grid.omega ** 0.5
    fs = [mode_vector(basis, rng.standard_normal(3)
                      + 1j * rng.standard_normal(3)).multiply(omega_half)
          for _ in range(2)]
    word = OperatorWord.annihilators(fs)
    conj = OperatorWord([("U", (0.4, (1.3,)))] + word.factors
                        + [("U", (-0.4, (-1.3,)))])
    plain, ok1 = operator_norm_on_PE(word, E, basis, 4, seed=3)
    moved, ok2 = operator_norm_on_PE(conj, E, basis, 4, seed=3)
    assert ok1 and ok2
    assert abs(plain - moved) < 1e-6 * max(plain, 1.0)

    # adjoint of a translated word inverts the translation
    adj = conj.adjoint()
    kinds = [k for k, _ in adj.factors]
    assert kinds == ["U", "a*", "a*", "U"]
