"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run with ``pytest -s tests/test_acceptance.py`` to see the one-line
pass/fail report per criterion.  Expected total runtime is a few minutes
on a commodity machine.
"""

import math
import subprocess
import sys

import numpy as np
import pytest

from fockscope.fits import fit_exponential_rate, fit_power_law
from fockscope.fock import (FockState, ModeBasis, OperatorWord,
                            apply_creator, operator_norm_on_PE, random_state)
from fockscope.grids import MomentumGrid, SPVector
from fockscope.localization import (build_T, correlation_function,
                                    mollifier_profile)
from fockscope.multiindex import (multinomial_identity_lhs,
                                  multinomial_identity_rhs, trinomial_sum)
from fockscope.weyl import FiniteRankFunctional, coincidence_form, \
    stress_energy_integral


def report(criterion, passed, detail=""):
    line = "%s criterion-%s %s" % ("PASS" if passed else "FAIL",
                                   criterion, detail)
    print(line, flush=True)
    assert passed, line


def mode_vector(basis, coeffs):
    amps = sum(c * m.amps for c, m in zip(coeffs, basis.modes))
    return SPVector(basis.grid, amps)


@pytest.fixture(scope="module")
def massive_grid():
    return MomentumGrid(s=1, m=1.0, half_width=4.0, n_per_axis=64)


@pytest.fixture(scope="module")
def massive_T(massive_grid):
    return build_T(massive_grid, r=0.5, E=2.0, gamma=0.5, K=3)


def test_criterion_01_combinatorial_identities():
    ts = (3, -2, 7, 1, -5)
    ok = all(multinomial_identity_lhs(ts, k) ==
             multinomial_identity_rhs(ts, k) for k in range(13))
    ok = ok and all(trinomial_sum(n) == 3 ** n for n in range(13))
    report("01", ok, "multinomial/trinomial exact for k,n <= 12")


def test_criterion_02_energy_bounds(massive_grid):
    rng = np.random.default_rng(202)
    cells = [int(c) for c in np.argsort(massive_grid.omega,
                                        kind="stable")[:4]]
    basis = ModeBasis.from_cells(massive_grid, cells)
    E = 3.0
    omega_half = massive_grid.omega ** 0.5
    worst_margin = np.inf
    for i in range(200):
        n = int(rng.integers(1, 5))
        fs, bound = [], E ** (n / 2.0)
        for _ in range(n):
            h = mode_vector(basis, rng.standard_normal(4)
                            + 1j * rng.standard_normal(4))
            bound *= h.norm()
            fs.append(h.multiply(omega_half))
        val, ok = operator_norm_on_PE(OperatorWord.annihilators(fs), E,
                                      basis, 4, tol=1e-6, seed=i)
        assert ok
        worst_margin = min(worst_margin, bound - val)
    report("02", worst_margin >= -1e-6 * E ** 2,
           "200 words, worst margin %.3e" % worst_margin)


def test_criterion_03_vector_lengths(massive_grid):
    rng = np.random.default_rng(303)
    cells = [int(c) for c in np.argsort(massive_grid.omega,
                                        kind="stable")[:4]]
    basis = ModeBasis.from_cells(massive_grid, cells)
    vac = FockState.vacuum(basis, 5)
    ok = True
    for _ in range(200):
        n = int(rng.integers(1, 6))
        k_split = int(rng.integers(0, n + 1))
        bs = [mode_vector(basis, rng.standard_normal(4)
                          + 1j * rng.standard_normal(4)) for _ in range(n)]
        state = vac
        for b in reversed(bs[k_split:]):
            state, _ = apply_creator(b, state)
        state, _ = OperatorWord.annihilators(bs[:k_split]).apply(state)
        bound = math.sqrt(math.factorial(n)) \
            * float(np.prod([b.norm() for b in bs]))
        ok = ok and state.norm() <= bound + 1e-10
    # orthonormal case: || a*(e)^beta vac || = sqrt(beta!) exactly
    state = vac
    for _ in range(5):
        state, _ = apply_creator(basis.modes[0], state)
    ok = ok and abs(state.norm() - math.sqrt(math.factorial(5))) < 1e-10
    report("03", ok, "200 families, orthonormal equality to 1e-10")


def test_criterion_04_infrared_orders():
    from fockscope.infrared import (estimate_order,
                                    phi_plus_density_functional)
    E = 2.0
    est1 = estimate_order(1, "phi1", n_values=(8, 16, 32, 64),
                          betas=np.arange(1.5, 2.55, 0.1), E=E)
    lo1, hi1 = est1["bracket"]
    est2 = estimate_order(2, "phi2", n_values=(8, 16, 32, 64),
                          betas=np.arange(0.5, 1.55, 0.1), E=E)
    lo2, hi2 = est2["bracket"]
    ok = (1.8 <= lo1 and hi1 <= 2.2) and (0.8 <= lo2 and hi2 <= 1.2)

    grid3 = MomentumGrid(s=3, m=0.0, half_width=4.0 * E, n_per_axis=32)
    rng = np.random.default_rng(404)
    cells = [int(c) for c in np.argsort(grid3.omega, kind="stable")[:6]
             if grid3.omega[c] <= E / 2.0]
    basis = ModeBasis.from_cells(grid3, cells)
    vac = FockState.vacuum(basis, 4)
    states = [vac]
    for c in range(len(cells)):
        st, _ = apply_creator(basis.modes[c], vac)
        states.append(st)
    for _ in range(4):
        i, j = rng.integers(0, len(cells), 2)
        st, _ = apply_creator(basis.modes[j], states[1 + i])
        states.append(st.normalized())
    worst = 0.0
    for _ in range(100):
        b, k = rng.integers(0, len(states), 2)
        phi = FiniteRankFunctional([(1.0, states[b], states[k])], E)
        worst = max(worst, phi_plus_density_functional(phi, 2.0))
    margin = 2.0 * E - worst
    ok = ok and margin >= 0.0
    report("04", ok, "brackets [%.2f,%.2f] [%.2f,%.2f], density margin %.3e"
           % (lo1, hi1, lo2, hi2, margin))


def test_criterion_05_witness_scaling():
    from fockscope.infrared import (witness_density_phi1_closed_form,
                                    witness_density_phi1_grid)
    E = 2.0
    ok = True
    worst = 0.0
    for eps in (0.2, 0.5):
        for n in (8, 16, 32):
            ratio = witness_density_phi1_grid(n, 2.0 - eps, E,
                                              n_per_axis=32) \
                / witness_density_phi1_closed_form(n, eps, E)
            worst = max(worst, abs(ratio - 1.0))
            ok = ok and 0.98 <= ratio <= 1.02
    report("05", ok, "worst ratio deviation %.4f" % worst)


def test_criterion_06_coincidence(massive_grid):
    rng = np.random.default_rng(606)
    cells = [int(c) for c in np.argsort(massive_grid.omega,
                                        kind="stable")[:3]]
    basis = ModeBasis.from_cells(massive_grid, cells)
    vac = FockState.vacuum(basis, 12)
    one, _ = apply_creator(basis.modes[0], vac)
    phi = FiniteRankFunctional(
        [(0.8, vac, vac), (0.4, vac, one), (0.3, one, one)],
        basis.energies[0] + 0.1)
    worst = 0.0
    for count in (2, 3):
        fs = []
        for _ in range(count):
            f = mode_vector(basis, rng.standard_normal(3)
                            + 1j * rng.standard_normal(3))
            fs.append(f * (0.7 / f.norm()))
        xs = [np.array([2.5 * k]) for k in range(count)]
        rep = coincidence_form(phi, xs, fs)
        worst = max(worst, rep["discrepancy"])
    ok = worst <= 1e-8
    # residual sum for N > 2 E / m
    two, _ = apply_creator(basis.modes[1], one)
    E = basis.occupation_energy(list(two.amps)[0]) + 0.05
    phi2 = FiniteRankFunctional([(0.7, vac, two), (0.5, two, two)], E)
    n_weyl = int(np.floor(2 * E / massive_grid.m)) + 1
    fs = []
    xs = []
    for k in range(n_weyl):
        f = mode_vector(basis, rng.standard_normal(3)
                        + 1j * rng.standard_normal(3))
        fs.append(f * (0.6 / f.norm()))
        xs.append(np.array([2.0 * k]))
    rep = coincidence_form(phi2, xs, fs)
    resid = abs(rep["residual_sum"])
    ok = ok and resid <= 1e-10
    report("06", ok, "route gap %.2e, residual %.2e (N=%d)"
           % (worst, resid, n_weyl))


def test_criterion_07_stress_energy(massive_grid):
    rng = np.random.default_rng(707)
    cells = [int(c) for c in np.argsort(massive_grid.omega,
                                        kind="stable")[:3]]
    basis = ModeBasis.from_cells(massive_grid, cells)
    E = 2.0 * float(np.max(basis.energies)) + 0.1
    worst = 0.0
    for _ in range(50):
        psi = FockState(basis, 6, random_state(basis, 2, rng).amps)
        chi = FockState(basis, 6, random_state(basis, 2, rng).amps)
        phi = FiniteRankFunctional([(1.0, psi, chi)], E)
        lhs, rhs = stress_energy_integral(phi)
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    report("07", worst <= 1e-6, "50 functionals, worst %.2e" % worst)


def test_criterion_08_mollifier_identity():
    from fockscope.phase_space import (mollifier_identity_check,
                                       tensor_split_instance)
    rng = np.random.default_rng(808)
    worst = 0.0
    for _ in range(50):
        d1, d2 = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        A, B, energies, psi1, psi2 = tensor_split_instance(rng, d1, d2)
        beta = float(rng.choice([0.5, 1.0, 2.0]))
        delta = float(rng.choice([0.5, 2.0, 8.0]))
        rep = mollifier_identity_check(A, B, energies, psi1, psi2,
                                       beta=beta, delta=delta)
        worst = max(worst, rep["discrepancy"])
    report("08", worst <= 1e-8, "50 instances, worst %.2e" % worst)


def test_criterion_09_time_smearing(massive_grid):
    from fockscope.phase_space import (frequency_bump,
                                       time_smeared_word_norm,
                                       verify_support)
    rng = np.random.default_rng(909)
    cells = [int(c) for c in np.argsort(massive_grid.omega,
                                        kind="stable")[:3]]
    basis = ModeBasis.from_cells(massive_grid, cells)
    g_t = frequency_bump(0.0, 0.9 * massive_grid.m)
    assert verify_support(g_t, -massive_grid.m, massive_grid.m,
                          0.05 * massive_grid.m)
    worst = 0.0
    for n in (1, 2, 3):
        fs = [mode_vector(basis, rng.standard_normal(3)
                          + 1j * rng.standard_normal(3)) for _ in range(n)]
        val = time_smeared_word_norm(OperatorWord.annihilators(fs), g_t,
                                     3.2, basis, 4)
        worst = max(worst, val)
    report("09", worst <= 1e-9, "n <= 3, worst norm %.2e" % worst)


def test_criterion_10_nuclearity_sums(massive_T):
    from fockscope.phase_space import p_norm_partial_sum
    E = 2.0
    cap = int(np.floor(E / massive_T.grid.m))
    k_max = 2 * cap + 4
    ok = True
    detail = []
    for p in (0.25, 0.5, 1.0):
        rep = p_norm_partial_sum(massive_T, E, p, k_max)
        ok = ok and rep["value"] <= rep["majorant"] * (1 + 1e-12)
        ok = ok and rep["tail"] <= 1e-6 * rep["value"]
        detail.append("p=%.2f tail/value %.1e" % (p, rep["tail_over_value"]))
    report("10", ok, "; ".join(detail))


def test_criterion_11_n_uniformity(massive_T):
    grid = massive_T.grid
    E, r, m = 2.0, 0.5, grid.m
    fam = massive_T.family("-")
    q = fam.project(massive_T.eigvec_cols[:, 0])
    g = massive_T.h_profile * q / np.sqrt(grid.omega)
    g_norm2 = grid.cell_weight * float(np.sum(np.abs(g) ** 2))
    h_sup_inv2 = float(np.max(
        (1.0 / massive_T.h_profile[grid.omega <= E]) ** 2))
    from fockscope.phase_space import collective_majorant
    delta = 64.0 / m
    corr_far = float(abs(correlation_function(massive_T, 0, "-",
                                              [delta])[0]))
    majs = [collective_majorant(E, h_sup_inv2, g_norm2, N, corr_far)
            for N in (2, 4, 8, 16)]
    span = max(majs) / min(majs)
    ok = span <= 1.2

    xs = np.linspace(4 * r, 20 * r, 16)
    corr_pp = correlation_function(massive_T, 0, "+", xs)
    rate, _ = fit_exponential_rate(xs, np.abs(corr_pp))
    ok = ok and rate >= m / 2.0

    g3 = MomentumGrid(s=3, m=0.0, half_width=4.0, n_per_axis=24)
    top3 = build_T(g3, r=0.4, E=2.0, gamma=0.75, K=2)
    xs3 = np.linspace(1.6, 8.0, 10)
    expo, _ = fit_power_law(xs3, np.abs(correlation_function(
        top3, 0, "+", xs3)))
    ok = ok and expo <= -(3 - 2) + 0.2
    report("11", ok, "span %.3f, rate %.3f, massless exponent %.3f"
           % (span, rate, expo))


def test_criterion_12_eps_content():
    from fockscope.epsilon_content import (PointCloud,
                                           eps_content_bruteforce,
                                           lattice_ball_count,
                                           lattice_count_bound,
                                           log_key_key_bound)
    rng = np.random.default_rng(1212)
    ok = True
    for _ in range(500):
        N = int(rng.integers(1, 7))
        pts = rng.standard_normal((14, 2 * N))
        pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1)[:, None])
        pts *= float(rng.uniform(0.2, 1.5))
        eps = float(rng.uniform(0.3, 1.0))
        val, exact = eps_content_bruteforce(PointCloud(pts, norm="sup"), eps)
        assert exact
        norm2 = float(np.max(np.linalg.norm(pts, axis=1)))
        ok = ok and math.log(val) <= log_key_key_bound(N, norm2, eps)
    for M in (1, 2, 3):
        ok = ok and lattice_ball_count(4, M) <= lattice_count_bound(2, M)
    report("12", ok, "500 trials and exact lattice counts")


@pytest.mark.slow
def test_criterion_13_kg_dispersion():
    import time
    from fockscope.scattering import (HRCreationSpec, KGWavepacket,
                                      dispersion_exponents,
                                      velocity_tail_slope)
    t0 = time.time()
    grid = MomentumGrid(s=3, m=1.0, half_width=4.0, n_per_axis=24)
    packet = KGWavepacket(grid,
                          lambda k: mollifier_profile((k - 1.0) / 0.8), 1.8)
    rep = dispersion_exponents(packet, np.geomspace(10.0, 80.0, 7))
    ok = abs(rep["sup_exponent"] + 1.5) <= 0.1
    ok = ok and rep["l1_exponent"] <= 1.6
    fast = KGWavepacket(grid,
                        lambda k: mollifier_profile((k - 1.8) / 0.5), 2.3)
    spec = HRCreationSpec(fast, nu=0.25, freq_support=4.5)
    mono = velocity_tail_slope(spec, 0.35, (16.0, 32.0, 64.0), 1.3, 2.3)
    tails = mono["tails"]
    ok = ok and all(b <= a * 1.02 for a, b in zip(tails, tails[1:]))
    scan = velocity_tail_slope(spec, 0.35, (64.0, 128.0, 256.0), 1.3, 2.3)
    bound = -(3 - (3 + 5) * 0.25) + 0.3
    ok = ok and scan["slope"] <= bound
    elapsed = time.time() - t0
    ok = ok and elapsed <= 300.0
    report("13", ok, "sup %.3f, l1 %.3f, tail slope %.3f, %.0fs"
           % (rep["sup_exponent"], rep["l1_exponent"], scan["slope"],
              elapsed))


def test_criterion_14_determinism(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("[run]\nseed = 99\n[eps-content]\ntrials = 60\n")
    payloads = []
    for tag, threads in (("a", "1"), ("b", "2")):
        out = tmp_path / tag
        proc = subprocess.run(
            [sys.executable, "-m", "fockscope.cli", "run", "eps-content",
             "--config", str(cfg), "--out", str(out), "--threads", threads],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        payloads.append((out / "results.csv").read_bytes())
    report("14", payloads[0] == payloads[1],
           "seeded runs byte-identical across thread budgets")
