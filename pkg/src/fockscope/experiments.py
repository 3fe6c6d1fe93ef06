"""Named experiments dispatched by the CLI.

Every experiment returns (rows, summary, figures, grid_digests); rows are
emitted in deterministic order, randomized batteries draw from the
seeded generator only, and thread pools fold results in submission
order, so reports are reproducible bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ConfigError
from .fits import fit_exponential_rate, fit_power_law
from .fock import (FockState, ModeBasis, OperatorWord, apply_creator,
                   operator_norm_on_PE)
from .grids import MomentumGrid, SPVector
from .localization import (build_T, config_correlation_minus,
                           correlation_function, mollifier_profile)
from .report import Row


def _mode_vector(basis, coeffs):
    amps = sum(c * m.amps for c, m in zip(coeffs, basis.modes))
    return SPVector(basis.grid, amps)


def _default_grid(cfg):
    s = cfg.get("grid", "s")
    m = cfg.get("grid", "m")
    E = cfg.get("fock", "energy")
    n = cfg.get("grid", "n_per_axis")
    if n is None:
        n = {1: 64, 2: 32, 3: 24}[s]
    half = cfg.get("grid", "half_width")
    if half is None:
        half = 4.0 * max(E, m, 1.0)
    return MomentumGrid(s=s, m=m, half_width=half, n_per_axis=n)


def _low_cell_basis(grid, d):
    order = np.argsort(grid.omega, kind="stable")
    return ModeBasis.from_cells(grid, [int(c) for c in order[:d]])


# ----------------------------------------------------------------------

def run_energy_bounds(cfg, rng, threads):
    grid = _default_grid(cfg)
    d = cfg.get("fock", "modes")
    n_max = cfg.get("fock", "n_max")
    E = cfg.get("fock", "energy")
    basis = _low_cell_basis(grid, d)
    n_words = cfg.get("energy-bounds", "words")
    omega_half = grid.omega ** 0.5
    rows = []
    margins = []
    for i in range(n_words):
        n = int(rng.integers(1, cfg.get("energy-bounds", "max_len") + 1))
        fs, bound = [], E ** (n / 2.0)
        for _ in range(n):
            h = _mode_vector(basis, rng.standard_normal(d)
                             + 1j * rng.standard_normal(d))
            bound *= h.norm()
            fs.append(h.multiply(omega_half))
        word = OperatorWord.annihilators(fs)
        val, ok = operator_norm_on_PE(word, E, basis, n_max, seed=i)
        passed = ok and val <= bound * (1.0 + 2e-6)
        margins.append(bound - val)
        rows.append(Row("energy-bound", {"word": i, "n": n}, val, bound,
                        passed))

    # vector-length battery: ||a(b_1)..a*(b_n) vac|| <= sqrt(n!) prod ||b||
    import math
    vac = FockState.vacuum(basis, max(n_max, 5))
    for i in range(cfg.get("energy-bounds", "families")):
        n = int(rng.integers(1, 6))
        k_split = int(rng.integers(0, n + 1))
        bs = [_mode_vector(basis, rng.standard_normal(d)
                           + 1j * rng.standard_normal(d)) for _ in range(n)]
        state = vac
        for b in reversed(bs[k_split:]):
            state, _ = apply_creator(b, state)
        word = OperatorWord.annihilators(bs[:k_split])
        state, _ = word.apply(state)
        bound = math.sqrt(math.factorial(n)) * float(np.prod([b.norm()
                                                              for b in bs]))
        rows.append(Row("vector-length-bound", {"family": i, "n": n},
                        state.norm(), bound, state.norm() <= bound + 1e-10))
    # orthonormal equality case
    e1 = basis.modes[0]
    state = vac
    for _ in range(4):
        state, _ = apply_creator(e1, state)
    target = math.sqrt(math.factorial(4))
    rows.append(Row("orthonormal-creation-norm", {"beta": 4}, state.norm(),
                    target, abs(state.norm() - target) < 1e-10))
    summary = {"worst_margin": min(margins)}
    figures = {"energy_bounds_margins": {
        "series": [("bound - value", list(range(len(margins))), margins)],
        "xlabel": "word", "ylabel": "margin", "logy": False}}
    return rows, summary, figures, {"grid": grid.digest()}


# ----------------------------------------------------------------------

def run_infrared_order(cfg, rng, threads):
    from .infrared import (estimate_order, phi_plus_density_functional,
                           witness_density_phi1_closed_form,
                           witness_density_phi1_grid)
    from .weyl import FiniteRankFunctional
    E = cfg.get("fock", "energy")
    rows = []
    est1 = estimate_order(1, "phi1", n_values=(8, 16, 32, 64),
                          betas=np.arange(1.5, 2.55, 0.1), E=E)
    lo, hi = est1["bracket"]
    rows.append(Row("infrared-order-linear-field", {"witness": "phi1"},
                    0.5 * (lo + hi), 2.0, 1.8 <= lo <= 2.0 <= hi <= 2.2))
    est2 = estimate_order(2, "phi2", n_values=(8, 16, 32, 64),
                          betas=np.arange(0.5, 1.55, 0.1), E=E)
    lo2, hi2 = est2["bracket"]
    rows.append(Row("infrared-order-wick-square", {"witness": "phi2"},
                    0.5 * (lo2 + hi2), 1.0, 0.8 <= lo2 <= 1.0 <= hi2 <= 1.2))

    for eps in (0.2, 0.5):
        for n in (8, 16, 32):
            gridv = witness_density_phi1_grid(n, 2.0 - eps, E, n_per_axis=32)
            closed = witness_density_phi1_closed_form(n, eps, E)
            ratio = gridv / closed
            rows.append(Row("witness-scaling-ratio", {"eps": eps, "n": n},
                            ratio, 1.02, 0.98 <= ratio <= 1.02))

    # energy-bound battery for the field density at beta = 2
    grid3 = MomentumGrid(s=3, m=0.0, half_width=4.0 * max(E, 1.0),
                         n_per_axis=cfg.get("infrared-order", "battery_axis"))
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
    for i in range(cfg.get("infrared-order", "battery")):
        b, k = rng.integers(0, len(states), 2)
        phi = FiniteRankFunctional([(1.0, states[b], states[k])], E)
        val = phi_plus_density_functional(phi, 2.0)
        worst = max(worst, val)
    rows.append(Row("field-density-energy-bound", {"beta": 2.0,
                                                   "battery": i + 1},
                    worst, 2.0 * E, worst <= 2.0 * E + 1e-9))

    scan = est1["scan"]
    figures = {"infrared_witness_densities": {
        "series": [("beta=%.2f" % b, scan.n_values, list(row))
                   for b, row in zip(scan.betas, scan.values)],
        "xlabel": "witness index n", "ylabel": "density",
        "logx": True, "logy": True}}
    summary = {"ord_bracket": [lo, hi], "ord_bracket_wick2": [lo2, hi2],
               "density_sup": worst}
    return rows, summary, figures, {"battery_grid": grid3.digest()}


# ----------------------------------------------------------------------

def run_nuclearity(cfg, rng, threads):
    from .phase_space import p_norm_partial_sum
    # reference configuration: the cutoff stays at 4 max(m, 1) so the
    # smearing transform is strictly positive on the grid
    m = cfg.get("grid", "m")
    grid = MomentumGrid(s=1, m=m, half_width=4.0 * max(m, 1.0),
                        n_per_axis=cfg.get("grid", "n_per_axis") or 64)
    E = cfg.get("nuclearity", "energy")
    r = cfg.get("nuclearity", "radius")
    gamma = cfg.get("nuclearity", "gamma")
    K = cfg.get("nuclearity", "kappa_order")
    top = build_T(grid, r=r, E=E, gamma=gamma, K=K)
    rows = []
    t = top.eigenvalues
    rows.append(Row("eigenvalues-descending", {"dim": top.dim},
                    float(np.max(np.diff(t))) if top.dim > 1 else 0.0, 0.0,
                    bool(np.all(np.diff(t) <= 1e-12))))
    for p in (0.25, 0.5, 1.0):
        rows.append(Row("schatten-sum", {"p": p}, top.schatten_sum(p),
                        float("inf"), np.isfinite(top.schatten_sum(p))))
    part_total = sum(top.part_trace_norms.values())
    rows.append(Row("trace-norm-subadditivity", {}, top.schatten_sum(1.0),
                    part_total, top.schatten_sum(1.0) <= part_total + 1e-9))
    cap = int(np.floor(E / grid.m)) if grid.m > 0 else 0
    k_max = 2 * cap + 4
    for p in (0.25, 0.5, 1.0):
        rep = p_norm_partial_sum(top, E, p, k_max)
        rows.append(Row("nuclear-partial-sum", {"p": p, "k_max": k_max},
                        rep["value"], rep["majorant"],
                        rep["value"] <= rep["majorant"] * (1 + 1e-12)))
        rows.append(Row("nuclear-tail", {"p": p}, rep["tail"],
                        1e-6 * rep["value"],
                        rep["tail"] <= 1e-6 * rep["value"]))
    # refinement study
    sums = []
    for n in (16, 32):
        g2 = MomentumGrid(s=1, m=grid.m, half_width=grid.half_width,
                          n_per_axis=n)
        t2 = build_T(g2, r=r, E=E, gamma=gamma, K=min(K, 3))
        sums.append(t2.schatten_sum(0.5))
    drift = abs(sums[1] - sums[0]) / sums[0]
    rows.append(Row("half-power-sum-refinement", {"coarse": 16, "fine": 32},
                    drift, 0.05, drift < 0.05))
    figures = {"nuclearity_spectrum": {
        "series": [("eigenvalues", list(range(1, top.dim + 1)),
                    [float(v) for v in t])],
        "xlabel": "index", "ylabel": "t_j", "logy": True}}
    summary = {"schatten_half_sum": top.schatten_sum(0.5),
               "refinement_drift": drift}
    return rows, summary, figures, {"grid": grid.digest()}


# ----------------------------------------------------------------------

def run_clustering(cfg, rng, threads):
    from .phase_space import (NPointConfig, collective_majorant,
                              collective_norm_measured,
                              pair_correlations_lattice)
    m = cfg.get("grid", "m")
    grid = MomentumGrid(s=1, m=m, half_width=4.0 * max(m, 1.0),
                        n_per_axis=cfg.get("grid", "n_per_axis") or 64)
    E = cfg.get("clustering", "energy")
    r = cfg.get("clustering", "radius")
    top = build_T(grid, r=r, E=E, gamma=0.5, K=3)
    rows = []
    xs = np.linspace(4 * r, 20 * r, 16)
    corr_pp = correlation_function(top, 0, "+", xs)
    rate, _ = fit_exponential_rate(xs, np.abs(corr_pp))
    rows.append(Row("correlation-decay-rate", {"sign": "+"}, rate,
                    grid.m / 2.0, rate >= grid.m / 2.0))
    far = np.linspace(4 * r + 0.2, 10 * r, 8)
    locality = float(np.max(np.abs(config_correlation_minus(top, 0, far))))
    rows.append(Row("strict-locality", {"sign": "-"}, locality, 1e-9,
                    locality < 1e-9))

    fam = top.family("-")
    q = fam.project(top.eigvec_cols[:, 0])
    g = top.h_profile * q / np.sqrt(grid.omega)
    g_norm2 = grid.cell_weight * float(np.sum(np.abs(g) ** 2))
    h_sup_inv2 = float(np.max((1.0 / top.h_profile[grid.omega <= E]) ** 2))
    for N, spacing in ((2, 6.0), (4, 4.0), (8, 2.8)):
        config = NPointConfig([[0.0, k * spacing] for k in range(N)])
        corr = pair_correlations_lattice(grid, g, config)
        maj = collective_majorant(E, h_sup_inv2, g_norm2, N,
                                  float(np.max(corr)))
        measured = collective_norm_measured(grid, q, config, E, n_cap=2)
        rows.append(Row("collective-norm", {"N": N}, measured, maj,
                        measured <= maj * (1 + 1e-9)))

    delta = 64.0 / grid.m
    corr_far = float(abs(correlation_function(top, 0, "-", [delta])[0]))
    majs = [collective_majorant(E, h_sup_inv2, g_norm2, N, corr_far)
            for N in (2, 4, 8, 16)]
    span = max(majs) / min(majs)
    rows.append(Row("n-uniformity-span", {"delta": delta}, span, 1.2,
                    span <= 1.2))

    # battery-sup seminorm against the operator-norm route
    from .fock import FockState, apply_creator
    from .phase_space import collective_seminorm
    from .weyl import FiniteRankFunctional
    cells = [int(c) for c in np.argsort(grid.omega, kind="stable")[:2]
             if grid.omega[c] <= E]
    cbasis = ModeBasis.from_cells(grid, cells)
    vac = FockState.vacuum(cbasis, 2)
    one, _ = apply_creator(cbasis.modes[0], vac)
    battery = [FiniteRankFunctional([(1.0, vac, vac)], 0.0),
               FiniteRankFunctional([(1.0, one, one)],
                                    cbasis.energies[0] + 0.1)]
    cfg4 = NPointConfig([[0.0, 3.0 * k] for k in range(4)])
    semi = collective_seminorm(q, cfg4, battery)
    measured4 = collective_norm_measured(grid, q, cfg4, E, n_cap=2)
    rows.append(Row("collective-seminorm-battery", {"N": 4}, semi,
                    2.0 * measured4, semi <= 2.0 * measured4 + 1e-9))

    # massless s = 3 power-law exponent
    g3 = MomentumGrid(s=3, m=0.0, half_width=4.0, n_per_axis=24)
    top3 = build_T(g3, r=0.4, E=2.0, gamma=0.75, K=2)
    xs3 = np.linspace(1.6, 8.0, 10)
    corr3 = correlation_function(top3, 0, "+", xs3)
    expo, _ = fit_power_law(xs3, np.abs(corr3))
    rows.append(Row("massless-power-law", {"s": 3}, expo,
                    -(3 - 2) + 0.2, expo <= -(3 - 2) + 0.2))
    figures = {"clustering_correlations": {
        "series": [("massive (+)", list(xs), list(np.abs(corr_pp))),
                   ("massless s=3 (+)", list(xs3), list(np.abs(corr3)))],
        "xlabel": "|x|", "ylabel": "|correlation|", "logy": True}}
    summary = {"decay_rate": rate, "massless_exponent": expo,
               "n_uniformity_span": span}
    return rows, summary, figures, {"grid": grid.digest(),
                                    "massless_grid": g3.digest()}


# ----------------------------------------------------------------------

def run_eps_content(cfg, rng, threads):
    import math
    from .epsilon_content import (PointCloud, eps_content_bruteforce,
                                  lattice_ball_count, lattice_count_bound,
                                  log_key_key_bound)
    rows = []
    single = PointCloud([[0.0, 0.0]])
    content, exact = eps_content_bruteforce(single, 0.5)
    rows.append(Row("singleton-content", {}, content, 1, content == 1))

    trials = cfg.get("eps-content", "trials")
    failures = 0
    for _ in range(trials):
        N = int(rng.integers(1, 7))
        pts = rng.standard_normal((14, 2 * N))
        pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1)[:, None])
        pts *= float(rng.uniform(0.2, 1.5))
        eps = float(rng.uniform(0.3, 1.0))
        val, _ = eps_content_bruteforce(PointCloud(pts, norm="sup"), eps)
        norm2 = float(np.max(np.linalg.norm(pts, axis=1)))
        if math.log(val) > log_key_key_bound(N, norm2, eps):
            failures += 1
    rows.append(Row("key-key-bound-trials", {"trials": trials}, failures, 0,
                    failures == 0))
    for M in (1, 2, 3):
        lhs = lattice_ball_count(4, M)
        rhs = lattice_count_bound(2, M)
        rows.append(Row("lattice-count", {"M": M}, lhs, rhs, lhs <= rhs))
    summary = {"trials": trials, "failures": failures}
    return rows, summary, {}, {}


# ----------------------------------------------------------------------

def run_coincidence(cfg, rng, threads):
    from .weyl import FiniteRankFunctional, coincidence_form
    grid = _default_grid(cfg)
    d = cfg.get("fock", "modes")
    basis = _low_cell_basis(grid, d)
    n_max = max(cfg.get("fock", "n_max"), 10)
    vac = FockState.vacuum(basis, n_max)
    one, _ = apply_creator(basis.modes[0], vac)
    phi = FiniteRankFunctional(
        [(0.8, vac, vac), (0.4, vac, one), (0.3, one, one)],
        basis.energies[0] + 0.1)
    rows = []
    for count in (2, 3):
        fs = []
        for _ in range(count):
            f = _mode_vector(basis, rng.standard_normal(d)
                             + 1j * rng.standard_normal(d))
            fs.append(f * (0.7 / f.norm()))
        xs = [np.array([2.5 * k]) for k in range(count)]
        rep = coincidence_form(phi, xs, fs)
        rows.append(Row("coincidence-route-agreement", {"N": count},
                        rep["discrepancy"], 1e-8,
                        rep["discrepancy"] <= 1e-8))
    # residual sum for N > 2 E / m
    two, _ = apply_creator(basis.modes[1 % d], one)
    E = basis.occupation_energy(list(two.amps)[0]) + 0.05
    phi2 = FiniteRankFunctional([(0.7, vac, two), (0.5, two, two)], E)
    n_weyl = int(np.floor(2 * E / grid.m)) + 1
    fs = []
    xs = []
    for k in range(n_weyl):
        f = _mode_vector(basis, rng.standard_normal(d)
                         + 1j * rng.standard_normal(d))
        fs.append(f * (0.6 / f.norm()))
        xs.append(np.array([2.0 * k]))
    rep = coincidence_form(phi2, xs, fs)
    rows.append(Row("coincidence-residual-sum", {"N": n_weyl},
                    abs(rep["residual_sum"]), 1e-10,
                    abs(rep["residual_sum"]) <= 1e-10))
    summary = {"commutation_defect": rep["commutation_defect"]}
    return rows, summary, {}, {"grid": grid.digest()}


# ----------------------------------------------------------------------

def run_mollifier(cfg, rng, threads):
    from .phase_space import mollifier_identity_check, tensor_split_instance
    rows = []
    instances = cfg.get("mollifier", "instances")
    betas = (0.5, 1.0, 2.0)
    deltas = (0.5, 2.0, 8.0)
    cases = []
    for i in range(instances):
        d1, d2 = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        cases.append((i, tensor_split_instance(rng, d1, d2)))

    def work(case):
        i, (A, B, energies, psi1, psi2) = case
        out = []
        for beta in betas:
            for delta in deltas:
                rep = mollifier_identity_check(A, B, energies, psi1, psi2,
                                               beta=beta, delta=delta)
                out.append((i, beta, delta, rep["discrepancy"]))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, cases))
    else:
        chunks = [work(c) for c in cases]
    worst = 0.0
    for chunk in chunks:
        for i, beta, delta, disc in chunk:
            worst = max(worst, disc)
            rows.append(Row("energy-transfer-identity",
                            {"instance": i, "beta": beta, "delta": delta},
                            disc, 1e-8, disc <= 1e-8))
    summary = {"worst_discrepancy": worst}
    return rows, summary, {}, {}


# ----------------------------------------------------------------------

def run_scattering(cfg, rng, threads):
    from .scattering import (HRCreationSpec, KGWavepacket,
                             asymptotic_state_convergence,
                             detector_integral, dispersion_exponents,
                             velocity_tail_slope)
    from .weyl import FiniteRankFunctional
    grid = MomentumGrid(s=3, m=1.0, half_width=4.0, n_per_axis=24)
    packet = KGWavepacket(grid, lambda k: mollifier_profile((k - 1.0) / 0.8),
                          support_radius=1.8)
    ts = np.geomspace(10.0, 80.0, 7)
    rep = dispersion_exponents(packet, ts)
    rows = [
        Row("kg-sup-decay", {"t_lo": 10, "t_hi": 80}, rep["sup_exponent"],
            -1.5, abs(rep["sup_exponent"] + 1.5) <= 0.1),
        Row("kg-l1-growth", {"t_lo": 10, "t_hi": 80}, rep["l1_exponent"],
            1.6, rep["l1_exponent"] <= 1.6),
    ]
    fast = KGWavepacket(grid, lambda k: mollifier_profile((k - 1.8) / 0.5),
                        support_radius=2.3)
    spec = HRCreationSpec(fast, nu=0.25, freq_support=4.5)
    scan = velocity_tail_slope(spec, 0.35, (16.0, 32.0, 64.0), 1.3, 2.3)
    tails = scan["tails"]
    mono = all(b <= a * 1.02 for a, b in zip(tails, tails[1:]))
    rows.append(Row("velocity-tail-monotone", {"T": "16..64"},
                    tails[-1], tails[0], mono))
    if cfg.get("scattering", "asymptotic_slope"):
        scan2 = velocity_tail_slope(spec, 0.35, (64.0, 128.0, 256.0),
                                    1.3, 2.3)
        bound = -(3 - (3 + 5) * 0.25) + 0.3
        rows.append(Row("velocity-tail-slope", {"T": "64..256"},
                        scan2["slope"], bound, scan2["slope"] <= bound))

    cells = [int(np.argmin(np.abs(grid.abs_p - 0.55))),
             int(np.argmin(np.abs(grid.abs_p - 1.75)))]
    basis = ModeBasis.from_cells(grid, cells)
    packs = [KGWavepacket(grid, lambda k: mollifier_profile((k - 0.55) / 0.25),
                          0.8),
             KGWavepacket(grid, lambda k: mollifier_profile((k - 1.75) / 0.25),
                          2.0)]
    specs = [HRCreationSpec(p, nu=0.25, freq_support=5.0) for p in packs]
    gs = []
    for c in cells:
        g = np.zeros(grid.n_cells, dtype=complex)
        g[c] = 1.0 / np.sqrt(grid.cell_weight)
        gs.append(g)
    hr = asymptotic_state_convergence(specs, gs, (8.0, 16.0, 32.0, 64.0),
                                      basis, 4,
                                      windows=[(0.3, 0.8), (1.5, 2.0)])
    rows.append(Row("asymptotic-state-stabilized", {"T": 64},
                    hr["distance_to_limit"], 1e-10,
                    hr["distance_to_limit"] <= 1e-10))

    g1 = MomentumGrid(s=1, m=1.0, half_width=4.0, n_per_axis=64)
    cb = _low_cell_basis(g1, 3)
    vac1 = FockState.vacuum(cb, 3)
    one1, _ = apply_creator(cb.modes[1], vac1)
    phi = FiniteRankFunctional([(1.0, one1, one1)], cb.energies[1] + 0.1)
    det = detector_integral(phi, np.exp(-g1.abs_p ** 2).astype(complex),
                            (0.0, 3.0, 9.0), 3.0)
    vals = np.asarray(det["values"])
    drift = float(np.max(np.abs(vals - vals[0])))
    rows.append(Row("detector-time-constancy", {}, drift, 1e-8,
                    drift <= 1e-8 * max(1.0, abs(vals[0]))))
    rows.append(Row("detector-uniform-bound", {},
                    float(np.max(np.abs(vals))), det["majorant"],
                    bool(np.all(np.abs(vals) <= det["majorant"] + 1e-12))))
    figures = {"kg_dispersion": {
        "series": [("sup |f_t|", list(ts), rep["sup_values"]),
                   ("L1 norm", list(ts), rep["l1_values"])],
        "xlabel": "t", "ylabel": "value", "logx": True, "logy": True}}
    summary = {"sup_exponent": rep["sup_exponent"],
               "l1_exponent": rep["l1_exponent"],
               "tails": tails}
    return rows, summary, figures, {"grid": grid.digest()}


# ----------------------------------------------------------------------

def run_qm_translations(cfg, rng, threads):
    from .qm import (box_indicator, divergence_witness_growth,
                     qm_translation_checks)
    grid = MomentumGrid(s=1, m=1.0, half_width=8.0, n_per_axis=128)
    rows = []
    psi = box_indicator(grid, 1.2)
    rep = qm_translation_checks(grid, psi, psi,
                                region_volume=2 * 1.2 + grid.dx)
    rows.append(Row("translation-volume-bound", {"pair": "box-box"},
                    rep["ratio"], 1.0, rep["ratio"] <= 1.0 + 1e-9))
    for i in range(cfg.get("qm-translations", "battery")):
        phi = rng.standard_normal(len(psi)) + 1j * rng.standard_normal(len(psi))
        phi /= np.sqrt(grid.x_weight * np.sum(np.abs(phi) ** 2))
        rep = qm_translation_checks(grid, phi, psi,
                                    region_volume=2 * 1.2 + grid.dx)
        rows.append(Row("translation-volume-bound", {"pair": "random-%d" % i},
                        rep["ratio"], 1.0, rep["ratio"] <= 1.0 + 1e-9))
    wit = divergence_witness_growth(0.2, (20.0, 40.0, 80.0, 160.0))
    rows.append(Row("divergence-witness-growth", {"delta": 0.2, "k": 1},
                    wit["exponent"], 0.0, wit["exponent"] > 0.0))
    summary = {"witness_exponent": wit["exponent"]}
    figures = {"qm_witness_growth": {
        "series": [("truncated integral", [20.0, 40.0, 80.0, 160.0],
                    wit["growth"])],
        "xlabel": "R", "ylabel": "integral", "logx": True, "logy": True}}
    return rows, summary, figures, {"grid": grid.digest()}


# ----------------------------------------------------------------------

EXPERIMENTS = {
    "energy-bounds": {
        "fn": run_energy_bounds,
        "describe": "operator-norm energy bounds and vector-length bounds "
                    "on random words [energy-bound, vector-length-bound]",
        "schema": {("energy-bounds", "words"): (int, 200, True),
                   ("energy-bounds", "max_len"): (int, 4, True),
                   ("energy-bounds", "families"): (int, 200, True)},
        "randomized": True,
    },
    "infrared-order": {
        "fn": run_infrared_order,
        "describe": "infrared-order brackets, witness scaling laws and the "
                    "field-density energy bound [infrared-order-*, "
                    "witness-scaling-ratio, field-density-energy-bound]",
        "schema": {("infrared-order", "battery"): (int, 100, True),
                   ("infrared-order", "battery_axis"): (int, 32, True)},
        "randomized": True,
    },
    "nuclearity": {
        "fn": run_nuclearity,
        "describe": "localization-energy spectra, Schatten sums and nuclear "
                    "partial sums against the closed majorant "
                    "[schatten-sum, nuclear-partial-sum, nuclear-tail]",
        "schema": {("nuclearity", "radius"): (float, 0.5, True),
                   ("nuclearity", "gamma"): (float, 0.5, True),
                   ("nuclearity", "kappa_order"): (int, 4, True),
                   ("nuclearity", "energy"): (float, 2.0, True)},
        "randomized": False,
    },
    "clustering": {
        "fn": run_clustering,
        "describe": "correlation decay fits, strict locality, collective "
                    "norms and N-uniformity of the majorant "
                    "[correlation-decay-rate, collective-norm, "
                    "n-uniformity-span, massless-power-law]",
        "schema": {("clustering", "radius"): (float, 0.5, True),
                   ("clustering", "energy"): (float, 2.0, True)},
        "randomized": False,
    },
    "eps-content": {
        "fn": run_eps_content,
        "describe": "packing counts against covering bounds and the exact "
                    "lattice count [key-key-bound-trials, lattice-count]",
        "schema": {("eps-content", "trials"): (int, 500, True)},
        "randomized": True,
    },
    "coincidence": {
        "fn": run_coincidence,
        "describe": "direct vs partition-sum coincidence forms and the "
                    "residual-sum vanishing [coincidence-route-agreement, "
                    "coincidence-residual-sum]",
        "randomized": True,
        "schema": {},
    },
    "mollifier": {
        "fn": run_mollifier,
        "describe": "energy-transfer identity on commuting tensor splits "
                    "[energy-transfer-identity]",
        "schema": {("mollifier", "instances"): (int, 6, True)},
        "randomized": True,
    },
    "scattering": {
        "fn": run_scattering,
        "describe": "Klein-Gordon dispersion fits, velocity-split tails, "
                    "asymptotic-state stabilization, detector integrals "
                    "[kg-sup-decay, kg-l1-growth, velocity-tail-*, "
                    "asymptotic-state-stabilized, detector-*]",
        "schema": {("scattering", "asymptotic_slope"): (bool, False, False)},
        "randomized": True,
    },
    "qm-translations": {
        "fn": run_qm_translations,
        "describe": "square-integrability of translated wavefunctions and "
                    "the divergence witness [translation-volume-bound, "
                    "divergence-witness-growth]",
        "schema": {("qm-translations", "battery"): (int, 20, True)},
        "randomized": True,
    },
}


def run_experiment(name, config, threads=None):
    """Execute one experiment; returns (rows, summary, figures, digests)."""
    if name not in EXPERIMENTS:
        raise ConfigError("unknown experiment '%s'" % name)
    seed = config.get("run", "seed")
    rng = np.random.default_rng(seed if seed is not None else 0)
    if threads is None:
        threads = config.get("run", "threads")
    return EXPERIMENTS[name]["fn"](config, rng, threads)
