import numpy as np
import pytest

from fockscope.fock import FockState, ModeBasis, apply_creator
from fockscope.grids import MomentumGrid, SPVector
from fockscope.infrared import (
    energy1_product_density, estimate_order, phi_plus_density_functional,
    sup_transfer_check, upper_scan_bounded, wick2_threshold_check,
    wick_threshold, witness_density_phi1, witness_density_phi1_closed_form,
    witness_density_phi1_grid,
)
from fockscope.weyl import FiniteRankFunctional


def test_witness_phi1_scaling_law():
    E = 2.0
    for beta in (1.6, 2.0, 2.4):
        v8 = witness_density_phi1(8, beta, E)
        v32 = witness_density_phi1(32, beta, E)
        # value(n2)/value(n1) = (n2/n1)^{2-beta} exactly on these witnesses
        ratio = v32 / v8
        assert abs(ratio - 4.0 ** (2.0 - beta)) < 0.05 * ratio


def test_witness_grid_matches_closed_form():
    # acceptance target: ratio in [0.98, 1.02] for eps in {0.2, 0.5}
    E = 2.0
    for eps in (0.2, 0.5):
        for n in (8, 16, 32):
            grid_val = witness_density_phi1_grid(n, 2.0 - eps, E,
                                                 n_per_axis=32)
            closed = witness_density_phi1_closed_form(n, eps, E)
            assert 0.98 <= grid_val / closed <= 1.02, (eps, n)


def test_estimate_order_phi_plus():
    est = estimate_order(1, "phi1", n_values=(8, 16, 32, 64),
                         betas=np.arange(1.5, 2.55, 0.1))
    lo, hi = est["bracket"]
    assert 1.8 <= lo <= 2.0 <= hi <= 2.2


def test_estimate_order_wick_square_s3():
    est = estimate_order(2, "phi2", n_values=(8, 16, 32, 64),
                         betas=np.arange(0.5, 1.55, 0.1))
    lo, hi = est["bracket"]
    assert 0.8 <= lo <= 1.0 <= hi <= 1.2


def test_upper_scan_s4():
    rep = upper_scan_bounded(2, n_values=(8, 16, 32),
                             betas=(0.1, 0.5, 1.0), s=4)
    assert rep["all_bounded"]


def test_wick2_threshold_cases():
    rep = wick2_threshold_check(3, 3, 0.1)
    assert rep["condition"] and rep["threshold"] == 0.0
    assert rep["agrees"]
    rep = wick2_threshold_check(2, 3, 0.9)
    assert not rep["condition"] and rep["threshold"] == 1.0
    assert rep["agrees"]
    rep = wick2_threshold_check(2, 5, 0.0)
    assert rep["condition"]
    assert rep["agrees"]
    assert wick_threshold(2, 4) == 0.0


def _battery(grid, rng, n_states, E):
    cells = [int(c) for c in np.argsort(grid.omega)[:6]
             if grid.omega[c] <= E / 2.0]
    basis = ModeBasis.from_cells(grid, cells)
    vac = FockState.vacuum(basis, 4)
    singles = []
    for c in range(len(cells)):
        st, _ = apply_creator(basis.modes[c], vac)
        singles.append(st)
    states = [vac] + singles
    # a few two-particle states
    for _ in range(4):
        i, j = rng.integers(0, len(cells), 2)
        st, _ = apply_creator(basis.modes[j], singles[i])
        states.append(st.normalized())
    out = []
    for _ in range(n_states):
        b, k = rng.integers(0, len(states), 2)
        out.append(FiniteRankFunctional([(1.0, states[b], states[k])], E))
    return basis, states, out


def test_ebound_battery():
    grid = MomentumGrid(s=3, m=0.0, half_width=4.0, n_per_axis=32)
    rng = np.random.default_rng(0)
    E = 2.5
    _, _, battery = _battery(grid, rng, 40, E)
    for phi in battery:
        val = phi_plus_density_functional(phi, 2.0)
        assert val <= 2.0 * E + 1e-9


def test_sup_transfer():
    grid = MomentumGrid(s=3, m=0.0, half_width=4.0, n_per_axis=16)
    rng = np.random.default_rng(1)
    E = 2.5
    _, states, battery = _battery(grid, rng, 12, E)
    # mixtures of the battery's own rank-one terms with total weight 1
    mixtures = []
    for _ in range(6):
        cs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        cs /= np.sum(np.abs(cs))
        picks = rng.integers(0, len(battery), 3)
        terms = [(c, battery[i].terms[0][1], battery[i].terms[0][2])
                 for c, i in zip(cs, picks)]
        mixtures.append(FiniteRankFunctional(terms, E))
    rep = sup_transfer_check(battery, mixtures, 2.0)
    assert rep["worst_excess"] <= 1e-10


def test_energy1_bound():
    grid = MomentumGrid(s=3, m=0.0, half_width=4.0, n_per_axis=16)
    rng = np.random.default_rng(2)
    E = 3.0
    for n in (1, 2, 3):
        for (k, l) in ((n, 0), (n + 1, 1), (2, 2)):
            if (k - l + n) % 2 or abs(k - l) > n:
                continue
            kmax = max(k, l, 1)
            mask = (grid.omega <= E / kmax).astype(float)
            if mask.sum() == 0:
                continue
            u = SPVector(grid, mask * (rng.standard_normal(grid.n_cells)
                                       + 1j * rng.standard_normal(grid.n_cells)))
            v = SPVector(grid, mask * (rng.standard_normal(grid.n_cells)
                                       + 1j * rng.standard_normal(grid.n_cells)))
            val, bound = energy1_product_density(grid, u, v, k, l, n, E)
            assert val <= bound + 1e-9, (n, k, l)
            assert val >= -1e-12


def test_scan_monotone_in_beta_unit_ball():
    # supports inside the unit ball: density nonincreasing in beta
    E = 0.9
    for n in (4, 8):
        vals = [witness_density_phi1(n, b, E) for b in (1.6, 2.0, 2.4)]
        assert all(v >= 0 for v in vals)
        assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_estimate_order_diagnostics():
    with pytest.raises(Exception):
        estimate_order(1, "phi1", n_values=(8, 16),
                       betas=np.arange(1.5, 2.5, 0.1))


def test_product_state_field_density_closed_form():
    """<H^{(n-1)} | phi+~(p) | H^{n}> = sqrt(n) H(-p) / sqrt(2 omega) for
    a J-symmetric single-particle profile H."""
    from fockscope.fock import FockState, ModeBasis, apply_creator
    from fockscope.grids import SPVector
    from fockscope.weyl import wick_field_density
    grid = MomentumGrid(s=1, m=1.0, half_width=4.0, n_per_axis=32)
    cell = int(np.argsort(grid.omega, kind="stable")[0])
    neg = int(grid._neg_index[cell])
    basis = ModeBasis.from_cells(grid, [cell, neg])
    u = SPVector(grid, (basis.modes[0].amps + basis.modes[1].amps)
                 / np.sqrt(2.0))
    vac = FockState.vacuum(basis, 5)
    n = 3
    ket = vac
    for _ in range(n):
        ket, _ = apply_creator(u, ket)
    bra = vac
    for _ in range(n - 1):
        bra, _ = apply_creator(u, bra)
    ket = ket.normalized()
    bra = bra.normalized()
    val = wick_field_density(bra, ket, 1, cell)
    # the profile's density value at -p is (1/sqrt 2)/sqrt(w)
    expect = np.sqrt(n) * (1.0 / np.sqrt(2.0)) \
        / np.sqrt(grid.cell_weight) / np.sqrt(2.0 * grid.omega[cell])
    assert abs(val - expect) < 1e-12


def test_spectral_density_dispatcher():
    from fockscope.infrared import spectral_density
    v1 = spectral_density("phi1", 1, 2.0, n=8, E=2.0)
    assert abs(v1 - witness_density_phi1(8, 2.0, 2.0)) < 1e-12
    v2 = spectral_density("phi2", 2, 1.0, n=8, E=2.0)
    assert v2 > 0
    with pytest.raises(ValueError):
        spectral_density("phi1", 1, 2.0)


def test_phi_square_density_functional():
    """n = 2 functional density: nonnegative, finite, and dominated by a
    battery constant on normalized 2-particle states (the convolution
    threshold's numeric face)."""
    from fockscope.fock import FockState, ModeBasis, apply_creator
    from fockscope.infrared import spectral_density
    from fockscope.weyl import FiniteRankFunctional
    grid = MomentumGrid(s=3, m=0.0, half_width=4.0, n_per_axis=12)
    rng = np.random.default_rng(9)
    E = 2.5
    cells = [int(c) for c in np.argsort(grid.omega, kind="stable")[:4]]
    basis = ModeBasis.from_cells(grid, cells)
    vac = FockState.vacuum(basis, 4)
    vals = []
    for _ in range(6):
        i, j = rng.integers(0, len(cells), 2)
        st, _ = apply_creator(basis.modes[i], vac)
        st, _ = apply_creator(basis.modes[j], st)
        st = st.normalized()
        phi = FiniteRankFunctional([(1.0, vac, st)], E)
        val = spectral_density(phi, 2, 1.2)
        assert np.isfinite(val) and val >= 0
        vals.append(val)
    assert max(vals) > 0
    # battery stays below a fitted constant (here: an energy-scale cap)
    assert max(vals) <= (2.0 * E) ** 2


def test_vacuum_density_zero_every_field_and_beta():
    from fockscope.fock import FockState, ModeBasis
    from fockscope.infrared import spectral_density
    from fockscope.weyl import FiniteRankFunctional
    grid = MomentumGrid(s=3, m=0.0, half_width=4.0, n_per_axis=8)
    basis = ModeBasis.from_cells(
        grid, [int(c) for c in np.argsort(grid.omega, kind="stable")[:2]])
    vac = FockState.vacuum(basis, 3)
    phi = FiniteRankFunctional([(1.0, vac, vac)], 0.0)
    for field_power in (1, 2):
        for beta in (0.5, 2.0):
            assert spectral_density(phi, field_power, beta) == 0.0
