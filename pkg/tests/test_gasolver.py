import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_binary
from oracles import brute_force_chromosome
from inkseep.energy import SumCache, default_params, energy_direct, pairwise_model
from inkseep.gasolver import (
    EnergyTrace, GaConfig, ReservoirSpec, TraceRow, _fitness, exact_chromosome_optimum, extract_interface,
    frozen_coefficients, ga_minimize, init_state, refill, run,
)
from inkseep.lattice import make_grid, n1_neighbors


def empty_phi(g):
    return np.zeros(g.shape, np.uint8)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(population_size=1), dict(elitism_count=0), dict(elitism_count=32),
                                    dict(inner_iterations_per_epoch=0), dict(crossover_rate=1.5),
                                    dict(mutation_rate=-0.1), dict(convergence_rel_tol=0)])
    def test_invalid_ga(self, kw):
        with pytest.raises(ValueError):
            GaConfig(**kw)

    def test_reservoir_too_deep(self):
        g = make_grid(3, 3, 3, 1)
        with pytest.raises(ValueError):
            ReservoirSpec(2).cells(g)
        with pytest.raises(ValueError):
            ReservoirSpec(-1)

    def test_reservoir_band_is_topmost_layers(self):
        g = make_grid(2, 2, 2, 3)
        assert ReservoirSpec(1).cells(g).tolist() == [8, 9, 10, 11]
        assert ReservoirSpec(0).cells(g).size == 0


class TestInitState:
    def test_zero_volume(self):
        g = make_grid(20, 20, 10, 2)
        p = default_params(g, 0)
        s = init_state(g, empty_phi(g), ReservoirSpec(2), p)
        assert s.n_ink == 0 and s.dispensed_volume == 0

    def test_partial_fill_lowest_first(self):
        g = make_grid(20, 20, 10, 2)
        s = init_state(g, empty_phi(g), ReservoirSpec(2), default_params(g, 200))
        assert s.n_ink == 200 and s.dispensed_volume == 200
        assert s.sigma[0].sum() == 200 and s.sigma[2:].sum() == 0

    def test_capacity_clamp(self):
        g = make_grid(20, 20, 10, 2)
        s = init_state(g, empty_phi(g), ReservoirSpec(2), default_params(g, 1000))
        assert s.n_ink == 800 and s.dispensed_volume == 800
        assert s.warnings == []

    def test_warning_without_refill(self):
        g = make_grid(4, 4, 2, 1)
        s = init_state(g, empty_phi(g), ReservoirSpec(1, refill_enabled=False), default_params(g, 20))
        assert s.n_ink == 16 and len(s.warnings) == 1


class TestInterface:
    def test_empty(self):
        g = make_grid(4, 4, 4)
        s = init_state(g, empty_phi(g), ReservoirSpec(0), default_params(g))
        assert extract_interface(s, empty_phi(g)).size == 0

    def test_single_interior_cell(self):
        g = make_grid(5, 5, 5)
        s = init_state(g, empty_phi(g), ReservoirSpec(0), default_params(g))
        i = g.index(2, 2, 2)
        s.sigma.ravel()[i] = 1
        assert extract_interface(s, empty_phi(g)).tolist() == sorted([i] + n1_neighbors(g, i))

    def test_full_free_space(self):
        rng = np.random.default_rng(0)
        g = make_grid(4, 4, 4)
        phi = random_binary(rng, g.shape, 0.3)
        s = init_state(g, phi, ReservoirSpec(0), default_params(g))
        s.sigma = (1 - phi).astype(np.uint8)
        assert extract_interface(s, phi).size == 0

    @settings(max_examples=25)
    @given(st.integers(0, 10**6))
    def test_matches_definition(self, seed):
        rng = np.random.default_rng(seed)
        g = make_grid(4, 3, 3, 1)
        phi = random_binary(rng, g.shape, 0.3)
        s = init_state(g, phi, ReservoirSpec(0), default_params(g))
        s.sigma = random_binary(rng, g.shape, 0.4) * (1 - phi)
        sig, ph = s.sigma.ravel(), phi.ravel()
        want = []
        for c in range(g.n_cells):
            if ph[c]:
                continue
            nb = [j for j in n1_neighbors(g, c) if not ph[j]]
            if (sig[c] and any(sig[j] == 0 for j in nb)) or (not sig[c] and any(sig[j] for j in nb)):
                want.append(c)
        assert extract_interface(s, phi).tolist() == want


class TestRefill:
    def _state(self, vf, n_paper):
        g = make_grid(20, 20, 10, 2)
        s = init_state(g, empty_phi(g), ReservoirSpec(2), default_params(g, vf))
        flat = s.sigma.ravel()
        flat[np.flatnonzero(flat)[:n_paper]] = 0
        flat[g.nz_reservoir * g.layer_size: g.nz_reservoir * g.layer_size + n_paper] = 1
        return g, s

    def test_noop_at_target(self):
        g, s = self._state(200, 0)
        before = s.sigma.copy()
        refill(s, ReservoirSpec(2), default_params(g, 200))
        assert np.array_equal(before, s.sigma)

    def test_tops_up_after_loss(self):
        g, s = self._state(200, 50)
        s.dispensed_volume = 150
        s.sigma.ravel()[g.nz_reservoir * g.layer_size: g.nz_reservoir * g.layer_size + 50] = 0
        refill(s, ReservoirSpec(2), default_params(g, 200))
        assert s.n_ink == 200 and s.dispensed_volume == 200

    def test_budget_exhausted(self):
        g, s = self._state(200, 50)
        s.sigma.ravel()[g.nz_reservoir * g.layer_size: g.nz_reservoir * g.layer_size + 50] = 0
        refill(s, ReservoirSpec(2), default_params(g, 200))
        assert s.n_ink == 150 and s.dispensed_volume == 200

    def test_disabled(self):
        g, s = self._state(200, 0)
        s.sigma[:] = 0
        s.dispensed_volume = 0
        refill(s, ReservoirSpec(2, refill_enabled=False), default_params(g, 200))
        assert s.n_ink == 0


class TestFrozenCoefficients:
    @settings(max_examples=20)
    @given(st.integers(0, 10**6))
    def test_equal_single_flip_change(self, seed):
        rng = np.random.default_rng(seed)
        g = make_grid(3, 3, 3, 1)
        phi = random_binary(rng, g.shape, 0.2)
        p = default_params(g, 5, lam=0.0)
        sigma = random_binary(rng, g.shape, 0.4)
        coef = frozen_coefficients(SumCache.build(sigma, phi, g), pairwise_model(phi, p, g))
        for i in rng.integers(0, g.n_cells, 6):
            s2 = sigma.copy()
            s2.ravel()[i] ^= 1
            sign = 1 if s2.ravel()[i] else -1
            d = energy_direct(s2, phi, p, g).E_t0 - energy_direct(sigma, phi, p, g).E_t0
            assert sign * coef[i] == pytest.approx(d, abs=1e-9)


def chromosome_setup(seed, L=10, vf=6):
    rng = np.random.default_rng(seed)
    g = make_grid(4, 4, 2)
    p = default_params(g, vf)
    s = init_state(g, empty_phi(g), ReservoirSpec(0), p)
    s.sigma.ravel()[[30, 31]] = 1
    s.frozen = rng.normal(0, 3, g.n_cells)
    cells = np.arange(L)
    s.sigma.ravel()[cells] = (rng.random(L) < 0.3)
    model = pairwise_model(empty_phi(g), p, g)
    return g, p, s, cells, model


class TestGaMinimize:
    def test_empty_chromosome(self):
        g, p, s, _, model = chromosome_setup(0)
        assert ga_minimize(np.array([], dtype=np.int64), s, model, GaConfig()) is None

    def test_single_cell_exact(self):
        for seed in range(10):
            g, p, s, _, model = chromosome_setup(seed)
            cells = np.array([5])
            bits = ga_minimize(cells, s, model, GaConfig())
            n_rest = s.n_ink - int(s.sigma.ravel()[5])
            f = _fitness(bits[None].astype(np.int64), s.frozen[cells], n_rest, p)[0]
            assert f == pytest.approx(brute_force_chromosome(s.frozen[cells], n_rest, p, cap=max(6, s.n_ink)))

    @settings(max_examples=30)
    @given(st.integers(0, 10**6))
    def test_never_worse_than_incumbent(self, seed):
        g, p, s, cells, model = chromosome_setup(seed)
        cfg = GaConfig(population_size=8, generations_per_inner_iteration=3, seed=seed)
        inc = s.sigma.ravel()[cells].astype(np.int64)
        n_rest = s.n_ink - int(inc.sum())
        g_c = s.frozen[cells]
        bits = ga_minimize(cells, s, model, cfg).astype(np.int64)
        assert _fitness(bits[None], g_c, n_rest, p)[0] <= _fitness(inc[None], g_c, n_rest, p)[0]

    def test_generous_budget_finds_optimum(self):
        hits = 0
        cfg = GaConfig(population_size=64, generations_per_inner_iteration=200)
        for trial in range(100):
            g, p, s, cells, model = chromosome_setup(1000 + trial)
            inc = s.sigma.ravel()[cells].astype(np.int64)
            n_rest = s.n_ink - int(inc.sum())
            g_c = s.frozen[cells]
            best = brute_force_chromosome(g_c, n_rest, p, cap=max(6, s.n_ink))
            bits = ga_minimize(cells, s, model, cfg, rng=np.random.default_rng(trial)).astype(np.int64)
            hits += abs(_fitness(bits[None], g_c, n_rest, p)[0] - best) <= 1e-9
        assert hits >= 95

    @settings(max_examples=30)
    @given(st.integers(0, 10**6), st.integers(0, 12))
    def test_sorting_optimum_matches_enumeration(self, seed, cap):
        rng = np.random.default_rng(seed)
        g_c = rng.normal(0, 3, 8)
        p = default_params(make_grid(4, 4, 2), 6)
        n_rest = int(rng.integers(0, 4))
        want = brute_force_chromosome(g_c, n_rest, p, cap=max(cap, n_rest))
        assert exact_chromosome_optimum(g_c, n_rest, p, max(cap, n_rest)) == pytest.approx(want)


class TestTrace:
    def test_ordering_enforced(self):
        t = EnergyTrace()
        t.append(TraceRow(0, 0, 0, 0, 0, 0, 0, 0, 0))
        t.append(TraceRow(1, 1, 0, 0, 0, 0, 0, 0, 0))
        with pytest.raises(ValueError):
            t.append(TraceRow(1, 1, 0, 0, 0, 0, 0, 0, 0))
        assert len(t) == 2 and t.column("outer").tolist() == [0, 1]


def small_run(seed=0, vf=30, lam=100.0, **ga):
    rng = np.random.default_rng(seed)
    g = make_grid(6, 6, 5, 2)
    phi = random_binary(rng, g.shape, 0.15)
    phi[: g.nz_reservoir] = 0
    p = default_params(g, vf, lam=lam)
    cfg = GaConfig(seed=seed, **ga)
    return g, phi, p, run(phi, p, ReservoirSpec(2), cfg, g)


class TestRun:
    def test_zero_volume(self):
        g, phi, p, res = small_run(vf=0)
        assert res.converged and res.outer_iterations == 1
        assert res.sigma.sum() == 0 and res.volume_error == 0

    def test_invariants(self):
        g, phi, p, res = small_run(seed=3, lam=1e5)
        assert not np.any(res.sigma & phi)
        assert res.sigma.sum() <= p.V_fluid0 and res.dispensed_volume <= p.V_fluid0
        assert res.monotonicity_violations == 0
        last = res.trace.rows[-1]
        assert last.E_t == pytest.approx(energy_direct(res.sigma, phi, p, g).E_t, rel=1e-9)
        keys = [(r.outer, r.inner) for r in res.trace.rows]
        assert keys == sorted(set(keys))

    def test_deterministic(self):
        a = small_run(seed=5)[3]
        b = small_run(seed=5)[3]
        assert np.array_equal(a.sigma, b.sigma)
        assert a.trace.column("E_t").tolist() == b.trace.column("E_t").tolist()

    def test_non_convergence_flag(self):
        _, _, _, res = small_run(seed=1, lam=1e5, max_outer_iterations=1, convergence_rel_tol=1e-12)
        assert not res.converged and res.outer_iterations == 1
