import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import small_corpus
from submodtree.cube import mask_of
from submodtree.dtree import exact_distance, rank, tree_table
from submodtree.fourier import Spectrum, parity_eval, spectral_l1, transform
from submodtree.funcs import FamilySpec, ValueOracle, generate_random, instantiate
from submodtree.learn import (
    LabeledSample,
    LearnerBudget,
    agnostic_l2_learn,
    draw_sample,
    find_influential_variables,
    km_search,
    pac_learn,
    threshold_decompose,
    threshold_tree,
)

KM_FAST = dict(bucket_samples=4096, coeff_samples=1 << 15)


def planted_oracle(n, coeffs) -> ValueOracle:
    return Spectrum(n, coeffs).to_oracle("planted")


class TestLearnerBudget:
    def test_validation(self):
        LearnerBudget()
        with pytest.raises(ValueError):
            LearnerBudget(gamma=0.5)
        with pytest.raises(ValueError):
            LearnerBudget(m=0)
        with pytest.raises(ValueError):
            LearnerBudget(epsilon=-1)


class TestFindInfluential:
    def test_exact_mode_edge_cut_in_four_vars(self):
        f = instantiate(FamilySpec("cut", 4, {"edges": [[1, 2]]}))
        assert find_influential_variables(f, 0.3) == (0, 1)

    def test_constant_gives_empty(self):
        const = ValueOracle.from_table([0.4] * 16)
        assert find_influential_variables(const, 0.3) == ()

    def test_sampled_coverage_junta(self):
        sets = [[] for _ in range(8)]
        sets[1], sets[4] = [1], [1, 2]
        f = instantiate(FamilySpec("coverage", 8, {"universe_size": 2, "sets": sets}))
        sample = draw_sample(f, 1 << 16, seed=5)
        J = find_influential_variables(sample, 0.2)
        assert set(J) >= {1, 4}
        assert len(J) <= 4

    def test_gamma_validation(self):
        const = ValueOracle.from_table([0.4] * 4)
        with pytest.raises(ValueError):
            find_influential_variables(const, 0.6)

    def test_empty_sample(self):
        with pytest.raises(ValueError):
            find_influential_variables(
                LabeledSample(3, np.array([], dtype=np.int64), np.array([])), 0.1
            )

    def test_soundness_and_size_on_corpus(self):
        gamma = 0.2
        for inst, f in small_corpus(ns=(6, 8), seeds=(0, 1, 2)):
            sp = transform(f)
            J = set(find_influential_variables(f, gamma))
            must_cover = set()
            for s, c in sp.coeffs.items():
                if s and abs(c) >= gamma:
                    must_cover.update(i for i in range(f.n) if (s >> i) & 1)
            assert must_cover <= J, inst
            assert len(J) <= 2.0 / gamma**4, inst

    def test_junta_projection_statement(self):
        # if some degree-d, norm-L function is eps-close to f, then the
        # variables flagged at cutoff eps^2/L carry a degree-d function
        # within 2 eps of f (checked by exact projection)
        d = 3
        for inst, f in small_corpus(ns=(6, 8), seeds=(0, 1)):
            sp = transform(f)
            p = {s: c for s, c in sp.coeffs.items() if s.bit_count() <= d}
            eps = math.sqrt(sum(c * c for s, c in sp.coeffs.items() if s.bit_count() > d))
            L = sum(abs(c) for c in p.values())
            if eps < 1e-9:
                continue
            cutoff = eps * eps / L
            J = 0
            for s, c in sp.coeffs.items():
                if s and s.bit_count() <= d and abs(c) >= cutoff:
                    J |= s
            proj = Spectrum(
                f.n,
                {s: c for s, c in sp.coeffs.items() if s.bit_count() <= d and (s & ~J) == 0},
            )
            err = exact_distance(f, proj, metric="l2")
            assert err <= 2 * eps + 1e-9, inst

    def test_pair_coefficient_forced_by_large_set(self):
        # any i inside a heavy set forces a heavy pair coefficient
        gamma = 0.2
        for inst, f in small_corpus(ns=(6, 8), seeds=(0, 1, 2)):
            sp = transform(f)
            for s, c in sp.coeffs.items():
                if s.bit_count() < 2 or abs(c) < gamma:
                    continue
                for i in range(f.n):
                    if not (s >> i) & 1:
                        continue
                    best = max(
                        abs(sp.coeffs.get((1 << i) | (1 << j), 0.0))
                        for j in range(f.n)
                        if j != i
                    )
                    assert best >= gamma * gamma / 2.0 - 1e-9, (inst, i)


class TestPacLearn:
    def test_exact_junta_realizable(self):
        table = [float((x & 0b101) != 0) for x in range(1 << 10)]
        f = ValueOracle.from_table(table, label="or-on-0-2")
        hyp = pac_learn(f, 0.25, gamma=0.05, degree=2, exact=True)
        assert set(hyp.info["J"]) == {0, 2}
        assert exact_distance(f, hyp.spectrum, metric="l2") <= 1e-6

    def test_constant_target(self):
        f = ValueOracle.from_table([0.3] * 64)
        hyp = pac_learn(f, 0.25, gamma=0.05, degree=2, exact=True)
        assert set(hyp.spectrum.coeffs) <= {0}
        assert exact_distance(f, hyp.spectrum, metric="l2") <= 1e-9

    def test_sampled_mode_needs_m(self):
        f = ValueOracle.from_table([0.3] * 64)
        with pytest.raises(ValueError):
            pac_learn(f, 0.25, gamma=0.05, degree=2)

    def test_sampled_constantized_tree_target(self):
        from submodtree.decompose import approximate_by_tree

        base = instantiate(generate_random("coverage", 10, seed=2))
        tree, _ = approximate_by_tree(base, 0.5)
        target = ValueOracle.from_table(tree_table(tree), label="tree-target")
        hyp = pac_learn(target, 0.5, gamma=0.05, degree=4, m=1 << 17, seed=0)
        assert exact_distance(target, hyp.spectrum, metric="l2") <= 0.5

    def test_hypothesis_support_inside_junta(self):
        f = instantiate(generate_random("coverage", 8, seed=1))
        hyp = pac_learn(f, 0.5, gamma=0.1, degree=3, exact=True)
        for s in hyp.spectrum.coeffs:
            assert s & ~hyp.variables_used == 0
            assert s.bit_count() <= 3


class TestKmSearch:
    def test_planted_pair(self):
        f = planted_oracle(8, {mask_of([0]): 0.5, mask_of([1, 2]): 0.3})
        hyp = km_search(f, theta=0.4, seed=7, **KM_FAST)
        got = hyp.spectrum.coeffs
        assert mask_of([0]) in got
        assert all(s in (mask_of([0]), mask_of([1, 2])) for s in got)
        assert got[mask_of([0])] == pytest.approx(0.5, abs=0.1)

    def test_single_parity(self):
        s = mask_of([2, 5])
        f = planted_oracle(8, {s: 1.0})
        hyp = km_search(f, theta=0.5, seed=1, **KM_FAST)
        assert set(hyp.spectrum.coeffs) == {s}
        assert hyp.spectrum.coeffs[s] == pytest.approx(1.0, abs=0.125)

    def test_zero_function(self):
        f = ValueOracle.from_table([0.0] * 256)
        hyp = km_search(f, theta=0.5, seed=0, **KM_FAST)
        assert hyp.spectrum.coeffs == {}

    def test_degree_cap_filters(self):
        big = mask_of([0, 1, 2, 3, 4, 5])
        f = planted_oracle(8, {big: 0.8, mask_of([1]): 0.6})
        hyp = km_search(f, theta=0.4, degree=2, seed=3, **KM_FAST)
        assert big not in hyp.spectrum.coeffs
        assert mask_of([1]) in hyp.spectrum.coeffs

    def test_contract_over_seeds(self):
        theta, d = 0.4, 4
        ok = 0
        runs = 30
        for seed in range(runs):
            rng = np.random.default_rng((42, seed))
            masks = []
            while len(masks) < 3:
                m = int(rng.integers(1, 256))
                if m.bit_count() <= d and m not in masks:
                    masks.append(m)
            signs = rng.choice([-1.0, 1.0], size=3)
            planted = {m: s * v for m, v, s in zip(masks, [0.5, 0.3, 0.15], signs)}
            f = planted_oracle(8, planted)
            hyp = km_search(f, theta, degree=d, seed=seed, **KM_FAST)
            got = hyp.spectrum.coeffs
            c1 = all(s.bit_count() <= d for s in got)
            c2 = masks[0] in got
            c3 = all(abs(planted.get(s, 0.0)) > theta / 2 for s in got)
            c4 = all(abs(planted.get(s, 0.0) - est) <= theta / 4 for s, est in got.items())
            ok += c1 and c2 and c3 and c4
        assert ok >= 0.95 * runs

    def test_reports_queries(self):
        f = planted_oracle(8, {1: 1.0})
        hyp = km_search(f, theta=0.5, seed=0, **KM_FAST)
        assert hyp.queries_used > 0
        assert hyp.info["buckets_examined"] > 0


class TestAgnostic:
    def test_realizable_parity(self):
        f = planted_oracle(8, {mask_of([0]): 1.0})
        hyp = agnostic_l2_learn(f, 0.5, L=1.0, seed=0, **KM_FAST)
        assert exact_distance(f, hyp.spectrum, metric="l2") <= 0.5

    def test_noisy_parity_against_competitor(self):
        rng = np.random.default_rng(8)
        noise = rng.uniform(-0.1, 0.1, size=256)
        chi = np.array([parity_eval(1, x) for x in range(256)], dtype=float)
        f = ValueOracle.from_table(0.9 * chi + noise)
        hyp = agnostic_l2_learn(f, 0.4, L=1.0, seed=2, **KM_FAST)
        g = Spectrum(8, {1: 0.9})
        delta = exact_distance(f, g, metric="l2")
        err = exact_distance(f, hyp.spectrum, metric="l2")
        assert err <= delta + 0.4 + 1e-9

    def test_unit_range_tree_target(self):
        from submodtree.decompose import approximate_by_tree

        base = instantiate(generate_random("coverage", 8, seed=3))
        tree, _ = approximate_by_tree(base, 0.5)
        f = ValueOracle.from_table(tree_table(tree), label="tree")
        L = spectral_l1(transform(f))
        hyp = agnostic_l2_learn(f, 0.5, L=L, seed=1, unit_range=True, **KM_FAST)
        # competitor g = f itself realizes Delta = 0
        assert exact_distance(f, hyp.spectrum, metric="l2") <= 0.5

    def test_dominance_against_explicit_competitors(self):
        f = planted_oracle(8, {mask_of([1]): 0.7, mask_of([0, 2]): 0.4})
        hyp = agnostic_l2_learn(f, 0.5, L=1.2, seed=4, **KM_FAST)
        err = exact_distance(f, hyp.spectrum, metric="l2")
        competitors = [
            Spectrum(8, {mask_of([1]): 0.7, mask_of([0, 2]): 0.4}),
            Spectrum(8, {mask_of([1]): 0.7}),
            Spectrum(8, {0: 0.1}),
        ]
        for g in competitors:
            assert spectral_l1(g) <= 1.2
            assert err <= exact_distance(f, g, metric="l2") + 0.5 + 1e-9


class TestThresholdDecompose:
    def test_all_ones(self):
        g = ValueOracle.from_table([1.0] * 8)
        levels, gp = threshold_decompose(g, 0.25)
        assert len(levels) == 4
        assert all(level(x) == 1.0 for level in levels for x in range(8))
        assert all(gp(x) == 1.0 for x in range(8))

    def test_rounding_example(self):
        g = ValueOracle.from_table([0.6] * 4)
        _, gp = threshold_decompose(g, 0.25)
        assert gp(0) == pytest.approx(0.5)

    def test_grid_values_unchanged(self):
        g = ValueOracle.from_table([0.0, 0.5, 1.0, 0.5])
        _, gp = threshold_decompose(g, 0.5)
        assert [gp(x) for x in range(4)] == [0.0, 0.5, 1.0, 0.5]

    def test_pointwise_band(self):
        rng = np.random.default_rng(0)
        g = ValueOracle.from_table(rng.uniform(0, 1, 64))
        for eps in (0.5, 0.25, 0.1):
            levels, gp = threshold_decompose(g, eps)
            gap = g.table() - gp.table()
            assert np.all(gap >= -1e-12) and np.all(gap <= eps + 1e-12)
            recombined = eps * sum(level.table() for level in levels)
            assert np.allclose(recombined, gp.table())

    @given(
        st.floats(min_value=0.05, max_value=1.0, allow_nan=False),
        st.integers(min_value=0, max_value=2**30),
    )
    def test_pointwise_band_property(self, eps, seed):
        rng = np.random.default_rng(seed)
        g = ValueOracle.from_table(rng.uniform(0, 1, 16))
        _, gp = threshold_decompose(g, eps)
        gap = g.table() - gp.table()
        assert np.all(gap >= -1e-9) and np.all(gap <= eps + 1e-9)

    def test_epsilon_validation(self):
        g = ValueOracle.from_table([0.0, 1.0])
        with pytest.raises(ValueError):
            threshold_decompose(g, 0.0)

    def test_threshold_tree_preserves_rank(self):
        from submodtree.dtree import random_tree

        for seed in range(10):
            t = random_tree(7, seed)
            for theta in (0.25, 0.5, 0.75):
                tt = threshold_tree(t, theta)
                assert rank(tt) == rank(t)
                want = (tree_table(t) >= theta).astype(float)
                assert np.array_equal(tree_table(tt), want)

    def test_boolean_subadditivity(self):
        # l1 error of the recombination is at most eps * sum of the levelwise
        # disagreement of any Boolean approximations
        rng = np.random.default_rng(3)
        g = ValueOracle.from_table(rng.uniform(0, 1, 64))
        eps = 0.25
        levels, gp = threshold_decompose(g, eps)
        approx = [
            (level.table() != (rng.random(64) < 0.1)).astype(float) for level in levels
        ]
        # approx[i] here is the XOR with a noise mask: a Boolean approximation
        recombined = eps * sum(a for a in approx)
        l1 = float(np.mean(np.abs(gp.table() - recombined)))
        total = sum(float(np.mean(a != l.table())) for a, l in zip(approx, levels))
        assert l1 <= eps * total + 1e-12
