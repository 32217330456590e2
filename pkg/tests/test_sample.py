import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unicell import oracle
from unicell import sample as S
from unicell.core import OddComposition
from unicell.quotient import injectivity_radius, UNBOUNDED


def test_offspring_law_pmf_normalizes():
    law = S.OffspringLaw(0.6)
    vals, probs = law.support_table()
    assert abs(probs.sum() - 1.0) < 1e-14
    assert (vals % 2 == 1).all()


def test_mean_series_matches_closed_form():
    for beta in (0.1, 0.5, 0.9, 0.99):
        law = S.OffspringLaw(beta)
        assert abs(law.mean() - law.mean_closed_form()) < 1e-12


def test_mean_at_half_is_known_value():
    assert abs(S.OffspringLaw(0.5).mean() - 1.2136523) < 1e-6


def test_variance_series_against_direct_sum():
    # the support-table sum truncates at the pmf tail and k^2 amplifies the
    # remainder, so the comparison is at its accuracy, not the series' own
    for beta in (0.3, 0.7, 0.95):
        law = S.OffspringLaw(beta)
        vals, probs = law.support_table()
        direct = float((probs * vals ** 2).sum() - (probs * vals).sum() ** 2)
        assert abs(law.variance() - direct) < 1e-8 * max(direct, 1.0)


def test_mean_monotone_in_beta():
    grid = np.linspace(0.01, 0.995, 60)
    means = [S._mean_of_beta(b) for b in grid]
    assert all(a < b for a, b in zip(means, means[1:]))


def test_solver_degenerate_and_cap():
    law = S.solve_offspring_parameter(4, 5)
    assert law.degenerate
    comp, attempts = S.sample_odd_composition(4, 5, np.random.default_rng(0))
    assert comp.parts == (1, 1, 1, 1, 1) and attempts == 1
    with pytest.raises(S.SampleError):
        S.solve_offspring_parameter(10 ** 4, 1, mean_cap=64.0)


def test_solver_hits_target_mean():
    for n, N in ((100, 21), (5000, 2501), (999, 500)):
        law = S.solve_offspring_parameter(n, N)
        assert abs(law.mean_closed_form() - (n + 1) / N) < 1e-9


def test_parity_guard():
    with pytest.raises(ValueError):
        S.sample_odd_composition(3, 3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        S.solve_offspring_parameter(4, 10)


def test_single_part_composition():
    comp, _ = S.sample_odd_composition(2, 1, np.random.default_rng(0))
    assert comp.parts == (3,)


@pytest.mark.parametrize("method", ["rejection", "split"])
def test_composition_matches_exact_pmf(method):
    rng = np.random.default_rng(42)
    trials = 40000
    counts = Counter()
    for _ in range(trials):
        comp, _ = S.sample_odd_composition(4, 3, rng, method=method)
        counts[comp.parts] += 1
    exact = {c.parts: float(p) for c, p in oracle.exact_lambda_pmf(4, 3).items()}
    tv = 0.5 * sum(abs(counts.get(k, 0) / trials - p) for k, p in exact.items())
    assert tv < 0.02
    assert set(counts) <= set(exact)


def test_split_equals_rejection_in_distribution():
    # chi-square of the split sampler against the exact law at (n=9, N=4)
    rng = np.random.default_rng(7)
    trials = 60000
    counts = Counter()
    for _ in range(trials):
        comp, _ = S.sample_odd_composition(9, 4, rng, method="split")
        counts[comp.parts] += 1
    exact = oracle.exact_lambda_pmf(9, 4)
    chi2 = sum((counts.get(c.parts, 0) - trials * float(p)) ** 2 / (trials * float(p))
               for c, p in exact.items())
    dof = len(exact) - 1
    # 1e-4 upper quantile of chi2 with 19 dof is ~51
    assert chi2 < 55, chi2


def test_batch_sampler_matches_exact_acceptance():
    rng = np.random.default_rng(3)
    mat, attempts = S.sample_odd_compositions_batch(3, 2, rng, 30000)
    assert mat.shape == (30000, 2)
    assert (mat.sum(axis=1) == 4).all()
    rate = 30000 / attempts
    exact = S.exact_acceptance_probability(3, 2)
    assert abs(rate - exact) / exact < 0.05


def test_exact_acceptance_agrees_with_enumeration():
    for n, N in ((3, 2), (8, 3), (9, 4), (39, 6), (25, 4)):
        law = S.solve_offspring_parameter(n, N)
        dp = S.exact_acceptance_probability(n, N)
        enum = sum(math.prod(law.pmf(p) for p in c.parts)
                   for c in oracle.enumerate_odd_compositions(n, N))
        assert abs(dp - enum) <= 1e-9 * enum


def test_prediction_vs_exact_at_single_part():
    # N=1 forces lambda = (n+1); the asymptotic prediction should at least
    # share the order of magnitude of the exact point mass
    n, N = 8, 1
    law = S.solve_offspring_parameter(n, N)
    exact = law.pmf(n + 1)
    pred = S.acceptance_rate_prediction(n, N)
    assert 0.2 < pred / exact < 5.0


def test_prediction_degenerate_errors():
    with pytest.raises(S.SampleError):
        S.acceptance_rate_prediction(4, 5)


def test_attempt_cap_error_carries_count():
    law_rng = np.random.default_rng(0)
    with pytest.raises(S.SampleError) as exc:
        S.sample_odd_composition(399, 200, law_rng, attempt_cap=1)
    assert exc.value.attempts == 1


def test_plane_tree_unique_small():
    t = S.sample_plane_tree(1, np.random.default_rng(0))
    assert t.to_contour() == "()"


def test_plane_tree_uniform_n2_n3():
    rng = np.random.default_rng(5)
    for n, k in ((2, 2), (3, 5)):
        counts = Counter(S.sample_plane_tree(n, rng).to_contour()
                         for _ in range(20000))
        assert len(counts) == k
        expected = 20000 / k
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        assert chi2 < 25


def test_marking_uniform():
    rng = np.random.default_rng(1)
    tree = S.sample_plane_tree(3, rng)
    lam = OddComposition([1, 3])
    counts = Counter()
    for _ in range(20000):
        mt = S.sample_marking(tree, lam, rng)
        counts[int(np.flatnonzero(mt.marks[1:] == 1)[0]) + 1] += 1
    assert len(counts) == 4
    chi2 = sum((c - 5000) ** 2 / 5000 for c in counts.values())
    assert chi2 < 25


def test_marking_rejects_mismatch():
    tree = S.sample_plane_tree(3, np.random.default_rng(0))
    with pytest.raises(ValueError):
        S.sample_marking(tree, OddComposition([3]), np.random.default_rng(0))


def test_c_permutation_counts():
    rng = np.random.default_rng(2)
    lam = OddComposition([3])
    seen = Counter()
    for _ in range(12000):
        p = S.sample_c_permutation(lam, rng)
        seen[(p.cycles, p.signs)] += 1
    assert len(seen) == 4       # 2 cyclic orders x 2 signs
    chi2 = sum((c - 3000) ** 2 / 3000 for c in seen.values())
    assert chi2 < 20

    lam13 = OddComposition([1, 3])
    seen13 = set()
    for _ in range(4000):
        p = S.sample_c_permutation(lam13, rng)
        seen13.add((p.cycles, p.signs))
        assert p.cycle_type().parts == (1, 3)
    assert len(seen13) == 32    # 4 block choices x 2 orders x 4 sign pairs


def test_fixed_point_permutation():
    p = S.sample_c_permutation(OddComposition([1]), np.random.default_rng(0))
    assert p.cycles == ((1,),) and p.genus == 0


def test_unicellular_graph_genus_zero_is_tree():
    rng = np.random.default_rng(4)
    gq, info = S.sample_unicellular_graph(12, 0, rng)
    assert gq.v == 13 and gq.genus == 0
    assert injectivity_radius(gq) == UNBOUNDED
    assert info["lambda"].parts == (1,) * 13


def test_unicellular_graph_minimal_torus():
    rng = np.random.default_rng(4)
    gq, _ = S.sample_unicellular_graph(2, 1, rng)
    assert gq.v == 1 and gq.edge_multiset() == {(1, 1): 2}


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=60), st.integers(min_value=0, max_value=2 ** 32))
def test_unicellular_graph_euler_identity(n, seed):
    rng = np.random.default_rng(seed)
    g = int(rng.integers(0, n // 2 + 1))
    gq, _ = S.sample_unicellular_graph(n, g, rng)
    assert gq.v - gq.n == 1 - 2 * g
    assert gq.is_connected()


def test_graph_distribution_matches_uniform_oracle():
    # end-to-end: sampled underlying graphs at n=3, g=1 against the exact
    # uniform distribution over the ten one-face maps
    rng = np.random.default_rng(8)
    exact = oracle.uniform_unicellular_graph_distribution(3, 1)
    counts = Counter()
    trials = 20000
    for _ in range(trials):
        gq, _ = S.sample_unicellular_graph(3, 1, rng)
        counts[oracle.canonical_rooted_graph(gq)] += 1
    assert set(counts) <= set(exact)
    tv = 0.5 * sum(abs(counts.get(k, 0) / trials - float(p))
                   for k, p in exact.items())
    assert tv < 0.02
