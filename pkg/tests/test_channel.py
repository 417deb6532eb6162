import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pumcodes.channel import (
    BoundNotApplicable,
    DecodingRadii,
    ThresholdProbabilities,
    WeightDistribution,
    binomial_weight_distribution,
    load_weight_distribution_csv,
    tail_bound_lower,
    tail_bound_upper,
    tail_probability,
    threshold_probabilities,
    write_weight_distribution_csv,
)

from oracles import exact_binomial_pmf

PUM_RADII = DecodingRadii(8, 10, 10, 12)


class TestBinomial:
    def test_fair_coin(self):
        d = binomial_weight_distribution(2, 0.5)
        np.testing.assert_allclose(d.pmf, [0.25, 0.5, 0.25], rtol=0, atol=1e-15)

    def test_noiseless(self):
        d = binomial_weight_distribution(15, 0.0)
        assert d.pmf[0] == 1.0 and not d.pmf[1:].any()

    def test_pmf_entry_against_rational(self):
        # C(15,6) 0.4^6 0.6^9 = 1260971712 / 6103515625
        d = binomial_weight_distribution(15, 0.4)
        assert d.pmf[6] == pytest.approx(1260971712 / 6103515625, rel=1e-13)

    @pytest.mark.parametrize("n,p", [(8, 0.05), (15, 0.3), (31, 0.2), (64, 0.49)])
    def test_whole_pmf_against_rational(self, n, p):
        exact = exact_binomial_pmf(n, Fraction(p))
        got = binomial_weight_distribution(n, p).pmf
        for w in range(n + 1):
            assert got[w] == pytest.approx(float(exact[w]), rel=1e-12, abs=1e-300)

    def test_large_n_no_underflow_trouble(self):
        d = binomial_weight_distribution(10_000, 0.3)
        assert abs(math.fsum(d.pmf) - 1) < 1e-12
        assert d.mean() == pytest.approx(3000, rel=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 15, 16, 101])
    def test_symmetry_at_half(self, n):
        pmf = binomial_weight_distribution(n, 0.5).pmf
        np.testing.assert_allclose(pmf, pmf[::-1], rtol=0, atol=1e-14)

    @pytest.mark.parametrize("n,p", [(0, 0.5), (5, -0.1), (5, 1.5)])
    def test_rejects(self, n, p):
        with pytest.raises(ValueError):
            binomial_weight_distribution(n, p)


class TestWeightDistribution:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            WeightDistribution(2, [0.5, 0.5, 0.5])
        with pytest.raises(ValueError):
            WeightDistribution(2, [1.5, -0.5, 0.0])
        with pytest.raises(ValueError):
            WeightDistribution(0, [1.0])
        with pytest.raises(ValueError):
            WeightDistribution(3, [1.0, 0.0])

    def test_immutable(self):
        d = binomial_weight_distribution(4, 0.2)
        with pytest.raises(ValueError):
            d.pmf[0] = 1.0

    def test_csv_round_trip(self, tmp_path):
        d = binomial_weight_distribution(15, 0.37)
        path = tmp_path / "w.csv"
        write_weight_distribution_csv(d, path)
        assert path.read_text().splitlines()[0] == "weight,probability"
        assert load_weight_distribution_csv(path) == d

    def test_csv_validation(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("weight,probability\n0,0.5\n2,0.5\n")
        with pytest.raises(ValueError, match="cover"):
            load_weight_distribution_csv(bad)
        bad.write_text("w,p\n0,1\n")
        with pytest.raises(ValueError, match="header"):
            load_weight_distribution_csv(bad)
        bad.write_text("weight,probability\n0,0.7\n1,0.7\n")
        with pytest.raises(ValueError):
            load_weight_distribution_csv(bad)


class TestRadii:
    def test_standard_ordering_flag(self):
        assert PUM_RADII.is_standard
        assert DecodingRadii(5, 10, 10).is_standard
        assert DecodingRadii(5, 10, 10).is_unit_memory
        assert not DecodingRadii(8, 8, 8, 8).is_standard

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            DecodingRadii(11, 10, 10, 12)
        with pytest.raises(ValueError):
            DecodingRadii(8, 10, 10, 9)
        with pytest.raises(ValueError):
            DecodingRadii(-1, 10, 10, 12)

    @pytest.mark.parametrize("k1,expected", [
        (2, (8, 10, 10, 12)),
        (5, (5, 10, 10, math.inf)),
        (0, (10, 10, 10, 10)),
    ])
    def test_mds_radii(self, k1, expected):
        assert DecodingRadii.from_mds(15, 5, k1).as_tuple() == expected

    def test_mds_rejects_k1_too_large(self):
        with pytest.raises(ValueError):
            DecodingRadii.from_mds(15, 5, 6)


class TestThresholds:
    def test_point_mass(self):
        tp = threshold_probabilities(WeightDistribution.point_mass(15, 0), PUM_RADII)
        assert (tp.p_a, tp.p_b, tp.p_c, tp.p_d) == (1.0, 0.0, 0.0, 0.0)

    def test_um_has_no_d_class(self):
        tp = threshold_probabilities(binomial_weight_distribution(15, 0.9), DecodingRadii(5, 10, 10))
        assert tp.p_d == 0.0
        assert tp.p_c == pytest.approx(1 - tp.p_a - tp.p_b, abs=1e-15)

    def test_pum_classes_at_half(self):
        # exact: 22819/32768, 1001/4096, 455/8192, 121/32768
        tp = threshold_probabilities(binomial_weight_distribution(15, 0.5), PUM_RADII)
        expected = (22819 / 32768, 1001 / 4096, 455 / 8192, 121 / 32768)
        for got, want in zip((tp.p_a, tp.p_b, tp.p_c, tp.p_d), expected):
            assert got == pytest.approx(want, rel=1e-13)

    def test_radii_beyond_n_are_clipped(self):
        tp = threshold_probabilities(binomial_weight_distribution(4, 0.5), DecodingRadii(1, 3, 3, 40))
        assert tp.p_d == 0.0

    def test_needs_equal_tau0_tau1(self):
        with pytest.raises(ValueError):
            threshold_probabilities(binomial_weight_distribution(15, 0.5), DecodingRadii(8, 10, 8, 12))

    def test_rejects_bad_tuple(self):
        with pytest.raises(ValueError):
            ThresholdProbabilities(0.5, 0.5, 0.5, 0.0)

    @settings(max_examples=200, deadline=None)
    @given(
        pmf=st.lists(st.floats(0, 1), min_size=2, max_size=40).filter(lambda v: sum(v) > 1e-3),
        cuts=st.lists(st.integers(0, 45), min_size=3, max_size=3),
        um=st.booleans(),
    )
    def test_components_sum_to_one(self, pmf, cuts, um):
        arr = np.array(pmf) / math.fsum(pmf)
        arr = arr / math.fsum(arr)
        d = WeightDistribution(len(arr) - 1, arr)
        a, b, c = sorted(cuts)
        radii = DecodingRadii(a, b, b, math.inf if um else c)
        tp = threshold_probabilities(d, radii)
        parts = (tp.p_a, tp.p_b, tp.p_c, tp.p_d)
        assert all(0 <= v <= 1 for v in parts)
        assert abs(math.fsum(parts) - 1) <= 1e-12


class TestTail:
    def test_endpoints(self):
        d = binomial_weight_distribution(15, 0.3)
        assert tail_probability(d, 0) == 1.0
        assert tail_probability(d, 16) == 0.0
        assert tail_probability(d, 15) == pytest.approx(0.3 ** 15, rel=1e-12)

    def test_partial_sum(self):
        exact = sum(exact_binomial_pmf(15, Fraction(1, 10))[5:])
        assert tail_probability(binomial_weight_distribution(15, 0.1), 5) == pytest.approx(float(exact), rel=1e-13)

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.8])
    def test_monotone(self, p):
        d = binomial_weight_distribution(31, p)
        tails = [tail_probability(d, tau) for tau in range(33)]
        assert all(x >= y for x, y in zip(tails, tails[1:]))


class TestTailBounds:
    @pytest.mark.parametrize("n,p", [(3, 0.2), (15, 0.1), (15, 0.45), (40, 0.01)])
    def test_boundary_collapses_to_power(self, n, p):
        assert tail_bound_upper(n, p, n) == pytest.approx(p ** n, rel=1e-14)
        assert tail_bound_upper(n, p, n) == pytest.approx(
            tail_probability(binomial_weight_distribution(n, p), n), rel=1e-12)

    def test_sandwich_example(self):
        exact = tail_probability(binomial_weight_distribution(15, 0.1), 5)
        assert tail_bound_lower(15, 0.1, 5) <= exact <= tail_bound_upper(15, 0.1, 5)

    def test_not_applicable(self):
        with pytest.raises(BoundNotApplicable, match="not applicable"):
            tail_bound_upper(15, 0.5, 7)
        with pytest.raises(BoundNotApplicable):
            tail_bound_lower(15, 0.5, 7)

    def test_sandwich_grid(self):
        ps = [round(0.01 * i, 2) for i in range(1, 50)]
        for n in range(1, 65):
            for p in ps:
                d = binomial_weight_distribution(n, p)
                for tau in range(int(math.floor(p * n)) + 1, n + 1):
                    if tau <= p * n:
                        continue
                    exact = tail_probability(d, tau)
                    lo, hi = tail_bound_lower(n, p, tau), tail_bound_upper(n, p, tau)
                    assert lo <= exact * (1 + 1e-12), (n, p, tau)
                    assert exact <= hi * (1 + 1e-12), (n, p, tau)
