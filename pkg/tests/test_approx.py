import numpy as np
import pytest
from conftest import distributions
from hypothesis import given
from hypothesis import strategies as st

from infopricing.approx import (
    FALLBACK,
    FLOW_DEFICIENT,
    LOW_WELFARE,
    TWO_PRICE_TARGET,
    ConditionFailed,
    TwoPriceParams,
    _saturated_plan,
    best_of_three_two_products,
    full_surplus_certificate,
    full_surplus_condition,
    full_surplus_mechanism,
    is_exchangeable,
    is_negatively_affiliated,
    two_price,
    uniform_half,
)
from infopricing.core import (
    PricingMechanism,
    ValueDistribution,
    induce_mechanism,
    optimal_welfare,
    revenue,
    signal_stats,
)
from infopricing.disclosure import top_item_profile
from infopricing.instances import (
    GeneratorSpec,
    appendix_no_full_surplus,
    generate,
    hart_nisan_arc,
    point_mass,
    tight_uniform_example,
    two_item_hardness,
)


class TestParams:
    def test_defaults(self):
        p = TwoPriceParams()
        assert p.c == pytest.approx(57.345, abs=1e-3)
        assert p.w_bar == pytest.approx(0.003565, abs=1e-6)
        assert p.target == pytest.approx(2 / (2 - 0.0068))
        assert p.closing_value() > p.target
        assert p.closing_ok

    def test_invalid(self):
        with pytest.raises(ValueError):
            TwoPriceParams(delta=0.0)
        with pytest.raises(ValueError):
            TwoPriceParams(k=0)


class TestUniform:
    def test_tight_ratio(self):
        eps = 0.1
        cert = uniform_half(tight_uniform_example(eps))
        assert cert.revenue == pytest.approx(1.0)
        assert cert.ratio == pytest.approx(1 / (2 - eps))
        assert cert.details["p_star"] == 1.0

    def test_degenerate(self):
        cert = uniform_half(point_mass([0, 0]))
        assert cert.revenue == 0.0 and cert.branch == "degenerate"

    def test_certificate_json(self, ex1):
        out = uniform_half(ex1).to_dict()
        assert set(out) == {"branch", "guarantee", "revenue", "opt_wel", "ratio", "mechanism"}
        assert all(isinstance(lab, list) for lab in out["mechanism"]["signals"])


class TestTwoPrice:
    def test_low_welfare_case(self):
        cert = two_price(tight_uniform_example(0.1))
        assert cert.branch == LOW_WELFARE
        assert cert.ratio >= TWO_PRICE_TARGET

    @pytest.mark.parametrize("eps", [0.006, 0.001])
    def test_deficient_case_beats_uniform(self, eps):
        d = tight_uniform_example(eps)
        cert = two_price(d)
        assert cert.branch == FLOW_DEFICIENT
        assert cert.details["source"] == "construction"
        assert cert.ratio >= TWO_PRICE_TARGET
        assert cert.revenue > uniform_half(d).revenue

    def test_fallback_when_closing_fails(self):
        # k = 1 makes kp*/2 < p*, so the closing inequality cannot hold
        cert = two_price(tight_uniform_example(0.001), TwoPriceParams(k=1))
        assert cert.branch == FALLBACK
        assert cert.guarantee == 0.5

    def test_saturated_plan_on_synthetic_flow(self):
        eps = 0.01
        d = tight_uniform_example(eps)
        params = TwoPriceParams()
        prof = top_item_profile(d)
        # route all of class 0 into class 1
        flow = np.array([[prof.class_mass[0]]])
        info, price = _saturated_plan(d, prof, 1.0, params, [0], [1], flow)
        np.testing.assert_allclose(info.kernel.sum(axis=1), 1.0)
        assert (0, 1) in info.signals
        assert price == pytest.approx(params.target)
        mech = induce_mechanism(d, PricingMechanism(info, np.full(2, price)))
        pooled = eps * (1 + params.c)
        assert revenue(d, mech) == pytest.approx(price * pooled, rel=1e-9)


class TestBestOfThree:
    def test_hardness_instance(self):
        cert = best_of_three_two_products(two_item_hardness(0.01))
        assert cert.ratio >= 2 / 3 - 1e-9
        assert set(cert.details["revenues"]) == {"M1", "M2", "M3"}

    def test_needs_two_products(self, ex1):
        with pytest.raises(ValueError):
            best_of_three_two_products(point_mass([1, 2, 3]))

    def test_single_class(self):
        cert = best_of_three_two_products(ValueDistribution([[3, 1], [5, 2]], [0.5, 0.5]))
        assert cert.ratio == pytest.approx(1.0)

    @given(distributions(min_m=2, max_m=2, max_k=6))
    def test_sum_and_ratio(self, d):
        if optimal_welfare(d) <= 0:
            return
        cert = best_of_three_two_products(d)
        opt = optimal_welfare(d)
        assert sum(cert.details["revenues"].values()) >= 2 * opt - 1e-6
        assert cert.revenue >= 2 / 3 * opt - 1e-6


class TestFullSurplus:
    def test_no_full_surplus_witness(self):
        d = appendix_no_full_surplus()
        assert full_surplus_condition(d) == (False, (0, 1))
        with pytest.raises(ConditionFailed) as info:
            full_surplus_mechanism(d)
        assert info.value.witness == (0, 1)

    def test_arc_small(self):
        d = hart_nisan_arc(2, 0.05)
        assert full_surplus_condition(d)[0]
        cert = full_surplus_certificate(d)
        assert cert.revenue == pytest.approx(optimal_welfare(d), abs=1e-9)

    def test_ties_break_exchangeability_result(self):
        d = ValueDistribution([[0, 0], [10, 9], [9, 10]], [0.5, 0.25, 0.25])
        assert is_exchangeable(d)
        assert full_surplus_condition(d) == (False, (0, 1))


class TestChecks:
    def test_independent_product_is_affiliated(self):
        pts = [[a, b] for a in (1, 4) for b in (2, 3)]
        prob = [pa * pb for pa in (0.3, 0.7) for pb in (0.6, 0.4)]
        assert is_negatively_affiliated(ValueDistribution(pts, prob))[0]

    def test_positive_correlation_rejected(self):
        d = ValueDistribution([[1, 1], [2, 2], [1, 2], [2, 1]], [0.4, 0.4, 0.1, 0.1])
        ok, witness = is_negatively_affiliated(d)
        assert not ok and witness is not None

    def test_anti_diagonal_accepted(self):
        # meet and join are off the support, so the lattice inequality is slack
        assert is_negatively_affiliated(ValueDistribution([[1, 2], [2, 1]], [0.5, 0.5]))[0]

    def test_exchangeable(self):
        assert is_exchangeable(ValueDistribution([[1, 2], [2, 1]], [0.5, 0.5]))
        assert not is_exchangeable(ValueDistribution([[1, 2], [2, 1]], [0.6, 0.4]))
        with pytest.raises(ValueError):
            is_exchangeable(point_mass(range(9)))


# --- properties over the generators ---------------------------------------------


@given(st.integers(0, 10_000))
def test_uniform_and_two_price_bounds(seed):
    d = generate(GeneratorSpec("correlated", seed))
    opt = optimal_welfare(d)
    base = uniform_half(d)
    cert = two_price(d)
    assert base.revenue >= 0.5 * opt - 1e-6
    assert cert.revenue >= base.revenue - 1e-9
    if cert.branch != FALLBACK:
        assert cert.revenue >= TWO_PRICE_TARGET * opt - 1e-6


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_negative_affiliation_implies_full_surplus(seed, m):
    d = generate(GeneratorSpec("neg-affiliated", seed, m=m))
    assert is_negatively_affiliated(d)[0]
    assert full_surplus_condition(d)[0]
    assert full_surplus_certificate(d).revenue == pytest.approx(optimal_welfare(d), abs=1e-9)


@given(st.integers(0, 10_000))
def test_exchangeable_full_surplus(seed):
    d = generate(GeneratorSpec("exchangeable", seed))
    assert is_exchangeable(d)
    cert = full_surplus_certificate(d)
    assert cert.revenue == pytest.approx(optimal_welfare(d), abs=1e-9)
    stats = signal_stats(d, cert.mechanism.info)
    assert stats.S == len({int(i) for i in d.top})
