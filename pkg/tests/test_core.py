import math

import numpy as np
import pytest
from conftest import distributions, kernels
from hypothesis import given, settings
from hypothesis import strategies as st

from infopricing.core import (
    LOWEST_INDEX,
    InformationStructure,
    InvalidDistribution,
    InvalidStructure,
    Mechanism,
    PricingMechanism,
    RejectedMechanism,
    ValueDistribution,
    audit_ic_ir,
    buyer_choice,
    induce_mechanism,
    optimal_welfare,
    pricing_revenue,
    revenue,
    signal_stats,
    welfare,
)
from infopricing.instances import (
    appendix_horizontal_subopt,
    appendix_no_full_surplus,
    example_lottery_opt,
    point_mass,
    tight_uniform_example,
    two_item_hardness,
)

INF = math.inf


def ex1_pooling(K=3):
    # (10,5) alone, (6,5) and (0,3) pooled
    return InformationStructure.from_partition([[0], [1, 2]], K)


class TestValueDistribution:
    def test_rejects_bad_input(self):
        with pytest.raises(InvalidDistribution):
            ValueDistribution([[1.0], [2.0]], [0.5, 0.6])
        with pytest.raises(InvalidDistribution):
            ValueDistribution([[1.0], [1.0]], [0.5, 0.5])
        with pytest.raises(InvalidDistribution):
            ValueDistribution([[-1.0]], [1.0])
        with pytest.raises(InvalidDistribution):
            ValueDistribution([[1.0], [2.0]], [1.0, 0.0])
        with pytest.raises(InvalidDistribution):
            ValueDistribution([[1.0]], [1.0, 0.0])

    def test_immutable(self, ex1):
        with pytest.raises(ValueError):
            ex1.support[0, 0] = 3.0

    def test_top_lowest_index(self):
        d = ValueDistribution([[2.0, 2.0], [1.0, 3.0]], [0.5, 0.5])
        assert d.top.tolist() == [0, 1]

    def test_from_points_dict(self):
        d = ValueDistribution.from_points({(1, 2): 0.25, (3, 0): 0.75})
        assert d.K == 2 and d.m == 2
        np.testing.assert_allclose(d.mean, [2.5, 0.5])


class TestInformationStructure:
    def test_drops_empty_columns(self):
        info = InformationStructure(("a", "b", "c"), [[1, 0, 0], [0, 0, 1]])
        assert info.signals == ("a", "c")

    def test_rejects_bad_kernel(self):
        with pytest.raises(InvalidStructure):
            InformationStructure(("a", "b"), [[0.5, 0.4]])
        with pytest.raises(InvalidStructure):
            InformationStructure(("a",), [[1.5]])
        with pytest.raises(InvalidStructure):
            InformationStructure(("a", "b"), [[1.0]])

    def test_from_labels(self):
        info = InformationStructure.from_labels(["x", "y", "x"])
        assert info.signals == ("x", "y")
        np.testing.assert_array_equal(info.kernel, [[1, 0], [0, 1], [1, 0]])

    def test_kernel_rows_must_match(self, ex1):
        with pytest.raises(InvalidStructure):
            signal_stats(ex1, InformationStructure.no_information(2))


class TestBuyerChoice:
    def test_indifference_buys(self):
        assert buyer_choice([3, 4], [9, 4]) == (1, 4.0)

    def test_nothing_offered(self):
        assert buyer_choice([5, 5], [INF, INF]) == (None, 0.0)

    def test_seller_optimal_tie(self):
        assert buyer_choice([10, 5], [9, 4]) == (0, 9.0)

    def test_lowest_index_rule(self):
        assert buyer_choice([10, 6], [9, 5], LOWEST_INDEX) == (0, 9.0)
        assert buyer_choice([6, 10], [5, 9], LOWEST_INDEX) == (0, 5.0)

    def test_no_purchase_when_negative(self):
        assert buyer_choice([1, 1], [2, 3]) == (None, 0.0)

    def test_unknown_rule(self):
        with pytest.raises(ValueError):
            buyer_choice([1], [0], "coin-flip")


class TestExampleOne:
    def test_stats(self, ex1):
        st_ = signal_stats(ex1, ex1_pooling())
        np.testing.assert_allclose(st_.r, [0.2, 0.8])
        np.testing.assert_allclose(st_.nu, [[10, 5], [3, 4]])

    def test_pricing_9_4(self, ex1):
        mech = induce_mechanism(ex1, PricingMechanism(ex1_pooling(), [9, 4]))
        np.testing.assert_array_equal(mech.alloc, [[1, 0], [0, 1]])
        assert revenue(ex1, mech) == pytest.approx(5.0, abs=1e-12)
        assert welfare(ex1, mech) == pytest.approx(5.2, abs=1e-12)
        assert audit_ic_ir(ex1, mech).max_violation == 0.0

    def test_pricing_8_4_less_revenue(self, ex1):
        assert pricing_revenue(ex1, PricingMechanism(ex1_pooling(), [8, 4])) < 5.0

    def test_forced_allocation_ic_violation(self, ex1):
        mech = Mechanism(ex1_pooling(), [[1, 0], [0, 1]], [10, 4])
        report = audit_ic_ir(ex1, mech)
        assert not report.ok
        assert report.max_violation == pytest.approx(1.0)
        assert report.ic_violations[0][:2] == ((0,), (1, 2))
        with pytest.raises(RejectedMechanism):
            revenue(ex1, mech)


def test_lottery_mechanism_revenue():
    d = example_lottery_opt()
    info = InformationStructure.full_disclosure(2)
    mech = Mechanism(info, [[0, 1, 0], [0.5, 0, 0.5]], [20, 4.5])
    assert revenue(d, mech) == pytest.approx(12.25)


def test_tight_example_full_disclosure():
    d = tight_uniform_example(0.1)
    mech = induce_mechanism(d, PricingMechanism(InformationStructure.full_disclosure(2), [10, 1]))
    np.testing.assert_array_equal(mech.alloc, [[0, 1], [1, 0]])
    np.testing.assert_allclose(mech.price, [1, 10])


def test_no_information_max_mean():
    d = ValueDistribution([[4, 1], [0, 2]], [0.5, 0.5])
    info = InformationStructure.no_information(2)
    mech = induce_mechanism(d, PricingMechanism(info, [2, 2]))
    np.testing.assert_array_equal(mech.alloc, [[1, 0]])


def test_single_signal_audit_clean():
    d = appendix_horizontal_subopt(3)
    info = InformationStructure.no_information(d.K)
    mech = induce_mechanism(d, PricingMechanism(info, np.full(d.m, d.mean.max())))
    assert audit_ic_ir(d, mech).ok


def test_zero_prices_and_empty_allocation(ex1):
    info = InformationStructure.full_disclosure(3)
    assert pricing_revenue(ex1, PricingMechanism(info, [0, 0])) == 0.0
    empty = Mechanism(info, np.zeros((3, 2)), np.zeros(3))
    assert welfare(ex1, empty) == 0.0


@pytest.mark.parametrize("dist, expected", [
    (two_item_hardness(0.01), 2.99),
    (point_mass([5, 4]), 5.0),
    (appendix_no_full_surplus(), 7.5),
])
def test_optimal_welfare(dist, expected):
    assert optimal_welfare(dist) == pytest.approx(expected, abs=1e-12)


def test_pricing_rejects_wrong_dimension(ex1):
    with pytest.raises(InvalidStructure):
        induce_mechanism(ex1, PricingMechanism(InformationStructure.no_information(3), [1, 2, 3]))
    with pytest.raises(InvalidStructure):
        PricingMechanism(InformationStructure.no_information(3), [-1, 2])


# --- properties -----------------------------------------------------------------


@settings(max_examples=1000)
@given(st.data())
def test_bayes_plausibility(data):
    d = data.draw(distributions())
    kernel = data.draw(kernels(d.K))
    info = InformationStructure(tuple(range(kernel.shape[1])), kernel)
    s = signal_stats(d, info)
    assert s.r.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(s.r @ s.nu, d.mean, rtol=1e-12, atol=1e-12)


@given(st.data())
def test_pricing_is_ic_ir(data):
    d = data.draw(distributions())
    kernel = data.draw(kernels(d.K))
    info = InformationStructure(tuple(range(kernel.shape[1])), kernel)
    prices = data.draw(st.lists(st.one_of(st.floats(0, 25), st.just(INF)), min_size=d.m, max_size=d.m))
    mech = induce_mechanism(d, PricingMechanism(info, prices))
    assert audit_ic_ir(d, mech).max_violation <= 1e-9
    rev, wel = revenue(d, mech), welfare(d, mech)
    assert rev <= wel + 1e-9
    assert wel <= optimal_welfare(d) + 1e-9


@given(st.data())
def test_random_menus_that_pass_audit(data):
    d = data.draw(distributions())
    kernel = data.draw(kernels(d.K))
    info = InformationStructure(tuple(range(kernel.shape[1])), kernel)
    S = info.S
    raw = np.array(data.draw(st.lists(st.floats(0, 1), min_size=S * (d.m + 1), max_size=S * (d.m + 1))))
    alloc = raw[: S * d.m].reshape(S, d.m)
    alloc = alloc / np.maximum(1.0, alloc.sum(axis=1, keepdims=True) + raw[S * d.m:, None])
    stats = signal_stats(d, info)
    # charge each signal its own interim value: IR binds, IC may fail
    price = np.einsum("si,si->s", stats.nu, alloc)
    mech = Mechanism(info, alloc, price)
    if audit_ic_ir(d, mech).ok:
        assert revenue(d, mech) <= welfare(d, mech) + 1e-9
        assert welfare(d, mech) <= optimal_welfare(d) + 1e-9


@given(st.data())
def test_merge_preserves_mean(data):
    d = data.draw(distributions())
    kernel = data.draw(kernels(d.K, max_s=5))
    info = InformationStructure(tuple(range(kernel.shape[1])), kernel)
    if info.S < 2:
        return
    a, b = data.draw(st.integers(0, info.S - 1)), data.draw(st.integers(0, info.S - 1))
    before = signal_stats(d, info)
    after = signal_stats(d, info.merge(a, b))
    np.testing.assert_allclose(after.r @ after.nu, before.r @ before.nu, rtol=1e-12, atol=1e-12)
