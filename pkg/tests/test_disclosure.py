import numpy as np
import pytest
from conftest import distributions
from hypothesis import given
from hypothesis import strategies as st

from infopricing.approx import uniform_half
from infopricing.core import ValueDistribution, optimal_welfare, signal_stats
from infopricing.disclosure import (
    horizontal_disclosure,
    i_plus,
    max_sale_pooling,
    max_uniform_price,
    top_item_profile,
    wel_split,
)
from infopricing.instances import (
    appendix_horizontal_subopt,
    appendix_no_full_surplus,
    hart_nisan_arc,
    point_mass,
    tight_uniform_example,
)


def test_profile_example_one(ex1):
    prof = top_item_profile(ex1)
    assert prof.top.tolist() == [0, 0, 1]
    assert prof.nu(0, 0) == pytest.approx(22 / 3)
    assert prof.nu(1, 1) == pytest.approx(3.0)
    np.testing.assert_allclose(prof.class_mass, [0.6, 0.4])


def test_profile_symmetric_pair():
    prof = top_item_profile(ValueDistribution([[7, 2], [2, 7]], [0.5, 0.5]))
    np.testing.assert_allclose(prof.cond_mean, [[7, 2], [2, 7]])


def test_arc_masses():
    eps = 0.1
    d = hart_nisan_arc(4, eps)
    i = np.arange(5)
    w = eps**i - eps ** (i + 1)
    np.testing.assert_allclose(d.prob, w / w.sum(), rtol=1e-12)
    assert top_item_profile(d).class_mass.sum() == pytest.approx(1.0, abs=1e-12)


def test_horizontal_structures():
    b1 = appendix_horizontal_subopt(4)
    assert horizontal_disclosure(b1).S == b1.K
    assert horizontal_disclosure(point_mass([3, 1])).S == 1
    info = horizontal_disclosure(appendix_no_full_surplus())
    np.testing.assert_array_equal(info.kernel, np.eye(2))


def test_wel_split_tight():
    d = tight_uniform_example(0.1)
    assert i_plus(d, 1.5) == [0]
    wp, wm = wel_split(d, 1.5)
    assert wp == pytest.approx(1.0) and wm == pytest.approx(0.9)
    assert wel_split(d, 0.0) == pytest.approx((optimal_welfare(d), 0.0))
    assert wel_split(d, 11.0)[0] == 0.0


def test_pooling_tight():
    d = tight_uniform_example(0.1)
    plan = max_sale_pooling(d, 1.0)
    assert plan.i_plus == (0, 1)
    assert plan.sale_probability == pytest.approx(1.0)
    assert np.all(plan.transport == 0)
    plan = max_sale_pooling(d, 1.5)
    assert plan.i_plus == (0,)
    assert plan.sale_probability == pytest.approx(0.1 + 0.85 / 1.5, rel=1e-10)


def test_pooling_rejects_nonpositive_price(ex1):
    with pytest.raises(ValueError):
        max_sale_pooling(ex1, 0.0)


def test_pooling_low_price_needs_no_transport(ex1):
    plan = max_sale_pooling(ex1, float(ex1.support.max(axis=1).min()))
    assert plan.sale_probability == pytest.approx(1.0)
    assert np.all(plan.transport == 0)


def test_pooling_empty_i_plus(ex1):
    plan = max_sale_pooling(ex1, 100.0)
    assert plan.i_plus == () and plan.sale_probability == 0.0


def test_max_uniform_price_exact():
    assert max_uniform_price(tight_uniform_example(0.1))[0] == 1.0
    assert max_uniform_price(ValueDistribution([[1.0], [3.0]], [0.5, 0.5]))[0] == pytest.approx(2.0)


def test_max_uniform_price_vs_grid(ex1):
    p_star, _ = max_uniform_price(ex1)
    grid = np.arange(1e-4, 10.0, 1e-4)
    ok = [p for p in grid if max_sale_pooling(ex1, p).sale_probability >= 1 - 1e-9]
    assert ok[-1] <= p_star + 1e-9
    assert p_star - ok[-1] <= 1e-4 + 1e-9


def test_zero_welfare_instance():
    p, plan = max_uniform_price(point_mass([0, 0]))
    assert p == 0.0 and plan.sale_probability == 0.0


def _check_plan(d, plan):
    f = d.prob
    T = plan.transport
    assert np.all(T >= -1e-12)
    assert np.all(T.sum(axis=1) <= f + 1e-12)
    assert np.all(T[np.isin(d.top, plan.i_plus)] == 0)
    for i in plan.i_plus:
        own = d.top == i
        num = f[own] @ d.support[own, i] + T[:, i] @ d.support[:, i]
        den = f[own].sum() + T[:, i].sum()
        assert num / den >= plan.price - 1e-9 * max(1.0, plan.price)
    assert 0 <= plan.sale_probability <= 1 + 1e-12
    info = plan.information_structure()
    # every point's signal contains its own top item
    for k in range(d.K):
        for s, lab in enumerate(info.signals):
            if info.kernel[k, s] > 0:
                assert int(d.top[k]) in lab


@given(distributions(max_k=6, max_m=4), st.floats(0.05, 1.0))
def test_pooling_plan_invariants(d, frac):
    p = frac * float(d.support.max()) if d.support.max() > 0 else 1.0
    _check_plan(d, max_sale_pooling(d, p))


@given(distributions(max_k=6, max_m=4))
def test_sale_probability_non_increasing(d):
    top = float(d.support.max())
    if top <= 0:
        return
    sales = [max_sale_pooling(d, p).sale_probability for p in np.linspace(0.05, 1.05, 12) * top]
    assert all(b <= a + 1e-9 for a, b in zip(sales, sales[1:]))


@given(distributions(max_k=6, max_m=4))
def test_uniform_price_sells_surely(d):
    if optimal_welfare(d) <= 0:
        return
    p_star, plan = max_uniform_price(d)
    assert plan.sale_probability >= 1 - 1e-6
    _check_plan(d, plan)
    cert = uniform_half(d)
    assert cert.revenue >= p_star - 1e-6
    for eps in (1e-3, 1e-2):
        wp, wm = wel_split(d, p_star + eps)
        assert wp <= p_star + eps + 1e-6
        assert wm <= p_star + eps + 1e-6
        assert wp + wm == pytest.approx(optimal_welfare(d), rel=1e-12, abs=1e-12)


@given(distributions())
def test_profile_top_dominates(d):
    prof = top_item_profile(d)
    assert prof.class_mass.sum() == pytest.approx(1.0, abs=1e-12)
    for i in prof.nonempty:
        assert np.all(prof.cond_mean[i, i] >= prof.cond_mean[i] - 1e-12)
    stats = signal_stats(d, horizontal_disclosure(d))
    np.testing.assert_allclose(stats.nu, prof.cond_mean[prof.nonempty], rtol=1e-12)
