import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdcsim.lifetable import (GOMPERTZ_GROWTH, GOMPERTZ_MU65, LifeTable, gompertz_table, load_life_table,
                              make_exponential_table, survival_probability)


def halves():
    return LifeTable(60, np.array([0.5, 0.5, 0.5, 1.0]))


def test_two_year_survival_of_halves():
    assert survival_probability(halves(), 60, 2) == 0.25


def test_survival_past_terminal_age_is_zero():
    t = halves()
    assert t.survival_probability(62, 2) == 0.0
    assert t.survival_probability(63, 5) == 0.0


def test_zero_horizon_is_certain():
    assert halves().survival_probability(61, 0) == 1.0


def test_age_below_table_is_rejected():
    with pytest.raises(ValueError, match="below"):
        halves().survival_probability(59, 1)


def test_terminal_death_must_be_certain():
    with pytest.raises(ValueError, match="certain"):
        LifeTable(60, np.array([0.1, 0.2]))


def test_probability_out_of_range_names_age():
    with pytest.raises(ValueError, match="age 61"):
        LifeTable(60, np.array([0.1, 1.2, 1.0]))


def test_exponential_tiny_force():
    t = make_exponential_table(1e-12)
    assert abs(t.survival_probability(40, 1) - 1.0) < 1e-11


def test_exponential_ln2_halves_exactly():
    t = make_exponential_table(math.log(2.0))
    assert t.survival_probability(30, 1) == 0.5


def test_exponential_ten_years():
    t = make_exponential_table(0.05)
    assert t.survival_probability(50, 10) == pytest.approx(0.606531, abs=1e-6)


@pytest.mark.parametrize("lam", [0.0, -0.1])
def test_exponential_needs_positive_force(lam):
    with pytest.raises(ValueError):
        make_exponential_table(lam)


def test_exponential_matches_closed_form_everywhere():
    lam = 0.031
    t = make_exponential_table(lam, min_age=20, terminal_age=110)
    for a in (20, 47, 80):
        for ell in range(0, 110 - a):
            assert t.survival_probability(a, ell) == pytest.approx(math.exp(-lam * ell), abs=1e-12)


def test_survival_curve_matches_pointwise():
    t = gompertz_table()
    curve = t.survival_curve(65)
    assert curve.size == t.terminal_age - 65 + 1
    for ell in (0, 1, 10, 30):
        assert curve[ell] == pytest.approx(t.survival_probability(65, ell), rel=1e-13)
    assert curve[-1] == 0.0


def test_certain_survival_below():
    t = gompertz_table().with_certain_survival_below(65)
    assert t.survival_probability(18, 47) == 1.0
    assert t.qx(65) > 0.0


def test_bundled_table_is_the_documented_gompertz(table):
    ages = np.arange(18, 120)
    expected = -np.expm1(-GOMPERTZ_MU65 * np.exp(GOMPERTZ_GROWTH * (ages - 65.0)))
    assert table.min_age == 18 and table.terminal_age == 121
    np.testing.assert_allclose(table.q[:-1], expected, rtol=1e-15)


def test_csv_round_trip(tmp_path):
    t = gompertz_table(min_age=30)
    path = tmp_path / "q.csv"
    t.to_csv(path)
    back = load_life_table(path)
    assert back.min_age == 30
    np.testing.assert_array_equal(back.q, t.q)


def test_loader_extends_to_terminal_age():
    t = load_life_table(io.StringIO("age,qx\n60,0.1\n61,0.2\n"), terminal_age=64)
    np.testing.assert_array_equal(t.q, [0.1, 0.2, 1.0, 1.0])


def test_loader_reports_gap():
    with pytest.raises(ValueError, match="age 61"):
        load_life_table(io.StringIO("age,qx\n60,0.1\n62,0.2\n"))


def test_loader_reports_bad_header():
    with pytest.raises(ValueError, match="header"):
        load_life_table(io.StringIO("a,q\n60,0.1\n"))


def test_loader_reports_unparseable_line():
    with pytest.raises(ValueError, match="line 3"):
        load_life_table(io.StringIO("age,qx\n60,0.1\n61,x\n"))


qs = st.lists(st.floats(0.0, 0.6), min_size=2, max_size=40)


@settings(max_examples=60, deadline=None)
@given(qs, st.data())
def test_markov_consistency(q, data):
    t = LifeTable(50, np.array(q + [1.0]))
    a = data.draw(st.integers(50, t.terminal_age - 1))
    l1 = data.draw(st.integers(0, t.terminal_age - a))
    l2 = data.draw(st.integers(0, 10))
    lhs = t.survival_probability(a, l1 + l2)
    rhs = t.survival_probability(a, l1) * (t.survival_probability(a + l1, l2) if a + l1 < t.terminal_age else 0.0)
    assert lhs == pytest.approx(rhs, abs=1e-15)
