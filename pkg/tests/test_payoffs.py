import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mqh.errors import EmptyBatch, MonotonicityViolation
from mqh.market import BsParams, ScenarioBatch, SeededStream, simulate_bs
from mqh.payoffs import Level, PayoffLadder, build_costs, evaluate_ladder
from mqh.dual_sga import TRAIN_STREAM


def test_evaluate_examples():
    pnl = PayoffLadder.pnl("call", 100, [0, 10, 20])
    np.testing.assert_array_equal(evaluate_ladder(pnl, 150), [50, 60, 70])
    np.testing.assert_array_equal(evaluate_ladder(pnl, 80), [0, 10, 20])
    qh = PayoffLadder.quantile_hedge("call", 100)
    np.testing.assert_array_equal(evaluate_ladder(qh, 100), [0, 0])


def test_rejects_non_monotone():
    with pytest.raises(MonotonicityViolation):
        PayoffLadder.pnl("call", 100, [0, 20, 10])
    with pytest.raises(MonotonicityViolation):
        PayoffLadder.pnl("call", 100, [0, 0])
    # a put sits above zero but a call with a lower offset can cross it
    with pytest.raises(MonotonicityViolation):
        PayoffLadder.from_levels([Level("call", 100), Level("put", 100, 5.0)])
    with pytest.raises(MonotonicityViolation):
        PayoffLadder.from_levels([Level("call", 90), Level("call", 100)])
    PayoffLadder.from_levels([Level("call", 100), Level("call", 90)])
    PayoffLadder.from_levels([Level("zero"), Level("put", 100), Level("put", 110)])


_levels = st.builds(Level, st.sampled_from(["zero", "call", "put"]),
                    st.floats(0, 200), st.floats(-20, 20))


@given(st.lists(_levels, min_size=1, max_size=4), st.lists(st.floats(0, 1000), min_size=1, max_size=30))
def test_accepted_ladders_are_monotone(levels, xs):
    try:
        ladder = PayoffLadder.from_levels(levels)
    except MonotonicityViolation:
        # exact check must agree with a dense grid: some x shows the violation
        grid = np.concatenate([np.linspace(0, 1000, 20001), [lv.strike for lv in levels]])
        vals = np.stack([lv(grid) for lv in levels], axis=-1)
        slopes = [lv.slope_at_infinity for lv in levels]
        assert np.any(np.diff(vals, axis=1) < 0) or np.any(np.diff(slopes) < 0)
        return
    for x in xs:
        assert np.all(np.diff(evaluate_ladder(ladder, x)) >= 0)


def test_build_costs_examples():
    ladder = PayoffLadder.pnl("call", 100, [0, 10, 20])
    batch = ScenarioBatch(np.array([80.0]), np.array([2.0]), np.array([0.0]))
    c = build_costs(ladder, batch)
    np.testing.assert_array_equal(c.values, [[0, 20, 40]])
    np.testing.assert_array_equal(c.reduced, [[20, 40]])
    one = build_costs(PayoffLadder.pnl("call", 100, [0]), batch)
    assert one.reduced.shape == (1, 0)
    flat = simulate_bs(BsParams(drift=0.0, rate=0.0), 500, SeededStream(1))
    c = build_costs(ladder, flat)
    np.testing.assert_array_equal(c.values, ladder.values(flat.x_terminal))
    with pytest.raises(EmptyBatch):
        build_costs(ladder, ScenarioBatch(np.array([]), np.array([]), np.array([])))


def test_cost_matrix_invariants(fig_params):
    batch = simulate_bs(fig_params, 10**5, SeededStream(4))
    for ladder in (PayoffLadder.pnl("call", 100, [0, 10, 100]), PayoffLadder.quantile_hedge("put", 100)):
        c = build_costs(ladder, batch)
        assert np.all(np.diff(c.values, axis=1) >= 0)
        np.testing.assert_allclose(c.reduced, c.values[:, 1:] - c.values[:, :1], rtol=1e-12, atol=1e-12)
        assert np.all(c.reduced >= 0)


@pytest.mark.parametrize("offsets", [(0, 10, 20), (0, 10, 100)])
def test_second_moment_stable(fig_params, offsets):
    ladder = PayoffLadder.pnl("call", 100, offsets)
    small = build_costs(ladder, simulate_bs(fig_params, 10**5, SeededStream(8, TRAIN_STREAM)))
    big = build_costs(ladder, simulate_bs(fig_params, 2 * 10**5, SeededStream(9, TRAIN_STREAM)))
    ratio = np.mean(small.values[:, -1] ** 2) / np.mean(big.values[:, -1] ** 2)
    assert 0.9 <= ratio <= 1.1
