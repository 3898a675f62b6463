import numpy as np
import pytest

from slicemux.demand_gen import (
    DemandTrace,
    Distribution,
    OnOffSourceSpec,
    WebBrowsingSpec,
    build_markov_model,
    chain_period,
    gen_markov_trace,
    gen_onoff_trace,
    gen_web_trace,
    onoff_activity,
    read_trace_csv,
    stack_traces,
    window_max,
    write_trace_csv,
)
from slicemux.errors import (
    DimensionMismatch,
    NonStochasticMatrix,
    NotIrreducible,
    Periodic,
    ValidationError,
)

SYM = [[0.5, 0.5], [0.5, 0.5]]


def test_symmetric_chain_stationary():
    m = build_markov_model([[0, 10]], [SYM])
    np.testing.assert_allclose(m.stationary[0], [0.5, 0.5], atol=1e-12)


def test_birth_death_stationary():
    P = [[0.8, 0.2, 0.0], [0.1, 0.8, 0.1], [0.0, 0.2, 0.8]]
    m = build_markov_model([[0, 1, 2]], [P])
    # Detailed balance: pi0 * .2 = pi1 * .1, pi1 * .1 = pi2 * .2
    np.testing.assert_allclose(m.stationary[0], [0.25, 0.5, 0.25], atol=1e-12)


def test_periodic_chain_rejected():
    with pytest.raises(Periodic):
        build_markov_model([[0, 5]], [[[0, 1], [1, 0]]])


def test_reducible_chain_rejected():
    with pytest.raises(NotIrreducible):
        build_markov_model([[0, 5]], [[[1.0, 0.0], [0.5, 0.5]]])


@pytest.mark.parametrize(
    "P", [[[0.5, 0.6], [0.5, 0.5]], [[1.2, -0.2], [0.5, 0.5]], [[0.5, 0.5]], [[np.nan, 1], [0.5, 0.5]]]
)
def test_bad_matrices(P):
    with pytest.raises((NonStochasticMatrix, DimensionMismatch)):
        build_markov_model([[0, 1]], [P])


def test_period_of_three_cycle():
    P = np.roll(np.eye(3), 1, axis=1)
    assert chain_period(P) == 3


def test_large_chain_uses_power_iteration():
    rng = np.random.default_rng(0)
    n = 80
    P = rng.random((n, n))
    P /= P.sum(axis=1, keepdims=True)
    m = build_markov_model([list(range(n))], [P])
    pi = m.stationary[0]
    assert abs(pi.sum() - 1) < 1e-12
    np.testing.assert_allclose(pi @ P, pi, atol=1e-10)


def test_markov_frequency_band():
    m = build_markov_model([[0, 10]], [SYM])
    tr = gen_markov_trace(m, 100_000, seed=1)
    freq = np.mean(tr.demands[:, 0] == 10)
    assert 0.49 <= freq <= 0.51


def test_markov_empirical_cdf_converges():
    P = [[0.7, 0.2, 0.1], [0.3, 0.4, 0.3], [0.2, 0.3, 0.5]]
    m = build_markov_model([[1, 4, 9]], [P])
    tr = gen_markov_trace(m, 100_000, seed=7)
    for w in range(0, 11):
        assert abs(np.mean(tr.demands[:, 0] <= w) - m.cdf(0, w)) <= 0.01


def test_markov_single_slot_and_determinism():
    m = build_markov_model([[0, 10], [3, 4]], [SYM, SYM])
    one = gen_markov_trace(m, 1, seed=3)
    assert one.demands.shape == (1, 2)
    assert one.demands[0, 0] in (0, 10) and one.demands[0, 1] in (3, 4)
    a = gen_markov_trace(m, 500, seed=11)
    b = gen_markov_trace(m, 500, seed=11)
    assert a.demands.tobytes() == b.demands.tobytes()
    assert not np.array_equal(a.demands, gen_markov_trace(m, 500, seed=12).demands)


def test_markov_cap_and_burn_in():
    m = build_markov_model([[50, 400]], [SYM])
    tr = gen_markov_trace(m, 1000, seed=0, burn_in=10, initial_states=[1])
    assert tr.demands.max() == 100


def test_onoff_active_fraction():
    spec = OnOffSourceSpec(user_count=200, active_mean_s=2.0, idle_mean_s=5.0, rate_bps=8000)
    assert abs(spec.active_fraction - 2 / 7) < 1e-12
    act = onoff_activity(spec, 200_000, 10.0, np.random.default_rng(5))
    assert abs(act.mean() / spec.user_count - 2 / 7) <= 0.02


def test_onoff_zero_rate():
    spec = OnOffSourceSpec(user_count=5, active_mean_s=1.0, idle_mean_s=1.0, rate_bps=0.0)
    assert not gen_onoff_trace(spec, 1000, 1.0, seed=0).demands.any()


def test_onoff_always_on_single_user():
    spec = OnOffSourceSpec(user_count=1, active_mean_s=1e9, idle_mean_s=1e-9, rate_bps=1e6, bits_per_prb=1000)
    tr = gen_onoff_trace(spec, 2000, 1.0, seed=0)
    # 1 Mb/s for 1 ms is 1000 bits, exactly one PRB.
    assert (tr.demands == 1).all()


def test_onoff_rejects_bad_spec():
    with pytest.raises(ValidationError):
        OnOffSourceSpec(user_count=1, active_mean_s=1, idle_mean_s=1, rate_bps=1, pareto_shape=1.0)
    with pytest.raises(ValidationError):
        OnOffSourceSpec(user_count=0, active_mean_s=1, idle_mean_s=1, rate_bps=1)


def test_web_infinite_reading_stops_after_first_page():
    spec = WebBrowsingSpec(
        user_count=1,
        object_size_bytes=Distribution("fixed", 125.0),
        objects_per_page=Distribution("fixed", 1),
        parsing_time_s=Distribution("fixed", 0.0),
        reading_time_s=Distribution("fixed", float("inf")),
    )
    tr = gen_web_trace(spec, 1000, 1.0, seed=0)
    assert tr.demands.sum() == 1
    assert tr.demands[0, 0] == 1


def test_web_one_prb_bursts():
    spec = WebBrowsingSpec(
        user_count=1,
        object_size_bytes=Distribution("fixed", 125.0),  # 1000 bits
        objects_per_page=Distribution("fixed", 1),
        parsing_time_s=Distribution("fixed", 0.0),
        reading_time_s=Distribution("fixed", 0.02),
    )
    tr = gen_web_trace(spec, 10_000, 1.0, seed=0)
    d = tr.demands[:, 0]
    assert set(np.unique(d)) == {0, 1}
    # one slot of download then 20 slots of reading
    assert abs(d.sum() - 10_000 / 21) <= 2


def test_web_default_is_bursty():
    tr = gen_web_trace(WebBrowsingSpec(), 100_000, 1.0, seed=2)
    busy = np.mean(tr.demands > 0)
    assert 0 < busy < 1
    assert tr.demands.max() <= 100


@pytest.mark.parametrize(
    "values,window,expected",
    [([1, 5, 2, 4], 2, [5, 4]), ([1, 5, 2, 4], 1, [1, 5, 2, 4]), ([3, 3, 3], 2, [3, 3])],
)
def test_window_max(values, window, expected):
    tr = DemandTrace(np.array(values)[:, None], slot_ms=1.0)
    out = window_max(tr, window)
    assert out.demands[:, 0].tolist() == expected
    assert out.slot_ms == window


def test_trace_invariants():
    with pytest.raises(ValidationError):
        DemandTrace(np.array([[-1]]))
    with pytest.raises(ValidationError):
        DemandTrace(np.zeros((0, 2)))
    with pytest.raises(DimensionMismatch):
        stack_traces([DemandTrace(np.zeros((3, 1))), DemandTrace(np.zeros((4, 1)))])


def test_csv_roundtrip(tmp_path):
    tr = DemandTrace(np.array([[1, 2], [3, 4], [0, 9]]))
    p = tmp_path / "t.csv"
    write_trace_csv(tr, p)
    assert p.read_text().splitlines()[0] == "t,slice_0,slice_1"
    assert np.array_equal(read_trace_csv(p).demands, tr.demands)


def test_csv_errors_name_the_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,slice_0\n0,1\n1,x\n")
    with pytest.raises(ValidationError, match="line 3"):
        read_trace_csv(p)
