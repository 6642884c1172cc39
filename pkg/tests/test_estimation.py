import math
import warnings

import numpy as np
import pytest

from crotsim.estimation import (CoherenceCurve, FitWarning, RamseyRecord, bayes_estimate,
                                decompose_trace, default_ramsey_times, fit_decay_curve,
                                rabi_decay_metric, rabi_envelope, recompose_trace, simulate_echo,
                                simulate_rabi, simulate_ramsey, synthetic_ramsey_record,
                                track_trace)
from crotsim.noise import NoiseModel, NoiseTrace, sigma_from_t2star, stream_rng

T2_EXPECTED = math.sqrt(2) / (2 * math.pi * sigma_from_t2star(3.0))


def test_default_times():
    t = default_ramsey_times()
    assert len(t) == 100 and t[0] == pytest.approx(0.04) and t[-1] == pytest.approx(4.0)


def test_ramsey_t2star(params):
    cur = simulate_ramsey(params, "1d", NoiseModel.from_t2star(3.0, seed=2), samples=1500)
    fit = fit_decay_curve(cur)
    assert fit.converged
    assert fit.T2 == pytest.approx(T2_EXPECTED, rel=0.05)
    assert fit.frequency == pytest.approx(1.0, abs=0.01)


def test_noiseless_ramsey_flat(params):
    cur = simulate_ramsey(params, "2u", None, times=np.linspace(0.1, 2, 5), samples=1, detuning=0.0)
    assert np.ptp(cur.prob) < 1e-9


def test_echo_refocuses_quasi_static(params):
    cur = simulate_echo(params, "1d", NoiseModel.from_t2star(3.0, seed=1), samples=300,
                        times=np.array([1.0, 10.0, 50.0]))
    assert np.min(cur.prob) > 0.99


def test_echo_decays_under_ou(params):
    noise = NoiseModel.ornstein_uhlenbeck(sigma_from_t2star(3.0), 5.0, seed=3)
    cur = simulate_echo(params, "1d", noise, samples=400)
    fit = fit_decay_curve(cur)
    assert fit.converged and 4 < fit.T2 < 15 and 0.5 <= fit.alpha <= 3


def test_rabi_envelope_metric():
    m = rabi_decay_metric(f_R=4.867, t2star=3.0, t2rabi=50.0)
    assert m.D == pytest.approx(1.0271e-3, abs=2e-7)
    assert m.R == pytest.approx(1 - m.D)
    assert rabi_envelope(0.0, 4.867, 3.0, 50.0) == 1.0


def test_rabi_fit_recovers_parameters(params):
    cur = simulate_rabi(params, "1d", NoiseModel.from_t2star(3.0, seed=1), samples=400)
    fit = fit_decay_curve(cur, t2star=3.0, scale=math.pi)
    assert fit.T2 == pytest.approx(50.0, rel=0.02)
    assert fit.f_R == pytest.approx(4.867, abs=0.01)


def test_fit_failure_flags():
    t = np.linspace(0.1, 4, 50)
    bad = CoherenceCurve("ramsey", t, np.full(50, 0.5), (1, "down"), {})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FitWarning)
        res = fit_decay_curve(bad)
    assert not res.converged


def test_record_validation():
    with pytest.raises(ValueError):
        RamseyRecord([0.1, 0.2], [0, 2], shots=1)
    with pytest.raises(ValueError):
        RamseyRecord([0.1], [0, 1])


@pytest.mark.parametrize("f", [0.7314, 0.95, 1.0567, 1.3])
def test_bayes_high_shot_within_grid(f):
    rec = synthetic_ramsey_record(f, default_ramsey_times(), 100, rng=stream_rng(1, "b", f))
    res = bayes_estimate(rec, (0, 2), 0.002)
    assert abs(res.f_est - f) <= 0.002
    assert not res.window_too_narrow


def test_bayes_single_shot_within_posterior():
    errs = []
    for k in range(20):
        rec = synthetic_ramsey_record(1.0, default_ramsey_times(), 1, rng=stream_rng(2, k))
        res = bayes_estimate(rec, (0, 2), 0.002)
        errs.append((res.f_est - 1.0) / res.std)
    # standardised errors are O(1)
    assert np.sqrt(np.mean(np.square(errs))) < 2.0


def test_bayes_window_warning():
    rec = synthetic_ramsey_record(1.5, default_ramsey_times(), 50, rng=stream_rng(0))
    with pytest.warns(RuntimeWarning):
        res = bayes_estimate(rec, (1.3, 1.502), 0.002)
    assert res.window_too_narrow


def test_decompose_inverse():
    df1, df2, djh = np.array([0.1]), np.array([-0.2]), np.array([0.03])
    back = decompose_trace(*recompose_trace(df1, df2, djh))
    for a, b in zip(back, (df1, df2, djh)):
        np.testing.assert_allclose(a, b)
    with pytest.raises(ValueError):
        decompose_trace([1], [1, 2], [1], [1])


def test_track_trace_recovers_slow_drift():
    n = 6
    trace = NoiseTrace(np.arange(n) * 1.706, np.linspace(-0.05, 0.05, n), np.zeros(n),
                       np.full(n, 0.01))
    res = track_trace(trace, shots=50, seed=1)
    np.testing.assert_allclose(res["df1"], trace.df1, atol=0.003)
    np.testing.assert_allclose(res["djhalf"], trace.djhalf, atol=0.003)
