import math

import numpy as np
import pytest

from crotsim.noise import (NoiseModel, NoiseSample, NoiseTrace, TraceFormatError, draw_sample,
                           draw_samples, load_trace, ou_paths, ou_trace, save_trace,
                           sigma_from_t2star, stream_rng)


def test_sigma_from_t2star_frozen():
    assert sigma_from_t2star(3.0) == pytest.approx(0.07502635967975885, rel=1e-12)
    assert sigma_from_t2star(math.inf) == 0.0
    with pytest.raises(ValueError):
        sigma_from_t2star(0.0)


def test_draw_samples_deterministic_and_keyed():
    m = NoiseModel.from_t2star(3.0, seed=4)
    a = draw_samples(m, 50, "x")
    np.testing.assert_array_equal(a, draw_samples(m, 50, "x"))
    assert not np.allclose(a, draw_samples(m, 50, "y"))
    assert a.shape == (50, 3)


def test_draw_samples_statistics():
    m = NoiseModel.quasi_static(0.1, 0.2, 0.03, seed=1)
    a = draw_samples(m, 200_000, "stats")
    df1 = a[:, 0] - a[:, 1] / 2
    df2 = a[:, 0] + a[:, 1] / 2
    assert np.std(df1) == pytest.approx(0.1, rel=0.01)
    assert np.std(df2) == pytest.approx(0.2, rel=0.01)
    assert np.std(a[:, 2]) == pytest.approx(0.03, rel=0.01)


def test_zero_model():
    m = NoiseModel()
    assert m.is_zero
    assert not np.any(draw_samples(m, 5))
    assert draw_sample(m, 3) == NoiseSample()


def test_model_validation():
    with pytest.raises(ValueError):
        NoiseModel("pink")
    with pytest.raises(ValueError):
        NoiseModel(sigma_f1=-1.0)
    with pytest.raises(ValueError):
        NoiseModel("trace-replay")
    with pytest.raises(ValueError):
        NoiseSample(float("nan"))


def test_sample_from_qubit_shifts():
    s = NoiseSample.from_qubit_shifts(0.1, 0.3, 0.02)
    assert (s.dEZ, s.ddEz, s.dJ) == pytest.approx((0.2, 0.2, 0.02))


def test_trace_replay_cyclic():
    t = NoiseTrace([0, 1, 2], [0.1, 0.2, 0.3], [0.0, 0.0, 0.0], [0.01, 0.02, 0.03])
    m = NoiseModel.replay(t)
    rows = draw_samples(m, 4, start=2)
    # entries 2, 0, 1, 2; dJ is twice the stored half-value
    np.testing.assert_allclose(rows[:, 2], [0.06, 0.02, 0.04, 0.06])
    np.testing.assert_allclose(rows[:, 1], [-0.3, -0.1, -0.2, -0.3])


def test_trace_shifts():
    t = NoiseTrace([0.0], [0.1], [0.2], [0.05])
    sh = t.transition_shifts()
    assert sh[(1, "up")][0] == pytest.approx(0.15)
    assert sh[(2, "down")][0] == pytest.approx(0.15)


def test_trace_roundtrip(tmp_path):
    t = NoiseTrace([0.0, 1.706], [0.1, -0.2], [0.0, 0.3], [0.01, 0.02])
    save_trace(t, tmp_path / "t.csv")
    back = load_trace(tmp_path / "t.csv")
    np.testing.assert_allclose(back.df2, t.df2)
    assert len(back) == 2


@pytest.mark.parametrize("content,line", [
    ("a,b,c,d\n", "line 1"),
    ("time_s,df1_mhz,df2_mhz,djhalf_mhz\n0,1,2\n", "line 2"),
    ("time_s,df1_mhz,df2_mhz,djhalf_mhz\n0,1,2,3\n1,x,2,3\n", "line 3"),
])
def test_trace_errors_name_line(tmp_path, content, line):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(TraceFormatError, match=line):
        load_trace(path)


def test_trace_requires_increasing_times():
    with pytest.raises(ValueError):
        NoiseTrace([0, 0], [0, 0], [0, 0], [0, 0])


def test_ou_paths_statistics():
    rng = stream_rng(0, "ou")
    x = ou_paths(0.5, 10.0, 400, 1.0, rng, n_paths=2000)
    assert x.shape == (2000, 400)
    assert np.std(x[:, -1]) == pytest.approx(0.5, rel=0.05)
    # lag-10 autocorrelation exp(-1)
    c = np.mean(x[:, 100] * x[:, 110]) / np.mean(x[:, 100] ** 2)
    assert c == pytest.approx(math.exp(-1), abs=0.05)


def test_ou_trace_units():
    m = NoiseModel.ornstein_uhlenbeck(0.05, 5.0, 0.01, seed=2)
    t = ou_trace(m, 10.0, 0.5)
    assert len(t) == 20
    assert t.times[1] == pytest.approx(0.5e-6)
    with pytest.raises(ValueError):
        ou_trace(NoiseModel.from_t2star(3.0), 1.0, 0.1)


def test_stream_rng_independent_of_order():
    a = stream_rng(1, "a", 2).random()
    stream_rng(1, "b").random()
    assert stream_rng(1, "a", 2).random() == a
