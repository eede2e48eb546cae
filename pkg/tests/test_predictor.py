import pytest

from pipescale import NoHistory, NonMonotonicTime, WindowedMaxPredictor


def test_observe_and_length():
    pred = WindowedMaxPredictor()
    pred.observe(0, 20)
    pred.observe(1, 22)
    assert len(pred) == 2


def test_non_monotonic_time():
    pred = WindowedMaxPredictor()
    pred.observe(1, 5)
    with pytest.raises(NonMonotonicTime):
        pred.observe(1, 6)
    with pytest.raises(NonMonotonicTime):
        pred.observe(0, 6)


def test_bounded_history():
    pred = WindowedMaxPredictor(window_s=120)
    for t in range(200):
        pred.observe(t, t)
    assert len(pred) == 120


def test_predict_windowed_max():
    pred = WindowedMaxPredictor()
    for t, rps in enumerate([20, 22, 19]):
        pred.observe(t, rps)
    assert pred.predict_max() == 22


def test_predict_recent_peak_dominates():
    pred = WindowedMaxPredictor()
    t = 0
    for _ in range(30):
        pred.observe(t, 20)
        t += 1
    for _ in range(3):
        pred.observe(t, 120)
        t += 1
    assert pred.predict_max() == 120


def test_old_peak_falls_out_of_lookback():
    pred = WindowedMaxPredictor(lookback_s=30)
    pred.observe(0, 500)
    for t in range(1, 32):
        pred.observe(t, 10)
    assert pred.predict_max() == 10


def test_no_history():
    with pytest.raises(NoHistory):
        WindowedMaxPredictor().predict_max()


def test_headroom_scales_forecast():
    pred = WindowedMaxPredictor(headroom=1.5)
    pred.observe(0, 40)
    assert pred.predict_max() == pytest.approx(60.0)


def test_never_predicts_below_recent_peaks():
    # with headroom >= 1 the forecast covers the max of the last horizon
    pred = WindowedMaxPredictor(headroom=1.0)
    seen = []
    for t, rps in enumerate([3, 9, 1, 14, 7, 2, 30, 4, 4, 4, 4, 11]):
        pred.observe(t, rps)
        seen.append(rps)
        horizon = 10
        assert pred.predict_max(horizon) >= max(seen[-horizon:])


def test_deterministic_given_history():
    a = WindowedMaxPredictor()
    b = WindowedMaxPredictor()
    for t, rps in enumerate([5, 8, 2, 2, 9]):
        a.observe(t, rps)
        b.observe(t, rps)
    assert a.predict_max() == b.predict_max()
