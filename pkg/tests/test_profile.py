import math

import numpy as np
import pytest

from pipescale import (
    DegenerateSamples,
    ModelProfile,
    OutOfRange,
    ProfileSample,
    fit_profile,
    latency,
    synth_samples,
    throughput,
)

GEN = ModelProfile(gamma=10.0, epsilon=40.0, delta=2.0, eta=5.0, name="gen")


def test_latency_worked_examples(demo_profile):
    assert latency(demo_profile, 1, 1) == pytest.approx(57.0)
    assert latency(demo_profile, 4, 2) == pytest.approx(53.0)
    assert latency(demo_profile, 2, 2) == pytest.approx(39.0)


def test_throughput_worked_examples(demo_profile):
    assert throughput(demo_profile, 1, 1) == pytest.approx(1000.0 / 57.0)
    assert throughput(demo_profile, 4, 2) == pytest.approx(4000.0 / 53.0)
    assert throughput(demo_profile, 2, 2) == pytest.approx(2000.0 / 39.0)


@pytest.mark.parametrize("b,c", [(0, 1), (17, 1), (1, 0), (1, 17)])
def test_latency_out_of_range(demo_profile, b, c):
    with pytest.raises(OutOfRange):
        latency(demo_profile, b, c)


def test_profile_rejects_negative_coefficients():
    with pytest.raises(ValueError):
        ModelProfile(gamma=-1.0, epsilon=0.0, delta=0.0, eta=1.0)


def test_sample_validation():
    with pytest.raises(ValueError):
        ProfileSample(0, 1, 10.0)
    with pytest.raises(ValueError):
        ProfileSample(1, 1, 0.0)


def test_fit_noiseless_round_trip():
    samples = synth_samples(GEN, batches=(1, 2, 4, 8), cores=(1, 2, 4))
    fit = fit_profile(samples, b_max=16, c_max=16)
    for got, want in [
        (fit.gamma, GEN.gamma),
        (fit.epsilon, GEN.epsilon),
        (fit.delta, GEN.delta),
        (fit.eta, GEN.eta),
    ]:
        assert abs(got - want) <= 1e-6 * max(1.0, want)


def test_fit_random_profiles_round_trip():
    rng = np.random.default_rng(1234)
    for _ in range(25):
        gen = ModelProfile(
            gamma=float(rng.uniform(0.0, 50.0)),
            epsilon=float(rng.uniform(0.0, 100.0)),
            delta=float(rng.uniform(0.0, 10.0)),
            eta=float(rng.uniform(0.0, 20.0)),
        )
        if latency(gen, 1, 1) <= 0:
            continue
        fit = fit_profile(synth_samples(gen, (1, 2, 4, 8), (1, 2, 4)))
        assert abs(fit.gamma - gen.gamma) <= 1e-6 * max(1.0, gen.gamma)
        assert abs(fit.epsilon - gen.epsilon) <= 1e-6 * max(1.0, gen.epsilon)
        assert abs(fit.delta - gen.delta) <= 1e-6 * max(1.0, gen.delta)
        assert abs(fit.eta - gen.eta) <= 1e-6 * max(1.0, gen.eta)


def test_fit_degenerate_single_point():
    samples = [ProfileSample(1, 1, 57.0)] * 6
    with pytest.raises(DegenerateSamples):
        fit_profile(samples)


def test_fit_degenerate_single_core_value():
    # one distinct core count leaves 1/c collinear with the constant basis
    samples = [ProfileSample(b, 2, latency(GEN, b, 2)) for b in (1, 2, 4, 8, 16)]
    with pytest.raises(DegenerateSamples):
        fit_profile(samples)


def test_fit_degenerate_too_few():
    samples = synth_samples(GEN, (1, 2), (1,))
    with pytest.raises(DegenerateSamples):
        fit_profile(samples)


def test_fit_noisy_monte_carlo():
    # sigma=0.5 ms noise on a 40-point grid; every seed recovers within 10%
    truth = np.array([GEN.gamma, GEN.epsilon, GEN.delta, GEN.eta])
    for seed in range(20):
        rng = np.random.default_rng(seed)
        samples = synth_samples(
            GEN, batches=(1, 2, 4, 8, 16), cores=(1, 2, 4, 8),
            noise_sd=0.5, rng=rng, repeats=2,
        )
        fit = fit_profile(samples)
        got = np.array([fit.gamma, fit.epsilon, fit.delta, fit.eta])
        assert np.all(np.abs(got - truth) <= 0.10 * truth)


def test_fit_clamps_to_nonnegative():
    # latencies independent of b/c except noise pull one coefficient negative
    # in the unconstrained fit; the constrained fit must stay at zero
    rng = np.random.default_rng(7)
    flat = ModelProfile(gamma=0.0, epsilon=0.0, delta=0.0, eta=30.0)
    samples = synth_samples(flat, (1, 2, 4, 8), (1, 2, 4), noise_sd=0.3, rng=rng)
    fit = fit_profile(samples)
    assert fit.gamma >= 0 and fit.epsilon >= 0 and fit.delta >= 0 and fit.eta >= 0


def test_latency_monotone_full_grid():
    rng = np.random.default_rng(99)
    profiles = [GEN] + [
        ModelProfile(
            gamma=float(rng.uniform(0, 30)),
            epsilon=float(rng.uniform(0, 60)),
            delta=float(rng.uniform(0, 8)),
            eta=float(rng.uniform(0, 15)),
        )
        for _ in range(10)
    ]
    for p in profiles:
        for c in range(1, p.c_max + 1):
            ls = [latency(p, b, c) for b in range(1, p.b_max + 1)]
            assert all(a <= b + 1e-12 for a, b in zip(ls, ls[1:]))
        for b in range(1, p.b_max + 1):
            ls = [latency(p, b, c) for c in range(1, p.c_max + 1)]
            assert all(a >= b - 1e-12 for a, b in zip(ls, ls[1:]))
            hs = [throughput(p, b, c) for c in range(1, p.c_max + 1)]
            assert all(a <= b + 1e-12 for a, b in zip(hs, hs[1:]))


def test_fitted_latency_finite_over_grid():
    fit = fit_profile(synth_samples(GEN, (1, 2, 4, 8), (1, 2, 4)), b_max=16, c_max=16)
    for b in range(1, 17):
        for c in range(1, 17):
            assert math.isfinite(latency(fit, b, c))
