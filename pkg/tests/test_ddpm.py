"""Schedule construction, forward noising, clean-sample recovery, reverse step."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from steerkit import (
    DimensionError,
    LatentSample,
    NoiseSchedule,
    ParameterError,
    RangeError,
    ScheduleSpec,
    add_noise,
    build_schedule,
    clean_from_eps,
    clean_from_v,
    reverse_step,
)


def test_single_step_schedule_boundary():
    sched = NoiseSchedule.from_betas(np.array([0.1]))
    assert sched.T == 1
    assert sched.alpha_bar[0] == 1.0
    assert sched.alpha_bar[1] == pytest.approx(0.9)
    # (1 - alpha_bar[0]) / (1 - alpha_bar[1]) * beta = 0
    assert sched.sigma2[1] == 0.0


def test_two_step_alpha_bar_product():
    sched = NoiseSchedule.from_betas(np.array([0.1, 0.2]))
    assert sched.alpha_bar[1] == pytest.approx(0.9)
    assert sched.alpha_bar[2] == pytest.approx(0.72)
    # posterior variance by hand: (1 - 0.9) / (1 - 0.72) * 0.2
    assert sched.sigma2[2] == pytest.approx(0.1 / 0.28 * 0.2)


def test_linear_schedule_endpoints_and_monotonicity():
    sched = build_schedule(50, ScheduleSpec("linear", 1e-4, 0.02))
    assert sched.T == 50
    assert sched.beta[1] == pytest.approx(1e-4)
    assert sched.beta[50] == pytest.approx(0.02)
    assert np.all(np.diff(sched.alpha_bar) < 0)
    assert 0.0 < sched.alpha_bar[50] < 1.0


def test_scaled_linear_interpolates_in_sqrt_space():
    spec = ScheduleSpec("scaled_linear", 4e-4, 0.04)
    sched = build_schedule(10, spec)
    assert sched.beta[1] == pytest.approx(4e-4)
    assert sched.beta[10] == pytest.approx(0.04)
    steps = np.diff(np.sqrt(sched.beta[1:]))
    np.testing.assert_allclose(steps, steps[0], rtol=1e-9)


@pytest.mark.parametrize(
    "T,spec",
    [
        (0, ScheduleSpec()),
        (10, ScheduleSpec(beta_start=0.0)),
        (10, ScheduleSpec(beta_end=1.0)),
        (10, ScheduleSpec(beta_start=0.3, beta_end=0.1)),
        (10, ScheduleSpec(kind="cosine")),
    ],
)
def test_bad_schedule_parameters(T, spec):
    with pytest.raises(ParameterError):
        build_schedule(T, spec)


def test_from_betas_rejects_out_of_range():
    with pytest.raises(ParameterError):
        NoiseSchedule.from_betas(np.array([0.1, 1.0]))
    with pytest.raises(ParameterError):
        NoiseSchedule.from_betas(np.array([0.0]))


def test_tables_are_frozen():
    sched = build_schedule(5)
    with pytest.raises(ValueError):
        sched.beta[1] = 0.5


def test_check_step_bounds():
    sched = build_schedule(5)
    sched.check_step(1)
    sched.check_step(5)
    for t in (0, 6, -1):
        with pytest.raises(RangeError):
            sched.check_step(t)


@given(st.lists(st.floats(1e-5, 0.5), min_size=1, max_size=40))
def test_table_consistency(betas):
    sched = NoiseSchedule.from_betas(np.array(betas))
    assert np.all(sched.alpha[1:] == 1.0 - sched.beta[1:])
    np.testing.assert_allclose(
        sched.alpha_bar[1:], np.cumprod(sched.alpha[1:]), rtol=1e-12
    )
    assert np.all(np.diff(sched.alpha_bar) < 0)
    expected_s2 = (
        (1 - sched.alpha_bar[:-1]) / (1 - sched.alpha_bar[1:]) * sched.beta[1:]
    )
    np.testing.assert_allclose(sched.sigma2[1:], expected_s2, rtol=1e-12)


# --- forward / inverse -----------------------------------------------------


def _sample(rng, shape=(3, 6, 8), t=0):
    return LatentSample(rng.standard_normal(shape), timestep=t)


def test_add_noise_matches_marginal_formula():
    rng = np.random.default_rng(0)
    sched = build_schedule(20)
    x0, eps = _sample(rng), _sample(rng)
    for t in (1, 7, 20):
        xt = add_noise(x0, eps, t, sched)
        want = (
            np.sqrt(sched.alpha_bar[t]) * x0.values
            + np.sqrt(1 - sched.alpha_bar[t]) * eps.values
        )
        np.testing.assert_allclose(xt.values, want, rtol=1e-12)
        assert xt.timestep == t


def test_add_noise_shape_mismatch():
    rng = np.random.default_rng(1)
    sched = build_schedule(5)
    with pytest.raises(DimensionError):
        add_noise(_sample(rng), _sample(rng, shape=(3, 6, 9)), 2, sched)


@given(st.integers(1, 30), st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_eps_and_v_inversion(t, seed):
    """Recovering x0 from either parameterization undoes the forward map."""
    rng = np.random.default_rng(seed)
    sched = build_schedule(30)
    x0, eps = _sample(rng), _sample(rng)
    xt = add_noise(x0, eps, t, sched)
    back = clean_from_eps(xt, eps, t, sched)
    np.testing.assert_allclose(back.values, x0.values, atol=1e-9)
    v = LatentSample(
        np.sqrt(sched.alpha_bar[t]) * eps.values
        - np.sqrt(1 - sched.alpha_bar[t]) * x0.values,
        timestep=t,
    )
    back_v = clean_from_v(xt, v, t, sched)
    np.testing.assert_allclose(back_v.values, x0.values, atol=1e-9)
    assert back.timestep == 0 and back_v.timestep == 0


def test_clean_recovery_at_boundary_is_identity():
    # t=0: alpha_bar = 1, so x_t already is the clean sample and the noise
    # estimate contributes nothing.
    sched = build_schedule(3)
    rng = np.random.default_rng(2)
    xt, eps = _sample(rng), _sample(rng)
    out = clean_from_eps(xt, eps, 0, sched)
    np.testing.assert_allclose(out.values, xt.values, rtol=1e-12)


def test_reverse_step_final_step_is_deterministic():
    """sigma_1 = 0: the t=1 update ignores the generator entirely."""
    sched = build_schedule(10)
    rng = np.random.default_rng(3)
    xt, x0 = _sample(rng, t=1), _sample(rng)
    a = reverse_step(xt, x0, 1, sched, np.random.default_rng(100))
    b = reverse_step(xt, x0, 1, sched, np.random.default_rng(999))
    np.testing.assert_array_equal(a.values, b.values)
    # and the mean collapses onto the clean estimate: coeff of x0 is
    # beta_1 / (1 - alpha_bar_1) = 1, coeff of x_t is 0
    np.testing.assert_allclose(a.values, x0.values, rtol=1e-12)
    assert a.timestep == 0


def test_reverse_step_matches_posterior_formula():
    sched = build_schedule(10)
    rng = np.random.default_rng(4)
    xt, x0 = _sample(rng, t=6), _sample(rng)
    z_rng = np.random.default_rng(55)
    got = reverse_step(xt, x0, 6, sched, z_rng)
    ab, ab_prev = sched.alpha_bar[6], sched.alpha_bar[5]
    beta, alpha = sched.beta[6], sched.alpha[6]
    mu = (
        np.sqrt(ab_prev) * beta / (1 - ab) * x0.values
        + np.sqrt(alpha) * (1 - ab_prev) / (1 - ab) * xt.values
    )
    z = np.random.default_rng(55).standard_normal(xt.values.shape)
    np.testing.assert_allclose(got.values, mu + np.sqrt(sched.sigma2[6]) * z, rtol=1e-10)
    assert got.timestep == 5


def test_reverse_step_preserves_float32():
    sched = build_schedule(10)
    rng = np.random.default_rng(5)
    xt = LatentSample(rng.standard_normal((3, 4, 4)).astype(np.float32), timestep=4)
    x0 = LatentSample(rng.standard_normal((3, 4, 4)).astype(np.float32))
    out = reverse_step(xt, x0, 4, sched, np.random.default_rng(0))
    assert out.values.dtype == np.float32
