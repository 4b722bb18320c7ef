import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from usm import (
    EstimationError,
    Joe,
    Laplacian,
    Moe,
    cmoe_from_samples,
    joe_fit_fixed_ratio,
    joe_fit_moments,
    laplacian_mle,
    moe_fit_moments,
    moe_fit_samples,
)

from oracles import central_diff, pdf_mass


# ---------------------------------------------------------------- densities

def test_moe_pdf_at_zero():
    m = Moe(2.8, 0.07)
    assert_allclose(m.pdf(0.0), 20.0, rtol=1e-12)


def test_moe_pdf_interior():
    # kappa=3, beta=1: 0.5 * 3 * 1 / (1+1)^4
    assert_allclose(Moe(3.0, 1.0).pdf(1.0), 0.09375, rtol=1e-12)


def test_joe_pdf_at_zero():
    j = Joe(20.0, 100.0)
    assert_allclose(j.pdf(0.0), 80.0 / (2.0 * np.log(5.0)), rtol=1e-12)


def test_joe_pdf_continuous_at_zero():
    j = Joe(3.0, 40.0)
    assert_allclose(j.pdf(1e-10), j.pdf(0.0), rtol=1e-6)


@pytest.mark.parametrize(
    "model",
    [
        Laplacian(4.0),
        Laplacian(27.2),
        Moe(2.8, 0.07),
        Moe(6.0, 1.3),
        Joe(1.0, np.e),
        Joe(20.0, 100.0),
    ],
)
def test_pdf_normalizes(model):
    assert_allclose(pdf_mass(model), 1.0, atol=1e-6)


def test_log_pdf_matches_pdf():
    rng = np.random.default_rng(5)
    a = rng.standard_normal(50)
    for model in (Laplacian(3.0), Moe(2.5, 0.4), Joe(2.0, 9.0)):
        assert_allclose(model.log_pdf(a), np.log(model.pdf(a)), rtol=1e-10)


# ----------------------------------------------------- regularizer and slope

def test_moe_reg_deriv_at_zero():
    assert_allclose(Moe(2.8, 0.07).reg_deriv(0.0), 1.0 / 0.07, rtol=1e-12)


def test_joe_reg_deriv_at_zero():
    j = Joe(20.0, 100.0)
    assert_allclose(j.reg_deriv(0.0), 60.0, rtol=1e-12)
    assert abs(j.reg_deriv(1e-8) - 60.0) < 1e-4


def test_joe_reg_value_tail():
    # for large t the pair rate drops out: psi(t) -> theta1*t + log t
    j = Joe(20.0, 100.0)
    assert abs(j.reg_value(5.0) - (20.0 * 5.0 + np.log(5.0))) < 1e-12


def test_joe_reg_value_at_zero():
    j = Joe(20.0, 100.0)
    assert_allclose(j.reg_value(0.0), -np.log(80.0), rtol=1e-12)


@pytest.mark.parametrize(
    "model",
    [Laplacian(7.0), Moe(2.8, 0.07), Moe(4.0, 1.0), Joe(2.0, 30.0)],
)
def test_reg_deriv_matches_finite_difference(model):
    rng = np.random.default_rng(11)
    pts = rng.uniform(0.05, 3.0, size=20)
    for t in pts:
        fd = central_diff(lambda u: float(model.reg_value(u)), float(t))
        assert_allclose(float(model.reg_deriv(t)), fd, rtol=1e-6)


def test_reg_value_is_negative_log_density_shift():
    # psi tracks -log pdf up to an additive constant (and, for the heavy
    # tailed family, the fixed slope factor kappa+1 that moves into lambda)
    rng = np.random.default_rng(3)
    a = np.abs(rng.standard_normal(40)) + 0.01
    j = Joe(1.5, 12.0)
    assert np.ptp(j.reg_value(a) + j.log_pdf(a)) < 1e-10
    m = Moe(3.0, 0.5)
    assert np.ptp((m.kappa + 1.0) * m.reg_value(a) + m.log_pdf(a)) < 1e-10
    l = Laplacian(5.0)
    assert np.ptp(l.theta * l.reg_value(a) + l.log_pdf(a)) < 1e-10


def test_moe_reg_concave():
    m = Moe(2.8, 0.07)
    t = np.linspace(0.0, 2.0, 400)
    v = m.reg_value(t)
    second = np.diff(v, 2)
    assert np.all(second < 1e-12)


def test_joe_deriv_positive_and_decreasing():
    j = Joe(5.0, 80.0)
    t = np.linspace(0.0, 4.0, 300)
    d = j.reg_deriv(t)
    assert np.all(d > 0)
    assert np.all(np.diff(d) < 1e-12)


@pytest.mark.parametrize(
    "model", [Laplacian(2.0), Moe(3.0, 0.2), Joe(4.0, 44.0)]
)
def test_negative_magnitudes_rejected(model):
    with pytest.raises(ValueError):
        model.reg_value(np.array([0.3, -0.1]))
    with pytest.raises(ValueError):
        model.reg_deriv(-1e-9)


# ------------------------------------------------------------------ moments

def test_moe_moments():
    m = Moe(3.0, 0.1)
    assert_allclose(m.moment(1), 0.05, rtol=1e-12)
    assert_allclose(m.moment(2), 0.01, rtol=1e-12)


def test_moe_moment_requires_kappa_above_order():
    # the integral converges only for kappa strictly above the order
    assert_allclose(Moe(2.5, 1.0).moment(2), 8.0 / 3.0, rtol=1e-12)
    with pytest.raises(EstimationError):
        Moe(2.0, 1.0).moment(2)
    with pytest.raises(EstimationError):
        Moe(1.5, 1.0).moment(2)


def test_joe_moments():
    assert_allclose(Joe(1.0, np.e).moment(1), 1.0 - np.exp(-1.0), rtol=1e-9)
    j = Joe(2.0, 4.0)
    assert_allclose(j.moment(1), (0.5 - 0.25) / np.log(2.0), rtol=1e-9)
    assert_allclose(j.moment(2), (0.25 - 0.0625) / np.log(2.0), rtol=1e-9)


def test_moment_order_validation():
    with pytest.raises(ValueError):
        Moe(3.0, 1.0).moment(0)
    with pytest.raises(ValueError):
        Joe(1.0, 3.0).moment(-1)


def test_expected_rate_values():
    assert_allclose(Moe(2.8, 0.07).expected_rate(), 40.0, rtol=1e-12)
    assert_allclose(Joe(1.0, np.e).expected_rate(), np.e - 1.0, rtol=1e-12)
    assert_allclose(Laplacian(27.2).expected_rate(), 27.2, rtol=1e-15)


def test_moe_sampling_matches_mean():
    m = Moe(3.0, 0.1)
    rng = np.random.default_rng(77)
    draws = m.sample(rng, 10 ** 6)
    mean = np.abs(draws).mean()
    se = np.abs(draws).std() / 1000.0
    assert abs(mean - m.moment(1)) < 3.0 * se
    # signs are symmetric
    assert abs(np.mean(np.sign(draws))) < 0.01


def test_laplacian_sampling_matches_mean():
    m = Laplacian(8.0)
    rng = np.random.default_rng(78)
    draws = m.sample(rng, 10 ** 6)
    assert abs(np.abs(draws).mean() - 1.0 / 8.0) < 5e-4


# ------------------------------------------------------------------ fitting

def test_laplacian_mle_example():
    m = laplacian_mle(np.array([0.5, -0.25, 0.25]))
    assert_allclose(m.theta, 3.0, rtol=1e-12)


def test_laplacian_mle_ignores_zeros():
    m = laplacian_mle(np.array([0.5, 0.0, -0.25, 0.0, 0.25]))
    assert_allclose(m.theta, 3.0, rtol=1e-12)


def test_laplacian_mle_all_zero_raises():
    with pytest.raises(EstimationError):
        laplacian_mle(np.zeros(4))


def test_moe_fit_moments_example():
    m = moe_fit_moments(0.05, 0.01)
    assert_allclose(m.kappa, 3.0, rtol=1e-9)
    assert_allclose(m.beta, 0.1, rtol=1e-9)


def test_moe_fit_moments_boundary_rejected():
    # mu2 == 2*mu1^2 sits exactly on the kappa -> infinity boundary
    with pytest.raises(EstimationError):
        moe_fit_moments(0.05, 0.005)
    with pytest.raises(EstimationError):
        moe_fit_moments(0.05, 0.004)


@pytest.mark.parametrize("kappa,beta", [(2.2, 0.05), (3.5, 1.0), (8.0, 4.0)])
def test_moe_moment_round_trip(kappa, beta):
    m = Moe(kappa, beta)
    back = moe_fit_moments(m.moment(1), m.moment(2))
    assert_allclose(back.kappa, kappa, rtol=1e-9)
    assert_allclose(back.beta, beta, rtol=1e-9)


def test_moe_fit_samples_matches_moments():
    rng = np.random.default_rng(123)
    draws = Moe(3.0, 0.4).sample(rng, 200000)
    mags = np.abs(draws)
    m = moe_fit_samples(draws)
    direct = moe_fit_moments(mags.mean(), (mags ** 2).mean())
    assert_allclose(m.kappa, direct.kappa, rtol=1e-12)
    assert_allclose(m.beta, direct.beta, rtol=1e-12)
    assert abs(m.kappa - 3.0) < 0.3


def test_moe_fit_samples_caps_light_tails():
    # nearly constant magnitudes push the moment fit past the cap
    vals = np.full(1000, 0.5)
    vals[::2] = 0.5001
    m = moe_fit_samples(vals)
    assert m.kappa == 100.0
    assert_allclose(m.beta, 99.0 * np.abs(vals).mean(), rtol=1e-12)


@pytest.mark.parametrize("theta1,ratio", [(2.0, 2.0), (0.5, 30.0), (10.0, 5.0)])
def test_joe_moment_round_trip(theta1, ratio):
    j = Joe(theta1, theta1 * ratio)
    back = joe_fit_moments(j.moment(1), j.moment(2))
    assert_allclose(back.theta1, j.theta1, rtol=1e-6)
    assert_allclose(back.theta2, j.theta2, rtol=1e-6)


def test_joe_fit_moments_rejects_heavy_second_moment():
    with pytest.raises(EstimationError):
        joe_fit_moments(0.1, 0.1 ** 2 * 0.9)


def test_joe_fit_fixed_ratio():
    true = Joe(2.0, 200.0)
    j = joe_fit_fixed_ratio(true.moment(1), true.moment(2), ratio=100.0)
    assert_allclose(j.theta2 / j.theta1, 100.0, rtol=1e-12)
    assert_allclose(j.theta1, 2.0, rtol=1e-9)


def test_cmoe_from_samples_examples():
    m = cmoe_from_samples(np.array([0.04, 0.10]))
    assert m.kappa == 2.0
    assert_allclose(m.beta, 0.14, rtol=1e-12)
    m1 = cmoe_from_samples(np.array([0.5]))
    assert m1.kappa == 1.0
    assert_allclose(m1.beta, 0.5, rtol=1e-12)


def test_cmoe_rejects_degenerate_context():
    with pytest.raises(EstimationError):
        cmoe_from_samples(np.zeros(2))
    with pytest.raises(EstimationError):
        cmoe_from_samples(np.array([]))
    with pytest.raises(EstimationError):
        cmoe_from_samples(np.array([0.1, -0.2]))


# ------------------------------------------------------------- construction

def test_parameter_validation():
    with pytest.raises(ValueError):
        Laplacian(0.0)
    with pytest.raises(ValueError):
        Moe(3.0, -0.1)
    with pytest.raises(ValueError):
        Joe(2.0, 2.0)  # needs theta2 > theta1
    with pytest.raises(ValueError):
        Joe(-1.0, 4.0)


@settings(max_examples=40, deadline=None)
@given(
    kappa=st.floats(2.05, 20.0),
    beta=st.floats(0.01, 10.0),
)
def test_moe_round_trip_property(kappa, beta):
    m = Moe(kappa, beta)
    back = moe_fit_moments(m.moment(1), m.moment(2))
    assert_allclose(back.kappa, kappa, rtol=1e-6)
    assert_allclose(back.beta, beta, rtol=1e-6)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.0, 50.0))
def test_joe_deriv_bounded_by_rates(t):
    j = Joe(3.0, 21.0)
    d = float(j.reg_deriv(t))
    assert 3.0 - 1e-9 <= d <= (3.0 + 21.0) / 2.0 + 1e-9
