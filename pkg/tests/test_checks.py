"""Verification suite: series enclosures, Gaussian moments, tail/moment/pathwise bounds."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import zeta
from scipy.stats import binom

from spde1d.checks import (
    BoundCheckConfig,
    check_apriori_bound,
    check_fernique,
    check_gamma_condition,
    check_noise_rate,
    check_series_limit,
    check_sup_moment_bound,
    estimate_embedding,
    estimate_sup_embedding,
    gaussian_abs_moment,
    select_eta,
    series_value,
    terminal_noise_sampler,
)
from spde1d.drift import EquationSpec
from spde1d.fields import GridSpec, SpectralField, eigenvalue, hr_norm, lebesgue_norm_even, sobolev_norm, sup_norm
from spde1d.noise import NoiseLadder
from spde1d.report import make_report
from spde1d.stepper import SchemeConfig, Trajectory, run

PI2 = math.pi**2

BURGERS = EquationSpec(kind="burgers", c0=1.0, c1=-0.5, varrho=3.0 / 16.0, chi=1.0 / 64.0)


# ---------------------------------------------------------------- gaussian moments


def test_gaussian_abs_moment_small_orders():
    # E|Y|^2 = 1, E|Y|^4 = 3, E|Y| = sqrt(2/pi)
    assert gaussian_abs_moment(2.0) == pytest.approx(1.0, rel=1e-14)
    assert gaussian_abs_moment(4.0) == pytest.approx(3.0**0.25, rel=1e-14)
    assert gaussian_abs_moment(1.0) == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-14)


def test_gaussian_abs_moment_order_64_double_factorial():
    # E Y^64 = 63!! for even orders
    m = 1
    for k in range(1, 64, 2):
        m *= k
    assert gaussian_abs_moment(64.0) == pytest.approx(m ** (1.0 / 64.0), rel=1e-13)


def test_gaussian_abs_moment_rejects_nonpositive():
    with pytest.raises(ValueError):
        gaussian_abs_moment(0.0)
    with pytest.raises(ValueError):
        gaussian_abs_moment(-2.0)


@settings(max_examples=60, deadline=None)
@given(
    p1=st.floats(min_value=0.2, max_value=40.0),
    p2=st.floats(min_value=0.2, max_value=40.0),
)
def test_gaussian_abs_moment_monotone_in_order(p1, p2):
    # Lyapunov: (E|Y|^p)^{1/p} nondecreasing in p
    lo, hi = sorted((p1, p2))
    assert gaussian_abs_moment(lo) <= gaussian_abs_moment(hi) * (1.0 + 1e-12)


# ---------------------------------------------------------------- series enclosures


def test_series_basel_value():
    v, w = series_value(0.0, 2.0, 0.0)
    assert abs(v - PI2 / 6.0) < 1e-12
    assert w < 1e-12 * v


def test_series_zeta_cross_check():
    v, w = series_value(0.8, 2.0, 0.0)
    assert v == pytest.approx(float(zeta(1.2)), rel=1e-13)
    assert w < 1e-12 * v


@pytest.mark.parametrize("c2", [100.0, 10_000.0])
def test_series_coth_closed_form(c2):
    # sum 1/(k^2 + c^2) = (pi c coth(pi c) - 1) / (2 c^2)
    c = math.sqrt(c2)
    closed = (math.pi * c / math.tanh(math.pi * c) - 1.0) / (2.0 * c2)
    v, w = series_value(0.0, 2.0, c2)
    assert v == pytest.approx(closed, rel=1e-13)
    assert w < 1e-12 * v


def test_series_brute_force_oracle_large_eta():
    # partial sum to 1e7 plus integral tail with Euler-Maclaurin endpoint terms
    alpha, eta, cut = 0.8, 1.0e9, 10_000_000
    f = lambda x: x**alpha / (x**2 + eta)
    psum = 0.0
    for lo in range(1, cut + 1, 1_000_000):
        k = np.arange(lo, min(lo + 1_000_000, cut + 1), dtype=np.float64)
        psum += float(np.sum(k**alpha / (k**2 + eta)))
    # t = 1/x maps the slowly decaying tail onto (0, 1/cut] with an integrable
    # endpoint singularity, which the adaptive rule resolves reliably
    tail, terr = quad(lambda t: t**-alpha / (1.0 + eta * t * t), 0.0, 1.0 / cut, epsabs=0.0, epsrel=1e-13, limit=400)
    fp = cut ** (alpha - 1.0) * (alpha * (cut**2 + eta) - 2.0 * cut**2) / (cut**2 + eta) ** 2
    oracle = psum + tail - 0.5 * f(cut) - fp / 12.0
    v, w = series_value(alpha, 2.0, eta)
    assert v == pytest.approx(oracle, rel=1e-10)
    assert w < 1e-12 * v


def test_series_deep_eta_power_law():
    # S(eta) ~ C eta^{(alpha+1)/beta - 1}: quadrupling eta scales by 4^{-0.1}
    r = series_value(0.8, 2.0, 4.0e18)[0] / series_value(0.8, 2.0, 1.0e18)[0]
    assert r == pytest.approx(4.0**-0.1, rel=1e-12)


def test_series_rejects_bad_exponents():
    with pytest.raises(ValueError):
        series_value(-0.1, 2.0, 0.0)
    with pytest.raises(ValueError):
        series_value(0.8, 1.5, 0.0)  # beta_exp <= 1 + alpha diverges
    with pytest.raises(ValueError):
        series_value(0.0, 2.0, -1.0)


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(min_value=0.0, max_value=1.0),
    gap=st.floats(min_value=0.2, max_value=1.8),
    eta1=st.floats(min_value=0.0, max_value=1.0e8),
    factor=st.floats(min_value=1.01, max_value=1.0e4),
)
def test_series_monotone_decreasing_in_eta(alpha, gap, eta1, factor):
    beta_exp = 1.0 + alpha + gap
    eta2 = max(eta1, 1.0) * factor
    v1, w1 = series_value(alpha, beta_exp, eta1)
    v2, w2 = series_value(alpha, beta_exp, eta2)
    assert v2 - v1 <= w1 + w2


# ---------------------------------------------------------------- series limit check


def test_series_limit_engaged_span():
    rep = check_series_limit(0.0, 2.0, [0.0, 1.0e2, 1.0e4, 1.0e6])
    assert rep.passed
    assert rep.lhs == pytest.approx(0.991436, abs=1e-5)
    assert "criterion engaged" in rep.notes


def test_series_limit_narrow_span_decrease_only():
    rep = check_series_limit(0.0, 2.0, [0.0, 1.0, 2.0])
    assert rep.passed
    assert rep.lhs == pytest.approx(0.868903, abs=1e-5)
    assert "not engaged" in rep.notes


def test_series_limit_slow_family_fails_drop_rule():
    # alpha = 0.8 tail decays like eta^{-0.1}: far short of 100x over this span
    rep = check_series_limit(0.8, 2.0, [0.0, 1.0e2, 1.0e4, 1.0e6])
    assert not rep.passed
    assert rep.lhs == pytest.approx(22.8351, abs=1e-3)


def test_series_limit_rejects_bad_lists():
    with pytest.raises(ValueError):
        check_series_limit(0.0, 2.0, [1.0])
    with pytest.raises(ValueError):
        check_series_limit(0.0, 2.0, [1.0, 1.0])
    with pytest.raises(ValueError):
        check_series_limit(0.0, 2.0, [-1.0, 1.0])
    with pytest.raises(ValueError):
        check_series_limit(0.8, 1.5, [0.0, 1.0])


# ---------------------------------------------------------------- gamma condition


def test_gamma_condition_fails_at_moderate_eta():
    rep = check_gamma_condition(p=8.0, beta=0.2, T=1.0, gamma=4.0, eta=1.0e9, embedding_constant=1.0)
    assert not rep.passed
    assert rep.lhs == pytest.approx(1.170927e7, rel=1e-5)
    assert "series=" in rep.notes


def test_gamma_condition_fails_for_huge_gamma():
    rep = check_gamma_condition(p=8.0, beta=0.2, T=1.0, gamma=1.0e6, eta=0.0, embedding_constant=1.0)
    assert not rep.passed
    assert rep.lhs > 1.0e6


def test_gamma_condition_passes_deep_in_the_tail():
    rep = check_gamma_condition(p=8.0, beta=0.2, T=1.0, gamma=4.0, eta=2.0**300, embedding_constant=1.0)
    assert rep.passed
    assert rep.lhs < 1.0


def test_gamma_condition_domain_errors():
    with pytest.raises(ValueError):
        check_gamma_condition(p=8.0, beta=0.25, T=1.0, gamma=4.0, eta=0.0, embedding_constant=1.0)
    with pytest.raises(ValueError):
        check_gamma_condition(p=5.0, beta=0.2, T=1.0, gamma=4.0, eta=0.0, embedding_constant=1.0)
    with pytest.raises(ValueError):
        check_gamma_condition(p=8.0, beta=0.2, T=0.0, gamma=4.0, eta=0.0, embedding_constant=1.0)
    with pytest.raises(ValueError):
        check_gamma_condition(p=8.0, beta=0.2, T=1.0, gamma=4.0, eta=-1.0, embedding_constant=1.0)


def test_select_eta_dyadic_threshold():
    # smallest passing power of two for the T = 1, p = 8, gamma = 4 instance
    eta_star, rep = select_eta(p=8.0, beta=0.2, T=1.0, gamma=4.0, embedding_constant=1.0)
    assert eta_star == 2.0**265
    assert rep.passed
    below = check_gamma_condition(p=8.0, beta=0.2, T=1.0, gamma=4.0, eta=2.0**264, embedding_constant=1.0)
    assert not below.passed


def test_select_eta_returns_zero_when_condition_is_free():
    eta_star, rep = select_eta(p=8.0, beta=0.2, T=1.0, gamma=1.0e-12, embedding_constant=1.0)
    assert eta_star == 0.0
    assert rep.passed


def test_select_eta_exhausted_range():
    with pytest.raises(RuntimeError):
        select_eta(p=8.0, beta=0.2, T=1.0, gamma=4.0, embedding_constant=1.0, max_exponent=16)


# ---------------------------------------------------------------- fernique


def test_terminal_sampler_deterministic_and_eta_zero_degenerate_pair():
    s1 = terminal_noise_sampler(8, 1.0, eta=0.0, seed=4)
    s2 = terminal_noise_sampler(8, 1.0, eta=0.0, seed=4)
    np.testing.assert_array_equal(s1(3).coeffs, s2(3).coeffs)
    shifted = terminal_noise_sampler(8, 1.0, eta=0.0, seed=4, which="shifted")
    np.testing.assert_array_equal(s1(3).coeffs, shifted(3).coeffs)  # eta = 0: same integrand


def test_fernique_convolution_both_norms():
    samp = terminal_noise_sampler(16, 1.0, eta=0.0, seed=3)
    for norm in ("sup", "H"):
        rep = check_fernique(samp, samples=4000, quantile_samples=1500, norm=norm)
        assert rep.passed
        assert rep.lhs < 2.0
        assert "not centered" not in rep.notes


def test_fernique_scalar_closed_form():
    # sup of z/sqrt(2) e_1 is |z|; E exp(z^2/(18R^2)) = (1 - 2/(18R^2))^{-1/2}
    rng = np.random.default_rng(7)
    zs = rng.standard_normal(10_000)

    def sampler(i):
        return SpectralField(np.array([zs[i] / math.sqrt(2.0)]), 1.0)

    q, n = 2000, 8000
    rep = check_fernique(sampler, samples=n, quantile_samples=q, norm="sup")
    order = np.sort(np.abs(zs[:q]))
    ku = min(int(binom.ppf(0.995, q, 0.9)) + 1, q)
    R = order[ku - 1]
    closed = (1.0 - 2.0 / (18.0 * R * R)) ** -0.5
    assert rep.passed
    assert abs(rep.lhs - closed) < 4e-3  # lhs = mean + 3 SE, SE ~ 3e-4 here


def test_fernique_flags_uncentered_sampler():
    base = terminal_noise_sampler(16, 1.0, eta=0.0, seed=3)

    def shifted(i):
        f = base(i)
        c = f.coeffs.copy()
        c[0] += 5.0
        return SpectralField(c, f.c0)

    rep = check_fernique(shifted, samples=2000, quantile_samples=1000)
    assert "not centered" in rep.notes


def test_fernique_rejects_degenerate_and_small_samples():
    def const(i):
        return SpectralField(np.array([1.0]), 1.0)

    with pytest.raises(ValueError):
        check_fernique(const, samples=1500, quantile_samples=1000)
    samp = terminal_noise_sampler(4, 1.0, seed=0)
    with pytest.raises(ValueError):
        check_fernique(samp, samples=500, quantile_samples=1000)
    with pytest.raises(ValueError):
        check_fernique(samp, samples=2000, quantile_samples=1000, norm="L2")


# ---------------------------------------------------------------- sup-moment bound


def test_sup_moment_single_mode_matches_closed_form():
    # sup |a e_1| = sqrt(2)|a|, so E sup^2 = 2 Var a_1 = (1 - e^{-2 lam_1})/lam_1
    rep = check_sup_moment_bound(n=1, t=1.0, eta=0.0, beta=0.2, p=8.0, samples=2000, embedding_constant=1.6)
    lam1 = eigenvalue(1, 1.0)
    closed = math.sqrt((1.0 - math.exp(-2.0 * lam1)) / lam1)
    assert rep.passed
    assert abs(rep.lhs - closed) < 0.02  # ~3 SE of the 2000-sample mean


def test_sup_moment_truncated_convolution_passes():
    rep = check_sup_moment_bound(n=16, t=1.0, eta=0.0, beta=0.2, p=8.0, samples=4000, embedding_constant=1.6)
    assert rep.passed
    rep_sh = check_sup_moment_bound(n=16, t=1.0, eta=100.0, beta=0.2, p=8.0, samples=4000, embedding_constant=1.6)
    assert rep_sh.passed
    assert rep_sh.rhs < rep.rhs  # the shift can only shrink the bound


def test_sup_moment_rhs_monotone_in_modes():
    r8 = check_sup_moment_bound(n=8, t=1.0, eta=0.0, beta=0.2, p=8.0, samples=1000, embedding_constant=1.0)
    r16 = check_sup_moment_bound(n=16, t=1.0, eta=0.0, beta=0.2, p=8.0, samples=1000, embedding_constant=1.0)
    assert r8.rhs <= r16.rhs


def test_sup_moment_domain_errors():
    good = dict(n=4, t=1.0, eta=0.0, beta=0.2, p=8.0, samples=1000, embedding_constant=1.0)
    for bad in (
        dict(n=0),
        dict(t=0.0),
        dict(eta=-1.0),
        dict(beta=0.6),
        dict(beta=0.0),
        dict(p=4.0),  # p <= 1/beta
        dict(samples=50),
    ):
        with pytest.raises(ValueError):
            check_sup_moment_bound(**{**good, **bad})


# ---------------------------------------------------------------- a priori bound


def _burgers_config(M=128, eta=0.0, seed=5):
    xi = SpectralField(np.array([0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 1.0)
    return SchemeConfig(
        equation=BURGERS,
        n=8,
        grid=GridSpec(T=1.0, M=M),
        ladder=NoiseLadder(seed=seed, fine_steps=M, fine_modes=8, T=1.0, eta=eta),
        xi=xi,
    )


def test_bound_config_validation():
    cfg = BoundCheckConfig()
    assert cfg.to_dict()["slack"] == 1.05
    for bad in (dict(beta=0.0), dict(slack=0.9), dict(p=1.5), dict(eta=-1.0)):
        with pytest.raises(ValueError):
            BoundCheckConfig(**bad)


def test_apriori_zero_trajectory_passes():
    cfg = _burgers_config(M=32)
    Z = np.zeros((33, 8))
    traj = Trajectory(
        config=cfg, sample=0, X=Z.copy(), O=Z.copy(), Xi=Z.copy(),
        indicators=np.ones(32, dtype=bool), Omega=Z.copy(),
    )
    rep = check_apriori_bound(traj, bound_config=BoundCheckConfig(embedding_constant=1.5))
    assert rep.passed
    assert rep.lhs == 0.0


def test_apriori_simulated_paths_pass():
    cfg = _burgers_config()
    for sample in range(6):
        traj = run(cfg, sample=sample, with_omega=True)
        rep = check_apriori_bound(traj, config=cfg, bound_config=BoundCheckConfig(embedding_constant=1.5))
        assert rep.passed
        assert "passes with slack 1.0: True" in rep.notes


def test_apriori_initial_point_ratio_is_exact():
    # at t = 0 the bound reads ||xi||^p <= 2^{p-1} ||xi||^p: ratio 2^{1-p}
    cfg = _burgers_config()
    traj = run(cfg, sample=0, with_omega=True)
    for p in (2.0, 4.0):
        rep = check_apriori_bound(traj, bound_config=BoundCheckConfig(p=p, embedding_constant=1.5))
        assert rep.passed
        assert rep.lhs == pytest.approx(2.0 ** (1.0 - p), rel=1e-9)
        assert "worst at k=0" in rep.notes


def test_apriori_shifted_ladder_path():
    cfg = _burgers_config(eta=0.7)
    traj = run(cfg, sample=1, with_omega=True)
    rep = check_apriori_bound(traj, bound_config=BoundCheckConfig(eta=0.7, embedding_constant=1.5))
    assert rep.passed


def test_apriori_configuration_errors():
    cfg = _burgers_config()
    traj = run(cfg, sample=0, with_omega=True)
    bc = BoundCheckConfig(embedding_constant=1.5)
    with pytest.raises(ValueError):
        check_apriori_bound(run(cfg, sample=0), bound_config=bc)  # no Omega
    with pytest.raises(ValueError):
        check_apriori_bound(traj, config=_burgers_config(eta=0.7), bound_config=bc)
    with pytest.raises(ValueError):
        check_apriori_bound(traj, bound_config=BoundCheckConfig(eta=0.7, embedding_constant=1.5))
    with pytest.raises(ValueError):
        check_apriori_bound(traj, bound_config=BoundCheckConfig(psi=0.6, embedding_constant=1.5))
    with pytest.raises(ValueError):
        check_apriori_bound(traj, bound_config=BoundCheckConfig(varphi_coeff=1.0, embedding_constant=1.5))


# ---------------------------------------------------------------- noise rate


def test_noise_rate_dyadic_ladder():
    rep = check_noise_rate([4, 8, 16], t=1.0, rho=0.125, epsilon=0.05, samples=4000)
    assert rep.passed
    assert rep.lhs < 1.0


def test_noise_rate_zero_epsilon():
    rep = check_noise_rate([4, 8, 16], t=1.0, rho=0.125, epsilon=0.0, samples=4000)
    assert rep.passed


def test_noise_rate_domain_errors():
    good = dict(n_list=[4, 8], t=1.0, rho=0.125, epsilon=0.05, samples=1000)
    for bad in (
        dict(n_list=[4, 4]),
        dict(rho=-0.1),
        dict(epsilon=-0.01),
        dict(rho=0.2, epsilon=0.06),  # rho + eps >= 1/4
        dict(p=1.5),
        dict(t=0.0),
        dict(n_ref=8),
    ):
        with pytest.raises(ValueError):
            check_noise_rate(**{**good, **bad})


# ---------------------------------------------------------------- embedding estimators


def test_estimate_embedding_frozen_value_and_floor():
    est = estimate_embedding(0.125, 4.0)
    assert est == pytest.approx(1.072090, abs=1e-5)
    # never below the deterministic single-mode start, x1.05
    e1 = SpectralField(np.array([1.0]), 1.0)
    floor = lebesgue_norm_even(e1, 4) / hr_norm(e1, 0.125)
    assert floor == pytest.approx(1.5**0.25 / math.pi**0.25, rel=1e-12)
    assert est >= 1.05 * floor


def test_estimate_embedding_seed_stability_and_mode_monotonicity():
    base = estimate_embedding(0.125, 4.0)
    for seed in (1, 2):
        assert abs(estimate_embedding(0.125, 4.0, seed=seed) - base) < 0.05 * base
    assert estimate_embedding(0.125, 4.0, modes=128) >= base


def test_estimate_embedding_c0_scaling():
    # the supremum scales exactly like c0^{-r}
    base = estimate_embedding(0.125, 4.0)
    assert estimate_embedding(0.125, 4.0, c0=4.0) == pytest.approx(base * 4.0**-0.125, rel=1e-12)


def test_estimate_embedding_domain_errors():
    for args, kwargs in (
        ((0.0, 4.0), {}),
        ((0.125, 3.0), {}),
        ((0.125, 2.5), {}),
        ((0.125, 4.0), dict(c0=0.0)),
        ((0.125, 4.0), dict(modes=32)),
        ((0.125, 4.0), dict(iters=500)),
    ):
        with pytest.raises(ValueError):
            estimate_embedding(*args, **kwargs)


def test_estimate_sup_embedding_frozen_value_and_floor():
    est = estimate_sup_embedding(0.2, 8.0)
    assert est == pytest.approx(1.605301, abs=1e-4)
    e1 = SpectralField(np.array([1.0]), 1.0)
    floor = sup_norm(e1) / sobolev_norm(e1, 0.2, 8.0)
    assert est >= 1.05 * floor


def test_estimate_sup_embedding_domain_errors():
    for args, kwargs in (
        ((0.0, 8.0), {}),
        ((0.6, 8.0), {}),
        ((0.2, 5.0), {}),  # smoothness * p <= 1
        ((0.2, 8.0), dict(modes=32)),
        ((0.2, 8.0), dict(iters=100)),
    ):
        with pytest.raises(ValueError):
            estimate_sup_embedding(*args, **kwargs)


# ---------------------------------------------------------------- report plumbing


def test_make_report_threshold_semantics():
    assert make_report("t", lhs=1.0, rhs=1.0).passed
    assert not make_report("t", lhs=1.0 + 1e-9, rhs=1.0).passed
    assert make_report("t", lhs=1.09, rhs=1.0, rel_tol=0.1).passed
    assert make_report("t", lhs=1.05, rhs=1.0, abs_tol=0.1).passed


def test_make_report_config_hash_is_order_invariant():
    a = make_report("t", lhs=0.0, rhs=1.0, config={"x": 1, "y": 2})
    b = make_report("t", lhs=0.0, rhs=1.0, config={"y": 2, "x": 1})
    assert a.config_hash == b.config_hash
