import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

from spde1d.fields import (
    GridSpec,
    SpectralField,
    coeffs_from_grid,
    derivative_sine_field,
    dual_half_norm,
    eigenvalue,
    eigenvalues,
    evaluate,
    evaluate_grid,
    field_from_json,
    field_to_json,
    hr_norm,
    lebesgue_norm_even,
    phi1_weight,
    phi1_weights,
    project,
    semigroup_apply,
    sobolev_norm,
    sup_norm,
)

RNG = np.random.default_rng(1234)


def random_field(n, c0=1.0, scale=1.0, rng=RNG):
    return SpectralField(scale * rng.uniform(-1.0, 1.0, size=n), c0)


# ---------------------------------------------------------------- eigenvalues


def test_eigenvalue_closed_form():
    assert eigenvalue(1, 1.0) == pytest.approx(math.pi**2, rel=1e-15)
    assert eigenvalue(2, 1.0) == pytest.approx(4 * math.pi**2, rel=1e-15)
    assert eigenvalue(3, 0.5) == pytest.approx(4.5 * math.pi**2, rel=1e-15)


def test_eigenvalue_domain_errors():
    with pytest.raises(ValueError):
        eigenvalue(0, 1.0)
    with pytest.raises(ValueError):
        eigenvalue(1, 0.0)
    with pytest.raises(ValueError):
        eigenvalue(1, -2.0)


def test_eigenvalues_vector_matches_scalar():
    lams = eigenvalues(7, 0.3)
    assert lams.tolist() == [eigenvalue(j, 0.3) for j in range(1, 8)]


# --------------------------------------------------------------------- norms


def test_hr_norm_single_mode_half():
    assert hr_norm(SpectralField.basis(1), 0.5) == pytest.approx(math.pi, rel=1e-15)


def test_hr_norm_parseval():
    v = random_field(16)
    assert hr_norm(v, 0.0) == pytest.approx(float(np.linalg.norm(v.coeffs)), rel=1e-15)


def test_hr_norm_first_derivative_identity():
    # ||v||_{H_1/2}^2 == c0 * sum a_j^2 j^2 pi^2, exactly (same weights)
    for c0 in (1.0, 0.73):
        v = random_field(16, c0=c0)
        j = np.arange(1, 17)
        rhs = c0 * float(np.sum(v.coeffs**2 * j**2 * math.pi**2))
        assert hr_norm(v, 0.5) ** 2 == pytest.approx(rhs, rel=1e-14)


def test_hr_norm_parseval_vs_quadrature():
    # ||v||_H^2 == int_0^1 v^2 within 1e-9 at 64n Gauss points
    v = random_field(12)
    z, w = leggauss(64 * v.n)
    x = 0.5 * (z + 1.0)
    vals = evaluate(v, x)
    quad = 0.5 * float(np.sum(w * vals**2))
    assert quad == pytest.approx(hr_norm(v, 0.0) ** 2, rel=1e-9)


def test_hr_norm_rejects_negative_shift():
    with pytest.raises(ValueError):
        hr_norm(random_field(4), 0.0, shift=-1.0)


# ----------------------------------------------------------------- semigroup


def test_semigroup_identity_at_zero():
    v = random_field(8)
    assert semigroup_apply(v, 0.0).coeffs.tolist() == v.coeffs.tolist()


def test_semigroup_single_mode_decay():
    w = semigroup_apply(SpectralField.basis(1), 1.0)
    assert w.coeffs[0] == pytest.approx(math.exp(-math.pi**2), rel=1e-14)


def test_semigroup_contraction_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        v = random_field(12, rng=rng)
        t = float(rng.uniform(0.0, 2.0))
        eta = float(rng.uniform(0.0, 5.0))
        lhs = hr_norm(semigroup_apply(v, t, eta), 0.0)
        bound = math.exp(-(eigenvalue(1, v.c0) + eta) * t) * hr_norm(v, 0.0)
        assert lhs <= bound * (1.0 + 1e-12)


def test_semigroup_rejects_negative_time():
    with pytest.raises(ValueError):
        semigroup_apply(random_field(4), -0.1)


# -------------------------------------------------------------- phi1 weights


def test_phi1_small_argument_limit():
    # (lambda_1 + shift) h = 1e-12: weight == h to relative 1e-10
    h = 1e-12 / math.pi**2
    assert phi1_weight(1, h, 0.0, 1.0) == pytest.approx(h, rel=1e-10)


def test_phi1_closed_form_vs_riemann():
    lam = math.pi**2
    h = 0.1
    got = phi1_weight(1, h, 0.0, 1.0)
    assert got == pytest.approx((1.0 - math.exp(-lam * h)) / lam, rel=1e-14)
    # frozen value, cross-checked by a 1e6-point left Riemann sum of the integral
    assert got == pytest.approx(0.06355798425692976, rel=1e-13)
    s = np.linspace(0.0, h, 1_000_001)[:-1]
    riemann = float(np.sum(np.exp(-lam * s))) * (h / 1_000_000)
    assert got == pytest.approx(riemann, rel=1e-5)


def test_phi1_strictly_decreasing_in_mode():
    w = phi1_weights(20, 0.05, 0.0, 1.0)
    assert np.all(np.diff(w) < 0)
    assert w.tolist() == [phi1_weight(j, 0.05, 0.0, 1.0) for j in range(1, 21)]


# ---------------------------------------------------------------- projection


def test_project_idempotent_and_identity():
    v = random_field(8)
    assert project(project(v, 4), 4).coeffs.tolist() == project(v, 4).coeffs.tolist()
    assert project(v, 8).coeffs.tolist() == v.coeffs.tolist()
    assert project(v, 12).coeffs[8:].tolist() == [0.0] * 4


def test_project_parseval_tail():
    v = random_field(10)
    for n in (1, 3, 7):
        tail = float(np.sum(v.coeffs[n:] ** 2))
        w = project(v, n)
        pad = np.zeros(10)
        pad[:n] = w.coeffs
        assert float(np.sum((v.coeffs - pad) ** 2)) == pytest.approx(tail, rel=1e-15)


def test_project_rejects_zero():
    with pytest.raises(ValueError):
        project(random_field(4), 0)


# ---------------------------------------------------------------- evaluation


def test_evaluate_basis_midpoint():
    assert evaluate(SpectralField.basis(1), [0.5])[0] == pytest.approx(math.sqrt(2), rel=1e-15)


def test_evaluate_boundary_limit():
    v = random_field(8)
    x = 1e-8
    cap = math.sqrt(2) * math.pi * x * float(
        np.sum(np.abs(v.coeffs) * np.arange(1, 9))
    )
    assert abs(evaluate(v, [x])[0]) <= cap * (1.0 + 1e-9)


def test_evaluate_rejects_outside_domain():
    v = random_field(3)
    for bad in (0.0, 1.0, -0.25, 1.5):
        with pytest.raises(ValueError):
            evaluate(v, [bad])


def test_evaluate_grid_matches_naive():
    v = random_field(8)
    G = 37
    xs = np.arange(1, G + 1) / (G + 1)
    naive = evaluate(v, xs)
    assert np.max(np.abs(evaluate_grid(v, G) - naive)) < 1e-12


def test_evaluate_grid_rejects_aliasing():
    with pytest.raises(ValueError):
        evaluate_grid(random_field(8), 7)


def test_coeffs_from_grid_round_trip():
    v = random_field(9)
    G = 31
    w = coeffs_from_grid(evaluate_grid(v, G), v.c0)
    assert np.max(np.abs(w.coeffs[:9] - v.coeffs)) < 1e-13
    assert np.max(np.abs(w.coeffs[9:])) < 1e-13


# ------------------------------------------------------------------ sup norm


def test_sup_norm_basis_mode():
    assert sup_norm(SpectralField.basis(1)) == pytest.approx(math.sqrt(2), abs=1e-10)


def test_sup_norm_zero_field():
    assert sup_norm(SpectralField.zero(5)) == 0.0


def test_sup_norm_oversample_stability():
    v = random_field(8)
    a = sup_norm(v, oversample=32)
    b = sup_norm(v, oversample=1024)
    assert a == pytest.approx(b, rel=1e-8)


def test_sup_norm_dominates_pointwise():
    v = random_field(6)
    xs = RNG.uniform(1e-6, 1.0 - 1e-6, size=200)
    s = sup_norm(v)
    assert np.all(np.abs(evaluate(v, xs)) <= s * (1.0 + 1e-12))


def test_sup_norm_rejects_small_oversample():
    with pytest.raises(ValueError):
        sup_norm(random_field(3), oversample=3)


# ------------------------------------------------------------- Sobolev norm


def test_sobolev_zero_field():
    assert sobolev_norm(SpectralField.zero(4), 0.2, 6.0) == 0.0


def test_sobolev_refinement_stable():
    v = SpectralField.basis(1)
    a = sobolev_norm(v, 0.2, 6.0, quad_points=8)
    b = sobolev_norm(v, 0.2, 6.0, quad_points=24)
    assert a == pytest.approx(b, rel=2e-6)


def test_sobolev_homogeneity():
    v = random_field(5)
    w = v.with_coeffs(3.0 * v.coeffs)
    assert sobolev_norm(w, 0.3, 4.0) == pytest.approx(3.0 * sobolev_norm(v, 0.3, 4.0), rel=1e-9)


def test_sobolev_rejects_bad_arguments():
    v = random_field(3)
    with pytest.raises(ValueError):
        sobolev_norm(v, 0.0, 4.0)
    with pytest.raises(ValueError):
        sobolev_norm(v, 1.0, 4.0)
    with pytest.raises(ValueError):
        sobolev_norm(v, 0.5, 0.5)


# --------------------------------------------------------- dual-(1/2) ratios


def test_dual_half_norm_basis():
    assert dual_half_norm(SpectralField.basis(1)) == pytest.approx(1.0 / math.pi, rel=1e-14)


def cosine_witness(modes, c0=1.0):
    # sine-basis expansion of sqrt(2) cos(pi x):
    # <e_k, sqrt(2) cos(pi x)> = 2k(1-(-1)^{k+1})/(pi(k^2-1)), nonzero for even k
    k = np.arange(1, modes + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(k == 1.0, 0.0, 2.0 * k * (1.0 - (-1.0) ** (k + 1)) / (np.pi * (k**2 - 1.0)))
    return SpectralField(w, c0)


def test_cosine_witness_is_faithful():
    # the expansion really is sqrt(2) cos(pi x): compare pointwise
    w = cosine_witness(512)
    xs = np.linspace(0.21, 0.79, 9)
    assert np.max(np.abs(evaluate(w, xs) - math.sqrt(2) * np.cos(math.pi * xs))) < 1e-2
    assert hr_norm(w, 0.0) == pytest.approx(1.0, abs=1e-3)


def test_dual_half_witness_ratio():
    for c0 in (1.0, 2.5):
        w = cosine_witness(512, c0)
        d = derivative_sine_field(w, 512)
        ratio = dual_half_norm(d) / hr_norm(w, 0.0)
        target = c0**-0.5
        assert ratio >= 0.98 * target
        assert ratio == pytest.approx(target, rel=0.02)


def test_dual_half_ratio_bounded_random():
    # projection underestimates ||v'||_{H_-1/2}, so the sup bound is honest
    rng = np.random.default_rng(5)
    c0 = 1.0
    worst = 0.0
    for _ in range(1000):
        v = random_field(32, c0=c0, rng=rng)
        d = derivative_sine_field(v, 512)
        worst = max(worst, dual_half_norm(d) / hr_norm(v, 0.0))
    assert worst <= c0**-0.5 * (1.0 + 1e-10)


def test_derivative_sine_field_of_e1():
    # (e_1)' = sqrt(2) pi cos(pi x); check the projection against quadrature
    d = derivative_sine_field(SpectralField.basis(1), 64)
    xs = np.linspace(0.2, 0.8, 13)  # sine series of a cosine converges slowly near the ends
    target = math.sqrt(2) * math.pi * np.cos(math.pi * xs)
    assert np.max(np.abs(evaluate(d, xs) - target)) < 0.2
    # closed form: ||sqrt(2) pi cos(pi x)||_{H_-1/2}^2 = pi^2 (16/pi^4) sum (4m^2-1)^-2
    #            = pi^2 (16/pi^4)(pi^2/16 - 1/2) = 1 - 8/pi^2
    assert dual_half_norm(d) == pytest.approx(math.sqrt(1.0 - 8.0 / math.pi**2), rel=1e-3)


# ---------------------------------------------------------------- L^p exact


def test_lebesgue_norm_even_e1():
    # int_0^1 (sqrt(2) sin(pi x))^4 dx = 4 * 3/8 = 3/2
    assert lebesgue_norm_even(SpectralField.basis(1), 4) == pytest.approx(1.5**0.25, rel=1e-14)
    # int_0^1 (sqrt(2) sin(pi x))^6 dx = 8 * 5/16 = 5/2
    assert lebesgue_norm_even(SpectralField.basis(1), 6) == pytest.approx(2.5 ** (1 / 6), rel=1e-14)


def test_lebesgue_norm_even_vs_quadrature():
    v = random_field(6)
    z, w = leggauss(256)
    x = 0.5 * (z + 1.0)
    quad = (0.5 * float(np.sum(w * evaluate(v, x) ** 4))) ** 0.25
    assert lebesgue_norm_even(v, 4) == pytest.approx(quad, rel=1e-12)


# ------------------------------------------------------- per-mode inequalities


def test_smoothing_bound_per_mode():
    # lambda^q e^{-lambda t} <= t^-q
    js = np.arange(1, 1001, dtype=np.float64)
    lams = math.pi**2 * js**2
    for q in (0.0, 0.25, 0.5, 0.75, 1.0):
        for t in (1e-4, 1e-3, 1e-2, 1e-1, 1.0):
            lhs = lams**q * np.exp(-lams * t)
            assert np.all(lhs <= t**-q * (1.0 + 1e-12))


def test_hoelder_bound_per_mode():
    # (1 - e^{-lambda t}) / lambda^q <= t^q
    js = np.arange(1, 1001, dtype=np.float64)
    lams = math.pi**2 * js**2
    for q in (0.0, 0.25, 0.5, 0.75, 1.0):
        for t in (1e-4, 1e-3, 1e-2, 1e-1, 1.0):
            lhs = -np.expm1(-lams * t) / lams**q
            assert np.all(lhs <= t**q * (1.0 + 1e-12))


# ------------------------------------------------------------- serialization


def test_json_round_trip_exact():
    v = random_field(16, c0=0.37)
    w = field_from_json(field_to_json(v))
    assert w.c0 == v.c0
    assert w.coeffs.tolist() == v.coeffs.tolist()


# ------------------------------------------------------------------ GridSpec


def test_gridspec_basics():
    g = GridSpec(1.0, 4)
    assert g.h == 0.25
    assert g.times().tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert g.floor_index(0.3) == 1
    assert g.floor_index(0.25) == 1
    assert g.floor_index(1.0) == 4


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec(0.0, 4)
    with pytest.raises(ValueError):
        GridSpec(1.0, 0)
    with pytest.raises(ValueError):
        GridSpec(1.0, 4).floor_index(1.5)


def test_gridspec_floor_matches_definition():
    # floor_h(t) = h * floor(t/h) on a grid where the division is exact
    g = GridSpec(2.0, 8)
    for t in (0.0, 0.1, 0.249, 0.25, 0.5, 1.99, 2.0):
        k = g.floor_index(t)
        assert k * g.h <= t + 1e-12
        assert (k + 1) * g.h > t or k == g.M


# ----------------------------------------------------------------- properties


coeff_arrays = st.lists(
    st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False), min_size=1, max_size=12
).map(np.asarray)


@given(coeff_arrays)
@settings(max_examples=50, deadline=None)
def test_project_tail_property(a):
    v = SpectralField(a)
    n = max(1, v.n // 2)
    w = project(v, n)
    assert float(np.sum(w.coeffs**2)) <= float(np.sum(v.coeffs**2)) + 1e-12


@given(coeff_arrays, st.floats(0.0, 3.0), st.floats(0.0, 4.0))
@settings(max_examples=50, deadline=None)
def test_semigroup_contraction_property(a, t, eta):
    v = SpectralField(a)
    lhs = hr_norm(semigroup_apply(v, t, eta), 0.0)
    assert lhs <= hr_norm(v, 0.0) * (1.0 + 1e-12)


@given(coeff_arrays)
@settings(max_examples=50, deadline=None)
def test_json_round_trip_property(a):
    v = SpectralField(a)
    w = field_from_json(field_to_json(v))
    assert np.array_equal(w.coeffs, v.coeffs)
