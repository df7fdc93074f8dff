"""Dirichlet sine eigenbasis fields on (0,1).

The whole package works in the orthonormal basis e_j(x) = sqrt(2) sin(j pi x),
j >= 1, of L^2((0,1)), in which the diffusion operator A = c0 * d^2/dx^2 with
Dirichlet boundary conditions is diagonal: A e_j = -lambda_j e_j,
lambda_j = c0 pi^2 j^2.  A field is an immutable coefficient vector plus c0;
every operation here is a pure function, safe to call concurrently.

Fractional norms are the spectral ones,

    hr_norm(v, r, shift) = (sum_j (lambda_j + shift)^{2r} a_j^2)^{1/2},

where shift >= 0 covers the shifted operators (shift - A) the noise analysis
uses; shift = 0 gives the plain interpolation-space norms (r = 0 is Parseval).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.fft import dst

__all__ = [
    "SpectralField",
    "GridSpec",
    "AccuracyError",
    "eigenvalue",
    "eigenvalues",
    "hr_norm",
    "semigroup_apply",
    "phi1_weight",
    "phi1_weights",
    "project",
    "evaluate",
    "evaluate_grid",
    "coeffs_from_grid",
    "sup_norm",
    "sobolev_norm",
    "dual_half_norm",
    "derivative_sine_field",
    "lebesgue_norm_even",
    "field_to_json",
    "field_from_json",
]

SQRT2 = math.sqrt(2.0)


class AccuracyError(RuntimeError):
    """A quadrature failed its internal convergence check."""


def eigenvalue(j: int, c0: float) -> float:
    """lambda_j = c0 pi^2 j^2 for the j-th Dirichlet sine mode."""
    if j < 1 or int(j) != j:
        raise ValueError(f"mode index must be a positive integer, got {j}")
    if c0 <= 0:
        raise ValueError(f"diffusivity c0 must be positive, got {c0}")
    return c0 * math.pi**2 * float(j) ** 2


def eigenvalues(n: int, c0: float) -> np.ndarray:
    """lambda_1..lambda_n as an array."""
    if n < 1:
        raise ValueError(f"need at least one mode, got n={n}")
    if c0 <= 0:
        raise ValueError(f"diffusivity c0 must be positive, got {c0}")
    j = np.arange(1, n + 1, dtype=np.float64)
    return c0 * math.pi**2 * (j * j)  # association matches the scalar eigenvalue()


@dataclass(frozen=True)
class SpectralField:
    """Coefficients a_1..a_n of v = sum_j a_j e_j, plus the diffusivity c0."""

    coeffs: np.ndarray
    c0: float = 1.0

    def __post_init__(self) -> None:
        a = np.asarray(self.coeffs, dtype=np.float64)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("coeffs must be a nonempty 1-d vector")
        if not np.all(np.isfinite(a)):
            raise ValueError("coeffs must be finite")
        if self.c0 <= 0:
            raise ValueError(f"diffusivity c0 must be positive, got {self.c0}")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "c0", float(self.c0))

    @property
    def n(self) -> int:
        return self.coeffs.size

    @staticmethod
    def zero(n: int, c0: float = 1.0) -> "SpectralField":
        return SpectralField(np.zeros(max(n, 1)), c0)

    @staticmethod
    def basis(j: int, c0: float = 1.0, n: int | None = None) -> "SpectralField":
        """The basis field e_j, optionally embedded in n >= j modes."""
        if j < 1:
            raise ValueError(f"mode index must be >= 1, got {j}")
        m = j if n is None else n
        if m < j:
            raise ValueError(f"n={m} cannot hold mode {j}")
        a = np.zeros(m)
        a[j - 1] = 1.0
        return SpectralField(a, c0)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(coeffs, self.c0)


@dataclass(frozen=True)
class GridSpec:
    """Uniform time grid t_k = k h, k = 0..M, with h = T/M."""

    T: float
    M: int

    def __post_init__(self) -> None:
        if self.T <= 0:
            raise ValueError(f"time horizon must be positive, got T={self.T}")
        if self.M < 1 or int(self.M) != self.M:
            raise ValueError(f"step count must be a positive integer, got M={self.M}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "M", int(self.M))

    @property
    def h(self) -> float:
        return self.T / self.M

    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) * (self.T / self.M)

    def floor_index(self, t: float) -> int:
        """Index k of the grid floor: largest k with k h <= t (t in [0, T])."""
        if t < 0 or t > self.T:
            raise ValueError(f"t={t} outside [0, {self.T}]")
        # one-ulp guard so floats like 0.3/0.1 land on the intended panel
        k = int(math.floor(t / self.T * self.M * (1.0 + 1e-14) + 1e-14))
        return min(k, self.M)


def _lams(v: SpectralField) -> np.ndarray:
    return eigenvalues(v.n, v.c0)


def hr_norm(v: SpectralField, r: float, shift: float = 0.0) -> float:
    """Weighted l^2 norm (sum_j (lambda_j + shift)^{2r} a_j^2)^{1/2}."""
    if shift < 0:
        raise ValueError(f"shift must be nonnegative, got {shift}")
    if r == 0.0 and shift == 0.0:
        return float(np.linalg.norm(v.coeffs))
    w = (_lams(v) + shift) ** (2.0 * r)
    return float(math.sqrt(np.sum(w * v.coeffs**2)))


def semigroup_apply(v: SpectralField, t: float, shift: float = 0.0) -> SpectralField:
    """e^{t(A - shift)} v: multiplies a_j by exp(-(lambda_j + shift) t), t >= 0."""
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got t={t}")
    if shift < 0:
        raise ValueError(f"shift must be nonnegative, got {shift}")
    if t == 0.0:
        return v
    return v.with_coeffs(v.coeffs * np.exp(-(_lams(v) + shift) * t))


def phi1_weight(j: int, h: float, shift: float, c0: float) -> float:
    """int_0^h e^{-(lambda_j + shift) s} ds = (1 - e^{-mu h})/mu, mu = lambda_j + shift.

    Uses expm1, so the mu h -> 0 limit (weight -> h) is exact to rounding.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive, got h={h}")
    mu = eigenvalue(j, c0) + shift
    return float(-np.expm1(-mu * h) / mu)


def phi1_weights(n: int, h: float, shift: float, c0: float) -> np.ndarray:
    """Vector of phi1_weight(j, h, shift, c0) for j = 1..n."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got h={h}")
    mu = eigenvalues(n, c0) + shift
    return -np.expm1(-mu * h) / mu


def project(v: SpectralField, n: int) -> SpectralField:
    """P_n v: truncate to the first n coefficients (zero-pad if n > v.n)."""
    if n < 1:
        raise ValueError(f"projection dimension must be >= 1, got n={n}")
    if n == v.n:
        return v
    if n < v.n:
        return v.with_coeffs(v.coeffs[:n])
    a = np.zeros(n)
    a[: v.n] = v.coeffs
    return v.with_coeffs(a)


def evaluate(v: SpectralField, xs) -> np.ndarray:
    """Pointwise values v(x) = sum_j a_j sqrt(2) sin(j pi x) for x in (0,1)."""
    x = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    if np.any((x <= 0.0) | (x >= 1.0)):
        raise ValueError("evaluation points must lie strictly inside (0,1)")
    j = np.arange(1, v.n + 1)
    return (SQRT2 * np.sin(np.pi * np.outer(x, j))) @ v.coeffs


def evaluate_grid(v: SpectralField, grid_points: int) -> np.ndarray:
    """Values at the interior collocation grid x_m = m/(G+1), m = 1..G (DST-I).

    Exact (to rounding) provided G >= v.n; coarser grids would alias.
    """
    if grid_points < v.n:
        raise ValueError(
            f"collocation grid with G={grid_points} points aliases a field with {v.n} modes"
        )
    pad = np.zeros(grid_points)
    pad[: v.n] = v.coeffs
    return dst(pad, type=1) * (SQRT2 / 2.0)


def coeffs_from_grid(values: np.ndarray, c0: float = 1.0) -> SpectralField:
    """Inverse of evaluate_grid: sine coefficients from interior grid values."""
    vals = np.asarray(values, dtype=np.float64)
    G = vals.size
    return SpectralField(dst(vals, type=1) / (SQRT2 * (G + 1)), c0)


def _eval_d1(v: SpectralField, x: np.ndarray) -> np.ndarray:
    j = np.arange(1, v.n + 1)
    return (SQRT2 * np.pi * j * np.cos(np.pi * np.outer(x, j))) @ v.coeffs


def _eval_d2(v: SpectralField, x: np.ndarray) -> np.ndarray:
    j = np.arange(1, v.n + 1)
    return -((SQRT2 * (np.pi * j) ** 2) * np.sin(np.pi * np.outer(x, j))) @ v.coeffs


def sup_norm(v: SpectralField, oversample: int = 32) -> float:
    """sup_{x in (0,1)} |v(x)| via oversampled collocation plus Newton polish.

    Lower approximation by construction: the grid maximum is refined by a few
    Newton steps on v' at each local maximum of |v| (bandlimited fields are
    resolved at the default oversampling; relative accuracy target 1e-8).
    """
    if oversample < 4:
        raise ValueError(f"oversample must be >= 4, got {oversample}")
    G = oversample * v.n
    vals = evaluate_grid(v, G)
    best = float(np.max(np.abs(vals)))
    if best == 0.0:
        return 0.0
    # local maxima of |v| on the grid, boundaries count as zeros
    a = np.abs(np.concatenate(([0.0], vals, [0.0])))
    core = a[1:-1]
    mask = (core >= a[:-2]) & (core >= a[2:])
    x = (np.nonzero(mask)[0] + 1) / (G + 1)
    for _ in range(3):  # quadratic convergence; 3 steps reach rounding level
        d1 = _eval_d1(v, x)
        d2 = _eval_d2(v, x)
        ok = np.abs(d2) > 1e-300
        x = np.where(ok, x - np.where(ok, d1, 0.0) / np.where(ok, d2, 1.0), x)
        x = np.clip(x, 1e-12, 1.0 - 1e-12)
    best = max(best, float(np.max(np.abs(evaluate(v, x)))))
    return best


def _gauss_panel(a: float, b: float, q: int) -> tuple[np.ndarray, np.ndarray]:
    z, w = leggauss(q)
    half = 0.5 * (b - a)
    return a + half * (z + 1.0), half * w


def _composite_gauss(a: float, b: float, q: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(a, b, panels + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = _gauss_panel(lo, hi, q)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _sobolev_raw(v: SpectralField, theta: float, p: float, q: int) -> float:
    # L^p part on [0,1]; composite rule sized to the field's bandwidth
    panels_x = max(2, math.ceil(3 * v.n / q))
    x, w = _composite_gauss(0.0, 1.0, q, panels_x)
    fx = evaluate(v, x)
    lp = float(np.sum(w * np.abs(fx) ** p))

    # double integral 2 int_0^1 du u^{-(1+theta p)} int_u^1 |v(x)-v(x-u)|^p dx,
    # u-panels graded geometrically into the diagonal singularity
    depth = 48
    total = 0.0
    xn, xw = _composite_gauss(0.0, 1.0, q, panels_x)  # reference rule, rescaled per u
    for m in range(depth):
        ulo, uhi = 2.0 ** -(m + 1), 2.0**-m
        un, uw = _gauss_panel(ulo, uhi, q)
        xs = un[:, None] + xn[None, :] * (1.0 - un[:, None])
        diff = evaluate(v, xs.ravel()) - evaluate(v, (xs - un[:, None]).ravel())
        inner = (np.abs(diff.reshape(xs.shape)) ** p) @ xw * (1.0 - un)
        total += float(np.sum(uw * inner / un ** (1.0 + theta * p)))
    # closed-form cap on the neglected [0, 2^-depth]: |v(x)-v(x-u)| <= Lip(v) u
    lip = SQRT2 * math.pi * float(np.sum(np.abs(v.coeffs) * np.arange(1, v.n + 1)))
    eps = 2.0**-depth
    tail = (lip**p) * eps ** (p * (1.0 - theta)) / (p * (1.0 - theta))
    return (lp + 2.0 * total + tail) ** (1.0 / p)


def sobolev_norm(v: SpectralField, theta: float, p: float, quad_points: int = 16) -> float:
    """Sobolev-Slobodeckij norm [int |v|^p + int int |v(x)-v(y)|^p / |x-y|^{1+theta p}]^{1/p}.

    Tensor Gauss rules with the diagonal handled by the u = x - y substitution
    on geometrically graded panels; refines the per-panel order until two
    consecutive evaluations agree to 1e-6 relative, else raises AccuracyError.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0,1), got {theta}")
    if p < 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if quad_points < 2:
        raise ValueError(f"quad_points must be >= 2, got {quad_points}")
    prev = _sobolev_raw(v, theta, p, quad_points)
    if prev == 0.0:
        return 0.0
    for q in (2 * quad_points, 4 * quad_points):
        cur = _sobolev_raw(v, theta, p, q)
        if abs(cur - prev) <= 1e-6 * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise AccuracyError(
        f"Sobolev quadrature did not converge to 1e-6 from quad_points={quad_points}"
    )


def dual_half_norm(u: SpectralField, shift: float = 0.0) -> float:
    """hr_norm(u, -1/2, shift)."""
    return hr_norm(u, -0.5, shift)


def derivative_sine_field(v: SpectralField, m_out: int) -> SpectralField:
    """Sine-basis projection of v' (a cosine series), truncated to m_out modes.

    Uses <e_k, sqrt(2) cos(j pi x)> = 2k(1-(-1)^{k+j}) / (pi (k^2 - j^2)) for
    k != j (zero for k = j), so the result underestimates any norm of v'.
    """
    if m_out < 1:
        raise ValueError(f"m_out must be >= 1, got {m_out}")
    j = np.arange(1, v.n + 1, dtype=np.float64)
    k = np.arange(1, m_out + 1, dtype=np.float64)
    parity = 1.0 - (-1.0) ** (k[:, None] + j[None, :])
    den = k[:, None] ** 2 - j[None, :] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        gram = np.where(den != 0.0, 2.0 * k[:, None] * parity / (np.pi * den), 0.0)
    # v' = sum_j a_j j pi sqrt(2) cos(j pi x)
    return SpectralField(gram @ (v.coeffs * j * np.pi), v.c0)


def lebesgue_norm_even(v: SpectralField, p: int) -> float:
    """||v||_{L^p} for even integer p, exact via the closed trapezoid rule.

    v^p is a trigonometric polynomial with cosine frequencies <= p n; the
    closed trapezoid rule with L panels integrates cos(q pi x) exactly for
    0 < q < 2L, so L = p n / 2 + 1 panels suffice.
    """
    if p < 2 or p % 2 != 0:
        raise ValueError(f"exact path requires even integer p >= 2, got {p}")
    L = p * v.n // 2 + 1
    vals = evaluate_grid(v, L - 1)  # interior points of the closed L-panel grid
    # boundary values vanish, so the trapezoid sum is the plain interior mean
    return float(np.sum(vals**p) / L) ** (1.0 / p)


def field_to_json(v: SpectralField) -> str:
    """Serialize to the record {"c0": real, "coeffs": [...]}; exact round-trip."""
    return json.dumps({"c0": v.c0, "coeffs": [float(a) for a in v.coeffs]})


def field_from_json(s: str) -> SpectralField:
    d = json.loads(s)
    return SpectralField(np.asarray(d["coeffs"], dtype=np.float64), float(d["c0"]))
