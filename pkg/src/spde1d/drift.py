"""Drift nonlinearities and the coercivity machinery of the taming analysis.

Two equations on (0,1) with Dirichlet Laplacian c0 * (d/dx)^2:

    burgers:     F(v) = c1 (v^2)'        (quadratic gradient drift)
    allen-cahn:  F(v) = c1 v - c2 v^3    (cubic reaction drift)

Each comes as an exact spectral oracle (closed trigonometric products, used
as ground truth in tests) and a fast dealiased pseudo-spectral path
(mathematically exact too once the collocation grid resolves the product
band, but computed through FFTs).  The Lyapunov functionals and the
inequality checks mirror the structural assumptions the convergence analysis
rests on, with every constant assembled exactly as in the analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .fields import (
    SpectralField,
    coeffs_from_grid,
    evaluate_grid,
    hr_norm,
    sup_norm,
)
from .report import CheckReport, make_report

__all__ = [
    "EquationSpec",
    "burgers_apply_exact",
    "burgers_apply_fast",
    "allen_cahn_apply",
    "equation_apply",
    "phi_functional",
    "Phi_functional",
    "check_coercivity",
    "check_lipschitz",
]

KINDS = ("burgers", "allen-cahn")


def _canonical_kind(kind: str) -> str:
    k = kind.strip().lower().replace("_", "-").replace(" ", "-")
    if k in ("burgers",):
        return "burgers"
    if k in ("allen-cahn", "allencahn"):
        return "allen-cahn"
    raise ValueError(f"unknown equation kind {kind!r}; expected one of {KINDS}")


@dataclass(frozen=True)
class EquationSpec:
    """Equation constants plus the exponents the taming analysis assigns them.

    Admissible ranges (validated):
      burgers:    varrho in (1/8, 1/4),  chi in (0, varrho/2 - 1/16]
      allen-cahn: varrho in (1/6, 1/4),  chi in (0, varrho/3 - 1/18]
    """

    kind: str
    c0: float
    c1: float
    varrho: float
    chi: float
    c2: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", _canonical_kind(self.kind))
        if self.c0 <= 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if self.kind == "burgers":
            if self.c2 != 0.0:
                raise ValueError("burgers drift has no cubic coefficient; set c2 = 0")
            lo, hi = 1 / 8, 1 / 4
            chi_hi = self.varrho / 2 - 1 / 16
        else:
            if self.c2 < 0:
                raise ValueError(f"allen-cahn needs c2 >= 0, got {self.c2}")
            lo, hi = 1 / 6, 1 / 4
            chi_hi = self.varrho / 3 - 1 / 18
        if not lo < self.varrho < hi:
            raise ValueError(f"varrho={self.varrho} outside ({lo}, {hi}) for {self.kind}")
        if not 0 < self.chi <= chi_hi:
            raise ValueError(f"chi={self.chi} outside (0, {chi_hi}] for {self.kind}")

    # exponents and constants fixed by the analysis for each drift
    @property
    def rho(self) -> float:
        return 1 / 8 if self.kind == "burgers" else 1 / 6

    @property
    def alpha(self) -> float:
        return 0.5 if self.kind == "burgers" else 0.0

    @property
    def vartheta(self) -> float:
        return 1.0 if self.kind == "burgers" else 2.0

    @property
    def varphi(self) -> float:
        # weight of the ||v||_{H_{1/2}}^2 term the coercivity bound gives away
        return 0.75 if self.kind == "burgers" else 0.0

    @property
    def gamma(self) -> float:
        if self.kind == "burgers":
            return max(2.0 * self.c1**2 / self.c0, 4.0)
        return max(6.0, self.c1 + self.c1**2 + self.c2**2)

    def theta(self, embedding_constant: float) -> float:
        """Lipschitz-bound prefactor; embedding_constant is the first-power
        Lebesgue/Sobolev ratio supremum (L^4/H_{1/8} or L^6/H_{1/6})."""
        if embedding_constant <= 0:
            raise ValueError("embedding constant must be positive")
        if self.kind == "burgers":
            return 1.0 + abs(self.c1) * self.c0**-0.5 * embedding_constant**2
        return abs(self.c1) / (self.c0 * math.pi**2) ** (1 / 6) + 2.0 * self.c2 * embedding_constant**3

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "c0": self.c0,
            "c1": self.c1,
            "c2": self.c2,
            "varrho": self.varrho,
            "chi": self.chi,
            "gamma": self.gamma,
            "rho": self.rho,
            "alpha": self.alpha,
            "vartheta": self.vartheta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EquationSpec":
        spec = cls(
            kind=d["kind"],
            c0=float(d["c0"]),
            c1=float(d["c1"]),
            varrho=float(d["varrho"]),
            chi=float(d["chi"]),
            c2=float(d.get("c2", 0.0)),
        )
        # derived entries, when present, must agree with what the kind implies
        for key in ("gamma", "rho", "alpha", "vartheta"):
            if key in d and not math.isclose(float(d[key]), getattr(spec, key), rel_tol=1e-12):
                raise ValueError(f"inconsistent {key}={d[key]} for {spec.kind} (expected {getattr(spec, key)})")
        return spec


# ---------------------------------------------------------------- burgers


def _burgers_band(v: SpectralField, c1: float, m_out: int) -> np.ndarray:
    # v^2 in the plain cosine basis: c_q = 2 corr_q - conv_q (q >= 1)
    a = v.coeffs
    n = a.size
    full = np.zeros(m_out)
    upto = min(m_out, 2 * n)
    if n == 0 or upto == 0:
        return full
    conv = np.convolve(a, a)  # index q-2 holds sum_{j+k=q}
    corr = np.correlate(a, a, mode="full")[n - 1 :]  # index q holds sum_j a_j a_{j+q}
    q = np.arange(1, upto + 1)
    c = 2.0 * np.where(q <= n - 1, np.concatenate([corr[1:], np.zeros(max(0, upto - n + 1))])[:upto], 0.0)
    c -= np.where(q >= 2, np.concatenate([[0.0], conv])[:upto], 0.0)
    # (v^2)' in the sqrt(2)-sine basis: b_q = -q pi c_q / sqrt(2)
    full[:upto] = c1 * (-q * math.pi / math.sqrt(2.0)) * c
    return full


def burgers_apply_exact(v: SpectralField, c1: float, m_out: int | None = None) -> SpectralField:
    """c1 (v^2)' by closed trigonometric convolution, O(n^2); full band is 2n."""
    m = v.n if m_out is None else int(m_out)
    if m < 0:
        raise ValueError(f"m_out must be >= 0, got {m_out}")
    return SpectralField(_burgers_band(v, c1, m), v.c0)


def burgers_apply_fast(
    v: SpectralField, c1: float, m_out: int | None = None, grid_points: int | None = None
) -> SpectralField:
    """c1 (v^2)' pseudo-spectrally: square on a collocation grid, cosine-
    transform, differentiate term by term.  Exact once the grid resolves the
    2n product band; the default 3n grid always does."""
    m = v.n if m_out is None else int(m_out)
    n = v.n
    if n == 0 or m == 0:
        return SpectralField(np.zeros(m), v.c0)
    L = 3 * n if grid_points is None else int(grid_points)
    if L < 2 * n + 1:
        raise ValueError(f"collocation grid with {L} panels aliases the 2n={2*n} product band")
    vals = np.zeros(L + 1)
    vals[1:-1] = evaluate_grid(v, L - 1)
    sq = vals * vals
    spec = scipy.fft.dct(sq, type=1)  # f[0] + (-1)^q f[L] + 2 sum f[m] cos(q pi m / L)
    c = spec / L
    upto = min(m, 2 * n)
    q = np.arange(1, upto + 1)
    out = np.zeros(m)
    out[:upto] = c1 * (-q * math.pi / math.sqrt(2.0)) * c[1 : upto + 1]
    return SpectralField(out, v.c0)


# ---------------------------------------------------------------- allen-cahn


def _cube_exact(a: np.ndarray, m_out: int) -> np.ndarray:
    # sin j sin k sin l expansion; signed frequency q contributes sign(q) to |q|
    n = a.size
    out = np.zeros(m_out)

    def add(q: int, w: float) -> None:
        if 1 <= q <= m_out:
            out[q - 1] += w
        elif -m_out <= q <= -1:
            out[-q - 1] -= w

    for j in range(1, n + 1):
        for k in range(1, n + 1):
            ajk = a[j - 1] * a[k - 1]
            if ajk == 0.0:
                continue
            for l in range(1, n + 1):
                w = 0.5 * ajk * a[l - 1]
                add(j + k - l, w)
                add(j - k + l, w)
                add(-j + k + l, w)
                add(j + k + l, -w)
    return out


def allen_cahn_apply(
    v: SpectralField,
    c1: float,
    c2: float,
    m_out: int | None = None,
    exact: bool = False,
    grid_points: int | None = None,
) -> SpectralField:
    """c1 v - c2 v^3; the cube via exact O(n^3) triple convolution (oracle)
    or a dealiased 4n collocation grid (production); full band is 3n."""
    m = v.n if m_out is None else int(m_out)
    n = v.n
    if n == 0 or m == 0:
        return SpectralField(np.zeros(m), v.c0)
    if exact:
        cube = _cube_exact(v.coeffs, m)
    else:
        G = 4 * n if grid_points is None else int(grid_points)
        if G < 3 * n:
            raise ValueError(f"collocation grid with {G} interior points aliases the 3n={3*n} band")
        vals = evaluate_grid(v, G)
        cube_field = coeffs_from_grid(vals ** 3, v.c0)
        cube = np.zeros(m)
        upto = min(m, cube_field.n)
        cube[:upto] = cube_field.coeffs[:upto]
    lin = np.zeros(m)
    upto = min(m, n)
    lin[:upto] = v.coeffs[:upto]
    return SpectralField(c1 * lin - c2 * cube, v.c0)


def equation_apply(spec: EquationSpec, v: SpectralField, m_out: int | None = None, exact: bool = False) -> SpectralField:
    if spec.kind == "burgers":
        if exact:
            return burgers_apply_exact(v, spec.c1, m_out)
        return burgers_apply_fast(v, spec.c1, m_out)
    return allen_cahn_apply(v, spec.c1, spec.c2, m_out, exact=exact)


def full_band(spec: EquationSpec, n: int) -> int:
    """Largest mode the drift can populate from an n-mode input."""
    return 2 * n if spec.kind == "burgers" else 3 * n


# ---------------------------------------------------------------- functionals


def phi_functional(u: SpectralField, gamma: float) -> float:
    """gamma (1 + sup |u|^2): the Gronwall-exponent coefficient."""
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    if gamma == 0.0:
        return 0.0
    return gamma + gamma * sup_norm(u) ** 2


def Phi_functional(u: SpectralField, gamma: float) -> float:
    """gamma (1 + sup |u|^gamma): the inhomogeneity of the coercivity bound."""
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    if gamma == 0.0:
        return 0.0
    return gamma + gamma * sup_norm(u) ** gamma


# ---------------------------------------------------------------- checks


def _pad_to(a: np.ndarray, n: int) -> np.ndarray:
    if a.size >= n:
        return a[:n]
    return np.concatenate([a, np.zeros(n - a.size)])


def check_coercivity(v: SpectralField, w: SpectralField, spec: EquationSpec) -> CheckReport:
    """One-sided bound on <v, F(v+w)>_H by the drift's Lyapunov structure.

    burgers bounds |<v, F(v+w)>| by
        gamma ||v||^2 sup|w|^2 + (3/4) ||v||_{H_{1/2}}^2 + gamma (1 + sup|w|^gamma);
    allen-cahn bounds the signed pairing by
        gamma ( ||v||^2 + 1 + sup|w|^gamma ).
    The pairing only sees modes <= v.n, so truncating F there is lossless.
    """
    if v.c0 != spec.c0 or w.c0 != spec.c0:
        raise ValueError("fields and equation disagree on c0")
    n = max(v.n, w.n)
    u = SpectralField(_pad_to(v.coeffs, n) + _pad_to(w.coeffs, n), spec.c0)
    Fu = equation_apply(spec, u, m_out=v.n)
    inner = float(np.dot(v.coeffs, _pad_to(Fu.coeffs, v.n)))
    g = spec.gamma
    supw = sup_norm(w) if w.n else 0.0
    if spec.kind == "burgers":
        lhs = abs(inner)
        rhs = (
            g * hr_norm(v, 0.0) ** 2 * supw**2
            + 0.75 * hr_norm(v, 0.5) ** 2
            + g * (1.0 + supw**g)
        )
    else:
        lhs = inner
        rhs = g * (hr_norm(v, 0.0) ** 2 + 1.0 + supw**g)
    return make_report(
        f"coercivity[{spec.kind}]",
        lhs,
        rhs,
        rel_tol=1e-9,
        abs_tol=1e-9,
        config=spec,
        notes="lhs = |<v,F(v+w)>|" if spec.kind == "burgers" else "lhs = <v,F(v+w)>",
    )


def check_lipschitz(
    v: SpectralField, w: SpectralField, spec: EquationSpec, embedding_constant: float
) -> CheckReport:
    """||F(v) - F(w)||_{H_{-alpha}} against the growth-Lipschitz bound
    theta-style constant * (1 + ||v||_rho^vartheta + ||w||_rho^vartheta) * ||v-w||_rho,
    with the full drift band retained on the left (truncation would cheat)."""
    if v.c0 != spec.c0 or w.c0 != spec.c0:
        raise ValueError("fields and equation disagree on c0")
    n = max(v.n, w.n)
    band = full_band(spec, n)
    Fv = equation_apply(spec, SpectralField(_pad_to(v.coeffs, n), spec.c0), m_out=band)
    Fw = equation_apply(spec, SpectralField(_pad_to(w.coeffs, n), spec.c0), m_out=band)
    diff = SpectralField(Fv.coeffs - Fw.coeffs, spec.c0)
    lhs = hr_norm(diff, -spec.alpha)
    rho = spec.rho
    vt = spec.vartheta
    if spec.kind == "burgers":
        K = abs(spec.c1) * spec.c0**-0.5 * embedding_constant**2
    else:
        K = abs(spec.c1) / (spec.c0 * math.pi**2) ** (1 / 6) + 2.0 * spec.c2 * embedding_constant**3
    dvw = SpectralField(_pad_to(v.coeffs, n) - _pad_to(w.coeffs, n), spec.c0)
    rhs = K * (1.0 + hr_norm(v, rho) ** vt + hr_norm(w, rho) ** vt) * hr_norm(dvw, rho)
    return make_report(
        f"lipschitz[{spec.kind}]",
        lhs,
        rhs,
        rel_tol=1e-9,
        abs_tol=1e-9,
        config=spec,
        notes=f"embedding_constant={embedding_constant}",
    )
