"""Reproducible sampling of the stochastic convolution and its shifted companion.

Per eigenmode j the driving noise is an independent scalar Brownian motion;
the mild-form noise term and its shift-rate companion are the Ornstein-
Uhlenbeck integrals

    dO  = int_step e^{-lambda_j (t-s)}        dbeta_s,
    dOm = int_step e^{-(lambda_j + eta)(t-s)} dbeta_s   (same beta),

drawn jointly from their exact 2x2 Gaussian law, so there is no time-
discretization error in the noise itself.  Draws are addressed by
(sample, mode, step) on the finest configured grid through a counter-based
generator (Philox keyed by the seed, one counter block range per
(sample, mode) row; uniforms map to normals through the inverse cdf).  Any
coarser time grid or smaller mode count is derived from the same fine
increments by deterministic coarsening, so every resolution sees the same
Brownian path, independent of evaluation order or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.signal import lfilter
from scipy.special import ndtri, zeta

from .fields import GridSpec, SpectralField, eigenvalues, semigroup_apply

__all__ = [
    "NoiseLadder",
    "OUPath",
    "ou_covariance",
    "ou_cholesky",
    "sample_ou_increment",
    "coarsen",
    "coarsen_rows",
    "convolution_path",
    "shifted_convolution_value",
    "noise_spatial_error_oracle",
]

RNG_DESCRIPTION = "philox4x64 (numpy), counter-addressed by (sample, mode); normals = ndtri((raw>>11 + 0.5) * 2^-53)"


def ou_covariance(lam: float, eta: float, h: float) -> tuple[float, float, float]:
    """(Var dO, Var dOm, Cov) of the joint one-step OU increment pair."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got h={h}")
    if lam <= 0 or eta < 0:
        raise ValueError(f"need lam > 0, eta >= 0, got lam={lam}, eta={eta}")
    mu = lam + eta
    v1 = -np.expm1(-2.0 * lam * h) / (2.0 * lam)
    v2 = -np.expm1(-2.0 * mu * h) / (2.0 * mu)
    cv = -np.expm1(-(lam + mu) * h) / (lam + mu)
    return float(v1), float(v2), float(cv)


def ou_cholesky(lam: float, eta: float, h: float) -> tuple[float, float, float]:
    """Lower-triangular factor (l11, l21, l22) of the increment covariance.

    eta = 0 degenerates to rank one (identical integrands); the Schur
    complement is then exactly zero and the second component copies the first.
    A Schur complement below -1e-14 * Var2 indicates a formula bug, not a
    data problem, and raises.
    """
    v1, v2, cv = ou_covariance(lam, eta, h)
    l11 = math.sqrt(v1)
    if eta == 0.0:
        # rank one exactly (identical integrands); x/sqrt(x) would be an ulp off
        return l11, l11, 0.0
    l21 = cv / l11
    schur = v2 - l21 * l21
    if schur < -1e-14 * v2:
        raise RuntimeError(
            f"OU increment covariance numerically indefinite (schur={schur}); formula bug"
        )
    return l11, l21, math.sqrt(max(schur, 0.0))


def sample_ou_increment(lam: float, eta: float, h: float, gaussians) -> tuple:
    """Map a pair of independent standard normals to one joint (dO, dOm) draw.

    Accepts scalars or equal-length arrays in `gaussians`.
    """
    z1, z2 = gaussians
    l11, l21, l22 = ou_cholesky(lam, eta, h)
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    dO = l11 * z1
    dOm = l21 * z1 + l22 * z2
    if dO.ndim == 0:
        return float(dO), float(dOm)
    return dO, dOm


@dataclass(frozen=True)
class NoiseLadder:
    """Seed-addressed hierarchy of fine-grid increment pairs.

    The ladder fixes the finest time grid (fine_steps uniform steps on [0,T])
    and the largest mode count; every (sample, mode) row owns a disjoint,
    order-independent counter range of the keyed generator.
    """

    seed: int
    fine_steps: int
    fine_modes: int
    T: float
    eta: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")
        if self.fine_steps < 1 or self.fine_modes < 1:
            raise ValueError("fine_steps and fine_modes must be >= 1")
        if self.T <= 0:
            raise ValueError(f"time horizon must be positive, got T={self.T}")
        if self.eta < 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "fine_steps", int(self.fine_steps))
        object.__setattr__(self, "fine_modes", int(self.fine_modes))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def h_fine(self) -> float:
        return self.T / self.fine_steps

    @property
    def _blocks_per_row(self) -> int:
        # one Philox counter block yields four 64-bit raws; a row needs 2*steps
        return (2 * self.fine_steps + 3) // 4

    def mode_gaussians(self, sample: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """The standard-normal pairs (z1, z2) of row (sample, mode j), step-ordered."""
        if not 1 <= j <= self.fine_modes:
            raise ValueError(f"mode {j} outside ladder range 1..{self.fine_modes}")
        if sample < 0:
            raise ValueError(f"sample index must be nonnegative, got {sample}")
        block = (sample * self.fine_modes + (j - 1)) * self._blocks_per_row
        bg = Philox(key=self.seed, counter=[block, 0, 0, 0])
        raw = bg.random_raw(2 * self.fine_steps)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        z = ndtri(u)
        return z[0::2], z[1::2]

    def mode_increments(self, sample: int, j: int, c0: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """Fine-grid (dO, dOm) arrays for one mode row."""
        lam = float(eigenvalues(j, c0)[-1])
        return sample_ou_increment(lam, self.eta, self.h_fine, self.mode_gaussians(sample, j))

    def fine_increments(self, sample: int, n: int, c0: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """(fine_steps, n) increment arrays for modes 1..n of one sample."""
        if not 1 <= n <= self.fine_modes:
            raise ValueError(f"n={n} outside ladder range 1..{self.fine_modes}")
        dO = np.empty((self.fine_steps, n))
        dOm = np.empty((self.fine_steps, n))
        for j in range(1, n + 1):
            dO[:, j - 1], dOm[:, j - 1] = self.mode_increments(sample, j, c0)
        return dO, dOm

    def describe(self) -> dict:
        return {
            "seed": self.seed,
            "fine_steps": self.fine_steps,
            "fine_modes": self.fine_modes,
            "T": self.T,
            "eta": self.eta,
            "rng": RNG_DESCRIPTION,
        }


def coarsen(increments, lam: float, eta: float, h_fine: float) -> tuple[float, float]:
    """Collapse r consecutive fine-step pairs of one mode into the coarse pair.

    The coarse OU recursion driven by these increments reproduces the fine
    path at coarse grid points pathwise:  the fine increments enter with the
    decay they would accumulate over the remainder of the coarse step,
    w_m = e^{-rate h_f (r-1-m)}.
    """
    pairs = list(increments)
    if len(pairs) < 1:
        raise ValueError("need at least one fine increment")
    dO = np.asarray([p[0] for p in pairs], dtype=np.float64)
    dOm = np.asarray([p[1] for p in pairs], dtype=np.float64)
    r = dO.size
    m = np.arange(r)
    wO = np.exp(-lam * h_fine * (r - 1 - m))
    wM = np.exp(-(lam + eta) * h_fine * (r - 1 - m))
    return float(wO @ dO), float(wM @ dOm)


def coarsen_rows(fine: np.ndarray, rates: np.ndarray, r: int, h_fine: float) -> np.ndarray:
    """(fine_steps, n) increments -> (fine_steps/r, n), per-mode decay weights."""
    Mf, n = fine.shape
    if Mf % r != 0:
        raise ValueError(f"{Mf} fine steps do not split into blocks of {r}")
    if r == 1:
        return fine
    m = np.arange(r)
    w = np.exp(-np.outer(h_fine * (r - 1 - m), rates))  # (r, n)
    blocks = fine.reshape(Mf // r, r, n)
    return np.einsum("krn,rn->kn", blocks, w)


def _ou_recursion(decay: np.ndarray, increments: np.ndarray) -> np.ndarray:
    """x_{k+1} = decay_j x_k + d_kj from x_0 = 0; returns (M+1, n)."""
    M, n = increments.shape
    out = np.zeros((M + 1, n))
    for j in range(n):
        out[1:, j] = lfilter([1.0], [1.0, -decay[j]], increments[:, j])
    return out


@dataclass(frozen=True)
class OUPath:
    """Mode-coefficient paths of the stochastic convolution on one grid.

    O:       rate-lambda_j convolution at grid points, shape (M+1, n).
    shifted: rate-(lambda_j + eta) companion convolution, same shape.
    omega:   shifted + flow of the initial condition under the shifted
             semigroup (None unless built with an initial condition).
    """

    grid: GridSpec
    n: int
    c0: float
    eta: float
    O: np.ndarray
    shifted: np.ndarray
    omega: np.ndarray | None = None

    def field(self, k: int, which: str = "O") -> SpectralField:
        arr = {"O": self.O, "shifted": self.shifted, "omega": self.omega}[which]
        if arr is None:
            raise ValueError("path carries no omega component")
        return SpectralField(arr[k], self.c0)


def _path_arrays(
    ladder: NoiseLadder,
    n: int,
    grid: GridSpec,
    c0: float,
    sample: int,
    fine: tuple[np.ndarray, np.ndarray] | None,
) -> tuple[np.ndarray, np.ndarray]:
    if grid.T != ladder.T:
        raise ValueError(f"grid horizon {grid.T} != ladder horizon {ladder.T}")
    if ladder.fine_steps % grid.M != 0:
        raise ValueError(f"grid with M={grid.M} steps is not nested in {ladder.fine_steps} fine steps")
    if not 1 <= n <= ladder.fine_modes:
        raise ValueError(f"n={n} outside ladder range 1..{ladder.fine_modes}")
    if fine is None:
        fine = ladder.fine_increments(sample, n, c0)
    dO_f, dOm_f = fine
    if dO_f.shape[1] < n:
        raise ValueError("precomputed fine increments carry fewer modes than requested")
    dO_f, dOm_f = dO_f[:, :n], dOm_f[:, :n]
    lams = eigenvalues(n, c0)
    r = ladder.fine_steps // grid.M
    h = grid.h
    dO = coarsen_rows(dO_f, lams, r, ladder.h_fine)
    dOm = coarsen_rows(dOm_f, lams + ladder.eta, r, ladder.h_fine)
    O = _ou_recursion(np.exp(-lams * h), dO)
    W = _ou_recursion(np.exp(-(lams + ladder.eta) * h), dOm)
    return O, W


def convolution_path(
    ladder: NoiseLadder,
    n: int,
    grid: GridSpec,
    c0: float = 1.0,
    sample: int = 0,
    fine: tuple[np.ndarray, np.ndarray] | None = None,
) -> OUPath:
    """Exact-in-distribution convolution path at the grid points of `grid`.

    `fine` optionally passes precomputed fine increments (with >= n modes) so
    several nested resolutions of one sample share one set of draws.
    """
    O, W = _path_arrays(ladder, n, grid, c0, sample, fine)
    return OUPath(grid=grid, n=n, c0=c0, eta=ladder.eta, O=O, shifted=W)


def shifted_convolution_value(
    ladder: NoiseLadder,
    n: int,
    grid: GridSpec,
    xi: SpectralField,
    sample: int = 0,
    fine: tuple[np.ndarray, np.ndarray] | None = None,
) -> OUPath:
    """Path augmented with omega_t = shifted convolution + P_n e^{t(A-eta)} xi.

    Realized through the jointly drawn shifted increments (no quadrature of
    the defining correction integral is involved).
    """
    c0 = xi.c0
    O, W = _path_arrays(ladder, n, grid, c0, sample, fine)
    lams = eigenvalues(n, c0)
    xi_n = np.zeros(n)
    xi_n[: min(n, xi.n)] = xi.coeffs[: min(n, xi.n)]
    flow = np.exp(-np.outer(grid.times(), lams + ladder.eta)) * xi_n
    return OUPath(grid=grid, n=n, c0=c0, eta=ladder.eta, O=O, shifted=W, omega=W + flow)


def noise_spatial_error_oracle(
    n: int, t: float, rho: float, c0: float, n_ref: int | None = None
) -> float:
    """Exact E || P_ref O_t - P_n O_t ||^2_{H_rho} from the per-mode Ito isometry.

    Sums lambda_k^{2 rho} (1 - e^{-2 lambda_k t}) / (2 lambda_k) over
    n < k <= n_ref; n_ref = None takes the full tail (requires rho < 1/4),
    splitting off the stationary part as a Hurwitz zeta value and summing the
    exponentially decaying correction until terms fall below 1e-18 of the
    partial sum.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return 0.0
    if n_ref is not None:
        if n_ref < n:
            raise ValueError(f"n_ref={n_ref} below n={n}")
        k = np.arange(n + 1, n_ref + 1, dtype=np.float64)
        if k.size == 0:
            return 0.0
        lam = c0 * math.pi**2 * (k * k)
        return float(np.sum(lam ** (2.0 * rho) * -np.expm1(-2.0 * lam * t) / (2.0 * lam)))
    if rho >= 0.25:
        raise ValueError(f"infinite tail diverges for rho >= 1/4, got rho={rho}")
    # stationary part: sum_{k>n} lam^{2rho-1}/2 = (c0 pi^2)^{2rho-1}/2 * zeta(2-4rho, n+1)
    s = 2.0 - 4.0 * rho
    stationary = 0.5 * (c0 * math.pi**2) ** (2.0 * rho - 1.0) * float(zeta(s, n + 1))
    # exponentially decaying correction: -sum_{k>n} lam^{2rho-1} e^{-2 lam t} / 2
    corr = 0.0
    k = n + 1
    while True:
        lam = c0 * math.pi**2 * k * k
        term = 0.5 * lam ** (2.0 * rho - 1.0) * math.exp(-2.0 * lam * t)
        corr += term
        if term <= 1e-18 * max(stationary, corr) or term == 0.0:
            break
        k += 1
    return stationary - corr
