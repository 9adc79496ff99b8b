"""SPDE problem definitions.

A problem bundles the eigenvalue laws of the linear drift and covariance
operators, the nonlinear drift, the diffusion operator (as a map from a
state to the columns of its matrix representation), an optional diffusion
derivative, an initial value, and the regularity exponents that drive the
convergence-order and planning formulas.

The three shipped examples use the sine basis on (0,1) for both the state
and the noise space, a rational-decay diffusion that does not commute, and
regularity exponents taken in the limit of vanishing slack.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .spectral import EigenLaw, SpectralField

__all__ = [
    "RegularityParams",
    "ProblemSpec",
    "GrowthBoundReport",
    "AffineDrift",
    "SpectralSineDrift",
    "ZeroDrift",
    "RationalDecayDiffusion",
    "ZeroDiffusion",
    "ZeroInitial",
    "PowerLawInitial",
    "make_example",
    "make_problem_from_config",
    "eval_drift",
    "eval_diffusion_column",
    "eval_diffusion_derivative",
    "commutativity_defect",
    "check_growth_bounds",
]

RationalLike = Union[Fraction, int, str]


def _frac(x: RationalLike) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class RegularityParams:
    """Regularity exponents of a problem, kept as exact rationals.

    The temporal orders are derived: q = min(2(gamma-beta), gamma) for the
    Milstein-type schemes and min(1/2, 2(gamma-beta), gamma) for the
    exponential/implicit Euler schemes. Upper interval ends are accepted
    closed because the shipped examples sit at the vanishing-slack limit.
    vartheta is carried for completeness; no computation reads it.
    """

    beta: Fraction
    gamma: Fraction
    delta: Fraction
    alpha: Fraction
    vartheta: Fraction
    rho_a: Fraction
    rho_q: Fraction

    def __post_init__(self):
        beta, gamma, delta = _frac(self.beta), _frac(self.gamma), _frac(self.delta)
        alpha, vartheta = _frac(self.alpha), _frac(self.vartheta)
        rho_a, rho_q = _frac(self.rho_a), _frac(self.rho_q)
        for name, val in (("beta", beta), ("gamma", gamma), ("delta", delta),
                          ("alpha", alpha), ("vartheta", vartheta),
                          ("rho_a", rho_a), ("rho_q", rho_q)):
            object.__setattr__(self, name, val)
        if not (0 <= beta < 1):
            raise ValueError("beta must lie in [0,1)")
        if not (0 < delta <= Fraction(1, 2)):
            raise ValueError("delta must lie in (0,1/2]")
        if not (0 < vartheta <= Fraction(1, 2)):
            raise ValueError("vartheta must lie in (0,1/2]")
        if not (max(beta, delta) <= gamma <= delta + Fraction(1, 2)):
            raise ValueError("gamma must lie in [max(beta,delta), delta+1/2]")
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        if rho_q <= 1:
            raise ValueError("rho_q must exceed 1 for a trace-class covariance")
        if rho_a <= 0:
            raise ValueError("rho_a must be positive")

    @property
    def q_dfm(self) -> Fraction:
        return min(2 * (self.gamma - self.beta), self.gamma)

    q_mil = q_dfm

    @property
    def q_ees(self) -> Fraction:
        return min(Fraction(1, 2), 2 * (self.gamma - self.beta), self.gamma)


# --- drift variants -------------------------------------------------------

@dataclass(frozen=True)
class AffineDrift:
    """F(y) = 1 - y in the sine basis.

    The coefficients of the constant function 1 are analytic:
    <1, e_i> = sqrt(2)(1 - (-1)^i)/(i pi), i.e. 2*sqrt(2)/(i pi) for odd i
    and 0 for even i.
    """

    def __call__(self, y: np.ndarray) -> np.ndarray:
        n = y.size
        idx = np.arange(1, n + 1)
        const = np.sqrt(2.0) * (1.0 - (-1.0) ** idx) / (idx * np.pi)
        return const - y


@dataclass(frozen=True)
class SpectralSineDrift:
    """Componentwise drift i^(-s) * sin(i^r * y_i); globally bounded for s > 1/2."""

    s: float
    r: float

    def __call__(self, y: np.ndarray) -> np.ndarray:
        idx = np.arange(1.0, y.size + 1.0)
        return idx**-self.s * np.sin(idx**self.r * y)


@dataclass(frozen=True)
class ZeroDrift:
    def __call__(self, y: np.ndarray) -> np.ndarray:
        return np.zeros_like(y)


# --- diffusion variants ---------------------------------------------------

class DiffusionBase:
    """Interface for the diffusion operator in matrix-column form.

    column(y, j, n) is the n-vector of coefficients of the operator applied
    to the j-th noise basis element. matrix(y, n, k) stacks columns 1..k.
    stage_columns evaluates column j of the operator at a per-column state
    (row j of `stages`); the generic implementation loops, subclasses may
    vectorize.
    """

    has_derivative = False

    def column(self, y: np.ndarray, j: int, n: int) -> np.ndarray:
        raise NotImplementedError

    def matrix(self, y: np.ndarray, n: int, k: int) -> np.ndarray:
        out = np.empty((n, k))
        for j in range(1, k + 1):
            out[:, j - 1] = self.column(y, j, n)
        return out

    def stage_columns(self, stages: np.ndarray, n: int) -> np.ndarray:
        k = stages.shape[0]
        out = np.empty((n, k))
        for j in range(1, k + 1):
            out[:, j - 1] = self.column(stages[j - 1], j, n)
        return out

    def deriv_column(self, y: np.ndarray, v: np.ndarray, j: int, n: int) -> np.ndarray:
        raise NotImplementedError("this diffusion does not provide a derivative")


@dataclass(frozen=True)
class RationalDecayDiffusion(DiffusionBase):
    """Diffusion with matrix entries y_j / (i^p + j^4).

    Linear in the state, hence its derivative in direction v applied to the
    j-th noise basis element is the j-th column evaluated at v. The induced
    operator does not commute: swapping the two noise directions in the
    second-order term changes the value.
    """

    p: float

    has_derivative = True

    def _inv_denom(self, n: int, k: int) -> np.ndarray:
        i = np.arange(1.0, n + 1.0)[:, None]
        j = np.arange(1.0, k + 1.0)[None, :]
        return 1.0 / (i**self.p + j**4)

    def column(self, y: np.ndarray, j: int, n: int) -> np.ndarray:
        if not 1 <= j <= y.size:
            raise ValueError(f"noise column {j} outside 1..{y.size}")
        i = np.arange(1.0, n + 1.0)
        return y[j - 1] / (i**self.p + float(j) ** 4)

    def matrix(self, y: np.ndarray, n: int, k: int) -> np.ndarray:
        if k > y.size:
            raise ValueError("noise dimension exceeds state dimension")
        return self._inv_denom(n, k) * y[:k][None, :]

    def stage_columns(self, stages: np.ndarray, n: int) -> np.ndarray:
        k = stages.shape[0]
        # column j only reads coefficient j of its own stage state
        diag = stages[np.arange(k), np.arange(k)]
        return self._inv_denom(n, k) * diag[None, :]

    def deriv_column(self, y: np.ndarray, v: np.ndarray, j: int, n: int) -> np.ndarray:
        return self.column(v, j, n)


@dataclass(frozen=True)
class ZeroDiffusion(DiffusionBase):
    has_derivative = True

    def column(self, y: np.ndarray, j: int, n: int) -> np.ndarray:
        return np.zeros(n)

    def matrix(self, y: np.ndarray, n: int, k: int) -> np.ndarray:
        return np.zeros((n, k))

    def stage_columns(self, stages: np.ndarray, n: int) -> np.ndarray:
        return np.zeros((n, stages.shape[0]))

    def deriv_column(self, y, v, j, n):
        return np.zeros(n)


# --- initial values -------------------------------------------------------

@dataclass(frozen=True)
class ZeroInitial:
    def coeffs(self, n: int) -> np.ndarray:
        return np.zeros(n)


@dataclass(frozen=True)
class PowerLawInitial:
    """Initial coefficients i^(-exponent)."""

    exponent: float

    def coeffs(self, n: int) -> np.ndarray:
        return np.arange(1.0, n + 1.0) ** -self.exponent


# --- the problem container ------------------------------------------------

@dataclass(frozen=True)
class ProblemSpec:
    """A fully parameterized SPDE instance in spectral coordinates."""

    name: str
    a_law: EigenLaw
    q_law: EigenLaw
    drift: object
    diffusion: DiffusionBase
    initial: object
    params: RegularityParams
    horizon: float = 1.0

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("time horizon must be positive")

    def initial_coeffs(self, n: int) -> np.ndarray:
        return np.asarray(self.initial.coeffs(n), dtype=float)


def make_example(example_id: int) -> ProblemSpec:
    """The three shipped problem instances, slack exponents sent to zero.

    1: affine drift, p=4/3 -> (beta, gamma, delta, alpha, q) =
       (0, 7/8, 3/8, 9/4, 7/8).
    2: affine drift, p=44/41 -> (0, 17/24, 5/24, 77/36, 17/24).
    3: bounded sine drift with s=r=7/2, p=4, initial coefficients i^-2 ->
       (7/8, 1, 1/2, 7/3, 1/4).
    All use the scaled Dirichlet Laplacian (rho_a=2), cubic-decay covariance
    (rho_q=3) and unit horizon.
    """
    a_law = EigenLaw.laplacian(scale=0.01)
    q_law = EigenLaw.power_decay(rho=3.0)
    if example_id == 1:
        params = RegularityParams(
            beta=Fraction(0), gamma=Fraction(7, 8), delta=Fraction(3, 8),
            alpha=Fraction(9, 4), vartheta=Fraction(1, 4),
            rho_a=Fraction(2), rho_q=Fraction(3))
        return ProblemSpec("example-1", a_law, q_law, AffineDrift(),
                           RationalDecayDiffusion(p=4.0 / 3.0), ZeroInitial(), params)
    if example_id == 2:
        params = RegularityParams(
            beta=Fraction(0), gamma=Fraction(17, 24), delta=Fraction(5, 24),
            alpha=Fraction(77, 36), vartheta=Fraction(1, 4),
            rho_a=Fraction(2), rho_q=Fraction(3))
        return ProblemSpec("example-2", a_law, q_law, AffineDrift(),
                           RationalDecayDiffusion(p=44.0 / 41.0), ZeroInitial(), params)
    if example_id == 3:
        params = RegularityParams(
            beta=Fraction(7, 8), gamma=Fraction(1), delta=Fraction(1, 2),
            alpha=Fraction(7, 3), vartheta=Fraction(1, 2),
            rho_a=Fraction(2), rho_q=Fraction(3))
        return ProblemSpec("example-3", a_law, q_law,
                           SpectralSineDrift(s=3.5, r=3.5),
                           RationalDecayDiffusion(p=4.0),
                           PowerLawInitial(exponent=2.0), params)
    raise ValueError(f"unknown example id {example_id!r} (expected 1, 2 or 3)")


_DRIFTS = {"affine": AffineDrift, "spectral_sine": SpectralSineDrift, "zero": ZeroDrift}


def make_problem_from_config(cfg: dict) -> ProblemSpec:
    """Build a custom problem from a plain dict (e.g. parsed JSON).

    Recognized keys: p, rho_q, drift ("affine" | "spectral_sine" | "zero"),
    s, r (for the sine drift), initial ("zero" or {"power": exponent}),
    beta, gamma, delta, alpha, vartheta, rho_a (exact rationals as strings
    or numbers), horizon, a_scale, name.
    """
    params = RegularityParams(
        beta=_frac(cfg.get("beta", 0)), gamma=_frac(cfg["gamma"]),
        delta=_frac(cfg["delta"]), alpha=_frac(cfg["alpha"]),
        vartheta=_frac(cfg.get("vartheta", Fraction(1, 4))),
        rho_a=_frac(cfg.get("rho_a", 2)), rho_q=_frac(cfg["rho_q"]))
    drift_kind = cfg.get("drift", "affine")
    if drift_kind == "spectral_sine":
        drift = SpectralSineDrift(s=float(_frac(cfg["s"])), r=float(_frac(cfg["r"])))
    elif drift_kind in _DRIFTS:
        drift = _DRIFTS[drift_kind]()
    else:
        raise ValueError(f"unknown drift variant {drift_kind!r}")
    initial_cfg = cfg.get("initial", "zero")
    if initial_cfg == "zero":
        initial = ZeroInitial()
    elif isinstance(initial_cfg, dict) and "power" in initial_cfg:
        initial = PowerLawInitial(exponent=float(initial_cfg["power"]))
    else:
        raise ValueError(f"unknown initial-value law {initial_cfg!r}")
    return ProblemSpec(
        name=cfg.get("name", "custom"),
        a_law=EigenLaw.laplacian(scale=float(cfg.get("a_scale", 0.01))),
        q_law=EigenLaw.power_decay(rho=float(_frac(cfg["rho_q"]))),
        drift=drift,
        diffusion=RationalDecayDiffusion(p=float(_frac(cfg["p"]))),
        initial=initial,
        params=params,
        horizon=float(cfg.get("horizon", 1.0)))


# --- public evaluation wrappers --------------------------------------------

def eval_drift(problem: ProblemSpec, y: SpectralField) -> SpectralField:
    """Projected drift at the state y."""
    return SpectralField(problem.drift(y.coeffs))


def eval_diffusion_column(problem: ProblemSpec, y: SpectralField, j: int) -> SpectralField:
    """Column j of the projected diffusion matrix at state y."""
    return SpectralField(problem.diffusion.column(y.coeffs, j, y.dim))


def eval_diffusion_derivative(problem: ProblemSpec, y: SpectralField,
                              v: SpectralField, j: int) -> SpectralField:
    """Diffusion derivative at y in direction v, applied to noise element j."""
    if not problem.diffusion.has_derivative:
        raise NotImplementedError("problem ships no diffusion derivative")
    return SpectralField(problem.diffusion.deriv_column(y.coeffs, v.coeffs, j, y.dim))


def commutativity_defect(problem: ProblemSpec, y: SpectralField,
                         n: int, k: int) -> float:
    """Worst-case asymmetry of the second-order noise term.

    Returns max over pairs (m, n_) <= k of the Euclidean norm of
    deriv(y)(column_m(y), n_) - deriv(y)(column_n_(y), m), columns projected
    to dimension n. Zero exactly when the noise term commutes on the
    truncated spaces.
    """
    if k > n:
        raise ValueError("noise truncation must not exceed state truncation")
    diff = problem.diffusion
    yc = y.coeffs
    cols = [diff.column(yc, j, n) for j in range(1, k + 1)]
    worst = 0.0
    for m in range(1, k + 1):
        for n_ in range(m + 1, k + 1):
            lhs = diff.deriv_column(yc, cols[m - 1], n_, n)
            rhs = diff.deriv_column(yc, cols[n_ - 1], m, n)
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


@dataclass(frozen=True)
class GrowthBoundReport:
    """Sampled linear-growth ratios of the diffusion operator norm."""

    ratios: np.ndarray
    max_ratio: float
    n: int
    k: int


def check_growth_bounds(problem: ProblemSpec, sample_fields: list,
                        n: int, k: int) -> GrowthBoundReport:
    """Numerically probe the linear growth bound of the diffusion.

    For each sample y, computes the operator norm of the truncated diffusion
    matrix measured into the delta-smoothed state norm and divides by
    (1 + |y| in that norm). A finite-truncation sanity check, not a proof;
    the dense-matrix 2-norm is the oracle.
    """
    lam = problem.a_law.values(n)
    delta = float(problem.params.delta)
    weights = lam**delta
    ratios = []
    for f in sample_fields:
        y = f.coeffs if isinstance(f, SpectralField) else np.asarray(f, dtype=float)
        if y.size < n:
            y = np.concatenate([y, np.zeros(n - y.size)])
        mat = problem.diffusion.matrix(y, n, k)
        op_norm = float(np.linalg.norm(weights[:, None] * mat, 2))
        y_norm = float(np.sqrt(np.sum(weights**2 * y[:n] ** 2)))
        ratios.append(op_norm / (1.0 + y_norm))
    arr = np.asarray(ratios)
    return GrowthBoundReport(ratios=arr, max_ratio=float(arr.max(initial=0.0)), n=n, k=k)
