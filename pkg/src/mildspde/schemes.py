"""One-step maps and trajectory integrators in spectral coordinates.

Four schemes are provided. The Milstein-type pair consumes iterated
integral packets; the Euler-type pair consumes plain increments:

    DFM: semigroup step with the second-order noise term realized through
         difference quotients of the diffusion at stage values, one stage
         per noise direction. Derivative-free.
    MIL: semigroup step with the second-order term assembled from the
         diffusion derivative.
    EES: exponential Euler, the DFM step without its stage-difference sum.
    LIE: linear implicit Euler; the semigroup factor is replaced by the
         diagonal resolvent 1/(1 + lambda_i h).

All steps end inside the projected space, so trailing projection is a
no-op. Steppers are pure; an optional ledger records functional
evaluations per the cost model (the Milstein derivative tensor is charged
at K N^2 once per step, applications being free).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .noise import NoisePacket
from .problems import ProblemSpec
from .spectral import SpectralField

__all__ = ["SchemeConfig", "step_dfm", "step_mil", "step_ees", "step_lie",
           "integrate", "MILSTEIN_KINDS", "EULER_KINDS"]

MILSTEIN_KINDS = ("DFM", "MIL")
EULER_KINDS = ("EES", "LIE")


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme kind plus the discretization triple (N, K, M) on [0, T]."""

    kind: str
    n: int
    k: int
    m: int
    d: Optional[int] = None
    horizon: float = 1.0

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in MILSTEIN_KINDS + EULER_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("need at least one time step")
        if not 1 <= self.k <= self.n:
            raise ValueError("need 1 <= K <= N")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if kind in MILSTEIN_KINDS:
            if self.d is None or self.d < 1:
                raise ValueError(f"{kind} needs a series depth d >= 1")
        elif self.d is not None:
            raise ValueError(f"{kind} takes no series depth")

    @property
    def h(self) -> float:
        return self.horizon / self.m


# --- array kernels ----------------------------------------------------------

def _drift_term(problem, y, h, ledger):
    if ledger is not None:
        ledger.charge_f(y.size)
    return y + h * problem.drift(y)


def _dfm_kernel(problem, y, db, iq, h, decay, sqrt_eta, ledger):
    n, k = y.size, db.size
    u = _drift_term(problem, y, h, ledger)
    bmat = problem.diffusion.matrix(y, n, k)
    u = u + bmat @ (sqrt_eta * db)
    stages = y[None, :] + (bmat @ iq).T
    stage_cols = problem.diffusion.stage_columns(stages, n)
    u = u + (stage_cols - bmat).sum(axis=1)
    if ledger is not None:
        ledger.charge_b(2 * k * n)
        ledger.charge_unit(n)
    return decay * u


def _mil_kernel(problem, y, db, iq, h, decay, sqrt_eta, ledger):
    n, k = y.size, db.size
    u = _drift_term(problem, y, h, ledger)
    bmat = problem.diffusion.matrix(y, n, k)
    u = u + bmat @ (sqrt_eta * db)
    second = np.zeros(n)
    for i in range(1, k + 1):
        col = bmat[:, i - 1]
        for j in range(1, k + 1):
            w = iq[i - 1, j - 1]
            if w != 0.0:
                second += w * problem.diffusion.deriv_column(y, col, j, n)
    u = u + second
    if ledger is not None:
        ledger.charge_b(k * n)
        ledger.charge_bprime(k * n * n)
        ledger.charge_unit(n)
    return decay * u


def _euler_kernel(problem, y, db, h, propagator, sqrt_eta, ledger):
    n, k = y.size, db.size
    u = _drift_term(problem, y, h, ledger)
    bmat = problem.diffusion.matrix(y, n, k)
    u = u + bmat @ (sqrt_eta * db)
    if ledger is not None:
        ledger.charge_b(k * n)
        ledger.charge_unit(n)
    return propagator * u


def _decay(problem, n, h):
    return np.exp(-problem.a_law.values(n) * h)


def _resolvent(problem, n, h):
    return 1.0 / (1.0 + problem.a_law.values(n) * h)


# --- public one-step maps ---------------------------------------------------

def step_dfm(problem: ProblemSpec, y: SpectralField, packet: NoisePacket) -> SpectralField:
    """One derivative-free Milstein step driven by a noise packet."""
    sqrt_eta = np.sqrt(packet.eta)
    decay = _decay(problem, y.dim, packet.h)
    out = _dfm_kernel(problem, y.coeffs, packet.delta_beta, packet.iterated,
                      packet.h, decay, sqrt_eta, None)
    return SpectralField(out)


def step_mil(problem: ProblemSpec, y: SpectralField, packet: NoisePacket) -> SpectralField:
    """One Milstein step; requires the problem to ship a diffusion derivative."""
    if not problem.diffusion.has_derivative:
        raise NotImplementedError("Milstein step needs a diffusion derivative")
    sqrt_eta = np.sqrt(packet.eta)
    decay = _decay(problem, y.dim, packet.h)
    out = _mil_kernel(problem, y.coeffs, packet.delta_beta, packet.iterated,
                      packet.h, decay, sqrt_eta, None)
    return SpectralField(out)


def step_ees(problem: ProblemSpec, y: SpectralField, delta_beta: np.ndarray,
             h: float) -> SpectralField:
    """One exponential Euler step driven by standard increments."""
    if h < 0:
        raise ValueError("step length must be nonnegative")
    db = np.asarray(delta_beta, dtype=float)
    sqrt_eta = np.sqrt(problem.q_law.values(db.size))
    out = _euler_kernel(problem, y.coeffs, db, h, _decay(problem, y.dim, h),
                        sqrt_eta, None)
    return SpectralField(out)


def step_lie(problem: ProblemSpec, y: SpectralField, delta_beta: np.ndarray,
             h: float) -> SpectralField:
    """One linear implicit Euler step driven by standard increments."""
    if h < 0:
        raise ValueError("step length must be nonnegative")
    db = np.asarray(delta_beta, dtype=float)
    sqrt_eta = np.sqrt(problem.q_law.values(db.size))
    out = _euler_kernel(problem, y.coeffs, db, h, _resolvent(problem, y.dim, h),
                        sqrt_eta, None)
    return SpectralField(out)


# --- trajectory integration -------------------------------------------------

def integrate(config: SchemeConfig, problem: ProblemSpec, noise_source: Iterable,
              ledger=None, store: str = "trajectory", capture=None):
    """Iterate the configured one-step map from the projected initial value.

    noise_source must yield config.m items on the uniform grid: NoisePacket
    instances for the Milstein-type schemes, (k,) increment arrays for the
    Euler-type schemes. Deterministic given the noise.

    Args:
        store: "trajectory" returns an (m+1, n) coefficient array,
            "final" just the (n,) terminal state.
        capture: optional collection of step indices; if given, a dict
            index -> state copy is returned alongside the main result.

    Returns:
        array, or (array, captures) when capture is not None.
    """
    if store not in ("trajectory", "final"):
        raise ValueError("store must be 'trajectory' or 'final'")
    n, k, m, h = config.n, config.k, config.m, config.h
    kind = config.kind
    y = np.asarray(problem.initial_coeffs(n), dtype=float).copy()
    sqrt_eta = np.sqrt(problem.q_law.values(k))
    propagator = _resolvent(problem, n, h) if kind == "LIE" else _decay(problem, n, h)
    traj = None
    if store == "trajectory":
        traj = np.empty((m + 1, n))
        traj[0] = y
    captures = {} if capture is not None else None
    capture_set = set(capture) if capture is not None else ()
    if 0 in capture_set:
        captures[0] = y.copy()
    it = iter(noise_source)
    milstein = kind in MILSTEIN_KINDS
    kernel = _dfm_kernel if kind == "DFM" else _mil_kernel
    for step in range(1, m + 1):
        try:
            noise = next(it)
        except StopIteration:
            raise ValueError(f"noise source exhausted after {step - 1} of {m} steps") from None
        if milstein:
            if noise.k != k:
                raise ValueError("packet noise dimension does not match config")
            y = kernel(problem, y, noise.delta_beta, noise.iterated, h,
                       propagator, sqrt_eta, ledger)
        else:
            db = np.asarray(noise, dtype=float)
            if db.size != k:
                raise ValueError("increment dimension does not match config")
            y = _euler_kernel(problem, y, db, h, propagator, sqrt_eta, ledger)
        if traj is not None:
            traj[step] = y
        if step in capture_set:
            captures[step] = y.copy()
    result = traj if store == "trajectory" else y
    if capture is not None:
        return result, captures
    return result
