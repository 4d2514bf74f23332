"""Simulation of piecewise VAR processes and the standard benchmark scenarios.

Segments are generated independently of each other: each one runs its own
burn-in recursion from a zero state to realize the unobserved pre-history
at the segment boundary, then evolves the VAR(L) recursion through the
segment.  With every spectral radius capped at 1 - stability_margin the
burn-in transient decays below 1e-6 well within the default 200 steps, so
the draw is a close approximation of the stationary law (an exact draw
would need a pL x pL Lyapunov solve for marginal benefit).

Per-segment noise comes from independently spawned generator streams, so
results do not depend on the order segments are produced in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    CoefficientSet,
    ModelError,
    PiecewiseVarModel,
    TimeSeries,
    UnstableModelError,
    is_stable,
)


@dataclass
class SimulationConfig:
    seed: int
    burn_in: int = 200
    stability_margin: float = 0.01


def simulate(model: PiecewiseVarModel, config: SimulationConfig) -> TimeSeries:
    """Draw one realization of ``model``; deterministic given (model, seed)."""
    lag = model.lag
    if config.burn_in < lag:
        raise ModelError(f"burn_in {config.burn_in} must be at least the lag {lag}")
    for k, seg in enumerate(model.segments):
        st = is_stable(seg, config.stability_margin)
        if not st.stable:
            raise UnstableModelError(
                f"segment {k} has spectral radius {st.spectral_radius:.6f}, "
                f"above the simulation margin {1.0 - config.stability_margin:.6f}",
                st.spectral_radius,
            )
    streams = np.random.SeedSequence(config.seed).spawn(len(model.segments))
    out = np.empty((model.n, model.p))
    for k, (start, end) in enumerate(model.segment_ranges()):
        length = end - start + 1
        out[start - 1 : end] = _run_segment(
            model.segments[k], length, model.noise_sd, config.burn_in, streams[k]
        )
    return TimeSeries(out)


def _run_segment(
    coeffs: CoefficientSet,
    length: int,
    noise_sd: float,
    burn_in: int,
    stream: np.random.SeedSequence,
) -> np.ndarray:
    """Burn-in recursion from a zero state; the last ``length`` rows are kept."""
    rng = np.random.default_rng(stream)
    lag, p = coeffs.lag, coeffs.p
    total = burn_in + length
    noise = rng.normal(0.0, noise_sd, size=(total, p))
    x = np.zeros((lag + total, p))
    for t in range(total):
        acc = noise[t]
        for l in range(1, lag + 1):
            acc = acc + coeffs.matrices[l - 1] @ x[lag + t - l]
        x[lag + t] = acc
    return x[lag + burn_in :]


def scenario_i(n: int) -> PiecewiseVarModel:
    """Single change point at n/2, p = 10, L = 1.

    Segment 1 is upper bidiagonal with 0.3 on the diagonal and -0.3 on the
    superdiagonal; segment 2 flips both signs.
    """
    if n % 2 != 0:
        raise ModelError(f"n must be divisible by 2, got {n}")
    if n < 4:
        raise ModelError(f"n must be at least 4, got {n}")
    p = 10
    a = np.diag(np.full(p, 0.3)) + np.diag(np.full(p - 1, -0.3), k=1)
    return PiecewiseVarModel(
        n=n,
        change_points=(n // 2,),
        segments=[CoefficientSet(a), CoefficientSet(-a)],
        noise_sd=1.0,
    )


def scenario_ii(n: int, p: int, rho: float) -> PiecewiseVarModel:
    """Change points at n/3 and 2n/3; rank-one +/- column pattern scaled by rho.

    The first two columns of each coefficient matrix are rho*v and -rho*v
    (swapped in the middle segment) where v alternates +1/-1 starting at +1;
    the remaining columns are zero.
    """
    if n % 3 != 0:
        raise ModelError(f"n must be divisible by 3, got {n}")
    if p < 3:
        raise ModelError(f"p must be at least 3, got {p}")
    if rho <= 0:
        raise ModelError(f"rho must be positive, got {rho} (rho = 0 leaves adjacent segments identical)")
    v = np.where(np.arange(p) % 2 == 0, 1.0, -1.0)
    a = np.zeros((p, p))
    a[:, 0] = rho * v
    a[:, 1] = -rho * v
    outer = CoefficientSet(a)
    st = is_stable(outer)
    if not st.stable:
        raise UnstableModelError(
            f"rho = {rho} gives spectral radius {st.spectral_radius:.6f} >= 1",
            st.spectral_radius,
        )
    return PiecewiseVarModel(
        n=n,
        change_points=(n // 3, 2 * n // 3),
        segments=[outer, CoefficientSet(-a), outer],
        noise_sd=1.0,
    )


_V1 = np.array([-0.15, 0.225, 0.25, -0.15])
_V2 = np.array([0.2, -0.075, -0.175, -0.05])
_V3 = np.array([-0.15, 0.1, 0.3, -0.05])


def scenario_iii(n: int, p: int) -> PiecewiseVarModel:
    """Change points at n/3 and 2n/3; three fixed sparse columns, permuted per segment."""
    if n % 3 != 0:
        raise ModelError(f"n must be divisible by 3, got {n}")
    if p < 4:
        raise ModelError(f"p must be at least 4, got {p}")

    def cols(*vs: np.ndarray) -> CoefficientSet:
        a = np.zeros((p, p))
        for j, v in enumerate(vs):
            a[: len(v), j] = v
        return CoefficientSet(a)

    return PiecewiseVarModel(
        n=n,
        change_points=(n // 3, 2 * n // 3),
        segments=[cols(_V1, _V2, _V3), cols(_V2, _V3, _V1), cols(_V3, _V2, _V1)],
        noise_sd=1.0,
    )
