"""Domain types for piecewise-stable VAR processes and their diagnostics.

A VAR(L) parameterization is a list of L coefficient matrices A[1..L],
each p x p.  A piecewise model switches the whole coefficient set at a
strictly increasing sequence of change points; segment k governs the
time points [eta_k, eta_{k+1} - 1] with eta_0 = 1 and eta_{K+1} = n + 1.
Time indices in the public API are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


class ModelError(ValueError):
    """Raised when a model object violates its structural invariants."""


class UnstableModelError(ModelError):
    """Raised when a coefficient set fails the required stability margin."""

    def __init__(self, message: str, spectral_radius: float):
        super().__init__(message)
        self.spectral_radius = spectral_radius


class EigenvalueError(RuntimeError):
    """Eigenvalue computation did not converge."""


@dataclass
class TimeSeries:
    """An n x p matrix of observations, rows indexed by time 1..n."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ModelError(f"series must be 2-dimensional, got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ModelError(f"series must be at least 1x1, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            t, i = np.argwhere(~np.isfinite(self.data))[0]
            raise ModelError(f"non-finite entry at row {t + 1}, column {i + 1}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]


@dataclass
class CoefficientSet:
    """Ordered coefficient matrices A[1..L] of one VAR(L) parameterization.

    ``matrices`` is stored as an (L, p, p) array; ``matrices[l - 1]`` is the
    lag-l matrix A[l].
    """

    matrices: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.matrices, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ModelError(f"expected (L, p, p) coefficient array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ModelError(f"lag and dimension must be positive, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ModelError("coefficient matrices contain non-finite entries")
        self.matrices = arr

    @property
    def lag(self) -> int:
        return self.matrices.shape[0]

    @property
    def p(self) -> int:
        return self.matrices.shape[1]

    def stacked(self) -> np.ndarray:
        """The p x pL matrix [A[1] A[2] ... A[L]] acting on stacked lags."""
        return np.hstack(list(self.matrices))


class Stability(NamedTuple):
    stable: bool
    spectral_radius: float


def companion_matrix(coeffs: CoefficientSet) -> np.ndarray:
    """The pL x pL block matrix rewriting a VAR(L) as a VAR(1).

    A[1..L] fill the first block row; identity blocks sit on the first
    block subdiagonal.  For L = 1 this is A[1] itself.
    """
    L, p = coeffs.lag, coeffs.p
    if L == 1:
        return coeffs.matrices[0].copy()
    out = np.zeros((p * L, p * L))
    out[:p, :] = coeffs.stacked()
    idx = np.arange(p * (L - 1))
    out[p + idx, idx] = 1.0
    return out


def is_stable(coeffs: CoefficientSet, stability_margin: float = 0.0) -> Stability:
    """Check stability via the spectral radius of the companion matrix.

    The process is stable when every companion eigenvalue has modulus
    strictly below ``1 - stability_margin``.
    """
    comp = companion_matrix(coeffs)
    try:
        eigvals = np.linalg.eigvals(comp)
    except np.linalg.LinAlgError as exc:
        raise EigenvalueError(
            f"eigenvalue iteration failed on a {comp.shape[0]}x{comp.shape[0]} "
            f"companion matrix: {exc}"
        ) from exc
    radius = float(np.max(np.abs(eigvals)))
    return Stability(stable=radius < 1.0 - stability_margin, spectral_radius=radius)


def jump_size(a: CoefficientSet, b: CoefficientSet) -> float:
    """Frobenius-norm distance sqrt(sum_l ||a[l] - b[l]||_F^2) between two sets."""
    if a.lag != b.lag or a.p != b.p:
        raise ModelError(
            f"coefficient sets differ in shape: (L={a.lag}, p={a.p}) vs (L={b.lag}, p={b.p})"
        )
    return float(np.sqrt(np.sum((a.matrices - b.matrices) ** 2)))


@dataclass
class PiecewiseVarModel:
    """Piecewise VAR(L) ground truth: change points, per-segment coefficients, noise scale.

    ``change_points`` are 1-based; segment k (k = 0..K) has coefficients
    ``segments[k]`` and covers times eta_k .. eta_{k+1} - 1 with eta_0 = 1
    and eta_{K+1} = n + 1.
    """

    n: int
    change_points: tuple[int, ...]
    segments: list[CoefficientSet] = field(default_factory=list)
    noise_sd: float = 1.0

    def __post_init__(self):
        self.change_points = tuple(int(c) for c in self.change_points)
        self.validate()

    @property
    def p(self) -> int:
        return self.segments[0].p

    @property
    def lag(self) -> int:
        return self.segments[0].lag

    def validate(self):
        if self.n < 1:
            raise ModelError(f"horizon n must be positive, got {self.n}")
        if self.noise_sd <= 0:
            raise ModelError(f"noise_sd must be positive, got {self.noise_sd}")
        if not self.segments:
            raise ModelError("model needs at least one segment")
        cps = self.change_points
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ModelError(f"change points must be strictly increasing, got {cps}")
        if cps and (cps[0] <= 1 or cps[-1] > self.n):
            raise ModelError(f"change points must lie in (1, n], got {cps} with n={self.n}")
        if len(self.segments) != len(cps) + 1:
            raise ModelError(
                f"{len(cps)} change points require {len(cps) + 1} segments, "
                f"got {len(self.segments)}"
            )
        p, lag = self.segments[0].p, self.segments[0].lag
        for k, seg in enumerate(self.segments):
            if seg.p != p or seg.lag != lag:
                raise ModelError(f"segment {k} has shape (L={seg.lag}, p={seg.p}), expected (L={lag}, p={p})")
            st = is_stable(seg)
            if not st.stable:
                raise UnstableModelError(
                    f"segment {k} is unstable (spectral radius {st.spectral_radius:.6f})",
                    st.spectral_radius,
                )
        if lag >= self._delta():
            raise ModelError(f"lag {lag} must be smaller than the minimal spacing {self._delta()}")
        for k in range(len(cps)):
            if jump_size(self.segments[k], self.segments[k + 1]) == 0.0:
                raise ModelError(f"adjacent segments {k} and {k + 1} have identical coefficients")

    def boundaries(self) -> tuple[int, ...]:
        """(eta_0, eta_1, ..., eta_{K+1}) = (1, *change_points, n + 1)."""
        return (1, *self.change_points, self.n + 1)

    def segment_ranges(self) -> list[tuple[int, int]]:
        """Per-segment 1-based closed time ranges [eta_k, eta_{k+1} - 1]."""
        b = self.boundaries()
        return [(b[k], b[k + 1] - 1) for k in range(len(self.segments))]

    def _delta(self) -> int:
        b = self.boundaries()
        return min(b[k + 1] - b[k] for k in range(len(b) - 1))


@dataclass
class ModelSummary:
    delta: int
    kappa: float
    d0: int
    K: int


def model_summary(model: PiecewiseVarModel) -> ModelSummary:
    """Ground-truth diagnostics: minimal spacing, minimal jump size, union support size.

    The spacing minimum runs over all K + 1 segments including the boundary
    ones (eta_0 = 1, eta_{K+1} = n + 1).  For a model without change points
    the jump size is reported as +inf.
    """
    delta = model._delta()
    if model.change_points:
        kappa = min(
            jump_size(model.segments[k], model.segments[k + 1])
            for k in range(len(model.change_points))
        )
    else:
        kappa = float("inf")
    support = np.zeros((model.p, model.p), dtype=bool)
    for seg in model.segments:
        support |= np.any(seg.matrices != 0.0, axis=0)
    return ModelSummary(delta=delta, kappa=kappa, d0=int(support.sum()), K=len(model.change_points))


def as_change_points(points: Sequence[int]) -> tuple[int, ...]:
    """Normalize a change point collection to a sorted tuple of distinct ints."""
    out = tuple(sorted(int(x) for x in points))
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ModelError(f"change points must be distinct, got {points}")
    return out
