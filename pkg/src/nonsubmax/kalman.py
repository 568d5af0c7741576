"""Kalman-filter sensor scheduling objective.

Sensor ``(k, i)`` is row ``i`` of the measurement matrix at step ``k``; it is
item ``k * m + i`` of the ground set and belongs to block ``k``.  Selecting a
set of sensors yields the error covariance of the state estimate at the
target step; the objective is the reduction of its trace relative to using
no sensors at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .core import SetFunction, Subset, iter_bits, to_mask
from .errors import ConditioningError, InvalidElementError

SPD_RTOL = 1e-10


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise InvalidElementError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_spd(name: str, M: np.ndarray) -> None:
    if M.shape[0] != M.shape[1]:
        raise InvalidElementError(f"{name} must be square, got {M.shape}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-10 * max(1.0, np.abs(M).max())):
        raise InvalidElementError(f"{name} must be symmetric")
    lam = np.linalg.eigvalsh(M)
    if not lam[0] > SPD_RTOL * max(np.trace(M), 0.0):
        raise InvalidElementError(f"{name} must be positive definite (smallest eigenvalue {lam[0]:.3g})")


@dataclass(frozen=True, eq=False)
class KalmanInstance:
    """Linear time-varying system with candidate sensors at steps ``0..horizon``.

    ``A_seq`` holds ``horizon`` state matrices, ``C_seq`` holds ``horizon + 1``
    measurement matrices with ``m`` rows each, and ``sigma[k, i]`` is the
    noise standard deviation of sensor ``(k, i)``.
    """

    horizon: int
    A_seq: np.ndarray
    C_seq: np.ndarray
    W: np.ndarray
    sigma: np.ndarray
    Pi0: np.ndarray

    def __post_init__(self):
        ell = int(self.horizon)
        if ell < 0:
            raise InvalidElementError("horizon must be nonnegative")
        object.__setattr__(self, "horizon", ell)
        W = _frozen(self.W, 2)
        Pi0 = _frozen(self.Pi0, 2)
        nx = W.shape[0]
        A_seq = _frozen(np.reshape(self.A_seq, (ell, nx, nx)) if ell == 0 else self.A_seq, 3)
        C_seq = _frozen(self.C_seq, 3)
        sigma = _frozen(self.sigma, 2)
        if A_seq.shape != (ell, nx, nx):
            raise InvalidElementError(f"A_seq must have shape {(ell, nx, nx)}, got {A_seq.shape}")
        if C_seq.shape[0] != ell + 1 or C_seq.shape[2] != nx:
            raise InvalidElementError(f"C_seq must have shape ({ell + 1}, m, {nx}), got {C_seq.shape}")
        if sigma.shape != C_seq.shape[:2]:
            raise InvalidElementError(f"sigma must have shape {C_seq.shape[:2]}, got {sigma.shape}")
        if not np.all(sigma > 0):
            raise InvalidElementError("sensor noise standard deviations must be positive")
        if Pi0.shape != (nx, nx):
            raise InvalidElementError(f"Pi0 must have shape {(nx, nx)}")
        _check_spd("W", W)
        _check_spd("Pi0", Pi0)
        for name, val in (("A_seq", A_seq), ("C_seq", C_seq), ("W", W), ("sigma", sigma), ("Pi0", Pi0)):
            object.__setattr__(self, name, val)

    @property
    def state_dim(self) -> int:
        return self.W.shape[0]

    @property
    def sensors_per_step(self) -> int:
        return self.C_seq.shape[1]

    @property
    def size(self) -> int:
        return (self.horizon + 1) * self.sensors_per_step

    def item(self, step: int, row: int) -> int:
        return step * self.sensors_per_step + row

    def block_items(self, step: int) -> list[int]:
        m = self.sensors_per_step
        return list(range(step * m, (step + 1) * m))

    def step_rows(self, mask: int, step: int) -> list[int]:
        m = self.sensors_per_step
        return list(iter_bits((mask >> (step * m)) & ((1 << m) - 1)))

    def information(self, step: int, rows: Sequence[int]) -> np.ndarray:
        """``sum_v sigma_v^-2 C_v^T C_v`` over the given rows of ``C_step``."""
        nx = self.state_dim
        if not rows:
            return np.zeros((nx, nx))
        scaled = self.C_seq[step, list(rows), :] / self.sigma[step, list(rows)][:, None]
        with np.errstate(over="ignore", invalid="ignore"):
            return scaled.T @ scaled

    def to_payload(self) -> dict:
        return {
            "state_dim": self.state_dim,
            "sensors_per_step": self.sensors_per_step,
            "horizon": self.horizon,
            "A": [a.ravel().tolist() for a in self.A_seq],
            "C": [c.ravel().tolist() for c in self.C_seq],
            "W": self.W.ravel().tolist(),
            "Pi0": self.Pi0.ravel().tolist(),
            "sigma": self.sigma.ravel().tolist(),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "KalmanInstance":
        try:
            nx = int(payload["state_dim"])
            m = int(payload["sensors_per_step"])
            ell = int(payload["horizon"])
            A = np.asarray(payload["A"], dtype=float).reshape(ell, nx, nx)
            C = np.asarray(payload["C"], dtype=float).reshape(ell + 1, m, nx)
            W = np.asarray(payload["W"], dtype=float).reshape(nx, nx)
            Pi0 = np.asarray(payload["Pi0"], dtype=float).reshape(nx, nx)
            sigma = np.asarray(payload["sigma"], dtype=float).reshape(ell + 1, m)
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidElementError(f"bad kalman payload: {exc}") from None
        return cls(ell, A, C, W, sigma, Pi0)


@dataclass(frozen=True)
class InfoState:
    P: np.ndarray
    step: int


def _cho(M: np.ndarray):
    if not np.isfinite(M).all():
        raise ConditioningError("non-finite entries in an information or covariance matrix")
    try:
        return linalg.cho_factor(M, check_finite=False)
    except linalg.LinAlgError as exc:
        raise ConditioningError(f"matrix is not numerically positive definite: {exc}") from None


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _inverse_spd(M: np.ndarray) -> np.ndarray:
    return _sym(linalg.cho_solve(_cho(M), np.eye(M.shape[0]), check_finite=False))


def _propagate(P_inv: np.ndarray, J: np.ndarray, A: np.ndarray, W: np.ndarray) -> np.ndarray:
    X = linalg.cho_solve(_cho(P_inv + J), A.T, check_finite=False)
    return _sym(W + A @ X)


def riccati_step(state: InfoState, A_k, W, selected: Sequence[tuple[Sequence[float], float]] = ()) -> InfoState:
    """One prior-covariance update using the sensors ``selected`` as (row, sigma) pairs."""
    A_k = np.asarray(A_k, dtype=float)
    W = np.asarray(W, dtype=float)
    nx = W.shape[0]
    J = np.zeros((nx, nx))
    for row, s in selected:
        row = np.asarray(row, dtype=float).reshape(1, nx)
        J = J + (row.T @ row) / (s * s)
    P_inv = _inverse_spd(np.asarray(state.P, dtype=float))
    return InfoState(_propagate(P_inv, J, A_k, W), state.step + 1)


def _priors(instance: KalmanInstance, mask: int) -> list[np.ndarray]:
    P = np.array(instance.Pi0)
    out = [P]
    for k in range(instance.horizon):
        P_inv = _inverse_spd(P)
        P = _propagate(P_inv, instance.information(k, instance.step_rows(mask, k)), instance.A_seq[k], instance.W)
        out.append(P)
    return out


def _final_trace(P_inv: np.ndarray, J: np.ndarray) -> float:
    return float(np.trace(_inverse_spd(P_inv + J)))


def _check_mask(instance: KalmanInstance, mask: int) -> None:
    if mask >> instance.size:
        raise InvalidElementError(f"subset mentions sensors beyond the {instance.size} available")


def g_value(instance: KalmanInstance, subset: Subset) -> float:
    """Trace of the estimation error covariance at the target step."""
    mask = to_mask(subset)
    _check_mask(instance, mask)
    ell = instance.horizon
    P = _priors(instance, mask)[-1]
    return _final_trace(_inverse_spd(P), instance.information(ell, instance.step_rows(mask, ell)))


def f_s(instance: KalmanInstance, subset: Subset) -> float:
    return g_value(instance, 0) - g_value(instance, subset)


def prop1_bounds(instance: KalmanInstance) -> tuple[float, float]:
    """Closed-form ``(gamma_lower, 1 - gamma_lower**2)`` for f_s.

    ``gamma_lower`` bounds the submodularity ratio from below.  For
    ``horizon == 0`` it also bounds the DR ratio, and the second value
    bounds the curvature; for longer horizons both of those can fail.
    """
    ell = instance.horizon
    full = (1 << instance.size) - 1
    P_empty = _priors(instance, 0)[-1]
    P_full = _priors(instance, full)[-1]
    num = np.linalg.eigvalsh(_inverse_spd(P_empty))[0]
    den = np.linalg.eigvalsh(_inverse_spd(P_full) + instance.information(ell, list(range(instance.sensors_per_step))))[-1]
    gamma = float(num / den)
    return gamma, 1.0 - gamma * gamma


class KalmanObjective(SetFunction):
    """``f_s`` as a memoized set function.

    Prior covariances are cached per prefix of steps, so a full table over
    ``2^|S|`` subsets costs far fewer than ``2^|S|`` Riccati recursions.  The
    arithmetic is the same sequence of operations as :func:`g_value`, so the
    values are bit-identical.
    """

    kind = "kalman"

    def __init__(self, instance: KalmanInstance, cache: bool = True):
        super().__init__(range(instance.size), cache)
        self.instance = instance
        self._prior_inv: dict[tuple[int, int], np.ndarray] = {}
        self._g_empty = self._g(0)

    def _prior_inverse(self, step: int, mask: int) -> np.ndarray:
        m = self.instance.sensors_per_step
        key = (step, mask & ((1 << (step * m)) - 1))
        hit = self._prior_inv.get(key)
        if hit is not None:
            return hit
        if step == 0:
            P = np.array(self.instance.Pi0)
        else:
            inst = self.instance
            prev = self._prior_inverse(step - 1, mask)
            P = _propagate(prev, inst.information(step - 1, inst.step_rows(mask, step - 1)), inst.A_seq[step - 1], inst.W)
        P_inv = _inverse_spd(P)
        self._prior_inv[key] = P_inv
        return P_inv

    def _g(self, mask: int) -> float:
        ell = self.instance.horizon
        return _final_trace(self._prior_inverse(ell, mask), self.instance.information(ell, self.instance.step_rows(mask, ell)))

    def g(self, subset: Subset) -> float:
        return self._g(to_mask(subset))

    def _value(self, mask: int) -> float:
        return self._g_empty - self._g(mask)

    def clear_cache(self) -> None:
        super().clear_cache()
        self._prior_inv.clear()
