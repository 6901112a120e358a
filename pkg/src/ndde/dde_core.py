"""Explicit Euler method of steps for delay differential equations.

A field is evaluated as ``F(t, view)`` where ``view(s)`` returns the state
``y(t + s)`` for offsets ``s`` in ``[-tau, 0]``. On an aligned grid every
delayed lookup lands on a stored grid value, so the scheme

    y_{l+1} = y_l + delta * F(t_l, y_{t_l})

never interpolates. Fields of the special form
``a * g(y(t - tau)) + c * y(t) + b`` with ``g`` the identity or ``tanh``
carry a kernel description and are stepped by the compiled kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from ._io import csv_text
from .delay_lib import ALIGN_TOL, DelayFunctionSpec, constant_delay
from .errors import GridAlignmentError, NumericError, RangeError, ValidationError

GRID_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_l = t0 + l * delta`` for ``l = -R..L``."""

    delta: float
    L: int
    R: int
    t0: float = 0.0

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValidationError(f"step must be positive and finite, got {self.delta}")
        if self.L < 1:
            raise ValidationError(f"need at least one step, got L={self.L}")
        if self.R < 0:
            raise ValidationError(f"history length must be non-negative, got R={self.R}")

    @property
    def tau(self) -> float:
        return self.R * self.delta

    @property
    def T(self) -> float:
        return self.L * self.delta

    def time(self, l: int) -> float:
        return self.t0 + l * self.delta

    def times(self) -> np.ndarray:
        return np.array([self.time(l) for l in range(-self.R, self.L + 1)])


def make_grid(T: float, L: int, tau: float, t0: float = 0.0) -> TimeGrid:
    """Grid with ``delta = T / L``; ``tau`` must be an integer number of steps.

    The ratio ``tau * L / T`` is accepted when within ``1e-12`` (relative)
    of an integer and then snapped.
    """
    T, tau = float(T), float(tau)
    if not T > 0:
        raise ValidationError(f"horizon must be positive, got T={T}")
    if tau < 0:
        raise ValidationError(f"delay must be non-negative, got tau={tau}")
    L = int(L)
    if L < 1:
        raise ValidationError(f"need at least one step, got L={L}")
    ratio = tau * L / T
    R = round(ratio)
    if abs(ratio - R) > GRID_TOL * max(1.0, ratio):
        raise GridAlignmentError(
            f"tau={tau} is not a whole number of steps of size T/L={T / L} (ratio {ratio})"
        )
    return TimeGrid(delta=T / L, L=L, R=int(R), t0=float(t0))


class HistoryView:
    """Read access to ``y(t + s)`` for ``s`` in ``[-tau, 0]`` at a fixed grid time.

    ``rows[origin + k]`` holds ``y_k``. When ``clamp_history`` is set, indices
    below zero resolve to ``y_0`` (constant initial data), which lets a
    network that only stores ``h_0..h_l`` share this code path.
    """

    __slots__ = ("_rows", "_origin", "_current", "_delta", "_tau", "_clamp", "accessed")

    def __init__(self, rows, origin, current, delta, tau, clamp_history=False, record=False):
        self._rows = rows
        self._origin = origin
        self._current = current
        self._delta = delta
        self._tau = tau
        self._clamp = clamp_history
        self.accessed = [] if record else None

    @property
    def current(self) -> np.ndarray:
        return self._row(self._current)

    def index_of(self, s: float):
        """Grid index of ``t + s`` if it is a grid point, else ``None``."""
        x = s / self._delta
        k = round(x)
        if abs(x - k) <= ALIGN_TOL:
            return self._current + int(k)
        return None

    def _row(self, k):
        if self.accessed is not None:
            self.accessed.append(k)
        if k < 0 and self._clamp:
            k = 0
        i = self._origin + k
        if i < 0 or k > self._current:
            raise RangeError(f"history index {k} outside the stored range")
        return self._rows[i]

    def __call__(self, s: float) -> np.ndarray:
        s = float(s)
        delta = self._delta
        slack = ALIGN_TOL * delta
        if s > slack or s < -self._tau - slack:
            raise RangeError(f"offset {s} outside [-{self._tau}, 0]")
        x = s / delta
        j = round(x)
        if abs(x - j) <= ALIGN_TOL:
            k = self._current + int(j)
            if self.accessed is None and k >= 0:
                return self._rows[self._origin + k]
            return self._row(k)
        x = s / self._delta
        lo = math.floor(x)
        w = x - lo
        a = self._row(self._current + lo)
        b = self._row(self._current + lo + 1)
        return (1.0 - w) * a + w * b


@dataclass(frozen=True)
class KernelForm:
    """Coefficients of ``a * g(y(t - tau)) + c * y(t) + b`` (element-wise)."""

    a: np.ndarray
    c: np.ndarray
    b: np.ndarray
    use_tanh: bool


@dataclass(frozen=True)
class VectorFieldSpec:
    """Right-hand side ``F(t, y_t)`` with its declared constants.

    Parameters
    ----------
    rhs:
        Callable ``(t, view) -> array of shape (m,)``.
    m:
        State dimension.
    tau:
        Maximal delay; ``view`` covers ``[-tau, 0]``.
    K:
        Declared Lipschitz constant in the history argument (sup norm).
    A:
        Declared bound on ``||F(t, 0)||_inf``.
    delays:
        Delay functions used by ``rhs``; needed for the alignment table.
    name, params:
        Builder name and parameters, used for serialization.
    kernel:
        Optional element-wise description enabling the compiled stepper.
    """

    rhs: Callable[[float, HistoryView], np.ndarray]
    m: int
    tau: float
    K: float
    A: float
    delays: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)
    kernel: Optional[KernelForm] = None

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("state dimension must be positive")
        if not (self.tau >= 0 and self.K >= 0 and self.A >= 0):
            raise ValidationError(
                f"need tau, K, A >= 0, got tau={self.tau}, K={self.K}, A={self.A}"
            )

    def __call__(self, t, view):
        return self.rhs(t, view)


def _elementwise_rhs(a, c, b, use_tanh, tau):
    a = np.array(a, dtype=float)
    c = np.array(c, dtype=float)
    b = np.array(b, dtype=float)

    def rhs(t, view):
        lag = view(-tau)
        g = np.fromiter(map(math.tanh, lag), float, len(lag)) if use_tanh else lag
        return a * g + c * view.current + b

    return rhs


def elementwise_field(a, c, b, tau, use_tanh=False, name="elementwise", params=None):
    """Field ``a * g(y(t - tau)) + c * y(t) + b`` applied component-wise.

    ``g`` is ``tanh`` when ``use_tanh`` is set and the identity otherwise.
    Declared constants: ``K = max_i |a_i| + |c_i|`` and ``A = max_i |b_i|``.
    """
    a, c, b = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (a, c, b))
    a, c, b = np.broadcast_arrays(a, c, b)
    a, c, b = (np.ascontiguousarray(v, dtype=float) for v in (a, c, b))
    tau = float(tau)
    K = float(np.max(np.abs(a) + np.abs(c)))
    A = float(np.max(np.abs(b)))
    if params is None:
        params = {"a": a.tolist(), "c": c.tolist(), "b": b.tolist(), "tau": tau,
                  "use_tanh": bool(use_tanh)}
    return VectorFieldSpec(
        rhs=_elementwise_rhs(a, c, b, use_tanh, tau),
        m=len(a),
        tau=tau,
        K=K,
        A=A,
        delays=(constant_delay(tau),),
        name=name,
        params=params,
        kernel=KernelForm(a=a, c=c, b=b, use_tanh=bool(use_tanh)),
    )


def linear_delay_field(K0, tau, m=1):
    """Scalar-coefficient linear delay field ``K0 * y(t - tau)``."""
    K0 = np.full(m, float(K0)) if np.ndim(K0) == 0 else np.asarray(K0, dtype=float)
    return elementwise_field(K0, 0.0, 0.0, tau, name="linear_delay",
                             params={"K0": K0.tolist(), "tau": float(tau)})


def tanh_delay_field(a, tau, c=0.0, b=0.0):
    """Weakly nonlinear field ``a * tanh(y(t - tau)) + c * y(t) + b``."""
    return elementwise_field(a, c, b, tau, use_tanh=True, name="tanh_delay")


def zero_field(m=1, tau=0.0):
    return elementwise_field(np.zeros(m), 0.0, 0.0, tau, name="zero",
                             params={"m": int(m), "tau": float(tau)})


def multi_delay_field(fn, delays: Sequence[DelayFunctionSpec], m, tau, K=0.0, A=0.0,
                      name="multi_delay", params=None):
    """Field ``fn(t, y(t), y(t - tau_1(t)), ..., y(t - tau_J(t)))``."""
    delays = tuple(delays)

    def rhs(t, view):
        args = [view(-d(t)) for d in delays]
        return np.asarray(fn(t, view.current, *args), dtype=float)

    return VectorFieldSpec(rhs=rhs, m=int(m), tau=float(tau), K=float(K), A=float(A),
                           delays=delays, name=name, params=params or {})


@dataclass(frozen=True)
class Trajectory:
    """Grid solution; ``states[k + R]`` holds ``y_k`` for ``k = -R..L``."""

    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self):
        self.states.flags.writeable = False

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def state(self, l: int) -> np.ndarray:
        return self.states[l + self.grid.R]

    def forward_states(self) -> np.ndarray:
        """States ``y_0..y_L``."""
        return self.states[self.grid.R:]

    def to_csv(self) -> str:
        m = self.states.shape[1]
        header = ["t"] + [f"y{i + 1}" for i in range(m)]
        return csv_text(header, ([t, *row] for t, row in zip(self.times, self.states)))


def _history_rows(init, grid: TimeGrid, m: int) -> np.ndarray:
    R = grid.R
    if callable(init):
        rows = [np.asarray(init(k * grid.delta), dtype=float).reshape(-1) for k in range(-R, 1)]
        hist = np.array(rows, dtype=float)
    else:
        y0 = np.atleast_1d(np.asarray(init, dtype=float)).reshape(-1)
        hist = np.tile(y0, (R + 1, 1))
    if hist.shape[1] != m:
        raise ValidationError(f"initial data has dimension {hist.shape[1]}, field expects {m}")
    if not np.all(np.isfinite(hist)):
        raise NumericError("initial data is not finite")
    return hist


def _check_alignment(field_: VectorFieldSpec, grid: TimeGrid):
    if field_.tau == 0.0 and grid.R == 0:
        return
    ratio = field_.tau / grid.delta
    if abs(ratio - grid.R) > ALIGN_TOL * max(1.0, ratio):
        raise GridAlignmentError(
            f"field delay {field_.tau} differs from R*delta = {grid.R}*{grid.delta}"
        )


def euler_solve(field_: VectorFieldSpec, init, grid: TimeGrid, use_kernel=None) -> Trajectory:
    """Integrate ``y' = F(t, y_t)`` with the explicit Euler method of steps.

    Parameters
    ----------
    field_:
        The right-hand side.
    init:
        A constant vector ``y0`` or a callable ``s -> y(s)`` on ``[-tau, 0]``.
    grid:
        Time grid whose history length matches the field delay.
    use_kernel:
        ``None`` picks the stepping kernel when the field allows it; ``False``
        forces the generic evaluator.
    """
    _check_alignment(field_, grid)
    m, R, L, delta = field_.m, grid.R, grid.L, grid.delta
    states = np.empty((R + L + 1, m), dtype=float)
    states[: R + 1] = _history_rows(init, grid, m)

    if field_.kernel is not None and use_kernel is not False:
        k = field_.kernel
        failed = kernels.euler_elementwise(states, R, L, delta, k.a, k.c, k.b, k.use_tanh)
        if failed >= 0:
            raise NumericError(
                f"non-finite value at t={grid.time(failed)} (step {failed})",
                time=grid.time(failed), index=failed,
            )
        return Trajectory(grid, states)

    tau = field_.tau
    rhs = field_.rhs
    for l in range(L):
        t = grid.t0 + l * delta
        f = np.asarray(rhs(t, HistoryView(states, R, l, delta, tau)), dtype=float)
        nxt = states[R + l] + delta * f
        # a non-finite f always yields a non-finite nxt
        if not all(map(math.isfinite, nxt.tolist())):
            raise NumericError(f"non-finite value at t={t} (step {l})", time=t, index=l)
        states[R + l + 1] = nxt
    return Trajectory(grid, states)


def evaluate_delayed(traj: Trajectory, t: float, s: float) -> np.ndarray:
    """Piecewise-linear value of the trajectory at time ``t + s``."""
    grid = traj.grid
    x = (float(t) + float(s) - grid.t0) / grid.delta
    lo_k, hi_k = -grid.R, grid.L
    if x < lo_k - ALIGN_TOL or x > hi_k + ALIGN_TOL:
        raise RangeError(f"time {t + s} outside [{grid.time(lo_k)}, {grid.time(hi_k)}]")
    k = round(x)
    if abs(x - k) <= ALIGN_TOL:
        return traj.state(int(k)).copy()
    lo = math.floor(x)
    w = x - lo
    return (1.0 - w) * traj.state(lo) + w * traj.state(lo + 1)


@dataclass(frozen=True)
class GrowthReport:
    """Largest excess of the trajectory over the a priori bounds (<= 0 means held)."""

    max_violation_a: float
    max_violation_b: Optional[float] = None

    def holds(self, slack=1e-12) -> bool:
        ok = self.max_violation_a <= slack
        if self.max_violation_b is not None:
            ok = ok and self.max_violation_b <= slack
        return ok


def growth_bound_check(traj: Trajectory, field_: VectorFieldSpec, init_norm: float,
                       other: Optional[Trajectory] = None,
                       init_diff_norm: Optional[float] = None) -> GrowthReport:
    """Compare ``||y(t)||_inf`` with ``||u|| e^{Kt} + (A/K)(e^{Kt} - 1)``.

    With ``other`` (a second trajectory of the same field) and the sup
    distance of the two initial functions, the difference bound
    ``||y(t) - z(t)|| <= ||u - v|| e^{Kt}`` is checked as well. For
    ``K = 0`` the limits ``||u|| + A t`` and ``||u - v||`` are used.
    """
    K, A = field_.K, field_.A
    grid = traj.grid
    ys = traj.forward_states()
    t = np.arange(grid.L + 1) * grid.delta
    if K > 0:
        bound = init_norm * np.exp(K * t) + (A / K) * np.expm1(K * t)
    else:
        bound = init_norm + A * t
    norms = np.max(np.abs(ys), axis=1)
    viol_a = float(np.max(norms - bound))
    viol_b = None
    if other is not None:
        if init_diff_norm is None:
            raise ValidationError("the difference bound needs the initial distance")
        diff = np.max(np.abs(ys - other.forward_states()), axis=1)
        bound_b = init_diff_norm * (np.exp(K * t) if K > 0 else 1.0)
        viol_b = float(np.max(diff - bound_b))
    return GrowthReport(viol_a, viol_b)
