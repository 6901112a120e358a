"""Small-delay analysis of the scalar linear delay equation ``y' = K0 y(t - tau)``.

Contents: real Lambert W branches, characteristic roots, the exact
piecewise-polynomial solution for constant initial data, special
(exponential) solutions, measurement of exponential attraction towards the
special solution, and the time-clamping extension of a field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dde_core import VectorFieldSpec, euler_solve, linear_delay_field, make_grid
from .errors import DomainError, PreconditionError, ValidationError

INV_E = math.exp(-1.0)
_EPS = np.finfo(float).eps
BOUNDARY_TOL = 1e-6
_MAX_ITER = 50


def _branch_point_series(x, sign):
    # expansion of W around -1/e in p = sqrt(2(e x + 1))
    p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
    p = sign * p
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3


def _initial_guess(branch, x):
    if branch == 0:
        if x < -0.25:
            return _branch_point_series(x, 1.0)
        if x < 1.5:
            # rational approximation accurate to a few percent on [-0.25, 1.5]
            return x * (1.0 + 4.0 / 3.0 * x) / (1.0 + 7.0 / 3.0 * x + 5.0 / 6.0 * x * x)
        lx = math.log(x)
        return lx - math.log(lx)
    if x < -0.25:
        return _branch_point_series(x, -1.0)
    l1 = math.log(-x)
    l2 = math.log(-l1)
    return l1 - l2 + l2 / l1


def lambert_w(branch: int, x: float) -> float:
    """Real Lambert W: the solution ``w`` of ``w * exp(w) = x``.

    ``branch=0`` is defined for ``x >= -1/e`` and returns ``w >= -1``;
    ``branch=-1`` is defined for ``-1/e <= x < 0`` and returns ``w <= -1``.
    Halley's iteration is started from a series near the branch point, a
    rational fit near zero, or the logarithmic asymptotics.
    """
    x = float(x)
    if branch not in (0, -1):
        raise DomainError(f"branch must be 0 or -1, got {branch}")
    if not math.isfinite(x):
        raise DomainError(f"argument must be finite, got {x}")
    if x < -INV_E:
        raise DomainError(f"x={x} is below -1/e")
    if branch == -1 and x >= 0.0:
        raise DomainError(f"branch -1 needs x < 0, got {x}")
    if x == -INV_E:
        return -1.0
    if branch == 0 and x == 0.0:
        return 0.0

    w = _initial_guess(branch, x)
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0 or not math.isfinite(denom):
            break
        step = f / denom
        w_new = w - step
        if abs(step) <= 4.0 * _EPS * (1.0 + abs(w_new)):
            w = w_new
            break
        w = w_new
    # rounding near the branch point can push the value across w = -1
    return max(w, -1.0) if branch == 0 else min(w, -1.0)


@dataclass(frozen=True)
class CharacteristicRoots:
    """Real roots of ``lambda = K0 exp(-lambda tau)``."""

    lambda1: float
    lambda2: Optional[float]
    K0: float
    tau: float

    @property
    def reliable(self) -> bool:
        """False within 1e-6 of ``K0 tau e = -1``, where the two branches collide."""
        return abs(self.K0 * self.tau * math.e + 1.0) > BOUNDARY_TOL

    def residuals(self):
        out = [abs(self.lambda1 - self.K0 * math.exp(-self.lambda1 * self.tau))]
        if self.lambda2 is not None:
            out.append(abs(self.lambda2 - self.K0 * math.exp(-self.lambda2 * self.tau)))
        return out


def characteristic_roots(K0: float, tau: float) -> CharacteristicRoots:
    """Roots ``W_0(K0 tau)/tau`` and, for ``-1/e <= K0 tau < 0``, ``W_{-1}(K0 tau)/tau``."""
    K0, tau = float(K0), float(tau)
    if not tau > 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    x = K0 * tau
    if x < -INV_E:
        raise DomainError(f"K0*tau={x} < -1/e: no real characteristic root")
    lam1 = lambert_w(0, x) / tau
    lam2 = lambert_w(-1, x) / tau if x < 0 else None
    return CharacteristicRoots(lam1, lam2, K0, tau)


def _antiderivative(coeffs):
    # coefficients in ascending powers; integral from 0
    return np.concatenate(([0.0], coeffs / np.arange(1, len(coeffs) + 1)))


def _horner(coeffs, s):
    acc = 0.0
    for c in coeffs[::-1]:
        acc = acc * s + c
    return acc


def closed_form_pieces(K0: float, tau: float, y0: float, n: int):
    """Polynomials ``p_1..p_n`` with ``y(t) = p_k(t - (k-1) tau)`` on ``[(k-1)tau, k tau]``.

    Obtained by the method of steps: ``p_k(s) = p_{k-1}(tau) + K0 * int_0^s p_{k-1}``,
    starting from the constant history ``p_0 = y0``.
    """
    pieces = []
    prev = np.array([float(y0)])
    for _ in range(n):
        start = _horner(prev, tau) if pieces else float(y0)
        cur = K0 * _antiderivative(prev)
        cur[0] = start
        pieces.append(cur)
        prev = cur
    return pieces


def linear_dde_closed_form(K0: float, tau: float, y0: float, t: float) -> float:
    """Exact solution of ``y' = K0 y(t - tau)`` with constant history ``y0``."""
    K0, tau, y0, t = float(K0), float(tau), float(y0), float(t)
    if not tau > 0:
        raise ValidationError(f"tau must be positive, got {tau}")
    if t < -tau:
        raise ValidationError(f"t={t} precedes the history interval")
    if t <= 0.0:
        return y0
    k = max(1, math.ceil(t / tau - 1e-12))
    piece = closed_form_pieces(K0, tau, y0, k)[-1]
    return _horner(piece, min(t - (k - 1) * tau, tau))


def linear_dde_series(K0: float, tau: float, y0: float, t: float) -> float:
    """Same solution from the explicit sum ``y0 * sum_{k=0}^{n} K0^k (t-(k-1)tau)^k / k!``.

    ``n`` is the index of the interval ``[(n-1)tau, n tau]`` containing ``t``.
    """
    if t <= 0.0:
        return float(y0)
    n = max(1, math.ceil(t / tau - 1e-12))
    return float(y0) * sum(
        K0 ** k * (t - (k - 1) * tau) ** k / math.factorial(k) for k in range(n + 1)
    )


def special_solution_linear(K0: float, tau: float, t0: float, y0: float, t: float) -> float:
    """Exponential solution ``y0 * exp(lambda1 (t - t0))``."""
    lam1 = characteristic_roots(K0, tau).lambda1
    return float(y0) * math.exp(lam1 * (float(t) - float(t0)))


def special_ode_field_linear(K0: float, tau: float) -> float:
    """Coefficient ``lambda1`` of the reduced ODE ``z' = lambda1 z`` on the special solutions."""
    return characteristic_roots(K0, tau).lambda1


def discrete_special_rate(K0: float, tau: float, delta: float) -> float:
    """Growth rate ``nu`` of the exponential solutions of the Euler recurrence.

    The recurrence ``y_{l+1} = y_l + delta K0 y_{l-R}`` has solutions
    ``exp(nu * t_l)`` when ``expm1(nu delta)/delta = K0 exp(-nu tau)``. The
    root continuing ``lambda1`` as ``delta -> 0`` is found by Newton's method.
    """
    nu = characteristic_roots(K0, tau).lambda1
    for _ in range(_MAX_ITER):
        g = math.expm1(nu * delta) / delta - K0 * math.exp(-nu * tau)
        dg = math.exp(nu * delta) + K0 * tau * math.exp(-nu * tau)
        step = g / dg
        nu -= step
        if abs(step) <= 4.0 * _EPS * (1.0 + abs(nu)):
            break
    return nu


@dataclass(frozen=True)
class SmallnessReport:
    ok: bool
    margin: float
    # False when K tau e lies within 1e-6 of 1
    reliable: bool = True


def smallness_check(K: float, tau: float) -> SmallnessReport:
    """Whether the memory capacity satisfies ``K tau e < 1``."""
    if K < 0 or tau < 0:
        raise ValidationError("K and tau must be non-negative")
    product = K * tau * math.e
    return SmallnessReport(ok=product < 1.0, margin=1.0 - product,
                           reliable=abs(1.0 - product) > BOUNDARY_TOL)


@dataclass(frozen=True)
class AttractionReport:
    """Distance between a solution and the special solution it converges to.

    ``ybar0`` is the value at ``t = 0`` of the special solution of the
    discretized equation that the computed trajectory approaches;
    ``discrete_rate`` is its exponent. ``envelope`` is ``exp(t/tau) * gap``.
    """

    C_u_estimate: float
    fitted_rate: float
    rate_reliable: bool
    ybar0: float
    ybar0_reliable: bool
    ybar0_relative_change: float
    discrete_rate: float
    lambda1: float
    lambda2: Optional[float]
    envelope_ratio: float
    times: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    ybar: np.ndarray = field(repr=False)
    gap: np.ndarray = field(repr=False)
    envelope: np.ndarray = field(repr=False)

    def rows(self):
        return zip(self.times, self.y, self.ybar, self.gap, self.envelope)


def measure_attraction(K0: float, tau: float, y0: float, T_long: float, L: int,
                       init="constant", gap_floor: float = 1e-13) -> AttractionReport:
    """Integrate ``y' = K0 y(t - tau)`` and measure convergence to a special solution.

    Parameters
    ----------
    init:
        ``"constant"`` for the history ``y0``, ``"special"`` for the history
        sampled from the exponential special solution through ``y0``, or a
        callable on ``[-tau, 0]``.
    """
    K0, tau, y0, T_long = float(K0), float(tau), float(y0), float(T_long)
    if not tau > 0:
        raise ValidationError("tau must be positive")
    if not abs(K0) * tau * math.e < 1.0:
        raise PreconditionError(f"|K0| tau e = {abs(K0) * tau * math.e} is not below 1")
    grid = make_grid(T_long, L, tau)
    roots = characteristic_roots(K0, tau)
    nu = discrete_special_rate(K0, tau, grid.delta)

    if init == "constant":
        history = y0
    elif init == "special":
        history = lambda s: y0 * math.exp(nu * s)  # noqa: E731
    elif callable(init):
        history = init
    else:
        raise ValidationError(f"unknown init {init!r}")
    traj = euler_solve(linear_delay_field(K0, tau), history, grid)

    ys = traj.forward_states()[:, 0]
    t = np.arange(grid.L + 1) * grid.delta
    ybar0 = ys[-1] * math.exp(-nu * t[-1])
    half = grid.L // 2
    ybar0_half = ys[half] * math.exp(-nu * t[half])
    rel = abs(ybar0 - ybar0_half) / max(abs(ybar0), np.finfo(float).tiny)
    ybar = ybar0 * np.exp(nu * t)
    gap = np.abs(ys - ybar)
    envelope = np.exp(t / tau) * gap

    mask = (t >= T_long / 2) & (gap > gap_floor)
    if np.count_nonzero(mask) >= 2:
        fitted = float(np.polyfit(t[mask], np.log(gap[mask]), 1)[0])
        reliable = True
    else:
        fitted, reliable = float("nan"), False

    early = t <= 2 * tau
    early_max = float(np.max(envelope[early]))
    late_max = float(np.max(envelope[~early])) if np.any(~early) else 0.0
    ratio = late_max / early_max if early_max > 0 else (0.0 if late_max == 0 else math.inf)

    return AttractionReport(
        C_u_estimate=float(np.max(envelope)),
        fitted_rate=fitted,
        rate_reliable=reliable,
        ybar0=float(ybar0),
        ybar0_reliable=bool(rel < 1e-6),
        ybar0_relative_change=float(rel),
        discrete_rate=nu,
        lambda1=roots.lambda1,
        lambda2=roots.lambda2,
        envelope_ratio=ratio,
        times=t,
        y=ys,
        ybar=ybar,
        gap=gap,
        envelope=envelope,
    )


def extend_field_weakly_nonlinear(field_: VectorFieldSpec, T: float) -> VectorFieldSpec:
    """Extend a field given on ``[0, T]`` to all times by freezing ``t`` at the ends."""
    T = float(T)
    inner = field_.rhs

    def rhs(t, view):
        return inner(min(max(t, 0.0), T), view)

    return VectorFieldSpec(
        rhs=rhs, m=field_.m, tau=field_.tau, K=field_.K, A=field_.A, delays=field_.delays,
        name=field_.name, params=dict(field_.params), kernel=field_.kernel,
    )
