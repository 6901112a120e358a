"""Delay functions, the smooth bump function and grid-alignment tables.

Three delay families are supported on a grid with step ``delta`` and maximal
delay ``tau = R * delta``:

* kind ``"A"``: the constant delay ``j * delta``;
* kind ``"B"``: ``bump(t) * j * delta``, switching on over ``[(j-1)δ, jδ]``;
* kind ``"C"``: a delay that freezes the delayed argument at ``y_j`` for a
  while and then follows ``t - tau`` (needs ``R >= 3``).

A ``"custom"`` kind wraps any callable, for example the constant delay of a
fixed-lag field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._io import csv_text
from .errors import ConstructionError, DomainError, GridAlignmentError

ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class BumpSpec:
    """Smooth monotone transition from 0 (``t <= r1``) to 1 (``t >= r2``)."""

    r1: float
    r2: float

    def __post_init__(self):
        if not (math.isfinite(self.r1) and math.isfinite(self.r2)) or self.r1 >= self.r2:
            raise ConstructionError(f"bump needs r1 < r2, got r1={self.r1}, r2={self.r2}")

    def __call__(self, t):
        return bump_eval(self, t)


def _flat(x):
    return math.exp(-1.0 / x) if x > 0.0 else 0.0


def _unit_bump(x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    e0 = _flat(x)
    return e0 / (e0 + _flat(1.0 - x))


def bump_eval(spec: BumpSpec, t: float) -> float:
    return _unit_bump((float(t) - spec.r1) / (spec.r2 - spec.r1))


@dataclass(frozen=True)
class DelayFunctionSpec:
    """One delay function ``t -> tau_j(t)`` on ``[0, T]``.

    For kinds A, B and C the step ``delta`` and the maximal delay ``tau``
    must be grid-aligned (``tau = R * delta``). For ``"custom"`` only
    ``func`` and ``tau`` are used.
    """

    kind: str
    j: int = 0
    delta: float = 0.0
    tau: float = 0.0
    T: float = math.inf
    func: Optional[Callable[[float], float]] = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("A", "B", "C", "custom"):
            raise ConstructionError(f"unknown delay kind {self.kind!r}")
        if self.tau < 0:
            raise ConstructionError("maximal delay must be non-negative")
        if self.kind == "custom":
            if self.func is None:
                raise ConstructionError("custom delay needs a callable")
            return
        if not self.delta > 0:
            raise ConstructionError("grid step must be positive")
        R = self.R
        if self.kind in ("A", "B") and not 1 <= self.j <= R:
            raise DomainError(f"kind {self.kind} needs 1 <= j <= R={R}, got j={self.j}")
        if self.kind == "C":
            if R < 3:
                raise ConstructionError(f"kind C needs R >= 3, got R={R}")
            L = self.T / self.delta if math.isfinite(self.T) else math.inf
            if not 0 <= self.j <= L - 1 + ALIGN_TOL:
                raise DomainError(f"kind C needs 0 <= j <= L-1, got j={self.j}")

    @property
    def R(self) -> int:
        ratio = self.tau / self.delta
        R = round(ratio)
        if abs(ratio - R) > ALIGN_TOL * max(1.0, abs(ratio)):
            raise GridAlignmentError(f"tau={self.tau} is not a multiple of delta={self.delta}")
        return int(R)

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "custom":
            return "custom"
        return f"{self.kind}{self.j}"

    def __call__(self, t):
        return delay_eval(self, t)


def constant_delay(tau: float, label: str = "") -> DelayFunctionSpec:
    """The fixed lag ``t -> tau`` as a custom delay."""
    tau = float(tau)
    return DelayFunctionSpec(kind="custom", tau=tau, func=lambda t: tau, label=label or "const")


def delay_eval(spec: DelayFunctionSpec, t: float) -> float:
    t = float(t)
    if spec.kind == "custom":
        return float(spec.func(t))
    if t < -ALIGN_TOL or t > spec.T + ALIGN_TOL * max(1.0, spec.T):
        raise DomainError(f"t={t} outside [0, {spec.T}]")
    d, j, tau = spec.delta, spec.j, spec.tau
    if spec.kind == "A":
        return j * d
    if spec.kind == "B":
        return bump_eval(BumpSpec((j - 1) * d, j * d), t) * (j * d)
    # kind C
    if t <= (j + 1) * d:
        return bump_eval(BumpSpec(j * d, (j + 1) * d), t) * (t - j * d)
    ramp = bump_eval(BumpSpec((j - 1) * d + tau, j * d + tau), t)
    return (1.0 - ramp) * (t - j * d - tau) + tau


@dataclass(frozen=True)
class AlignmentTable:
    """Integer delayed-grid indices ``alpha[l, j]`` for layers ``l = 0..L-1``.

    ``causal[l, j]`` is true when the delayed time ``t_l - tau_j(t_l)`` is
    not before the start time, i.e. the lookup does not reach into the
    initial history.
    """

    alpha: np.ndarray
    names: tuple

    @property
    def causal(self) -> np.ndarray:
        return self.alpha >= 0

    def resolved(self) -> np.ndarray:
        """Indices after substituting history values by the start value."""
        return np.maximum(self.alpha, 0)

    def to_csv(self) -> str:
        header = ["l"] + list(self.names)
        rows = [[str(l)] + [str(int(v)) for v in self.alpha[l]] for l in range(self.alpha.shape[0])]
        return csv_text(header, rows)


def grid_alignment_table(specs: Sequence[DelayFunctionSpec], grid) -> AlignmentTable:
    """Compute ``(t_l - tau_j(t_l)) / delta`` for every layer and delay.

    Raises :class:`GridAlignmentError` listing every ``(j, l)`` whose ratio
    is not within ``1e-9`` of an integer.
    """
    specs = list(specs)
    L, delta = grid.L, grid.delta
    alpha = np.zeros((L, len(specs)), dtype=np.int64)
    bad = []
    for l in range(L):
        t = l * delta
        for jj, spec in enumerate(specs):
            ratio = (t - delay_eval(spec, t)) / delta
            k = round(ratio)
            if abs(ratio - k) > ALIGN_TOL:
                bad.append((jj, l))
            alpha[l, jj] = k
    if bad:
        listing = ", ".join(f"(j={j}, l={l})" for j, l in bad[:20])
        more = "" if len(bad) <= 20 else f" and {len(bad) - 20} more"
        raise GridAlignmentError(f"delayed times off the grid at {listing}{more}")
    return AlignmentTable(alpha=alpha, names=tuple(s.name for s in specs))
