"""Vector fields whose time-T map reproduces a prescribed Lipschitz map exactly.

Three constructions are provided:

* :func:`embed_basic_tauT` uses ``tau = T`` and identity affine maps; the
  delayed argument stays in the constant history, so the solution is linear
  in time and ends at ``Psi(x)``.
* :func:`embed_nonaugmented` works for any ``tau`` in ``(0, T]`` provided
  the memory capacity satisfies ``K tau >= 2 (1 + K_psi / (w w_tilde))``.
* :func:`embed_augmented` uses ``m >= n + q`` extra dimensions and no delay
  at all; it needs ``K T >= K_psi / (w w_tilde)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._io import make_rng
from .dde_core import HistoryView, VectorFieldSpec
from .delay_lib import constant_delay
from .errors import ConstructionError, DomainError, RegionError, ValidationError
from .neural_dde import AffineMap, NeuralDDESpec


@dataclass(frozen=True)
class TargetMap:
    """A map ``R^n -> R^q`` on the open box ``(lo, hi)`` with Lipschitz constant ``K_psi``.

    The constant refers to the sup norm on both sides.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    n: int
    q: int
    K_psi: float
    lo: np.ndarray = field(default=None)
    hi: np.ndarray = field(default=None)
    name: str = "custom"

    def __post_init__(self):
        lo = np.full(self.n, -np.inf) if self.lo is None else np.broadcast_to(
            np.asarray(self.lo, float), (self.n,)).copy()
        hi = np.full(self.n, np.inf) if self.hi is None else np.broadcast_to(
            np.asarray(self.hi, float), (self.n,)).copy()
        if np.any(lo >= hi):
            raise ValidationError("empty domain box")
        if not self.K_psi >= 0:
            raise ValidationError("Lipschitz constant must be non-negative")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        # plain floats keep the per-call domain check cheap
        object.__setattr__(self, "_bounds", tuple(zip(lo.tolist(), hi.tolist())))

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, float))
        if x.shape != (self.n,):
            return False
        return all(lo < v < hi for v, (lo, hi) in zip(x.tolist(), self._bounds))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            x = np.atleast_1d(x)
            if x.shape != (self.n,):
                raise ValidationError(f"expected input of length {self.n}, got shape {x.shape}")
        if not all(lo < v < hi for v, (lo, hi) in zip(x.tolist(), self._bounds)):
            raise DomainError(f"{self.name}: input {x.tolist()} outside the domain box")
        return np.atleast_1d(np.asarray(self.fn(x), dtype=float))

    def sample(self, count: int, rng=None) -> np.ndarray:
        """Points inside the domain; a regular grid in one dimension, random otherwise."""
        lo = np.where(np.isfinite(self.lo), self.lo, -1.0)
        hi = np.where(np.isfinite(self.hi), self.hi, 1.0)
        if self.n == 1:
            return np.linspace(lo[0], hi[0], count + 2)[1:-1, None]
        rng = make_rng(0) if rng is None else rng
        u = rng.uniform(0.02, 0.98, size=(count, self.n))
        return lo + u * (hi - lo)


def estimate_lipschitz(fn, lo, hi, rng=None, pairs: int = 10_000, inflate: float = 1.1) -> float:
    """Largest sup-norm difference quotient over random pairs, times ``inflate``."""
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    rng = make_rng(0) if rng is None else rng
    x = lo + rng.uniform(size=(pairs, lo.size)) * (hi - lo)
    y = lo + rng.uniform(size=(pairs, lo.size)) * (hi - lo)
    best = 0.0
    for a, b in zip(x, y):
        d = np.max(np.abs(a - b))
        if d > 0:
            diff = np.max(np.abs(np.atleast_1d(fn(a)) - np.atleast_1d(fn(b))))
            best = max(best, float(diff / d))
    return inflate * best


def _target_neg(n=1):
    return TargetMap(lambda x: -x, n, n, 1.0, -3.0, 3.0, name="neg")


def _target_affine(a, b):
    return TargetMap(lambda x: a * x + b, 1, 1, abs(a), -3.0, 3.0, name=f"affine({a!r},{b!r})")


def _target_square():
    return TargetMap(lambda x: x * x, 1, 1, 4.0, 0.0, 2.0, name="square")


def _target_sin():
    return TargetMap(np.sin, 1, 1, 1.0, -3.0, 3.0, name="sin")


def _target_quadmin(p):
    p = np.atleast_1d(np.asarray(p, float))
    n = p.size
    # on the box p +- 1 the gradient 2(x - p) has l1 norm below 2n
    return TargetMap(lambda x: np.array([np.sum((x - p) ** 2)]), n, 1, 2.0 * n, p - 1.0, p + 1.0,
                     name="quadmin(" + ",".join(repr(float(v)) for v in p) + ")")


_TARGET_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def parse_target(text: str) -> TargetMap:
    """Named targets: ``neg``, ``affine(a,b)``, ``square``, ``sin``, ``quadmin(p1,...)``."""
    m = _TARGET_RE.match(text)
    if not m:
        raise ValidationError(f"cannot parse target {text!r}")
    name, args = m.group(1), m.group(2)
    try:
        vals = [float(v) for v in args.split(",")] if args and args.strip() else []
    except ValueError:
        raise ValidationError(f"non-numeric argument in target {text!r}") from None
    if name == "neg" and not vals:
        return _target_neg()
    if name == "affine" and len(vals) == 2:
        return _target_affine(*vals)
    if name == "square" and not vals:
        return _target_square()
    if name == "sin" and not vals:
        return _target_sin()
    if name == "quadmin" and vals:
        return _target_quadmin(vals)
    raise ValidationError(f"unknown target or wrong arguments: {text!r}")


def _check_target(psi: TargetMap):
    if not isinstance(psi, TargetMap):
        raise ValidationError("target must be a TargetMap")


def embed_basic_tauT(psi: TargetMap, T: float = 1.0) -> NeuralDDESpec:
    """Field ``(Psi(y(t-T)) - y(t-T)) / T`` with ``tau = T`` and identity maps.

    The solution is ``x + (t / T) (Psi(x) - x)``, so ``Phi = Psi``.
    """
    _check_target(psi)
    if psi.n != psi.q:
        raise ValidationError(f"this construction needs n = q, got n={psi.n}, q={psi.q}")
    T = float(T)
    if not T > 0:
        raise ValidationError("T must be positive")
    n = psi.n

    last = [None, None]

    def rhs(t, view):
        d = view(-T)
        key = d.tobytes()
        # the delayed argument repeats across steps for constant initial data
        if key != last[0]:
            last[0], last[1] = key, psi(d)
        return (last[1] - d) / T

    zero_in = psi.contains(np.zeros(n))
    A = float(np.max(np.abs(psi(np.zeros(n))))) / T if zero_in else math.inf
    fld = VectorFieldSpec(rhs=rhs, m=n, tau=T, K=(psi.K_psi + 1.0) / T, A=A,
                          delays=(constant_delay(T),), name="embed_basic",
                          params={"target": psi.name, "T": T})
    ident = AffineMap.identity(n)
    return NeuralDDESpec(ident, fld, T, T, ident)


def required_capacity(K_psi, w, w_tilde) -> float:
    """Smallest ``K * tau`` admitted by the non-augmented construction."""
    return 2.0 * (1.0 + K_psi / (w * w_tilde))


def embed_nonaugmented(psi: TargetMap, tau: float, K: float, w: float = 1.0,
                       w_tilde: float = 1.0, n: Optional[int] = None, q: Optional[int] = None,
                       T: Optional[float] = None, m: Optional[int] = None) -> NeuralDDESpec:
    """Non-augmented construction with delay ``tau`` and Lipschitz budget ``K``.

    With ``W = w Id``, ``W_tilde = w_tilde Id`` and the prefactor
    ``2 (tau - t) / tau^2`` on ``[0, tau]`` the solution is
    ``W x + ((1/w_tilde) Psi(x) - W x) t (2 tau - t) / tau^2``, which reaches
    ``(1/w_tilde) Psi(x)`` at ``t = tau`` and then stays there. For ``t < 0``
    the field uses the prefactor at ``t = 0``; for ``t > tau`` it vanishes.
    A width ``m`` above ``max(n, q)`` pads with trailing zero rows and columns.
    """
    _check_target(psi)
    n = psi.n if n is None else int(n)
    q = psi.q if q is None else int(q)
    if (n, q) != (psi.n, psi.q):
        raise ValidationError(f"target maps R^{psi.n} -> R^{psi.q}, not R^{n} -> R^{q}")
    tau = float(tau)
    T = tau if T is None else float(T)
    if not tau > 0:
        raise DomainError("this construction needs a positive delay")
    if tau > T:
        raise ValidationError(f"need tau <= T, got tau={tau}, T={T}")
    if not (w > 0 and w_tilde > 0 and K >= 0):
        raise ValidationError("w, w_tilde must be positive and K non-negative")
    m = max(n, q) if m is None else int(m)
    if m < max(n, q):
        raise ValidationError(f"width m={m} below max(n, q)={max(n, q)}")
    need = required_capacity(psi.K_psi, w, w_tilde)
    if K * tau < need:
        raise RegionError(f"K*tau = {K * tau} is below the required {need}")

    inv_tau_sq = 1.0 / (tau * tau)

    def rhs(t, view):
        d = view(-tau)
        if t > tau:
            return np.zeros(m)
        pref = 2.0 * (tau - max(t, 0.0)) * inv_tau_sq
        target = np.zeros(m)
        target[:q] = psi(d[:n] / w) / w_tilde
        return pref * (target - d)

    fld = VectorFieldSpec(rhs=rhs, m=m, tau=tau, K=float(K), A=math.inf,
                          delays=(constant_delay(tau),), name="embed_nonaugmented",
                          params={"target": psi.name, "tau": tau, "K": float(K), "w": float(w),
                                  "w_tilde": float(w_tilde), "T": T, "m": m})
    return NeuralDDESpec(AffineMap.scaled_identity(m, n, w), fld, tau, T,
                         AffineMap.scaled_identity(q, m, w_tilde))


def embed_augmented(psi: TargetMap, tau: float, K: float, w: float = 1.0,
                    w_tilde: float = 1.0, n: Optional[int] = None, q: Optional[int] = None,
                    m: Optional[int] = None, T: float = 1.0) -> NeuralDDESpec:
    """Augmented construction: an ODE that writes ``Psi(x)`` into spare coordinates.

    Components ``n..n+q-1`` grow with constant speed ``Psi(y_{0..n-1} / w) / (w_tilde T)``
    while every other component stays fixed; the output map reads that block.
    The delay ``tau`` is carried along but never used.
    """
    _check_target(psi)
    n = psi.n if n is None else int(n)
    q = psi.q if q is None else int(q)
    if (n, q) != (psi.n, psi.q):
        raise ValidationError(f"target maps R^{psi.n} -> R^{psi.q}, not R^{n} -> R^{q}")
    m = n + q if m is None else int(m)
    if m < n + q:
        raise ValidationError(f"width m={m} below n + q = {n + q}")
    tau, T = float(tau), float(T)
    if not 0 <= tau <= T or not T > 0:
        raise ValidationError(f"need 0 <= tau <= T and T > 0, got tau={tau}, T={T}")
    if not (w > 0 and w_tilde > 0 and K >= 0):
        raise ValidationError("w, w_tilde must be positive and K non-negative")
    need = psi.K_psi / (w * w_tilde)
    if K * T < need:
        raise RegionError(f"K*T = {K * T} is below the required {need}")

    scale = w_tilde * T

    def rhs(t, view):
        y = view.current
        out = np.zeros(m)
        out[n:n + q] = psi(y[:n] / w) / scale
        return out

    fld = VectorFieldSpec(rhs=rhs, m=m, tau=tau, K=float(K), A=math.inf, delays=(),
                          name="embed_augmented",
                          params={"target": psi.name, "tau": tau, "K": float(K), "w": float(w),
                                  "w_tilde": float(w_tilde), "T": T, "m": m})
    W_out = np.zeros((q, m))
    W_out[:, n:n + q] = w_tilde * np.eye(q)
    return NeuralDDESpec(AffineMap.scaled_identity(m, n, w), fld, tau, T,
                         AffineMap(W_out, np.zeros(q)))


def rebuild(name: str, params: dict) -> NeuralDDESpec:
    """Recreate an embedding architecture from its serialized parameters."""
    psi = parse_target(params["target"])
    if name == "embed_basic":
        return embed_basic_tauT(psi, params["T"])
    if name == "embed_nonaugmented":
        return embed_nonaugmented(psi, params["tau"], params["K"], params["w"],
                                  params["w_tilde"], T=params["T"], m=params["m"])
    if name == "embed_augmented":
        return embed_augmented(psi, params["tau"], params["K"], params["w"], params["w_tilde"],
                               m=params["m"], T=params["T"])
    raise ConstructionError(f"unknown construction {name!r}")


def nonaugmented_solution(psi: TargetMap, x, t, tau, w=1.0, w_tilde=1.0, m=None):
    """Exact trajectory of :func:`embed_nonaugmented` at time ``t``."""
    x = np.atleast_1d(np.asarray(x, float))
    n, q = psi.n, psi.q
    m = max(n, q) if m is None else m
    start = np.zeros(m)
    start[:n] = w * x
    target = np.zeros(m)
    target[:q] = psi(x) / w_tilde
    s = min(max(t, 0.0), tau)
    return start + (target - start) * s * (2 * tau - s) / (tau * tau)


def field_lipschitz_quotients(spec: NeuralDDESpec, pairs: int, rng=None, box=None) -> np.ndarray:
    """Difference quotients of the field over random pairs of constant histories.

    Histories are drawn so that their mapped-back points stay in the target
    domain; times are uniform on ``[0, tau]``.
    """
    rng = make_rng(0) if rng is None else rng
    fld = spec.field
    m, tau = fld.m, fld.tau
    lo, hi = (-1.0, 1.0) if box is None else box
    out = np.empty(pairs)
    for i in range(pairs):
        y = rng.uniform(lo, hi, m)
        z = rng.uniform(lo, hi, m)
        t = rng.uniform(0.0, tau) if tau > 0 else 0.0
        R = 1 if tau > 0 else 0
        delta = tau if tau > 0 else 1.0
        fy = fld.rhs(t, HistoryView(np.tile(y, (R + 1, 1)), R, 0, delta, tau))
        fz = fld.rhs(t, HistoryView(np.tile(z, (R + 1, 1)), R, 0, delta, tau))
        out[i] = np.max(np.abs(fy - fz)) / np.max(np.abs(y - z))
    return out
