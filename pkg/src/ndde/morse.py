"""Critical points of scalar maps and the constants bounding the small-delay regime.

The ledger computed by :func:`separation_constants` gives an explicit delay
``tau0`` below which a non-augmented architecture with Lipschitz constant
``K`` cannot approximate a target near a non-degenerate local extremum.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .errors import NumericError, PreconditionError, ValidationError
from .small_delay import measure_attraction

GRAD_TOL = 1e-6
EIG_TOL = 1e-6


def normal_form_eval(psi_p: float, r: int, n: int, u) -> float:
    """``psi_p - sum_{j<r} u_j^2 + sum_{j>=r} u_j^2``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not 0 <= r <= n or u.shape != (n,):
        raise ValidationError(f"need 0 <= r <= n and u of length n, got r={r}, n={n}")
    return float(psi_p) - float(np.sum(u[:r] ** 2)) + float(np.sum(u[r:] ** 2))


@dataclass(frozen=True)
class CriticalPointReport:
    gradient_norm: float
    is_critical: bool
    eigenvalues: tuple
    hessian_eigen_signs: tuple
    index: int
    nondegenerate: bool
    r0: Optional[float] = None

    @property
    def kind(self) -> str:
        if not self.is_critical:
            return "not critical"
        if not self.nondegenerate:
            return "degenerate"
        n = len(self.eigenvalues)
        if self.index == 0:
            return "minimum"
        if self.index == n:
            return "maximum"
        return "saddle"


def classify_critical_point(psi, p, h: float = 1e-4, r0: Optional[float] = None) -> CriticalPointReport:
    """Classify ``p`` with central-difference derivatives of step ``h``.

    A point whose gradient exceeds ``1e-6 (1 + |psi(p)|)`` is reported as not
    critical rather than raising.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    n = p.size
    f0 = float(psi(p))
    E = np.eye(n) * h
    grad = np.array([(psi(p + E[i]) - psi(p - E[i])) / (2 * h) for i in range(n)], dtype=float)
    H = np.empty((n, n))
    for i in range(n):
        H[i, i] = (psi(p + E[i]) - 2 * f0 + psi(p - E[i])) / (h * h)
        for j in range(i + 1, n):
            v = (psi(p + E[i] + E[j]) - psi(p + E[i] - E[j])
                 - psi(p - E[i] + E[j]) + psi(p - E[i] - E[j])) / (4 * h * h)
            H[i, j] = H[j, i] = v
    eig = np.linalg.eigvalsh(H)
    gnorm = float(np.max(np.abs(grad))) if n else 0.0
    signs = tuple(int(np.sign(e)) if abs(e) > EIG_TOL else 0 for e in eig)
    return CriticalPointReport(
        gradient_norm=gnorm,
        is_critical=gnorm <= GRAD_TOL * (1.0 + abs(f0)),
        eigenvalues=tuple(float(e) for e in eig),
        hessian_eigen_signs=signs,
        index=int(sum(1 for e in eig if e < -EIG_TOL)),
        nondegenerate=bool(np.all(np.abs(eig) > EIG_TOL)),
        r0=r0,
    )


@dataclass(frozen=True)
class SeparationConstants:
    """All constants of the small-delay argument together with their inputs.

    ``tau0`` is the supremum of admissible delays; delays strictly below it
    satisfy every requirement. ``tau3`` and the ``T/beta`` term are infinite
    when their defining logarithm is not positive.
    """

    C1: float
    delta1: float
    delta2: float
    delta3: float
    delta_star: float
    kappa: float
    beta: float
    tau1: float
    tau3: float
    tau0: float
    binding: str
    inputs: dict = field(default_factory=dict)

    @property
    def smallness_product(self) -> float:
        return self.inputs["K"] * self.tau0 * math.e

    def to_dict(self) -> dict:
        d = asdict(self)
        d["smallness_product"] = self.smallness_product
        return d

    def to_json(self) -> str:
        def enc(v):
            return "inf" if isinstance(v, float) and math.isinf(v) else v

        d = {k: (enc(v) if not isinstance(v, dict) else {kk: enc(vv) for kk, vv in v.items()})
             for k, v in self.to_dict().items()}
        return json.dumps(d, indent=2, sort_keys=True)


def separation_constants(K, A, T, M, r0, r1, eps, w, w_tilde, C2) -> SeparationConstants:
    """Evaluate the constant ledger.

    ``delta_star`` is fixed at ``(r0^2 - 2 eps) / 2``. Then
    ``tau3 = T / ln(2 C2 / (r0^2 - 2 eps - delta_star))``,
    ``kappa = min(delta_star / (w_tilde e^{K e T}), r1)``,
    ``beta = ln(2 C2 / kappa)``, ``C1 = (K M + A) e^{K T}``,
    ``tau1 = kappa / (2 C1 beta)`` and
    ``tau0 = min(tau1, 1/(K e), T/beta, tau3)``.
    """
    vals = dict(K=K, A=A, T=T, M=M, r0=r0, r1=r1, eps=eps, w=w, w_tilde=w_tilde, C2=C2)
    vals = {k: float(v) for k, v in vals.items()}
    K, A, T, M, r0, r1, eps, w, w_tilde, C2 = (vals[k] for k in
                                               ("K", "A", "T", "M", "r0", "r1", "eps", "w",
                                                "w_tilde", "C2"))
    if not all(math.isfinite(v) for v in vals.values()):
        raise ValidationError("all inputs must be finite")
    if not K > 0:
        raise PreconditionError(f"K must be positive, got {K}")
    if not (T > 0 and r1 > 0 and w > 0 and w_tilde > 0 and A >= 0 and M >= 0 and eps >= 0):
        raise ValidationError("need T, r1, w, w_tilde > 0 and A, M, eps >= 0")
    if not 2.0 * eps < r0 * r0:
        raise PreconditionError(f"2*eps = {2 * eps} must be below r0^2 = {r0 * r0}")
    if C2 < r1 / 2.0:
        raise PreconditionError(f"C2 = {C2} must be at least r1/2 = {r1 / 2}")

    gap = r0 * r0 - 2.0 * eps
    delta_star = gap / 2.0
    log3 = math.log(2.0 * C2 / (gap - delta_star))
    tau3 = T / log3 if log3 > 0 else math.inf
    kappa = min(delta_star / (w_tilde * math.exp(K * math.e * T)), r1)
    beta = math.log(2.0 * C2 / kappa)
    C1 = (K * M + A) * math.exp(K * T)
    tau1 = kappa / (2.0 * C1 * beta) if beta > 0 and C1 > 0 else math.inf
    t_beta = T / beta if beta > 0 else math.inf
    terms = {"tau1": tau1, "1/(Ke)": 1.0 / (K * math.e), "T/beta": t_beta, "tau3": tau3}
    binding = min(terms, key=terms.get)
    tau0 = terms[binding]
    return SeparationConstants(
        C1=C1,
        delta1=C1 * beta * tau0,
        delta2=C2 * math.exp(-beta),
        delta3=C2 * math.exp(-T / tau0) if tau0 > 0 else 0.0,
        delta_star=delta_star,
        kappa=kappa,
        beta=beta,
        tau1=tau1,
        tau3=tau3,
        tau0=tau0,
        binding=binding,
        inputs=vals,
    )


def estimate_C2(K0: float, tau: float, r1: float, starts, T_long: float, L: int) -> float:
    """Attraction constant over sampled starting values, inflated by 1.5, floored at ``r1/2``."""
    worst = max(measure_attraction(K0, tau, y0, T_long, L).C_u_estimate for y0 in starts)
    return max(1.5 * worst, r1 / 2.0)


def rank_deficient_witness(W, p, r0: float, rel_tol: float = 1e-10):
    """Point ``s`` on the sphere of radius ``r0`` around ``p`` with ``W s = W p``.

    Returns ``None`` when ``W`` has full column rank.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    x = linalg.null_vector(W, rel_tol)
    if x is None:
        return None
    s = p + r0 * x / np.linalg.norm(x)
    scale = max(1.0, linalg.inf_norm(W) * max(1.0, float(np.max(np.abs(s)))))
    if np.max(np.abs(W @ s - W @ p)) > 1e-10 * scale:
        raise NumericError("kernel vector lost accuracy")
    return s
