"""Neural DDE architecture: affine input map, DDE time-T map, affine output map.

``Phi(x) = W_out @ y(T) + b_out`` where ``y`` solves the DDE with constant
initial data ``W_in @ x + b_in``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .dde_core import (
    HistoryView,
    Trajectory,
    VectorFieldSpec,
    elementwise_field,
    euler_solve,
    linear_delay_field,
    make_grid,
    tanh_delay_field,
    zero_field,
)
from .errors import ConfigurationError, ValidationError


@dataclass(frozen=True)
class AffineMap:
    """``x -> W @ x + b``."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if b.shape != (W.shape[0],):
            raise ValidationError(f"bias shape {b.shape} does not match W {W.shape}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n), np.zeros(n))

    @classmethod
    def scaled_identity(cls, rows, cols, scale=1.0):
        """``scale`` times the rectangular identity (ones on the main diagonal)."""
        return cls(scale * np.eye(rows, cols), np.zeros(rows))

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def norm_inf(self) -> float:
        return linalg.inf_norm(self.W)

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.W @ x + self.b


@dataclass(frozen=True)
class NeuralDDESpec:
    lambda_in: AffineMap
    field: VectorFieldSpec
    tau: float
    T: float
    lambda_out: AffineMap

    def __post_init__(self):
        if not 0 <= self.tau <= self.T:
            raise ValidationError(f"need 0 <= tau <= T, got tau={self.tau}, T={self.T}")
        if self.lambda_in.out_dim != self.field.m or self.lambda_out.in_dim != self.field.m:
            raise ValidationError(
                f"width mismatch: input map gives {self.lambda_in.out_dim}, field has "
                f"{self.field.m}, output map takes {self.lambda_out.in_dim}"
            )
        if not math.isclose(self.field.tau, self.tau, rel_tol=1e-12, abs_tol=1e-15):
            raise ValidationError(f"field delay {self.field.tau} differs from tau={self.tau}")

    @property
    def n(self) -> int:
        return self.lambda_in.in_dim

    @property
    def m(self) -> int:
        return self.field.m

    @property
    def q(self) -> int:
        return self.lambda_out.out_dim


def ndde_trajectory(spec: NeuralDDESpec, x, L: int, use_kernel=None) -> Trajectory:
    grid = make_grid(spec.T, L, spec.tau)
    return euler_solve(spec.field, spec.lambda_in(x), grid, use_kernel=use_kernel)


def ndde_forward(spec: NeuralDDESpec, x, L: int, use_kernel=None) -> np.ndarray:
    """Evaluate ``Phi(x)`` with ``L`` Euler steps."""
    return spec.lambda_out(ndde_trajectory(spec, x, L, use_kernel).final)


def classify_architecture(n: int, m: int, q: int) -> str:
    if min(n, m, q) < 1:
        raise ValidationError("dimensions must be positive")
    return "augmented" if m > max(n, q) else "non-augmented"


def in_full_rank_set(W, W_tilde, rel_tol=1e-10) -> bool:
    """True when both weight matrices have full rank under the pivot tolerance."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    Wt = np.atleast_2d(np.asarray(W_tilde, dtype=float))
    return (linalg.rank(W, rel_tol) == min(W.shape)
            and linalg.rank(Wt, rel_tol) == min(Wt.shape))


@dataclass(frozen=True)
class GapReport:
    theory_bound: float
    empirical_max: float
    slack: float
    observed_field_gap: float
    delta_sup: float

    @property
    def within_bound(self) -> bool:
        return self.empirical_max <= self.theory_bound + self.slack

    @property
    def field_gap_consistent(self) -> bool:
        """The supplied field distance was not exceeded along visited states."""
        return self.observed_field_gap <= self.delta_sup * (1 + 1e-12) + 1e-15


def _same_affine(a: AffineMap, b: AffineMap) -> bool:
    return np.array_equal(a.W, b.W) and np.array_equal(a.b, b.b)


def parameterized_gap_bound(phi_general: NeuralDDESpec, phi_perturbed: NeuralDDESpec,
                            delta_sup: float, samples: Sequence, L: int,
                            slack_coeff: float = 10.0) -> GapReport:
    """Compare two architectures that differ only in their vector field.

    The output distance is bounded by ``||W_out||_inf * T * delta_sup`` when
    the fields differ by at most ``delta_sup`` in sup norm. Along each
    trajectory of ``phi_general`` the field distance is measured as well;
    this checks the hypothesis on visited states only.
    """
    a, b = phi_general, phi_perturbed
    if not (_same_affine(a.lambda_in, b.lambda_in) and _same_affine(a.lambda_out, b.lambda_out)
            and a.tau == b.tau and a.T == b.T and a.field.m == b.field.m):
        raise ConfigurationError("architectures must share both affine maps, tau and T")
    grid = make_grid(a.T, L, a.tau)
    bound = a.lambda_out.norm_inf() * a.T * float(delta_sup)
    emp = 0.0
    field_gap = 0.0
    for x in samples:
        ta = euler_solve(a.field, a.lambda_in(x), grid)
        tb = euler_solve(b.field, b.lambda_in(x), grid)
        emp = max(emp, float(np.max(np.abs(a.lambda_out(ta.final) - b.lambda_out(tb.final)))))
        for l in range(grid.L):
            view = HistoryView(ta.states, grid.R, l, grid.delta, a.tau)
            t = grid.time(l)
            d = np.asarray(a.field.rhs(t, view)) - np.asarray(b.field.rhs(t, view))
            field_gap = max(field_gap, float(np.max(np.abs(d))))
    return GapReport(bound, emp, slack_coeff * grid.delta, field_gap, float(delta_sup))


# --- serialization -------------------------------------------------------

def _build_field(name: str, params: dict, spec: dict) -> VectorFieldSpec:
    if name == "zero":
        return zero_field(params["m"], params["tau"])
    if name == "linear_delay":
        return linear_delay_field(np.asarray(params["K0"]), params["tau"], len(params["K0"]))
    if name in ("tanh_delay", "elementwise"):
        return elementwise_field(params["a"], params["c"], params["b"], params["tau"],
                                 use_tanh=params.get("use_tanh", name == "tanh_delay"), name=name)
    raise ConfigurationError(f"field {name!r} cannot be rebuilt from parameters")


_EMBED_BUILDERS = ("embed_basic", "embed_nonaugmented", "embed_augmented")


def spec_to_dict(spec: NeuralDDESpec) -> dict:
    return {
        "n": spec.n, "m": spec.m, "q": spec.q, "tau": spec.tau, "T": spec.T,
        "W": spec.lambda_in.W.tolist(), "b": spec.lambda_in.b.tolist(),
        "W_tilde": spec.lambda_out.W.tolist(), "b_tilde": spec.lambda_out.b.tolist(),
        "field": {"name": spec.field.name, "params": spec.field.params},
    }


def spec_from_dict(data: dict) -> NeuralDDESpec:
    try:
        fname = data["field"]["name"]
        params = data["field"]["params"]
        if fname in _EMBED_BUILDERS:
            from . import embedding

            return embedding.rebuild(fname, params)
        fld = _build_field(fname, params, data)
        spec = NeuralDDESpec(
            AffineMap(data["W"], data["b"]), fld, float(data["tau"]), float(data["T"]),
            AffineMap(data["W_tilde"], data["b_tilde"]),
        )
    except KeyError as exc:
        raise ConfigurationError(f"missing key {exc} in architecture description") from None
    if (spec.n, spec.m, spec.q) != (data.get("n", spec.n), data.get("m", spec.m),
                                   data.get("q", spec.q)):
        raise ConfigurationError("declared dimensions disagree with the weights")
    return spec


def spec_to_json(spec: NeuralDDESpec) -> str:
    return json.dumps(spec_to_dict(spec), sort_keys=True)


def spec_from_json(text: str) -> NeuralDDESpec:
    return spec_from_dict(json.loads(text))


def identity_spec(field_: VectorFieldSpec, T: float, n: Optional[int] = None) -> NeuralDDESpec:
    """Architecture with identity input and output maps around ``field_``."""
    m = field_.m if n is None else n
    return NeuralDDESpec(AffineMap.identity(m), field_, field_.tau, float(T), AffineMap.identity(m))
