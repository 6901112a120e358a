"""Residual networks with dense skip connections obtained from Euler steps.

Layer ``l`` of the network computes ``h_{l+1} = h_l + delta * F(t_l, .)``
where every delayed argument ``y(t_l - tau_j(t_l))`` is resolved to a stored
layer ``h_k`` with ``k = max(alpha[l, j], 0)``. The update evaluates the
field through the same :class:`~ndde.dde_core.HistoryView` code path as
:func:`~ndde.dde_core.euler_solve`, so both produce identical floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dde_core import HistoryView, TimeGrid, VectorFieldSpec, make_grid
from .delay_lib import AlignmentTable, grid_alignment_table
from .errors import NumericError, ValidationError
from .neural_dde import NeuralDDESpec


@dataclass(frozen=True)
class DenseResNetSpec:
    """Network of ``L`` dense residual layers of width ``m``.

    ``table`` holds the delayed-index table (one column per delay function
    of the field), or ``None`` for fields that declare no delays.
    ``layer_params`` is an opaque per-layer descriptor list.
    """

    field: VectorFieldSpec
    grid: TimeGrid
    table: Optional[AlignmentTable]
    layer_params: tuple = ()

    @property
    def L(self) -> int:
        return self.grid.L

    @property
    def m(self) -> int:
        return self.field.m

    @property
    def delta(self) -> float:
        return self.grid.delta

    def delayed_indices(self, l: int):
        """Stored layers read by the delayed arguments of layer ``l``."""
        if self.table is None:
            return []
        return [int(k) for k in self.table.resolved()[l]]

    def describe(self) -> str:
        lines = [f"layers L={self.L}", f"step delta={self.delta!r}", f"width m={self.m}"]
        if self.table is not None:
            lines.append("delays: " + ", ".join(self.table.names))
            for l in range(self.L):
                raw = ", ".join(str(int(v)) for v in self.table.alpha[l])
                res = ", ".join(f"h{k}" for k in self.table.resolved()[l])
                lines.append(f"layer {l}: current h{l}; delayed alpha=[{raw}] -> [{res}]")
        return "\n".join(lines) + "\n"


def discretize(ndde: NeuralDDESpec, L: int) -> DenseResNetSpec:
    """Turn the DDE core of ``ndde`` into a ``L``-layer dense residual network.

    Raises :class:`~ndde.errors.GridAlignmentError` when a delayed time
    falls between grid points.
    """
    grid = make_grid(ndde.T, L, ndde.tau)
    table = grid_alignment_table(ndde.field.delays, grid) if ndde.field.delays else None
    return DenseResNetSpec(field=ndde.field, grid=grid, table=table)


def _view(states, l, net, record=False):
    return HistoryView(states, 0, l, net.grid.delta, net.field.tau, clamp_history=True,
                       record=record)


def layer_update(net: DenseResNetSpec, l: int, hs) -> np.ndarray:
    """``f_Dense,l(h_l, ..., h_0) = delta * F(t_l, .)`` for stored layers ``hs[0..l]``."""
    hs = np.asarray(hs, dtype=float)
    if hs.shape[0] < l + 1:
        raise ValidationError(f"layer {l} needs h_0..h_{l}")
    f = np.asarray(net.field.rhs(net.grid.time(l), _view(hs, l, net)), dtype=float)
    return net.grid.delta * f


def layer_reads(net: DenseResNetSpec, l: int, hs) -> list:
    """Layer indices actually read by the update of layer ``l`` (for auditing)."""
    hs = np.asarray(hs, dtype=float)
    view = _view(hs, l, net, record=True)
    net.field.rhs(net.grid.time(l), view)
    return [max(k, 0) for k in view.accessed]


def dense_forward(net: DenseResNetSpec, h0) -> np.ndarray:
    """Run all layers from ``h0`` and return ``h_L``."""
    L, m, delta = net.L, net.m, net.grid.delta
    states = np.empty((L + 1, m), dtype=float)
    states[0] = np.atleast_1d(np.asarray(h0, dtype=float))
    for l in range(L):
        f = np.asarray(net.field.rhs(net.grid.time(l), _view(states, l, net)), dtype=float)
        nxt = states[l] + delta * f
        if not all(map(math.isfinite, nxt.tolist())):
            raise NumericError(f"non-finite value in layer {l}", index=l, time=net.grid.time(l))
        states[l + 1] = nxt
    return states[L].copy()
