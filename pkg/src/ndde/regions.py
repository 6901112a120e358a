"""Classification of parameter points into embedding and non-approximation regions.

Labels:

``UE_nonaugmented``
    ``m >= max(n, q)``, ``tau > 0`` and ``K tau >= 2 (1 + K_psi/(w w_tilde))``.
``UE_augmented``
    ``m >= n + q`` and ``K T >= K_psi / (w w_tilde)``.
``nUA``
    ``m <= max(n, q)`` and either ``tau = 0``, or a constants bundle is given,
    ``tau <= tau0(K)`` and ``K tau e < 1``.
``unknown``
    everything else.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._io import csv_text
from .errors import NDDEError, ValidationError
from .morse import separation_constants

LABELS = ("UE_nonaugmented", "UE_augmented", "nUA", "unknown")
UE_LABELS = ("UE_nonaugmented", "UE_augmented")


@dataclass(frozen=True)
class ConstantsBundle:
    """Inputs of the constant ledger that the region query does not already carry."""

    C2: float
    M: float
    A: float
    r0: float
    r1: float
    eps: float


@dataclass(frozen=True)
class RegionQuery:
    K: float
    tau: float
    T: float = 1.0
    m: int = 1
    n: int = 1
    q: int = 1
    K_psi: float = 1.0
    w: float = 1.0
    w_tilde: float = 1.0
    constants: Optional[ConstantsBundle] = None

    def validate(self):
        if min(self.m, self.n, self.q) < 1:
            raise ValidationError("dimensions must be positive")
        if not (self.K >= 0 and self.K_psi >= 0 and self.T > 0 and self.w > 0
                and self.w_tilde > 0):
            raise ValidationError("need K, K_psi >= 0 and T, w, w_tilde > 0")
        if not 0 <= self.tau <= self.T:
            raise ValidationError(f"need 0 <= tau <= T, got tau={self.tau}, T={self.T}")


@dataclass(frozen=True)
class RegionLabel:
    label: str
    justification: str


def _tau0(q: RegionQuery) -> Optional[float]:
    c = q.constants
    if c is None or q.K <= 0:
        return None
    try:
        return separation_constants(q.K, c.A, q.T, c.M, c.r0, c.r1, c.eps, q.w, q.w_tilde,
                                    c.C2).tau0
    except NDDEError:
        return None


def ue_nonaugmented_holds(q: RegionQuery) -> bool:
    ratio = q.K_psi / (q.w * q.w_tilde)
    return q.m >= max(q.n, q.q) and q.tau > 0 and q.K * q.tau >= 2.0 * (1.0 + ratio)


def ue_augmented_holds(q: RegionQuery) -> bool:
    return q.m >= q.n + q.q and q.K * q.T >= q.K_psi / (q.w * q.w_tilde)


def nua_holds(q: RegionQuery):
    """Whether a non-approximation criterion applies; returns ``(flag, reason)``."""
    if q.m > max(q.n, q.q):
        return False, ""
    if q.tau == 0:
        return True, "tau = 0 (ODE) and m <= max(n,q)"
    tau0 = _tau0(q)
    if tau0 is not None and q.tau <= tau0 and q.K * q.tau * math.e < 1.0:
        return True, f"tau <= tau0(K) = {tau0:.6g} with C2 = {q.constants.C2:g}"
    return False, ""


def classify_region(q: RegionQuery) -> RegionLabel:
    q.validate()
    if ue_nonaugmented_holds(q):
        return RegionLabel("UE_nonaugmented", "K*tau >= 2(1 + K_psi/(w*w_tilde))")
    if ue_augmented_holds(q):
        return RegionLabel("UE_augmented", "m >= n+q and K*T >= K_psi/(w*w_tilde)")
    flag, reason = nua_holds(q)
    if flag:
        return RegionLabel("nUA", reason)
    return RegionLabel("unknown", "no applicable criterion")


@dataclass(frozen=True)
class RegionSweep:
    K_values: np.ndarray
    tau_values: np.ndarray
    labels: np.ndarray  # shape (len(tau_values), len(K_values))
    justifications: np.ndarray
    overlap: np.ndarray  # cells where a UE criterion and a nUA criterion both hold

    def to_csv(self) -> str:
        rows = []
        for i, tau in enumerate(self.tau_values):
            for j, K in enumerate(self.K_values):
                rows.append([K, tau, self.labels[i, j], self.justifications[i, j]])
        return csv_text(["K", "tau", "label", "justification"],
                        ([r[0], r[1], r[2], _quote(r[3])] for r in rows))

    def count(self, label) -> int:
        return int(np.count_nonzero(self.labels == label))

    def upward_closed_in_K(self, labels=UE_LABELS) -> bool:
        """Whether, for every fixed tau, a UE cell is followed only by UE cells as K grows."""
        for row in self.labels:
            inside = np.isin(row, labels)
            first = np.argmax(inside) if inside.any() else len(row)
            if not inside[first:].all():
                return False
        return True

    def to_svg(self, width=600, height=400) -> str:
        return _svg_heatmap(self, width, height)


def _quote(text: str) -> str:
    if any(ch in text for ch in ',"\r\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _sweep_row(args):
    tau, K_values, fixed = args
    out = []
    for K in K_values:
        q = replace(fixed, K=float(K), tau=float(tau))
        lab = classify_region(q)
        both = (ue_nonaugmented_holds(q) or ue_augmented_holds(q)) and nua_holds(q)[0]
        out.append((lab.label, lab.justification, both))
    return out


def sweep_regions(K_range, tau_range, resolution: int, fixed: RegionQuery,
                  workers: int = 1) -> RegionSweep:
    """Label a ``resolution x resolution`` grid spanning both ranges (end points included)."""
    if resolution < 2:
        raise ValidationError("resolution must be at least 2")
    K_values = np.linspace(float(K_range[0]), float(K_range[1]), resolution)
    tau_values = np.linspace(float(tau_range[0]), float(tau_range[1]), resolution)
    jobs = [(tau, K_values, fixed) for tau in tau_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs, chunksize=max(1, resolution // (4 * workers))))
    else:
        rows = [_sweep_row(job) for job in jobs]
    labels = np.array([[c[0] for c in row] for row in rows], dtype=object)
    just = np.array([[c[1] for c in row] for row in rows], dtype=object)
    overlap = np.array([[c[2] for c in row] for row in rows], dtype=bool)
    return RegionSweep(K_values, tau_values, labels, just, overlap)


_COLORS = {"UE_nonaugmented": "#2b8cbe", "UE_augmented": "#7bccc4", "nUA": "#e34a33",
           "unknown": "#f0f0f0"}


def _svg_heatmap(sweep: RegionSweep, width, height) -> str:
    nk, nt = len(sweep.K_values), len(sweep.tau_values)
    margin = 50
    cw = (width - 2 * margin) / nk
    ch = (height - 2 * margin) / nt
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for i in range(nt):
        y = height - margin - (i + 1) * ch
        j = 0
        row = sweep.labels[i]
        while j < nk:
            k = j
            while k + 1 < nk and row[k + 1] == row[j]:
                k += 1
            x = margin + j * cw
            parts.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{(k - j + 1) * cw:.3f}" '
                         f'height="{ch:.3f}" fill="{_COLORS[row[j]]}"/>')
            j = k + 1
    parts.append(f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" '
                 f'font-size="14">K</text>')
    parts.append(f'<text x="14" y="{height / 2}" font-size="14" '
                 f'transform="rotate(-90 14 {height / 2})" text-anchor="middle">tau</text>')
    lx = margin
    for lab in LABELS:
        parts.append(f'<rect x="{lx}" y="10" width="12" height="12" fill="{_COLORS[lab]}" '
                     f'stroke="black" stroke-width="0.5"/>')
        parts.append(f'<text x="{lx + 16}" y="21" font-size="11">{lab}</text>')
        lx += 130
    kmin, kmax = sweep.K_values[0], sweep.K_values[-1]
    tmin, tmax = sweep.tau_values[0], sweep.tau_values[-1]
    parts.append(f'<text x="{margin}" y="{height - margin + 15}" font-size="10">{kmin:g}</text>')
    parts.append(f'<text x="{width - margin}" y="{height - margin + 15}" font-size="10" '
                 f'text-anchor="end">{kmax:g}</text>')
    parts.append(f'<text x="{margin - 5}" y="{height - margin}" font-size="10" '
                 f'text-anchor="end">{tmin:g}</text>')
    parts.append(f'<text x="{margin - 5}" y="{margin + 8}" font-size="10" '
                 f'text-anchor="end">{tmax:g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
