"""Command-line interface: ``ndde <subcommand> [options]``.

Every subcommand validates its inputs before computing. Options may also be
given in a flat JSON file via ``--config``; explicit flags win over the file,
which wins over the defaults. Exit status is 0 on success, 2 for invalid
input and 3 for numerical failures; errors are reported as one line on
standard error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from ._io import atomic_write_text, csv_text, format_float, make_rng
from .dde_core import (
    euler_solve,
    linear_delay_field,
    make_grid,
    multi_delay_field,
    tanh_delay_field,
    zero_field,
)
from .delay_lib import DelayFunctionSpec
from .dense_resnet import dense_forward, discretize
from .embedding import (
    embed_augmented,
    embed_basic_tauT,
    embed_nonaugmented,
    field_lipschitz_quotients,
    parse_target,
)
from .errors import NDDEError, NumericError, ValidationError
from .morse import separation_constants
from .neural_dde import identity_spec, ndde_forward
from .regions import ConstantsBundle, RegionQuery, classify_region, sweep_regions
from .small_delay import lambert_w, measure_attraction

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _emit(text, out):
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _finite(name, value):
    if value is None or not math.isfinite(value):
        raise ValidationError(f"--{name} must be a finite number")


def _positive(name, value):
    _finite(name, value)
    if value <= 0:
        raise ValidationError(f"--{name} must be positive, got {value}")


# --- subcommands ---------------------------------------------------------

def cmd_simulate(a):
    _positive("T", a.T)
    _finite("tau", a.tau)
    _finite("y0", a.y0)
    if a.steps < 1:
        raise ValidationError("--steps must be at least 1")
    if a.field == "linear":
        _finite("k0", a.k0)
        fld = linear_delay_field(a.k0, a.tau)
    elif a.field == "tanh":
        fld = tanh_delay_field(a.a, a.tau, c=a.c, b=a.b)
    else:
        fld = zero_field(1, a.tau)
    grid = make_grid(a.T, a.steps, a.tau)
    traj = euler_solve(fld, a.y0, grid)
    _emit(traj.to_csv(), a.out)


def _embed_spec(a, psi):
    if a.construction == "basic":
        return embed_basic_tauT(psi, a.T)
    if a.construction == "nonaugmented":
        return embed_nonaugmented(psi, a.tau, a.K, a.w, a.wt, T=a.T, m=a.m)
    return embed_augmented(psi, a.tau, a.K, a.w, a.wt, m=a.m, T=a.T)


def cmd_embed(a):
    psi = parse_target(a.target)
    _positive("T", a.T)
    if a.samples < 1 or a.steps < 1:
        raise ValidationError("--samples and --steps must be at least 1")
    spec = _embed_spec(a, psi)
    rng = make_rng(a.seed, 1)
    xs = psi.sample(a.samples, rng)
    rows, worst = [], 0.0
    for x in xs:
        phi = ndde_forward(spec, x, a.steps)
        err = float(np.max(np.abs(phi - psi(x))))
        worst = max(worst, err)
        rows.append([*x, *phi, *psi(x), err])
    delta = spec.T / a.steps
    tol = a.tol if a.tol is not None else (1e-9 if a.construction != "nonaugmented"
                                           else 10.0 * delta * (1.0 + psi.K_psi))
    report = {
        "construction": a.construction, "target": psi.name, "samples": len(xs),
        "steps": a.steps, "delta": delta, "max_error": worst, "tolerance": tol,
        "ok": worst <= tol, "declared_K": spec.field.K,
        "W_norm": spec.lambda_in.norm_inf(), "W_tilde_norm": spec.lambda_out.norm_inf(),
    }
    if spec.tau > 0 and a.audit_pairs > 0:
        lo, hi = (float(np.max(psi.lo)), float(np.min(psi.hi)))
        lo = -1.0 if not math.isfinite(lo) else lo
        hi = 1.0 if not math.isfinite(hi) else hi
        box = (a.w * (lo + 0.01 * (hi - lo)), a.w * (hi - 0.01 * (hi - lo)))
        if a.construction == "basic":
            box = (lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo))
        q = field_lipschitz_quotients(spec, a.audit_pairs, make_rng(a.seed, 2), box)
        report["lipschitz_quotient_max"] = float(q.max())
    if a.out:
        n, qd = psi.n, psi.q
        header = ([f"x{i + 1}" for i in range(n)] + [f"phi{i + 1}" for i in range(qd)]
                  + [f"psi{i + 1}" for i in range(qd)] + ["error"])
        atomic_write_text(a.out, csv_text(header, rows))
    sys.stdout.write(json.dumps(report, sort_keys=True) + "\n")
    return EXIT_OK if report["ok"] else EXIT_NUMERIC


def _demo_multi_delay(L, R):
    delta = 1.0 / L
    tau = R * delta
    T = 1.0
    delays = [DelayFunctionSpec("A", 1, delta, tau, T), DelayFunctionSpec("B", 2, delta, tau, T),
              DelayFunctionSpec("C", 1, delta, tau, T)]

    def fn(t, y, d1, d2, d3):
        return np.tanh(0.5 * y - 0.3 * d1 + 0.2 * d2 + 0.1 * d3)

    return multi_delay_field(fn, delays, 1, tau, K=1.1, name="three_delay_demo")


def cmd_discretize(a):
    if a.steps < 1:
        raise ValidationError("--steps must be at least 1")
    if a.field == "three-delay":
        if a.R < 3:
            raise ValidationError("--R must be at least 3 for the three-delay demo")
        fld = _demo_multi_delay(a.steps, a.R)
        spec = identity_spec(fld, 1.0)
    else:
        _positive("T", a.T)
        fld = linear_delay_field(a.k0, a.tau) if a.field == "linear" else tanh_delay_field(
            a.a, a.tau, c=a.c, b=a.b)
        spec = identity_spec(fld, a.T)
    net = discretize(spec, a.steps)
    h = dense_forward(net, [a.y0])
    y = ndde_forward(spec, [a.y0], a.steps)
    diff = float(np.max(np.abs(h - y)))
    text = net.describe() + f"dense output {format_float(h[0])}\n" \
        f"euler output {format_float(y[0])}\ndifference {format_float(diff)}\n"
    _emit(text, a.out)
    return EXIT_OK if diff == 0.0 else EXIT_NUMERIC


def cmd_lambertw(a):
    _finite("x", a.x)
    w = lambert_w(a.branch, a.x)
    res = abs(w * math.exp(w) - a.x)
    sys.stdout.write(json.dumps({"branch": a.branch, "x": a.x, "w": w, "residual": res}) + "\n")


def cmd_attract(a):
    for name in ("k0", "tau", "y0", "T"):
        _finite(name, getattr(a, name))
    rep = measure_attraction(a.k0, a.tau, a.y0, a.T, a.steps, init=a.init)
    _emit(csv_text(["t", "y", "ybar", "gap", "envelope"], rep.rows()), a.out)
    summary = {
        "C_u_estimate": rep.C_u_estimate, "fitted_rate": rep.fitted_rate,
        "rate_reliable": rep.rate_reliable, "ybar0": rep.ybar0,
        "ybar0_reliable": rep.ybar0_reliable, "discrete_rate": rep.discrete_rate,
        "lambda1": rep.lambda1, "lambda2": rep.lambda2, "envelope_ratio": rep.envelope_ratio,
    }
    sys.stderr.write(json.dumps(summary, sort_keys=True) + "\n")


def cmd_constants(a):
    c = separation_constants(a.K, a.A, a.T, a.M, a.r0, a.r1, a.eps, a.w, a.wt, a.C2)
    _emit(c.to_json() + "\n", a.out)


def _region_fixed(a, K=0.0, tau=0.0):
    consts = None
    if a.C2 is not None:
        consts = ConstantsBundle(a.C2, a.M, a.A, a.r0, a.r1, a.eps)
    return RegionQuery(K=K, tau=tau, T=a.T, m=a.m, n=a.n, q=a.q, K_psi=a.kpsi, w=a.w,
                       w_tilde=a.wt, constants=consts)


def cmd_regions(a):
    if a.sweep:
        if a.res < 2:
            raise ValidationError("--res must be at least 2")
        if not (0 <= a.kmin < a.kmax and 0 < a.taumax <= a.T):
            raise ValidationError("need 0 <= kmin < kmax and 0 < taumax <= T")
        fixed = _region_fixed(a)
        fixed.validate()
        sw = sweep_regions((a.kmin, a.kmax), (0.0, a.taumax), a.res, fixed, workers=a.workers)
        _emit(sw.to_csv(), a.out)
        if a.svg:
            atomic_write_text(a.svg, sw.to_svg())
        sys.stderr.write(json.dumps({
            "cells": sw.labels.size, "UE_nonaugmented": sw.count("UE_nonaugmented"),
            "UE_augmented": sw.count("UE_augmented"), "nUA": sw.count("nUA"),
            "unknown": sw.count("unknown"), "ue_and_nua": int(sw.overlap.sum()),
            "ue_upward_closed_in_K": sw.upward_closed_in_K(),
        }, sort_keys=True) + "\n")
    else:
        _finite("K", a.K)
        _finite("tau", a.tau)
        lab = classify_region(_region_fixed(a, a.K, a.tau))
        _emit(json.dumps({"label": lab.label, "justification": lab.justification}) + "\n", a.out)


# --- parser ---------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="flat JSON file with option values")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", help="output file (default: standard output)")


def _add_field_opts(p, choices=("linear", "tanh", "zero"), steps=100):
    p.add_argument("--field", choices=list(choices), default=choices[0])
    p.add_argument("--k0", type=float, default=-1.0, help="coefficient of the linear field")
    p.add_argument("--a", type=float, default=1.0, help="tanh field amplitude")
    p.add_argument("--c", type=float, default=0.0, help="coefficient of the current state")
    p.add_argument("--b", type=float, default=0.0, help="constant offset")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--y0", type=float, default=1.0, help="constant initial value")
    p.add_argument("--T", type=float, default=1.0, help="horizon")
    p.add_argument("--steps", type=int, default=steps, help="Euler steps L")


def build_parser():
    parser = _Parser(prog="ndde", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate a delay equation, write t,y CSV")
    _add_common(p)
    _add_field_opts(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("embed", help="check an exact embedding construction on samples")
    _add_common(p)
    p.add_argument("--construction", choices=["basic", "nonaugmented", "augmented"],
                   default="nonaugmented")
    p.add_argument("--target", default="neg", help="neg, affine(a,b), square, sin, quadmin(p,..)")
    p.add_argument("--K", type=float, default=4.0, help="Lipschitz budget of the field")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--w", type=float, default=1.0, help="input weight scale")
    p.add_argument("--wt", type=float, default=1.0, help="output weight scale")
    p.add_argument("--m", type=int, default=None, help="state width")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--tol", type=float, default=None, help="override the error tolerance")
    p.add_argument("--audit-pairs", type=int, default=1000,
                   help="random history pairs for the Lipschitz audit")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("discretize", help="dense network table and equivalence check")
    _add_common(p)
    _add_field_opts(p, ("three-delay", "linear", "tanh"), steps=10)
    p.add_argument("--R", type=int, default=3, help="history steps of the three-delay demo")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("lambertw", help="evaluate a real Lambert W branch")
    _add_common(p)
    p.add_argument("--branch", type=int, choices=[0, -1], default=0)
    p.add_argument("--x", type=float, required=False, default=None)
    p.set_defaults(func=cmd_lambertw)

    p = sub.add_parser("attract", help="convergence to the special solution")
    _add_common(p)
    p.add_argument("--k0", type=float, default=-1.0)
    p.add_argument("--tau", type=float, default=0.25)
    p.add_argument("--y0", type=float, default=1.0)
    p.add_argument("--T", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--init", choices=["constant", "special"], default="constant")
    p.set_defaults(func=cmd_attract)

    p = sub.add_parser("constants", help="constant ledger as JSON")
    _add_common(p)
    for name, default in (("K", 1.0), ("A", 0.0), ("T", 1.0), ("M", 1.0), ("r0", 1.0),
                          ("r1", 0.25), ("eps", 0.1), ("w", 1.0), ("wt", 1.0), ("C2", 0.5)):
        p.add_argument(f"--{name}", type=float, default=default)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("regions", help="classify parameter points or sweep a grid")
    _add_common(p)
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--K", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--kmin", type=float, default=0.0)
    p.add_argument("--kmax", type=float, default=10.0)
    p.add_argument("--taumax", type=float, default=1.0)
    p.add_argument("--res", type=int, default=200)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--kpsi", type=float, default=1.0)
    p.add_argument("--w", type=float, default=1.0)
    p.add_argument("--wt", type=float, default=1.0)
    p.add_argument("--C2", type=float, default=None, help="enables tau0-based labels")
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--A", type=float, default=0.0)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--r1", type=float, default=0.25)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--svg", default=None, help="also write a heatmap")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_regions)
    return parser


def _apply_config(parser, argv):
    """Parse twice: first to find the subcommand and config file, then with file defaults."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a flat JSON object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {act.dest: act for act in subparser._actions}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "func", "help"):
            raise ValidationError(f"unknown config key {key!r} for {args.command}")
        if isinstance(value, (dict, list)):
            raise ValidationError(f"config value for {key!r} must be a scalar")
        act = known[dest]
        if act.type is not None and value is not None and not isinstance(value, bool):
            value = act.type(value)
        if act.choices is not None and value not in act.choices:
            raise ValidationError(f"config value {value!r} not allowed for {key!r}")
        subparser.set_defaults(**{dest: value})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command == "lambertw" and args.x is None:
            raise ValidationError("--x is required")
        status = args.func(args)
        return EXIT_OK if status is None else status
    except NumericError as exc:
        sys.stderr.write(f"error kind={exc.kind} message={json.dumps(str(exc))}\n")
        return EXIT_NUMERIC
    except NDDEError as exc:
        sys.stderr.write(f"error kind={exc.kind} message={json.dumps(str(exc))}\n")
        return EXIT_VALIDATION
    except (ValueError, TypeError) as exc:
        sys.stderr.write(f"error kind=validation message={json.dumps(str(exc))}\n")
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
