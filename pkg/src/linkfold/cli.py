"""Command-line interface: ``linkfold {straighten,convexify,refold,project,verify}``.

Standard output carries only the JSON output document; diagnostics go to
standard error, with verbosity taken from ``LINKFOLD_LOG`` (off, info,
debug).  Exit codes: 0 success, 1 invalid input, 2 non-convergence.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__, geom
from .chart import (
    ArmChart,
    CycleChart,
    LinkageKind,
    arm_extract,
    cycle_constraint,
    cycle_extract,
    embed,
    validate,
)
from .energy import lr_function, project_cocircular, project_straight
from .errors import InfeasibleLengths, InvalidInput, LinkfoldError, NoConnectionFound, Stalled
from .flow import FlowOptions, gradient_flow, projected_flow
from .refold import RefoldOptions, refold
from .svg import render_svg, write_svgs

__all__ = ["main", "parse_input", "dumps"]

logger = logging.getLogger("linkfold")

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2
_INPUT_KEYS = {"kind", "vertices", "chart", "seed"}


class InputError(Exception):
    """Malformed or invalid input document; the message is shown to the user."""


# --------------------------------------------------------------------------
# JSON with 17 significant digits


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: sorted-free (insertion order), floats at 17 significant digits."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


# --------------------------------------------------------------------------
# input documents


def _number_list(value, where):
    if not isinstance(value, list):
        raise InputError(f"field '{where}': expected a list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise InputError(f"field '{where}[{i}]': expected a finite number")
        out.append(float(v))
    return np.array(out)


def _vertices(value):
    if not isinstance(value, list) or not value:
        raise InputError("field 'vertices': expected a non-empty list of [x, y] pairs")
    pts = []
    for i, p in enumerate(value):
        if not isinstance(p, list) or len(p) != 2:
            raise InputError(f"field 'vertices[{i}]': expected [x, y]")
        pts.append(_number_list(p, f"vertices[{i}]"))
    return np.array(pts)


def parse_input(text: str, source: str = "<input>") -> dict:
    """Parse and check the shape of an input document; returns ``{"kind", "state", "seed"}``.

    ``state`` is the chart of the input: an :class:`ArmChart` for arms and a
    :class:`CycleChart` for cycles.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{source}: top level must be a JSON object")
    unknown = set(doc) - _INPUT_KEYS
    if unknown:
        raise InputError(f"{source}: unknown field '{sorted(unknown)[0]}'")
    kind = doc.get("kind")
    if kind not in ("arm", "cycle"):
        raise InputError(f"{source}: field 'kind': expected \"arm\" or \"cycle\"")
    if ("vertices" in doc) == ("chart" in doc):
        raise InputError(f"{source}: exactly one of 'vertices' or 'chart' must be present")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise InputError(f"{source}: field 'seed': expected an integer")

    try:
        if "vertices" in doc:
            pts = _vertices(doc["vertices"])
            if kind == "arm":
                if len(pts) < 2:
                    raise InputError(f"{source}: field 'vertices': an arm needs at least 2 vertices")
                state = arm_extract(pts)
                if not geom.is_simple(pts, closed=False):
                    raise InputError(f"{source}: not self-avoiding")
            else:
                if len(pts) < 3:
                    raise InputError(f"{source}: field 'vertices': a cycle needs at least 3 vertices")
                if not geom.is_simple(pts, closed=True):
                    raise InputError(f"{source}: not self-avoiding")
                if geom.signed_area(pts) <= 0:
                    raise InputError(f"{source}: cycle must be counterclockwise (positively oriented)")
                state = cycle_extract(pts)
        else:
            chart = doc["chart"]
            if not isinstance(chart, dict):
                raise InputError(f"{source}: field 'chart': expected an object")
            theta = _number_list(chart.get("theta"), "chart.theta")
            if kind == "arm":
                if set(chart) != {"rho", "theta"}:
                    raise InputError(f"{source}: field 'chart': an arm chart has exactly 'rho' and 'theta'")
                state = ArmChart(_number_list(chart["rho"], "chart.rho"), theta)
                if not geom.is_simple(embed(state), closed=False):
                    raise InputError(f"{source}: not self-avoiding")
            else:
                if set(chart) != {"lengths", "theta"}:
                    raise InputError(f"{source}: field 'chart': a cycle chart has exactly 'lengths' and 'theta'")
                lengths = geom.check_c1(_number_list(chart["lengths"], "chart.lengths"))
                state = CycleChart(lengths, theta)
                u, _ = cycle_constraint(state.theta, lengths)
                if abs(u) >= 1e-9 * lengths[-1]:
                    raise InputError(f"{source}: chart does not close (residual {u:.3e})")
                report = validate(LinkageKind.CYCLE_LINKAGE, state)
                if not report.simple:
                    raise InputError(f"{source}: not self-avoiding")
                if not report:
                    raise InputError(f"{source}: {', '.join(report.reasons)}")
    except InfeasibleLengths:
        raise InputError(f"{source}: infeasible lengths") from None
    except InputError as exc:
        if str(exc).startswith(f"{source}:"):
            raise
        raise InputError(f"{source}: {exc}") from None
    except InvalidInput as exc:
        raise InputError(f"{source}: {exc}") from None
    return {"kind": kind, "state": state, "seed": seed}


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


# --------------------------------------------------------------------------
# commands


def _flow_options(args) -> FlowOptions:
    base = FlowOptions()
    try:
        return FlowOptions(
            step=args.step if args.step is not None else base.step,
            grad_tol=args.grad_tol if args.grad_tol is not None else base.grad_tol,
            t_max=args.t_max if args.t_max is not None else base.t_max,
            frame_stride=args.frames if args.frames is not None else base.frame_stride,
        )
    except InvalidInput as exc:
        raise InputError(str(exc)) from None


def _kind_for(doc_kind: str, mode: str) -> LinkageKind:
    if doc_kind == "arm":
        return LinkageKind.ARM_LINKAGE if mode == "linkage" else LinkageKind.ARM_CONFIG
    return LinkageKind.CYCLE_LINKAGE if mode == "linkage" else LinkageKind.CYCLE_CONFIG


def _field_and_state(doc, kind: LinkageKind):
    state = doc["state"]
    if kind is LinkageKind.CYCLE_CONFIG:
        state = arm_extract(embed(state))
    if kind is LinkageKind.ARM_LINKAGE:
        return lr_function(kind, state.rho), state
    if kind is LinkageKind.CYCLE_LINKAGE:
        return lr_function(kind, state.lengths), state
    return lr_function(kind), state


def _options_meta(opts: FlowOptions) -> dict:
    return {
        "step": opts.step,
        "grad_tol": opts.grad_tol,
        "t_max": opts.t_max,
        "constraint_tol": opts.constraint_tol,
        "frame_stride": opts.frame_stride,
        "max_displacement": opts.max_displacement,
    }


def _frame(t, state, f):
    return {"t": float(t), "vertices": embed(state).tolist(), "f": float(f)}


def _document(doc_kind, mode, frames, termination, metadata):
    return {
        "kind": doc_kind,
        "mode": mode,
        "frames": frames,
        "termination": termination,
        "metadata": {"version": __version__, **metadata},
    }


def _run_flow(args, command):
    doc = parse_input(_read(args.input), args.input)
    expected = "arm" if command == "straighten" else "cycle"
    if doc["kind"] != expected:
        raise InputError(f"{args.input}: {command} needs a {expected} input, got {doc['kind']}")
    kind = _kind_for(doc["kind"], args.mode)
    fld, state = _field_and_state(doc, kind)
    opts = _flow_options(args)
    try:
        if kind is LinkageKind.CYCLE_LINKAGE:
            traj = projected_flow(fld, state, opts)
        else:
            traj = gradient_flow(fld, state, opts)
    except Stalled as exc:
        traj = getattr(exc, "trajectory", None)
        logger.error("%s", exc)
        if traj is None:
            return None, EXIT_NOT_CONVERGED
    frames = [_frame(t, s, f) for t, s, f in zip(traj.times, traj.frames, traj.f_values)]
    meta = {
        "command": command,
        "linkage_kind": kind.value,
        "options": _options_meta(opts),
        "steps": traj.steps,
        "rejected_steps": traj.rejected,
        "grad_norm": traj.grad_norm,
    }
    out = _document(doc["kind"], args.mode, frames, traj.termination, meta)
    _maybe_svg(args, traj.frames, closed=doc["kind"] == "cycle")
    code = EXIT_OK if traj.termination == "converged" else EXIT_NOT_CONVERGED
    return out, code


def _maybe_svg(args, states, closed):
    if getattr(args, "svg", None):
        try:
            write_svgs(render_svg(states, closed=closed), args.svg)
        except OSError as exc:
            raise InputError(f"cannot write SVG files to {args.svg}: {exc.strerror or exc}") from None


def cmd_straighten(args):
    return _run_flow(args, "straighten")


def cmd_convexify(args):
    return _run_flow(args, "convexify")


def cmd_refold(args):
    d0 = parse_input(_read(args.input), args.input)
    d1 = parse_input(_read(args.target), args.target)
    if d0["kind"] != d1["kind"]:
        raise InputError("refold needs two inputs of the same kind")
    kind = _kind_for(d0["kind"], args.mode)
    fld, p0 = _field_and_state(d0, kind)
    _, p1 = _field_and_state(d1, kind)
    base = RefoldOptions()
    try:
        opts = RefoldOptions(
            delta=args.delta if args.delta is not None else base.delta,
            samples=args.samples if args.samples is not None else base.samples,
            flow_opts=_flow_options(args),
        )
        motion = refold(p0, p1, opts, kind=kind)
    except NoConnectionFound as exc:
        logger.error("%s", exc)
        return None, EXIT_NOT_CONVERGED
    except InvalidInput as exc:
        raise InputError(str(exc)) from None
    frames = [_frame(i, s, fld.value(s)) for i, s in enumerate(motion.frames)]
    meta = {
        "command": "refold",
        "linkage_kind": kind.value,
        "n0": motion.n0,
        "delta": opts.delta,
        "samples": opts.samples,
        "bump": {"a": motion.params.a, "b": motion.params.b},
        "pullback_endpoint_gap": motion.endpoint_gap,
        "pullback_failure": motion.pullback_failure,
        "all_frames_valid": motion.all_valid,
        "options": _options_meta(opts.flow_opts),
    }
    out = _document(d0["kind"], args.mode, frames, "converged", meta)
    _maybe_svg(args, motion.frames, closed=d0["kind"] == "cycle")
    return out, EXIT_OK


def cmd_project(args):
    doc = parse_input(_read(args.input), args.input)
    kind = _kind_for(doc["kind"], args.mode)
    meta = {"command": f"project {args.target}", "linkage_kind": kind.value}
    if args.target == "straight":
        if doc["kind"] != "arm":
            raise InputError("project straight needs an arm input")
        fld, state = _field_and_state(doc, kind)
        image = project_straight(state)
    else:
        if doc["kind"] != "cycle":
            raise InputError("project cocircular needs a cycle input")
        fld, state = _field_and_state(doc, kind)
        image = project_cocircular(state)
        sides = state.lengths if isinstance(state, CycleChart) else np.append(
            state.rho, np.hypot(*(embed(state)[-1] - embed(state)[0])))
        meta["circumradius"] = geom.cocircular_polygon(sides).radius
    frames = [_frame(0.0, image, fld.value(image))]
    out = _document(doc["kind"], args.mode, frames, "converged", meta)
    _maybe_svg(args, [image], closed=doc["kind"] == "cycle")
    return out, EXIT_OK


def cmd_verify(args):
    from .verify import run_suite

    results = run_suite(seed=args.seed if args.seed is not None else 0)
    for r in results:
        logger.info("%s", r.line())
    passed = sum(r.passed for r in results)
    out = {
        "seed": args.seed if args.seed is not None else 0,
        "passed": passed,
        "failed": len(results) - passed,
        "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
        "metadata": {"version": __version__},
    }
    return out, EXIT_OK if passed == len(results) else EXIT_NOT_CONVERGED


# --------------------------------------------------------------------------
# entry point


def _add_flow_flags(p):
    p.add_argument("--mode", choices=("linkage", "config"), default="linkage")
    p.add_argument("--step", type=float)
    p.add_argument("--grad-tol", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--frames", type=int, help="store every N-th integrator step")
    p.add_argument("--svg", metavar="DIR", help="write one SVG per stored frame into DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linkfold", description="Straighten, convexify and refold planar linkages.")
    parser.add_argument("--version", action="version", version=f"linkfold {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fun, text in (
        ("straighten", cmd_straighten, "straighten an arm by gradient flow"),
        ("convexify", cmd_convexify, "convexify a cycle"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("input", help="input document (JSON), or - for stdin")
        _add_flow_flags(p)
        p.set_defaults(func=fun)

    p = sub.add_parser("refold", help="motion between two states with the same lengths")
    p.add_argument("input")
    p.add_argument("target")
    _add_flow_flags(p)
    p.add_argument("--delta", type=float)
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_refold)

    p = sub.add_parser("project", help="straight or cocircular state with the same lengths")
    p.add_argument("target", choices=("straight", "cocircular"))
    p.add_argument("input")
    p.add_argument("--mode", choices=("linkage", "config"), default="linkage")
    p.add_argument("--svg", metavar="DIR")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("verify", help="run the seeded property suite")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)
    return parser


def _configure_logging():
    level = os.environ.get("LINKFOLD_LOG", "off").strip().lower()
    levels = {"off": None, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        print(f"linkfold: ignoring LINKFOLD_LOG={level!r} (use off, info or debug)", file=sys.stderr)
        level = "off"
    logger.handlers.clear()
    logger.propagate = False
    if levels[level] is None:
        logger.addHandler(logging.NullHandler())
        logger.setLevel(logging.CRITICAL + 1)
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("linkfold %(levelname)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(levels[level])


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out, code = args.func(args)
    except InputError as exc:
        print(f"linkfold: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except LinkfoldError as exc:
        print(f"linkfold: error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    if out is not None:
        sys.stdout.write(dumps(out) + "\n")
    return code
