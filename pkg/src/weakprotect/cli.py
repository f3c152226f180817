"""Command-line interface: ``weakprotect <command> ...``.

Commands
--------
validate FILE
    Print trace-preservation and complete-positivity defects and the fixed
    point classification.
canonicalize FILE [--write OUT]
    Reduce the channel to canonical parameters, print the conjugating unitary
    and the Choi-distance certificate.
evaluate FILE --p P --q Q|opt [--method exact|mc] [--samples N] [--seed S]
    Normalized average fidelity before/after protection, the gain and the
    average success probability.
sweep [--y0 LIST] [--p P] [--grid N] [--out FILE]
    Optimal gain, success probability and q over x^2 as CSV.
simulate FILE --p P --q Q|opt [--samples N] [--seed S]
    Trajectory-level Monte Carlo of the protected channel.

Channel files
-------------
YAML (JSON is accepted too) with exactly one of two forms and an optional
``label``::

    label: amplitude damping
    canonical: {y0: 0.8, x: 0.6, y: 0.0, theta: 0.0, phi: 0.0}

    label: bit flip
    kraus:
      - [[[0.9, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.9, 0.0]]]
      - [[[0.0, 0.0], [0.43588989435406733, 0.0]], [[0.43588989435406733, 0.0], [0.0, 0.0]]]

In ``canonical`` the keys ``y0``, ``x``, ``y`` are required and ``theta``,
``phi`` default to 0. Each ``kraus`` entry is one 2x2 operator given as two
rows of two ``[re, im]`` pairs. Numbers use ``.`` as decimal separator.

Output goes to stdout as ``key = value`` lines; diagnostics go to stderr.

Exit codes: 0 ok, 2 validation failure, 3 no pure invariant state,
4 degenerate post-selection denominator, 64 parse/usage error.
"""
import argparse
import logging
import sys

import numpy as np

from . import __version__
from .channel import (
    ChannelError,
    NoPureInvariantState,
    canonicalize,
    fixed_points,
    validate,
)
from .channelfile import ParseError, dump_canonical, format_csv, load_channel_spec
from .fidelity import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DegenerateDenominator,
    avg_fidelity_exact,
    avg_fidelity_mc,
    delta_fidelity_closed,
    simulate_trajectories,
)
from .optimizer import DEFAULT_GRID, DEFAULT_P, DEFAULT_Y0, optimize, sweep
from .protocol import WeakParams, compose, generalized_protocol

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_INVARIANT = 3
EXIT_DEGENERATE = 4
EXIT_PARSE = 64

log = logging.getLogger("weakprotect")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _out(key, value):
    if isinstance(value, (float, np.floating)):
        value = repr(float(value))
    print(f"{key} = {value}")


def _matrix(m):
    return "[" + ", ".join("[" + ", ".join(repr(complex(z)) for z in row) + "]" for row in m) + "]"


def _load(path):
    try:
        return load_channel_spec(path)
    except ParseError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc


def _require_valid(spec):
    report = validate(spec.channel)
    if not report.passed:
        raise CliError(
            f"not a CPT map: tp_defect={report.tp_defect:.6e} cp_defect={report.cp_defect:.6e}",
            EXIT_VALIDATION,
        )


def _canonical(spec):
    """Canonical parameters, protected-channel builder and conjugating frame."""
    if spec.canonical is not None:
        return spec.canonical, lambda weak: compose(spec.canonical, weak)
    try:
        canon = canonicalize(spec.channel)
    except NoPureInvariantState as exc:
        raise CliError(str(exc), EXIT_NO_INVARIANT) from exc
    return canon.params, lambda weak: generalized_protocol(spec.channel, weak)


def _resolve_q(args, params):
    if args.q == "opt":
        opt = optimize(params, args.p)
        _out("q_branch", opt.branch)
        return opt.q_opt
    try:
        return float(args.q)
    except ValueError as exc:
        raise CliError(f"--q must be a number or 'opt', got {args.q!r}", EXIT_PARSE) from exc


def _weak(p, q):
    try:
        return WeakParams(p, q)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc


def cmd_validate(args):
    spec = _load(args.file)
    report = validate(spec.channel)
    if spec.label:
        _out("channel", spec.label)
    _out("tp_defect", report.tp_defect)
    _out("cp_defect", report.cp_defect)
    _out("cpt", "pass" if report.passed else "fail")
    if not report.passed:
        raise CliError(
            f"validation failed: tp_defect={report.tp_defect:.6e} cp_defect={report.cp_defect:.6e}",
            EXIT_VALIDATION,
        )
    fp = fixed_points(spec.channel)
    _out("fixed_set", fp.kind)
    for i, point in enumerate(fp.points):
        _out(f"fixed_point_{i}", f"{point.bloch.tolist()!r} purity={point.purity!r}")
    if fp.has_pure_invariant_state:
        lam = fp.pure_states[0]
        _out("pure_invariant_state", f"alpha={lam.alpha!r} beta={lam.beta!r}")
        _out("invariant_amplitudes", repr([complex(a) for a in lam.amplitudes]))
    else:
        _out("pure_invariant_state", "none")
        print("no pure invariant state", file=sys.stderr)
    if fp.two_orthogonal_fixed_states:
        _out("two_orthogonal_fixed_states", "yes")
    return EXIT_OK


def cmd_canonicalize(args):
    spec = _load(args.file)
    _require_valid(spec)
    try:
        canon = canonicalize(spec.channel)
    except NoPureInvariantState as exc:
        raise CliError(str(exc), EXIT_NO_INVARIANT) from exc
    p = canon.params
    for name in ("y0", "x", "y", "theta", "phi"):
        _out(name, getattr(p, name))
    _out("gauge_free", "yes" if canon.gauge else "no")
    _out("output_phase", canon.phase)
    _out("S", _matrix(canon.s))
    _out("certificate", canon.certificate)
    if args.write:
        try:
            with open(args.write, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(dump_canonical(p, spec.label))
        except OSError as exc:
            raise CliError(f"cannot write {args.write}: {exc}", EXIT_PARSE) from exc
    if canon.certificate > 1e-9:
        print(f"certificate {canon.certificate:.3e} exceeds 1e-9", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_evaluate(args):
    spec = _load(args.file)
    _require_valid(spec)
    params, protect = _canonical(spec)
    q = _resolve_q(args, params)
    weak = _weak(args.p, q)
    protected = protect(weak)
    try:
        base_exact = avg_fidelity_exact(spec.channel)
        prot_exact = avg_fidelity_exact(protected.inner)
        closed = delta_fidelity_closed(params, weak)
    except DegenerateDenominator as exc:
        raise CliError(str(exc), EXIT_DEGENERATE) from exc
    _out("p", weak.p)
    _out("q", weak.q)
    _out("method", args.method)
    if args.method == "exact":
        _out("F_n_base", base_exact.f_n)
        _out("F_n_protected", prot_exact.f_n)
        _out("delta_F", prot_exact.f_n - base_exact.f_n)
        _out("delta_F_closed_form", closed)
        _out("P_success", prot_exact.p_success_avg)
        return EXIT_OK
    try:
        base_mc = avg_fidelity_mc(spec.channel, args.samples, args.seed, args.workers)
        prot_mc = avg_fidelity_mc(protected.inner, args.samples, args.seed + 1, args.workers)
    except DegenerateDenominator as exc:
        raise CliError(str(exc), EXIT_DEGENERATE) from exc
    _out("samples", args.samples)
    _out("seed", args.seed)
    _out("F_n_base", base_mc.f_n)
    _out("F_n_base_stderr", base_mc.stderr)
    _out("F_n_protected", prot_mc.f_n)
    _out("F_n_protected_stderr", prot_mc.stderr)
    _out("delta_F", prot_mc.f_n - base_mc.f_n)
    _out("delta_F_stderr", float(np.hypot(base_mc.stderr, prot_mc.stderr)))
    _out("P_success", prot_mc.p_success_avg)
    _out("P_success_stderr", prot_mc.p_success_stderr)
    _out("F_n_base_exact", base_exact.f_n)
    _out("F_n_protected_exact", prot_exact.f_n)
    agree = (abs(base_mc.f_n - base_exact.f_n) <= 3 * base_mc.stderr + 1e-12
             and abs(prot_mc.f_n - prot_exact.f_n) <= 3 * prot_mc.stderr + 1e-12)
    _out("agree_3sigma", "yes" if agree else "no")
    return EXIT_OK


def cmd_simulate(args):
    spec = _load(args.file)
    _require_valid(spec)
    if args.samples < 1000:
        raise CliError("--samples must be at least 1000", EXIT_PARSE)
    params, protect = _canonical(spec)
    q = _resolve_q(args, params)
    weak = _weak(args.p, q)
    protected = protect(weak)
    try:
        sim = simulate_trajectories(protected.inner, args.samples, args.seed, args.workers)
        exact = avg_fidelity_exact(protected.inner)
    except DegenerateDenominator as exc:
        raise CliError(str(exc), EXIT_DEGENERATE) from exc
    _out("p", weak.p)
    _out("q", weak.q)
    _out("samples", args.samples)
    _out("seed", args.seed)
    _out("F_n", sim.f_n)
    _out("F_n_stderr", sim.stderr)
    _out("P_success", sim.p_success_avg)
    _out("P_success_stderr", sim.p_success_stderr)
    _out("F_n_exact", exact.f_n)
    _out("P_success_exact", exact.p_success_avg)
    return EXIT_OK


def cmd_sweep(args):
    try:
        y0_list = [float(v) for v in args.y0.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"bad --y0 list: {args.y0!r}", EXIT_PARSE) from exc
    try:
        records = sweep(y0_list, args.p, args.grid, args.workers)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_PARSE) from exc
    text = format_csv(records)
    if args.out in (None, "-"):
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_PARSE) from exc
    print(f"wrote {len(records)} rows to {args.out}", file=sys.stderr)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_PARSE)


def build_parser():
    parser = _Parser(prog="weakprotect", description="Weak-measurement protection of qubit channels.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check CPT conditions and fixed points")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("canonicalize", help="reduce to canonical parameters")
    p.add_argument("file")
    p.add_argument("--write", metavar="OUT", help="write a canonical-form channel file")
    p.set_defaults(func=cmd_canonicalize)

    def protocol_args(p, samples):
        p.add_argument("file")
        p.add_argument("--p", type=float, required=True, help="pre-measurement strength")
        p.add_argument("--q", required=True, help="post-measurement strength or 'opt'")
        p.add_argument("--samples", type=int, default=samples)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("evaluate", help="average fidelity with and without protection")
    protocol_args(p, DEFAULT_SAMPLES)
    p.add_argument("--method", choices=("exact", "mc"), default="exact")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="trajectory Monte Carlo of the protected channel")
    protocol_args(p, DEFAULT_SAMPLES)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="emit optimal-q sweep as CSV")
    p.add_argument("--y0", default=",".join(repr(v) for v in DEFAULT_Y0), help="comma-separated y0 values")
    p.add_argument("--p", type=float, default=DEFAULT_P)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--out", default=None, help="output CSV path (stdout if omitted)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ChannelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
