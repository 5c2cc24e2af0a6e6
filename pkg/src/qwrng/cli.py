"""Command-line surface: scans, rate tables, protocol simulation, self tests.

Output contract:
  * every file starts with '#'-prefixed lines echoing the resolved
    configuration and the artifact version, then a CSV header row;
  * identical configuration and seeds give bit-identical output;
  * exit codes: 0 success (aborted runs included), 2 invalid input,
    3 I/O failure, 4 self-test failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from collections.abc import Callable, Iterable, Sequence
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from . import __version__, protocol, rate, sampling, walk
from .protocol import RAW_STRING_LIMIT, Seeds, SourceModel
from .rate import RateInputs
from .sampling import SamplingParams
from .walk import WalkParams

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_SELFTEST = 4

# Bundled parameter sets: three position dimensions on one noise level,
# epsilon = 1e-36, m = floor(sqrt(N)), expected-weight compatibility on.
PRESETS = {"fig1-left": 0.15, "fig1-right": 0.20}
PRESET_DIMENSIONS = (5, 11, 51)
PRESET_EPSILON = 1e-36

# Raw strings at most this long are echoed into run records verbatim;
# longer ones appear as sha256 digests of their little-endian bytes.
INLINE_STRING_LIMIT = 10_000


def _parse_count(text: str) -> int:
    """Integer argument that also accepts scientific notation like 1e6."""
    try:
        return int(text)
    except ValueError:
        pass
    value = float(text)
    rounded = int(round(value))
    if not math.isfinite(value) or abs(value - rounded) > 1e-6 * max(1.0, abs(value)):
        raise ValueError(f"expected an integer, got {text!r}")
    return rounded


def parse_n_grid(text: str) -> list[int]:
    """Parse an N-grid flag: 'log:START:STOP:COUNT' or comma-separated values."""
    if text.startswith("log:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"bad log grid {text!r}; expected log:START:STOP:COUNT")
        return rate.default_n_grid(float(parts[1]), float(parts[2]), int(parts[3]))
    values = [_parse_count(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise ValueError("empty N grid")
    return values


def _fmt(value: object) -> str:
    """Round-trippable text for header and CSV cells."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _header_lines(command: str, pairs: Iterable[tuple[str, object]]) -> list[str]:
    lines = [f"# qwrng {__version__}", f"# command: {command}"]
    lines.extend(f"# {key}: {_fmt(value)}" for key, value in pairs)
    return lines


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _plot_path(output: str) -> Path:
    return Path(output).with_suffix(".png")


def _digest(array: NDArray) -> str:
    """sha256 over the array's little-endian bytes."""
    if array.dtype == np.uint8:
        canonical = np.ascontiguousarray(array)
    else:
        canonical = np.ascontiguousarray(array.astype("<i8"))
    return "sha256:" + hashlib.sha256(canonical.tobytes()).hexdigest()


def _string_field(array: NDArray) -> str:
    if array.size <= INLINE_STRING_LIMIT:
        return ",".join(str(int(v)) for v in array)
    return _digest(array)


def key_to_hex(bits: NDArray) -> str:
    """Lowercase hex of a bit string, most significant bit first.

    The last nibble is zero-padded on its low end when the length is not a
    multiple of four, so a key of ell bits takes ceil(ell/4) hex digits.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-bits.size) % 4
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    nibbles = bits.reshape(-1, 4) @ np.array([8, 4, 2, 1], dtype=np.uint8)
    return bytes(b"0123456789abcdef"[v] for v in nibbles).decode("ascii")


def _resolve_walk_time(P: int, T: int | None, T_max: int) -> tuple[int, float]:
    """Fixed walk time if given, else the scan minimum over 1..T_max."""
    if T is not None:
        return T, walk.gamma(WalkParams(P=P, T=T))
    t_star, g_star = walk.gamma_scan(P, T_max)
    return t_star, g_star


def cmd_gamma_scan(args: argparse.Namespace) -> int:
    series = walk.gamma_series(args.P, args.T_max)
    t_star = int(np.argmin(series)) + 1
    g_star = float(series[t_star - 1])
    lines = _header_lines("gamma-scan", [("P", args.P), ("T-max", args.T_max)])
    lines.append("T,gamma")
    lines.extend(f"{t},{v!r}" for t, v in enumerate(series.tolist(), start=1))
    lines.append(f"# T*: {t_star}")
    lines.append(f"# gamma*: {g_star!r}")
    _emit("\n".join(lines) + "\n", args.output)
    if args.output and not args.no_plot:
        from . import plots

        plots.plot_gamma_scan(series, t_star, _plot_path(args.output))
    return EXIT_OK


def cmd_rate_curve(args: argparse.Namespace) -> int:
    n_grid = parse_n_grid(args.N_grid)
    if args.preset is not None:
        Q = PRESETS[args.preset]
        epsilon = PRESET_EPSILON
        dimensions: Sequence[int] = PRESET_DIMENSIONS
        paper_compat = True
    else:
        if args.P is None or args.Q is None:
            raise ValueError("rate-curve needs --P and --Q unless --preset is given")
        Q = args.Q
        epsilon = args.epsilon
        dimensions = (args.P,)
        paper_compat = args.paper_compat

    resolved: list[tuple[int, int, float]] = []
    curves: dict[int, list[rate.CurvePoint]] = {}
    for P in dimensions:
        T, g = _resolve_walk_time(P, args.T, args.T_max)
        resolved.append((P, T, g))
        curves[P] = rate.rate_curve(
            P, Q, epsilon, n_grid, m_rule=args.m_rule, gamma=g, paper_compat=paper_compat
        )

    config: list[tuple[str, object]] = [
        ("Q", Q),
        ("epsilon", epsilon),
        ("m-rule", args.m_rule),
        ("paper-compat", paper_compat),
        ("N-grid", ",".join(str(N) for N in n_grid)),
    ]
    if args.preset is not None:
        config.insert(0, ("preset", args.preset))
    for P, T, g in resolved:
        config.append((f"P={P}", f"T={T} gamma={g!r}"))

    multi = len(dimensions) > 1
    lines = _header_lines("rate-curve", config)
    lines.append(("P," if multi else "") + "N,m,delta,wq,ell,rate")
    for P in dimensions:
        for pt in curves[P]:
            row = f"{pt.N},{pt.m},{pt.delta!r},{pt.wq!r},{pt.ell},{pt.rate!r}"
            lines.append(f"{P},{row}" if multi else row)
    _emit("\n".join(lines) + "\n", args.output)
    if args.output and not args.no_plot:
        from . import plots

        plots.plot_rate_curves(curves, Q, epsilon, _plot_path(args.output))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    m = rate.resolve_m_rule(args.m_rule)(args.N)
    T, g = _resolve_walk_time(args.P, args.T, args.T_max)
    params = WalkParams(P=args.P, T=T)
    seeds = Seeds(subset=args.seed_subset, measure=args.seed_measure, hash=args.seed_hash)
    model = SourceModel.depolarizing(args.Q)
    if args.N > RAW_STRING_LIMIT:
        run = protocol.run_protocol_aggregate(args.N, m, args.Q, params, args.epsilon, seeds)
    else:
        run = protocol.run_protocol(args.N, m, model, params, args.epsilon, seeds)

    report = run.report
    fields: list[tuple[str, object]] = [
        ("mode", "aggregate" if run.aggregate else "full"),
        ("status", "ABORT" if run.aborted else "OK"),
        ("P", params.P),
        ("T", params.T),
        ("N", args.N),
        ("m", m),
        ("n", run.sampling.n),
        ("Q", args.Q),
        ("epsilon", args.epsilon),
        ("m-rule", args.m_rule),
        ("seed-subset", seeds.subset),
        ("seed-measure", seeds.measure),
        ("seed-hash", seeds.hash),
        ("delta", run.sampling.delta),
        ("gamma", g),
        ("wt_q", run.wt_q),
        ("wq", run.wq),
        ("ell", report.ell),
        ("raw_ell", report.raw_ell),
        ("eta_q", report.eta_q),
        ("min_entropy_bits", report.min_entropy_bits),
        ("entropy_penalty_bits", report.entropy_penalty_bits),
        ("epsilon_bits", report.epsilon_bits),
        ("subset_cost_bits", report.subset_cost_bits),
        ("failure_probability", report.failure_probability),
        ("security_distance", report.security_distance),
    ]
    if not run.aggregate:
        fields.append(("t", _string_field(run.t)))
        fields.append(("q", _string_field(run.q)))
        fields.append(("r", _string_field(run.r)))
        if run.key.size > 0:
            fields.append(("key_bits", int(run.key.size)))
            fields.append(("key_sha256", _digest(run.key).removeprefix("sha256:")))
    fields.append(("position_counts", ",".join(str(int(c)) for c in run.position_counts)))

    lines = _header_lines("simulate", [])
    lines.extend(f"{key}: {_fmt(value)}" for key, value in fields)
    _emit("\n".join(lines) + "\n", args.output)

    if args.output and not run.aggregate and run.key.size > 0:
        Path(args.output).with_suffix(".key").write_text(key_to_hex(run.key) + "\n")
    if args.output and not args.no_plot:
        from . import plots

        predicted = protocol.position_probabilities(model, params)[0]
        plots.plot_position_histogram(run.position_counts, predicted, _plot_path(args.output))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Self test: fast invariant checks. Checks call through the module objects
# (walk.gamma, sampling.entropy_d, ...) so a faulted function injected into a
# module is caught no matter how it got there.


def _check_walk_unitarity() -> None:
    params = WalkParams(P=7, T=0)
    rng = np.random.default_rng(7)
    state = rng.standard_normal(14) + 1j * rng.standard_normal(14)
    state /= np.linalg.norm(state)
    forward = state
    for _ in range(50):
        forward = walk.walk_step(forward, params)
    if abs(np.linalg.norm(forward) - 1.0) > 1e-10:
        raise AssertionError("norm drifted under repeated steps")
    back = forward
    for _ in range(50):
        back = walk.walk_step_adjoint(back, params)
    if np.max(np.abs(back - state)) > 1e-10:
        raise AssertionError("adjoint does not invert the step")


def _check_entropy_identities() -> None:
    if abs(sampling.entropy_d(2, 0.5) - 1.0) > 1e-12:
        raise AssertionError("binary entropy at 1/2 is not 1")
    if sampling.entropy_d(4, 0.0) != 0.0:
        raise AssertionError("entropy at 0 is not 0")
    for d, x in ((3, 0.2), (4, 0.5), (10, 0.7)):
        lhs = sampling.entropy_d(d, x) * math.log2(d)
        rhs = x * math.log2(d - 1) + sampling.entropy_d(2, x)
        if abs(lhs - rhs) > 1e-12:
            raise AssertionError(f"base-conversion identity fails at d={d}, x={x}")


def _check_sampling_error_identity() -> None:
    for N, m, eps in ((1000, 100, 1e-6), (10**6, 10**3, 1e-10)):
        delta = sampling.sampling_delta(N, m, eps)
        got = sampling.classical_sampling_error(N, m, delta)
        if abs(got - eps**2) > 1e-9 * eps**2:
            raise AssertionError(f"error at delta(N={N}, m={m}) is not epsilon^2")


def _check_toeplitz_linearity() -> None:
    rng = np.random.default_rng(11)
    seed = protocol.make_toeplitz_seed(48, 16, 5)
    x = rng.integers(0, 2, size=48, dtype=np.uint8)
    y = rng.integers(0, 2, size=48, dtype=np.uint8)
    lhs = protocol.toeplitz_extract(x ^ y, seed, 16)
    rhs = protocol.toeplitz_extract(x, seed, 16) ^ protocol.toeplitz_extract(y, seed, 16)
    if not np.array_equal(lhs, rhs):
        raise AssertionError("hash is not linear over GF(2)")


def _check_gamma_anchors() -> None:
    if abs(walk.gamma(WalkParams(P=5, T=0)) - 1.0) > 1e-12:
        raise AssertionError("undisturbed walker is not at the origin")
    for P in (5, 11):
        if abs(walk.gamma(WalkParams(P=P, T=1)) - 0.5) > 1e-12:
            raise AssertionError(f"one step from the origin is not 1/2 at P={P}")


def _check_key_length_breakdown() -> None:
    sp = SamplingParams(N=10**6, m=10**3, epsilon=1e-6)
    report = rate.key_length(RateInputs(sampling=sp, P=51, gamma=0.05, wq=0.05))
    total = (
        report.min_entropy_bits
        - report.entropy_penalty_bits
        - report.epsilon_bits
        - report.subset_cost_bits
    )
    if abs(total - report.raw_ell) > 1e-6 * max(1.0, abs(report.raw_ell)):
        raise AssertionError("report terms do not sum to the raw length")
    if report.ell != max(0, math.floor(report.raw_ell)):
        raise AssertionError("clamped length disagrees with the raw length")


def _check_encode_roundtrip() -> None:
    rng = np.random.default_rng(13)
    for P in (2, 5, 11):
        symbols = rng.integers(0, P, size=200)
        bits = protocol.encode_raw(symbols, P)
        if not np.array_equal(protocol.decode_raw(bits, P), symbols):
            raise AssertionError(f"decode does not invert encode at P={P}")


SELFTEST_CHECKS: list[tuple[str, Callable[[], None]]] = [
    ("walk-unitarity", _check_walk_unitarity),
    ("entropy-identities", _check_entropy_identities),
    ("sampling-error-identity", _check_sampling_error_identity),
    ("toeplitz-linearity", _check_toeplitz_linearity),
    ("gamma-anchors", _check_gamma_anchors),
    ("key-length-breakdown", _check_key_length_breakdown),
    ("encode-roundtrip", _check_encode_roundtrip),
]


def cmd_selftest(args: argparse.Namespace) -> int:
    failed = 0
    for name, check in SELFTEST_CHECKS:
        try:
            check()
        except Exception as exc:  # noqa: BLE001  (any fault means the check failed)
            failed += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"ok   {name}")
    if failed:
        print(f"{failed} of {len(SELFTEST_CHECKS)} checks failed")
        return EXIT_SELFTEST
    print(f"all {len(SELFTEST_CHECKS)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qwrng",
        description="Quantum-walk randomness laboratory: scans, rate curves, "
        "protocol simulation, key extraction.",
    )
    parser.add_argument("--version", action="version", version=f"qwrng {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    scan = sub.add_parser("gamma-scan", help="peak position probability over walk times")
    scan.add_argument("--P", type=int, required=True, help="position dimension (>= 2)")
    scan.add_argument("--T-max", type=int, default=5000, help="largest walk time scanned")
    scan.add_argument("--output", help="CSV path; stdout when omitted")
    scan.add_argument("--no-plot", action="store_true", help="skip the companion figure")
    scan.set_defaults(func=cmd_gamma_scan)

    curve = sub.add_parser("rate-curve", help="certified key rate over a grid of run sizes")
    curve.add_argument("--P", type=int, help="position dimension (>= 2)")
    curve.add_argument("--Q", type=float, help="depolarizing noise level in [0, 1)")
    curve.add_argument("--epsilon", type=float, default=1e-36, help="security parameter")
    curve.add_argument(
        "--N-grid",
        default="log:1e4:1e12:25",
        help="run sizes: comma list (1e4,1e6,...) or log:START:STOP:COUNT",
    )
    curve.add_argument(
        "--m-rule",
        default="sqrt",
        help="test-subset size rule: sqrt or fixed:<k>",
    )
    curve.add_argument("--T", type=int, help="fixed walk time; default scans for the minimum")
    curve.add_argument("--T-max", type=int, default=5000, help="scan bound when --T is absent")
    curve.add_argument(
        "--paper-compat",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="use the expected test weight Q instead of Q*(1 - 1/(2P))",
    )
    curve.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        help="bundled settings: three dimensions (5, 11, 51), epsilon=1e-36, "
        "Q=0.15 (fig1-left) or Q=0.20 (fig1-right)",
    )
    curve.add_argument("--output", help="CSV path; stdout when omitted")
    curve.add_argument("--no-plot", action="store_true", help="skip the companion figure")
    curve.set_defaults(func=cmd_rate_curve)

    sim = sub.add_parser("simulate", help="run the full protocol against a noisy source")
    sim.add_argument("--P", type=int, required=True, help="position dimension (>= 2)")
    sim.add_argument("--T", type=int, help="fixed walk time; default scans for the minimum")
    sim.add_argument("--T-max", type=int, default=5000, help="scan bound when --T is absent")
    sim.add_argument("--N", type=_parse_count, required=True, help="total signals")
    sim.add_argument("--m-rule", default="sqrt", help="test-subset size rule: sqrt or fixed:<k>")
    sim.add_argument("--Q", type=float, default=0.0, help="depolarizing noise level")
    sim.add_argument("--epsilon", type=float, default=1e-6, help="security parameter")
    sim.add_argument("--seed-subset", type=int, default=1, help="subset-choice seed")
    sim.add_argument("--seed-measure", type=int, default=2, help="measurement seed")
    sim.add_argument("--seed-hash", type=int, default=3, help="hash-seed seed")
    sim.add_argument("--output", help="record path; stdout when omitted")
    sim.add_argument("--no-plot", action="store_true", help="skip the companion figure")
    sim.set_defaults(func=cmd_simulate)

    check = sub.add_parser("selftest", help="fast invariant checks; nonzero exit on failure")
    check.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse printed its own message
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
