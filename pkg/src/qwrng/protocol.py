"""End-to-end protocol simulation and key extraction.

A source emits N walkers; a uniformly chosen size-m subset is measured
against the reference walker state (pass/fail test bits), the remaining n
walkers are measured in the position basis (raw symbols), the observed test
weight fixes the extractable length, and a seeded Toeplitz hash compresses
the encoded raw string into that many key bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.signal import fftconvolve

from .rate import RateInputs, RateReport, key_length
from .sampling import SamplingParams
from .walk import WalkParams, evolve, gamma, position_distribution

# full raw strings above this are refused; use run_protocol_aggregate
RAW_STRING_LIMIT = 10**8

# switch the Toeplitz product to FFT convolution above this work estimate
_DIRECT_CONV_LIMIT = 2**22


@dataclass(frozen=True)
class Seeds:
    """The three independent randomness inputs of one run."""

    subset: int
    measure: int
    hash: int


class SourceModel:
    """What the (possibly dishonest) source emits, one description per walker.

    kinds:
        ideal          every walker is exactly the reference walk state.
        depolarizing   the reference state mixed with white noise: with
                       probability Q the walker is replaced by the maximally
                       mixed state on the 2P-dimensional space.
        explicit       an arbitrary density operator per walker (small N
                       only); walkers are independent, so cross-walker
                       correlations are out of scope.
    """

    def __init__(self, kind: str, Q: float | None = None, operators: Sequence[NDArray] | None = None):
        if kind not in ("ideal", "depolarizing", "explicit"):
            raise ValueError(f"unknown source kind {kind!r}")
        self.kind = kind
        self.Q = Q
        self.operators = None
        if kind == "depolarizing":
            if Q is None or not 0.0 <= Q <= 1.0:
                raise ValueError(f"depolarizing source needs Q in [0, 1], got {Q!r}")
        elif kind == "explicit":
            if not operators:
                raise ValueError("explicit source needs at least one density operator")
            ops = [np.asarray(op, dtype=np.complex128) for op in operators]
            dim = ops[0].shape[0]
            for op in ops:
                if op.shape != (dim, dim):
                    raise ValueError("all operators must be square and share one dimension")
                if np.max(np.abs(op - op.conj().T)) > 1e-8:
                    raise ValueError("density operator is not Hermitian")
                if abs(np.trace(op).real - 1.0) > 1e-8:
                    raise ValueError("density operator must have unit trace")
                if np.min(np.linalg.eigvalsh(op)) < -1e-8:
                    raise ValueError("density operator must be positive semi-definite")
            self.operators = ops

    @classmethod
    def ideal(cls) -> "SourceModel":
        return cls("ideal")

    @classmethod
    def depolarizing(cls, Q: float) -> "SourceModel":
        return cls("depolarizing", Q=Q)

    @classmethod
    def explicit(cls, operators: Sequence[NDArray]) -> "SourceModel":
        return cls("explicit", operators=operators)

    def n_walkers(self) -> int | None:
        """Number of walker descriptions, or None for homogeneous sources."""
        return None if self.operators is None else len(self.operators)


def _reference_state(params: WalkParams) -> NDArray[np.complex128]:
    return evolve(0, 0, params)


def test_one_probabilities(model: SourceModel, params: WalkParams) -> NDArray[np.float64]:
    """Per-walker probability of test outcome 1 (failing the reference test).

    Homogeneous sources return a length-1 array that applies to every walker.
    """
    if model.kind == "ideal":
        return np.array([0.0])
    if model.kind == "depolarizing":
        # tr(rho |w0><w0|) = (1-Q) + Q/(2P)
        return np.array([model.Q * (1.0 - 1.0 / (2 * params.P))])
    w0 = _reference_state(params)
    if model.operators[0].shape[0] != 2 * params.P:
        raise ValueError("operator dimension does not match 2P")
    probs = [1.0 - float(np.real(w0.conj() @ op @ w0)) for op in model.operators]
    return np.clip(np.array(probs), 0.0, 1.0)


def position_probabilities(model: SourceModel, params: WalkParams) -> NDArray[np.float64]:
    """Per-walker position-outcome law, shape (n_walkers, P) or (1, P)."""
    P = params.P
    ideal_row = position_distribution(_reference_state(params))
    if model.kind == "ideal":
        rows = ideal_row[None, :]
    elif model.kind == "depolarizing":
        rows = ((1.0 - model.Q) * ideal_row + model.Q / P)[None, :]
    else:
        if model.operators[0].shape[0] != 2 * P:
            raise ValueError("operator dimension does not match 2P")
        got = []
        for op in model.operators:
            diag = np.real(np.diag(op))
            got.append(diag[:P] + diag[P:])
        rows = np.clip(np.array(got), 0.0, None)
    return rows / rows.sum(axis=1, keepdims=True)


def _draw_positions(rows: NDArray, u: NDArray, walkers: NDArray) -> NDArray[np.uint8]:
    """Inverse-CDF sampling of uniforms u (trials, k) for the given walkers.

    rows holds one outcome law per walker, or a single shared row for
    homogeneous sources.
    """
    out = np.empty(u.shape, dtype=np.uint8)
    if rows.shape[0] == 1:
        cdf = np.cumsum(rows[0])
        cdf[-1] = 1.0
        out[:] = np.searchsorted(cdf, u, side="right").astype(np.uint8)
        return out
    for j, walker in enumerate(walkers):
        cdf = np.cumsum(rows[walker])
        cdf[-1] = 1.0
        out[:, j] = np.searchsorted(cdf, u[:, j], side="right").astype(np.uint8)
    return out


def sample_joint_outcomes(
    model: SourceModel,
    params: WalkParams,
    t: NDArray,
    N: int,
    rng: np.random.Generator,
    trials: int = 1,
) -> tuple[NDArray[np.uint8], NDArray[np.uint8]]:
    """Draw (q, r) outcome strings for a fixed test subset t.

    The measurement stream is laid out as m test uniforms followed by n
    position uniforms per trial, so a single-trial call consumes the RNG
    exactly as a protocol run does.

    Returns:
        (q, r) with shapes (trials, m) and (trials, N - m).
    """
    t = np.asarray(t, dtype=np.int64)
    m = t.size
    mask = np.zeros(N, dtype=bool)
    mask[t] = True
    raw_idx = np.nonzero(~mask)[0]
    p1 = test_one_probabilities(model, params)
    rows = position_probabilities(model, params)
    k = model.n_walkers()
    if k is not None and k != N:
        raise ValueError(f"explicit source describes {k} walkers, protocol needs {N}")
    u_test = rng.random((trials, m))
    u_pos = rng.random((trials, N - m))
    p1_cols = p1[t] if p1.size > 1 else p1
    q = (u_test < p1_cols).astype(np.uint8)
    r = _draw_positions(rows, u_pos, raw_idx)
    return q, r


def test_measurement(model: SourceModel, params: WalkParams, seed: int, walker: int = 0) -> int:
    """One test-basis measurement of a single walker: 0 pass, 1 fail."""
    rng = np.random.default_rng(seed)
    p1 = test_one_probabilities(model, params)
    p = p1[walker] if p1.size > 1 else p1[0]
    return int(rng.random() < p)


def position_measurement(model: SourceModel, params: WalkParams, seed: int, walker: int = 0) -> int:
    """One position-basis measurement of a single walker, in {0..P-1}."""
    rng = np.random.default_rng(seed)
    rows = position_probabilities(model, params)
    row = rows[walker] if rows.shape[0] > 1 else rows[0]
    cdf = np.cumsum(row)
    cdf[-1] = 1.0
    return int(np.searchsorted(cdf, rng.random(), side="right"))


def choose_subset(N: int, m: int, seed: int) -> NDArray[np.int64]:
    """Uniform size-m subset of {0..N-1}, sorted; deterministic per seed."""
    if not 1 <= m <= N / 2:
        raise ValueError(f"m must satisfy 1 <= m <= N/2, got m={m}, N={N}")
    rng = np.random.default_rng(seed)
    if N <= 2_000_000 or m * 20 >= N:
        idx = rng.permutation(N)[:m]
    else:
        # sparse case: first m distinct values of an iid uniform stream
        chosen: set[int] = set()
        while len(chosen) < m:
            need = m - len(chosen)
            for v in rng.integers(0, N, size=need + need // 3 + 16).tolist():
                if len(chosen) >= m:
                    break
                chosen.add(v)
        idx = np.fromiter(chosen, dtype=np.int64, count=m)
    return np.sort(np.asarray(idx, dtype=np.int64))


def encode_raw(symbols: Sequence[int] | NDArray, P: int) -> NDArray[np.uint8]:
    """Fixed-width injective bit encoding of a P-ary string.

    Each symbol becomes ceil(log2 P) bits, most significant first.
    """
    if P < 2:
        raise ValueError(f"P must be >= 2, got {P}")
    symbols = np.asarray(symbols)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= P):
        raise ValueError("symbol out of range for alphabet")
    width = max(1, math.ceil(math.log2(P)))
    out = np.empty(symbols.size * width, dtype=np.uint8)
    chunk = 1 << 20
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint32)
    for start in range(0, symbols.size, chunk):
        block = symbols[start : start + chunk].astype(np.uint32)
        bits = (block[:, None] >> shifts[None, :]) & 1
        out[start * width : (start + block.size) * width] = bits.reshape(-1).astype(np.uint8)
    return out


def decode_raw(bits: NDArray, P: int) -> NDArray[np.int64]:
    """Inverse of encode_raw."""
    width = max(1, math.ceil(math.log2(P)))
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % width:
        raise ValueError(f"bit string length {bits.size} is not a multiple of width {width}")
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    symbols = bits.reshape(-1, width) @ weights
    if symbols.size and symbols.max() >= P:
        raise ValueError("decoded symbol out of range for alphabet")
    return symbols


@dataclass(frozen=True)
class ToeplitzSeed:
    """Seed bits defining the hashing matrix T[i, j] = bits[i - j + n_in - 1]."""

    bits: NDArray[np.uint8]

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or (bits.size and bits.max() > 1):
            raise ValueError("seed must be a flat bit array")
        object.__setattr__(self, "bits", bits)


def make_toeplitz_seed(n_in: int, ell: int, seed: int) -> ToeplitzSeed:
    """Draw the n_in + ell - 1 seed bits from a seeded RNG."""
    rng = np.random.default_rng(seed)
    return ToeplitzSeed(bits=rng.integers(0, 2, size=n_in + ell - 1, dtype=np.uint8))


def toeplitz_extract(
    input_bits: NDArray, seed: ToeplitzSeed | NDArray, ell: int
) -> NDArray[np.uint8]:
    """Hash input bits down to ell key bits with a seeded Toeplitz matrix.

    key[i] = XOR_j T[i, j] * input[j] with T[i, j] = seed[i - j + n_in - 1],
    which is row i of the full convolution of seed and input; the product is
    therefore computed as a convolution (FFT-based above a size threshold,
    with exact integer rounding checked).
    """
    x = np.asarray(input_bits, dtype=np.uint8)
    s = seed.bits if isinstance(seed, ToeplitzSeed) else np.asarray(seed, dtype=np.uint8)
    if ell < 0:
        raise ValueError(f"ell must be >= 0, got {ell}")
    if ell == 0:
        return np.zeros(0, dtype=np.uint8)
    n_in = x.size
    if n_in == 0:
        raise ValueError("input must be non-empty when ell > 0")
    if s.size != n_in + ell - 1:
        raise ValueError(f"seed length {s.size} != input length {n_in} + ell {ell} - 1")
    if n_in * ell <= _DIRECT_CONV_LIMIT:
        conv = np.convolve(s.astype(np.int64), x.astype(np.int64))
    else:
        approx = fftconvolve(s.astype(np.float64), x.astype(np.float64))
        conv = np.rint(approx).astype(np.int64)
        # 0/1 convolution coefficients are integers; FFT roundoff must be
        # far from the rounding boundary or the result cannot be trusted
        if np.max(np.abs(approx - conv)) > 0.01:
            raise ArithmeticError("FFT convolution precision loss in Toeplitz product")
    return (conv[n_in - 1 : n_in - 1 + ell] % 2).astype(np.uint8)


@dataclass(frozen=True)
class KeyDiagnostics:
    """Cheap sanity statistics of a key; not a security claim."""

    n_bits: int
    ones_fraction: float
    monobit_z: float
    runs: int


def key_diagnostics(key: NDArray) -> KeyDiagnostics:
    """Monobit z-score and runs count of a bit string."""
    key = np.asarray(key, dtype=np.uint8)
    if key.size == 0:
        raise ValueError("key is empty")
    ones = int(np.count_nonzero(key))
    n = key.size
    z = (2.0 * ones - n) / math.sqrt(n)
    runs = 1 + int(np.count_nonzero(np.diff(key)))
    return KeyDiagnostics(n_bits=n, ones_fraction=ones / n, monobit_z=z, runs=runs)


@dataclass(frozen=True)
class ProtocolRun:
    """Full record of one protocol execution.

    Aggregate runs (huge N) carry wt_q and position_counts instead of the
    explicit t, q, r strings, and never hold a key.
    """

    params: WalkParams
    sampling: SamplingParams
    seeds: Seeds
    wq: float
    wt_q: int
    report: RateReport
    aborted: bool
    aggregate: bool
    t: NDArray[np.int64] | None = None
    q: NDArray[np.uint8] | None = None
    r: NDArray[np.uint8] | None = None
    key: NDArray[np.uint8] | None = None
    position_counts: NDArray[np.int64] | None = None


def run_protocol(
    N: int,
    m: int,
    model: SourceModel,
    params: WalkParams,
    epsilon: float,
    seeds: Seeds,
) -> ProtocolRun:
    """Execute one full protocol run with explicit strings and extraction.

    Deterministic per (parameters, seeds): the subset stream draws t, the
    measurement stream draws m test bits then n position symbols, and the
    hash stream draws the Toeplitz seed.  Aborts (empty key) when the
    certified length is zero; aborting is a normal outcome.
    """
    if N > RAW_STRING_LIMIT:
        raise ValueError(f"N={N} exceeds the raw-string guard {RAW_STRING_LIMIT}; use run_protocol_aggregate")
    sampling = SamplingParams(N=N, m=m, epsilon=epsilon)
    t = choose_subset(N, m, seeds.subset)
    rng_measure = np.random.default_rng(seeds.measure)
    q, r = sample_joint_outcomes(model, params, t, N, rng_measure, trials=1)
    q, r = q[0], r[0]
    wt_q = int(np.count_nonzero(q))
    wq = wt_q / m
    report = key_length(RateInputs(sampling=sampling, P=params.P, gamma=gamma(params), wq=wq))
    counts = np.bincount(r, minlength=params.P).astype(np.int64)
    aborted = report.ell == 0
    key = np.zeros(0, dtype=np.uint8)
    if not aborted:
        input_bits = encode_raw(r, params.P)
        seed_bits = make_toeplitz_seed(input_bits.size, report.ell, seeds.hash)
        key = toeplitz_extract(input_bits, seed_bits, report.ell)
    return ProtocolRun(
        params=params,
        sampling=sampling,
        seeds=seeds,
        wq=wq,
        wt_q=wt_q,
        report=report,
        aborted=aborted,
        aggregate=False,
        t=t,
        q=q,
        r=r,
        key=key,
        position_counts=counts,
    )


def run_protocol_aggregate(
    N: int,
    m: int,
    Q: float,
    params: WalkParams,
    epsilon: float,
    seeds: Seeds,
) -> ProtocolRun:
    """Protocol run at scales where storing the raw string is infeasible.

    Only the depolarizing source is supported: the test weight is drawn
    binomially at the exact failure probability Q*(1 - 1/(2P)), position
    counts multinomially from the mixed outcome law, and no key is
    extracted.
    """
    if not 0.0 <= Q <= 1.0:
        raise ValueError(f"Q must lie in [0, 1], got {Q}")
    sampling = SamplingParams(N=N, m=m, epsilon=epsilon)
    model = SourceModel.depolarizing(Q)
    rng_measure = np.random.default_rng(seeds.measure)
    p1 = float(test_one_probabilities(model, params)[0])
    wt_q = int(rng_measure.binomial(m, p1))
    wq = wt_q / m
    rows = position_probabilities(model, params)
    counts = rng_measure.multinomial(N - m, rows[0]).astype(np.int64)
    report = key_length(RateInputs(sampling=sampling, P=params.P, gamma=gamma(params), wq=wq))
    return ProtocolRun(
        params=params,
        sampling=sampling,
        seeds=seeds,
        wq=wq,
        wt_q=wt_q,
        report=report,
        aborted=report.ell == 0,
        aggregate=True,
        position_counts=counts,
    )
