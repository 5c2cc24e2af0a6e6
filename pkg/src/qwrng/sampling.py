"""Classical statistical toolbox for the finite-key analysis.

Covers d-ary entropies with their clamped extension, relative Hamming
weights and good-set membership for subset sampling, the sampling deviation
delta with its error bound, log-binomial accounting, and an empirical
Monte-Carlo validator for the sampling bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln


@dataclass(frozen=True)
class SamplingParams:
    """Finite-key statistical context: N total signals, m tested, epsilon.

    delta is derived on construction and always matches the closed form
    sqrt((N+2) * ln(2/eps^2) / (m*N)).
    """

    N: int
    m: int
    epsilon: float
    delta: float = field(init=False)

    def __post_init__(self) -> None:
        if not isinstance(self.N, (int, np.integer)) or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        if not isinstance(self.m, (int, np.integer)) or not 1 <= self.m <= self.N / 2:
            raise ValueError(f"m must satisfy 1 <= m <= N/2, got m={self.m!r}, N={self.N}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        object.__setattr__(self, "delta", sampling_delta(self.N, self.m, self.epsilon))

    @property
    def n(self) -> int:
        return self.N - self.m


@dataclass(frozen=True)
class Word:
    """A string over the alphabet {0..d-1}."""

    symbols: tuple[int, ...]
    d: int

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.d}")
        symbols = tuple(int(s) for s in self.symbols)
        if any(not 0 <= s < self.d for s in symbols):
            raise ValueError("word contains symbols outside the alphabet")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)


def _as_symbol_array(word: Word | Sequence[int] | NDArray) -> NDArray[np.int64]:
    symbols = word.symbols if isinstance(word, Word) else word
    return np.asarray(symbols, dtype=np.int64)


def relative_weight(word: Word | Sequence[int] | NDArray) -> float:
    """Fraction of nonzero symbols in a word."""
    symbols = _as_symbol_array(word)
    if symbols.size == 0:
        raise ValueError("relative weight of an empty word is undefined")
    return float(np.count_nonzero(symbols)) / symbols.size


def entropy_d(d: int, x: float) -> float:
    """d-ary entropy h_d(x) = x*log_d(d-1) - x*log_d(x) - (1-x)*log_d(1-x).

    The x -> 0 and x -> 1 limits are taken by continuity.
    """
    if d < 2:
        raise ValueError(f"alphabet size must be >= 2, got {d}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    ln_d = math.log(d)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return math.log(d - 1) / ln_d
    return (
        x * math.log(d - 1) / ln_d
        - x * math.log(x) / ln_d
        - (1.0 - x) * math.log(1.0 - x) / ln_d
    )


def extended_entropy_d(d: int, x: float) -> float:
    """Clamped entropy: 0 below x=0, h_d on [0, 1-1/d], 1 above 1-1/d."""
    if d < 2:
        raise ValueError(f"alphabet size must be >= 2, got {d}")
    if x < 0.0:
        return 0.0
    if x > 1.0 - 1.0 / d:
        return 1.0
    return entropy_d(d, x)


def sampling_delta(N: int, m: int, epsilon: float) -> float:
    """Deviation delta = sqrt((N+2) * ln(2/eps^2) / (m*N)).

    This is the tolerance at which a uniform size-m test subset certifies
    the untested remainder, at confidence eps^2.
    """
    if not 1 <= m <= N / 2:
        raise ValueError(f"m must satisfy 1 <= m <= N/2, got m={m}, N={N}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    # ln(2/eps^2) written as ln 2 - 2 ln eps so tiny eps cannot underflow
    log_term = math.log(2.0) - 2.0 * math.log(epsilon)
    return math.sqrt((N + 2) * log_term / (m * float(N)))


def classical_sampling_error(N: int, m: int, delta: float) -> float:
    """Failure bound 2*exp(-delta^2 * m*(n+m) / (m+n+2)) with n = N - m."""
    if not 1 <= m <= N / 2:
        raise ValueError(f"m must satisfy 1 <= m <= N/2, got m={m}, N={N}")
    if delta < 0.0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    n = N - m
    exponent = delta * delta * m * float(n + m) / (m + n + 2)
    return 2.0 * math.exp(-exponent)


def good_set_member(
    word: Word | Sequence[int] | NDArray,
    t: Sequence[int] | NDArray,
    delta: float,
) -> bool:
    """Whether |w(q_t) - w(q_-t)| <= delta for test subset t (0-based indices)."""
    symbols = _as_symbol_array(word)
    t = np.asarray(t, dtype=np.int64)
    if t.size == 0 or t.size >= symbols.size:
        raise ValueError("subset and its complement must both be non-empty")
    if np.unique(t).size != t.size:
        raise ValueError("subset indices must be distinct")
    if np.any(t < 0) or np.any(t >= symbols.size):
        raise ValueError("subset index out of range")
    if delta < 0.0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    mask = np.zeros(symbols.size, dtype=bool)
    mask[t] = True
    k_in = int(np.count_nonzero(symbols[mask]))
    k_out = int(np.count_nonzero(symbols[~mask]))
    n_in = t.size
    n_out = symbols.size - n_in
    # integer-scaled comparison: exact boundary cases must not flip on
    # float division (|k_in/n_in - k_out/n_out| <= delta)
    return abs(k_in * n_out - k_out * n_in) <= delta * n_in * n_out


def log2_binomial(N: int, m: int) -> float:
    """log2 of the binomial coefficient C(N, m), via log-gamma."""
    if m < 0 or N < 0 or m > N:
        raise ValueError(f"need 0 <= m <= N, got N={N}, m={m}")
    if m == 0 or m == N:
        return 0.0
    return float((gammaln(N + 1) - gammaln(m + 1) - gammaln(N - m + 1)) / math.log(2.0))


_WORD_GENERATORS = ("constant", "half_heavy", "blocks", "random")


def _make_word(kind: str, N: int, d: int, rng: np.random.Generator) -> NDArray[np.uint8]:
    if kind == "constant":
        return np.ones(N, dtype=np.uint8)
    if kind == "half_heavy":
        word = np.zeros(N, dtype=np.uint8)
        word[: N // 2] = 1
        return word
    if kind == "blocks":
        # contiguous runs of nonzero symbols, half the string heavy in total
        word = np.zeros(N, dtype=np.uint8)
        run = max(1, N // 8)
        start = 0
        while start < N:
            word[start : start + run] = 1
            start += 2 * run
        return word
    if kind == "random":
        return rng.integers(0, d, size=N).astype(np.uint8)
    raise ValueError(f"unknown word generator {kind!r}; options: {_WORD_GENERATORS}")


def monte_carlo_sampling_check(
    N: int,
    m: int,
    d: int,
    delta: float,
    trials: int,
    seed: int,
    generator: str = "half_heavy",
) -> float:
    """Empirical failure rate of uniform subset sampling against delta.

    Each trial builds a word from the named generator, draws a uniform
    size-m subset, and flags failure when |w(q_t) - w(q_-t)| > delta.
    The returned rate is bounded by classical_sampling_error(N, m, delta)
    up to statistical fluctuation, for every generator.

    Args:
        N: word length.
        m: test subset size (m <= N/2).
        d: alphabet size (only the random generator uses symbols > 1).
        delta: tolerated weight gap.
        trials: number of Monte-Carlo trials.
        seed: RNG seed; the check is deterministic per seed.
        generator: one of "constant", "half_heavy", "blocks", "random".

    Returns:
        Fraction of trials where the weight gap exceeded delta.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 1 <= m <= N / 2:
        raise ValueError(f"m must satisfy 1 <= m <= N/2, got m={m}, N={N}")
    rng = np.random.default_rng(seed)
    failures = 0
    chunk = max(1, min(trials, 50_000_000 // max(N, 1)))
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        if generator == "random":
            words = rng.integers(0, d, size=(size, N)).astype(np.uint8)
        else:
            words = np.tile(_make_word(generator, N, d, rng), (size, 1))
        # permuting the word and testing the first m indices is
        # distribution-identical to drawing a uniform size-m subset
        rng.permuted(words, axis=1, out=words)
        nz = words != 0
        k_in = np.count_nonzero(nz[:, :m], axis=1).astype(np.int64)
        k_out = np.count_nonzero(nz[:, m:], axis=1).astype(np.int64)
        # same integer-scaled tie handling as good_set_member
        lhs = np.abs(k_in * (N - m) - k_out * m)
        failures += int(np.count_nonzero(lhs > delta * m * (N - m)))
        done += size
    return failures / trials
