"""Independent reference implementations used only by the test suite.

Everything here is written as a straight, slow transcription of the math,
deliberately sharing no code with the package: dense matrix powers instead
of sparse stepping, arbitrary-precision arithmetic instead of float64,
exact big-integer combinatorics instead of log-gamma, and explicit GF(2)
matrix products instead of FFT convolution.
"""

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np

# ---------------------------------------------------------------------------
# Dense cycle-walk oracle


def walk_matrix(P: int) -> np.ndarray:
    """Full 2P x 2P one-step operator, built as shift @ (coin ⊗ identity)."""
    H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
    coin = np.kron(H, np.eye(P, dtype=complex))
    shift = np.zeros((2 * P, 2 * P), dtype=complex)
    for x in range(P):
        shift[0 * P + (x + 1) % P, 0 * P + x] = 1.0  # coin 0 moves +1
        shift[1 * P + (x - 1) % P, 1 * P + x] = 1.0  # coin 1 moves -1
    return shift @ coin


def evolve_dense(c: int, x: int, P: int, T: int) -> np.ndarray:
    """W^T |c,x> by dense matrix power."""
    start = np.zeros(2 * P, dtype=complex)
    start[c * P + x] = 1.0
    return np.linalg.matrix_power(walk_matrix(P), T) @ start


def position_probs_dense(state: np.ndarray) -> np.ndarray:
    P = state.size // 2
    mags = np.abs(state) ** 2
    return mags[:P] + mags[P:]


# ---------------------------------------------------------------------------
# Arbitrary-precision entropy / finite-key formula oracle


def entropy_d_hp(d: int, x) -> mpmath.mpf:
    """d-ary entropy at 60 decimal digits."""
    with mpmath.workdps(60):
        x = mpmath.mpf(x)
        if x == 0:
            return mpmath.mpf(0)
        if x == 1:
            return mpmath.log(d - 1) / mpmath.log(d)
        ln_d = mpmath.log(d)
        return (
            x * mpmath.log(d - 1) / ln_d
            - x * mpmath.log(x) / ln_d
            - (1 - x) * mpmath.log(1 - x) / ln_d
        )


def extended_entropy_d_hp(d: int, x) -> mpmath.mpf:
    with mpmath.workdps(60):
        x = mpmath.mpf(x)
        if x < 0:
            return mpmath.mpf(0)
        if x > 1 - mpmath.mpf(1) / d:
            return mpmath.mpf(1)
        return entropy_d_hp(d, x)


def delta_hp(N: int, m: int, epsilon) -> mpmath.mpf:
    with mpmath.workdps(60):
        eps = mpmath.mpf(epsilon)
        return mpmath.sqrt((N + 2) * mpmath.log(2 / eps**2) / (m * mpmath.mpf(N)))


def key_length_hp(N: int, m: int, epsilon, P: int, gamma, wq):
    """Final-string length, transcribed term by term at high precision.

    Returns (raw bits as float, clamped integer length).  The deviation
    estimate is the analysis' own formula; eta clamps at zero and the
    extended entropy clamp applies, matching the documented conventions.
    """
    with mpmath.workdps(60):
        gamma = mpmath.mpf(gamma)
        wq = mpmath.mpf(wq)
        eps = mpmath.mpf(epsilon)
        n = N - m
        delta = delta_hp(N, m, eps)
        eta = n * (1 - wq - delta)
        if eta < 0:
            eta = mpmath.mpf(0)
        d = 2 * P
        hbar = extended_entropy_d_hp(d, wq + delta)
        log2 = mpmath.log(2)
        term_minent = -eta * mpmath.log(gamma) / log2
        # verbatim base handling: divide by log_{2P}(2)
        term_penalty = n * hbar / (log2 / mpmath.log(d))
        term_eps = 2 * mpmath.log(1 / eps) / log2
        term_choose = mpmath.log(mpmath.binomial(N, m)) / log2
        raw = term_minent - term_penalty - term_eps - term_choose
        ell = max(0, int(mpmath.floor(raw)))
        return float(raw), ell


# ---------------------------------------------------------------------------
# Exact combinatorics


def log2_binomial_exact(N: int, m: int) -> float:
    """log2 of the exact big-integer binomial coefficient."""
    return math.log2(math.comb(N, m)) if 0 < m < N else 0.0


def hamming_ball_count(d: int, n: int, radius: int) -> int:
    """Exact number of length-n words over a d-letter alphabet with weight <= radius."""
    radius = min(radius, n)
    return sum(math.comb(n, k) * (d - 1) ** k for k in range(radius + 1))


def hamming_ball_count_enumerated(d: int, n: int, radius: int) -> int:
    """Same count by brute enumeration of all d^n words (tiny n only)."""
    total = 0
    for word in itertools.product(range(d), repeat=n):
        if sum(1 for s in word if s != 0) <= radius:
            total += 1
    return total


# ---------------------------------------------------------------------------
# Dense GF(2) hashing oracle


def toeplitz_matrix_dense(seed_bits: np.ndarray, n_in: int, ell: int) -> np.ndarray:
    """T[i, j] = seed[i - j + n_in - 1], the documented indexing."""
    assert seed_bits.size == n_in + ell - 1
    T = np.zeros((ell, n_in), dtype=np.uint8)
    for i in range(ell):
        for j in range(n_in):
            T[i, j] = seed_bits[i - j + n_in - 1]
    return T


def toeplitz_apply_dense(input_bits: np.ndarray, seed_bits: np.ndarray, ell: int) -> np.ndarray:
    if ell == 0:
        return np.zeros(0, dtype=np.uint8)
    T = toeplitz_matrix_dense(seed_bits, input_bits.size, ell).astype(np.int64)
    return ((T @ input_bits.astype(np.int64)) % 2).astype(np.uint8)


# ---------------------------------------------------------------------------
# Subset-sampling recount and exact joint outcome enumeration


def weight_gap_recount(word, t) -> Fraction:
    """|w(q_t) - w(q_-t)| by explicit loops, in exact rational arithmetic."""
    t = set(int(i) for i in t)
    inside = [word[i] for i in sorted(t)]
    outside = [word[i] for i in range(len(word)) if i not in t]
    w_in = Fraction(sum(1 for s in inside if s != 0), len(inside))
    w_out = Fraction(sum(1 for s in outside if s != 0), len(outside))
    return abs(w_in - w_out)


def joint_outcome_distribution(test_one_probs, position_probs):
    """Exact product-form law of (test string, position string).

    test_one_probs: per-tested-walker probability of test outcome 1.
    position_probs: per-raw-walker outcome row over the position alphabet.
    Returns {(q tuple, r tuple): probability}.
    """
    m = len(test_one_probs)
    P = len(position_probs[0]) if len(position_probs) else 0
    dist = {}
    for q in itertools.product((0, 1), repeat=m):
        pq = 1.0
        for bit, p1 in zip(q, test_one_probs):
            pq *= p1 if bit else (1.0 - p1)
        for r in itertools.product(range(P), repeat=len(position_probs)):
            pr = pq
            for sym, row in zip(r, position_probs):
                pr *= row[sym]
            dist[(q, r)] = pr
    return dist
