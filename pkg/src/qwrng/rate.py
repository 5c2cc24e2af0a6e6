"""Finite-key calculator: extractable key length, rate curves, and limits.

The key length charges the raw string's certified min-entropy against three
costs: the entropy penalty for the tolerated test-weight deviation, the
security parameter, and the randomness spent choosing the test subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .sampling import SamplingParams, extended_entropy_d, log2_binomial

MRule = Callable[[int], int]


@dataclass(frozen=True)
class RateInputs:
    """Everything the key-length formula consumes.

    sampling: the (N, m, epsilon, delta) context.
    P: position dimension; the raw alphabet has size P, the walker space 2P.
    gamma: largest single-position probability of the evolved walker.
    wq: observed relative weight of the test string.
    """

    sampling: SamplingParams
    P: int
    gamma: float
    wq: float

    def __post_init__(self) -> None:
        if not isinstance(self.P, (int, np.integer)) or self.P < 2:
            raise ValueError(f"P must be an integer >= 2, got {self.P!r}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if not 0.0 <= self.wq <= 1.0:
            raise ValueError(f"wq must lie in [0, 1], got {self.wq!r}")


@dataclass(frozen=True)
class RateReport:
    """Key length with its full term breakdown.

    raw_ell = min_entropy_bits - entropy_penalty_bits - epsilon_bits
              - subset_cost_bits, and ell = max(0, floor(raw_ell)).
    failure_probability and security_distance restate the guarantee attached
    to the reported length: the protocol either aborts or, except with the
    failure probability, yields a key within the stated trace distance of
    ideal uniform randomness.
    """

    ell: int
    raw_ell: float
    eta_q: float
    failure_probability: float
    security_distance: float
    min_entropy_bits: float
    entropy_penalty_bits: float
    epsilon_bits: float
    subset_cost_bits: float


def key_length(inputs: RateInputs) -> RateReport:
    """Evaluate the extractable key length for one parameter point.

    Returns:
        RateReport with ell = max(0, floor(raw_ell)) and every term of the
        breakdown; eta_q = n*(1 - wq - delta) is clamped at zero, and the
        deviation penalty uses the clamped 2P-ary entropy converted to bits
        (multiplication by log2(2P)).
    """
    sp = inputs.sampling
    n = sp.n
    d = 2 * inputs.P
    eta_q = max(0.0, n * (1.0 - inputs.wq - sp.delta))
    min_entropy_bits = -eta_q * math.log2(inputs.gamma)
    entropy_penalty_bits = n * extended_entropy_d(d, inputs.wq + sp.delta) * math.log2(d)
    epsilon_bits = -2.0 * math.log2(sp.epsilon)
    subset_cost_bits = log2_binomial(sp.N, sp.m)
    raw_ell = min_entropy_bits - entropy_penalty_bits - epsilon_bits - subset_cost_bits
    return RateReport(
        ell=max(0, math.floor(raw_ell)),
        raw_ell=raw_ell,
        eta_q=eta_q,
        failure_probability=sp.epsilon ** (1.0 / 3.0),
        security_distance=5.0 * sp.epsilon + 4.0 * sp.epsilon ** (1.0 / 3.0),
        min_entropy_bits=min_entropy_bits,
        entropy_penalty_bits=entropy_penalty_bits,
        epsilon_bits=epsilon_bits,
        subset_cost_bits=subset_cost_bits,
    )


@dataclass(frozen=True)
class CurvePoint:
    """One rate-curve sample: configuration echo plus ell and ell/N."""

    N: int
    m: int
    delta: float
    wq: float
    ell: int
    rate: float


def resolve_m_rule(rule: str | MRule) -> MRule:
    """Turn an m-rule spec into a callable N -> m.

    Accepts "sqrt" (m = floor(sqrt(N))), "fixed:<k>" (constant m = k), or
    any callable.
    """
    if callable(rule):
        return rule
    if rule == "sqrt":
        return lambda N: math.isqrt(N)
    if rule.startswith("fixed:"):
        try:
            k = int(rule.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad fixed m-rule {rule!r}") from exc
        if k < 1:
            raise ValueError(f"fixed m-rule needs k >= 1, got {k}")
        return lambda N: k
    raise ValueError(f"unknown m-rule {rule!r}; expected 'sqrt', 'fixed:<k>', or a callable")


def default_n_grid(start: float = 1e4, stop: float = 1e12, count: int = 25) -> list[int]:
    """Logarithmic N grid, deduplicated after integer rounding."""
    if count < 1 or start < 2 or stop < start:
        raise ValueError(f"bad grid spec start={start}, stop={stop}, count={count}")
    raw = np.logspace(math.log10(start), math.log10(stop), count)
    grid = sorted({int(round(x)) for x in raw})
    return grid


def rate_curve(
    P: int,
    Q: float,
    epsilon: float,
    N_grid: Sequence[int],
    m_rule: str | MRule = "sqrt",
    gamma: float | None = None,
    paper_compat: bool = True,
) -> list[CurvePoint]:
    """Sweep the key rate ell/N over an increasing N grid.

    Args:
        P: position dimension.
        Q: depolarizing noise level in [0, 1).
        epsilon: security parameter.
        N_grid: strictly increasing signal counts.
        m_rule: test-subset rule; default m = floor(sqrt(N)).
        gamma: walker peak probability; required here (callers that want the
            scan minimum should pass gamma_scan's result).
        paper_compat: use the expected test weight wq = Q when True; when
            False use the exact test-failure probability Q*(1 - 1/(2P)).

    Returns:
        One CurvePoint per grid value.
    """
    if not 0.0 <= Q < 1.0:
        raise ValueError(f"Q must lie in [0, 1), got {Q}")
    if gamma is None:
        raise ValueError("gamma is required; pass a measured or scanned value")
    grid = [int(N) for N in N_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("N_grid must be strictly increasing")
    rule = resolve_m_rule(m_rule)
    wq = Q if paper_compat else Q * (1.0 - 1.0 / (2 * P))
    points = []
    for N in grid:
        m = rule(N)
        sp = SamplingParams(N=N, m=m, epsilon=epsilon)
        report = key_length(RateInputs(sampling=sp, P=P, gamma=gamma, wq=wq))
        points.append(
            CurvePoint(N=N, m=m, delta=sp.delta, wq=wq, ell=report.ell, rate=report.ell / N)
        )
    return points


def asymptotic_rate(P: int, Q: float, gamma: float) -> float:
    """Large-N limit of the rate with a vanishing test fraction.

    With m = sqrt(N) the deviation and the per-signal overheads all vanish,
    leaving (1-Q)*(-log2 gamma) - H_2P(Q)*log2(2P), clamped at zero.
    """
    if not 0.0 <= Q < 1.0:
        raise ValueError(f"Q must lie in [0, 1), got {Q}")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    d = 2 * P
    value = (1.0 - Q) * (-math.log2(gamma)) - extended_entropy_d(d, Q) * math.log2(d)
    return max(0.0, value)
