"""State-vector simulation of the coined discrete-time walk on a P-cycle.

The walker lives in a 2P-dimensional space (coin tensor position), flattened
as index i = c*P + x for coin c in {0,1} and position x in {0..P-1}.  One
step applies the Hadamard coin blockwise, then the coin-conditioned shift:
coin 0 moves x -> x+1 (mod P), coin 1 moves x -> x-1 (mod P).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

WalkState = NDArray[np.complex128]
PositionDistribution = NDArray[np.float64]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

# Coin unitary, fixed by design; kept as a named constant for reference.
HADAMARD = np.array([[_INV_SQRT2, _INV_SQRT2], [_INV_SQRT2, -_INV_SQRT2]])


@dataclass(frozen=True)
class WalkParams:
    """Walk configuration: cycle size P (>= 2) and step count T (>= 0)."""

    P: int
    T: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.P, (int, np.integer)) or self.P < 2:
            raise ValueError(f"P must be an integer >= 2, got {self.P!r}")
        if not isinstance(self.T, (int, np.integer)) or self.T < 0:
            raise ValueError(f"T must be an integer >= 0, got {self.T!r}")

    @property
    def dim(self) -> int:
        return 2 * self.P


def basis_state(c: int, x: int, P: int) -> WalkState:
    """Computational basis vector |c,x> as a length-2P complex array."""
    if c not in (0, 1):
        raise ValueError(f"coin index must be 0 or 1, got {c}")
    if not 0 <= x < P:
        raise ValueError(f"position must lie in [0, {P}), got {x}")
    state = np.zeros(2 * P, dtype=np.complex128)
    state[c * P + x] = 1.0
    return state


def walk_step(state: WalkState, params: WalkParams) -> WalkState:
    """Apply one walk step S*(H (x) I_P) to a state (T in params is ignored).

    Accepts a single state of shape (2P,) or a batch of shape (2P, k);
    the step acts column-wise on batches.  Norm is preserved.
    """
    P = params.P
    if state.shape[0] != 2 * P:
        raise ValueError(f"state has leading dimension {state.shape[0]}, expected {2 * P}")
    top, bot = state[:P], state[P:]
    plus = (top + bot) * _INV_SQRT2
    minus = (top - bot) * _INV_SQRT2
    out = np.empty_like(state, dtype=np.complex128)
    out[:P] = np.roll(plus, 1, axis=0)    # coin 0: x -> x+1
    out[P:] = np.roll(minus, -1, axis=0)  # coin 1: x -> x-1
    return out


def walk_step_adjoint(state: WalkState, params: WalkParams) -> WalkState:
    """Apply the inverse step (H (x) I_P)*S^{-1}; undoes walk_step exactly."""
    P = params.P
    if state.shape[0] != 2 * P:
        raise ValueError(f"state has leading dimension {state.shape[0]}, expected {2 * P}")
    top = np.roll(state[:P], -1, axis=0)
    bot = np.roll(state[P:], 1, axis=0)
    out = np.empty_like(state, dtype=np.complex128)
    out[:P] = (top + bot) * _INV_SQRT2
    out[P:] = (top - bot) * _INV_SQRT2
    return out


def evolve(c: int, x: int, params: WalkParams) -> WalkState:
    """Evolve the basis state |c,x> through T walk steps.

    Args:
        c: coin index, 0 or 1.
        x: position index in [0, P).
        params: walk configuration supplying P and T.

    Returns:
        The length-2P state vector after T steps.
    """
    state = basis_state(c, x, params.P)
    for _ in range(params.T):
        state = walk_step(state, params)
    return state


def position_distribution(state: WalkState) -> PositionDistribution:
    """Trace out the coin: probs[z] = |amp(0,z)|^2 + |amp(1,z)|^2."""
    P = state.shape[0] // 2
    mags = np.abs(state) ** 2
    return np.asarray(mags[:P] + mags[P:], dtype=np.float64)


def gamma(params: WalkParams) -> float:
    """Largest single-position probability of the walker evolved from |0,0>."""
    return float(np.max(position_distribution(evolve(0, 0, params))))


def gamma_series(P: int, T_max: int) -> NDArray[np.float64]:
    """gamma for every T in 1..T_max, computed with one step per T.

    The state is advanced incrementally, so the whole series costs
    O(T_max * P) rather than O(T_max^2 * P).
    """
    if T_max < 1:
        raise ValueError(f"T_max must be >= 1, got {T_max}")
    params = WalkParams(P=P, T=0)
    state = basis_state(0, 0, P)
    series = np.empty(T_max, dtype=np.float64)
    for t in range(T_max):
        state = walk_step(state, params)
        series[t] = np.max(position_distribution(state))
    return series


def gamma_scan(P: int, T_max: int) -> tuple[int, float]:
    """Minimize gamma over step counts T in [1, T_max].

    Returns:
        (T_star, gamma_star): the minimizing T (smallest on ties) and the
        minimum gamma value.
    """
    series = gamma_series(P, T_max)
    t_star = int(np.argmin(series)) + 1  # argmin takes the first minimum
    return t_star, float(series[t_star - 1])


def walk_basis_fidelity(state: WalkState, params: WalkParams) -> float:
    """Probability |<w_0|state>|^2 of the pass outcome of the test measurement."""
    w0 = evolve(0, 0, params)
    return float(np.abs(np.vdot(w0, state)) ** 2)


def uncertainty_overlap(params: WalkParams, restrict_x: int | None = None) -> float:
    """Largest squared operator norm among the test/position POVM products.

    The test POVM elements are W_0 = |w_0><w_0| and W_1 = I - W_0; the
    position POVM elements are Z_y = I_C (x) |y><y|.  All are projectors,
    equal to their own square roots, so the quantity is
    max_{x,y} ||W_x Z_y||_op^2.  Since Z_y = B_y B_y^dagger for the 2P x 2
    isometry B_y holding basis columns (0,y) and (1,y), each W_x Z_y shares
    its singular values with the 2P x 2 matrix W_x B_y, which is decomposed
    directly.

    Args:
        params: walk configuration (the evolved |w_0> depends on P and T).
        restrict_x: optionally fix the test-POVM index (0 or 1) and maximize
            over y only.  Default maximizes over both indices.

    Returns:
        The maximal squared operator norm.
    """
    P = params.P
    w0 = evolve(0, 0, params)
    W0 = np.outer(w0, w0.conj())
    elements = {0: W0, 1: np.eye(2 * P, dtype=np.complex128) - W0}
    if restrict_x is not None:
        if restrict_x not in elements:
            raise ValueError(f"restrict_x must be 0 or 1, got {restrict_x}")
        elements = {restrict_x: elements[restrict_x]}
    best = 0.0
    for W in elements.values():
        for y in range(P):
            reduced = W[:, [y, P + y]]
            sigma_max = np.linalg.svd(reduced, compute_uv=False)[0]
            best = max(best, float(sigma_max) ** 2)
    return best


def min_entropy_of_distribution(p: NDArray[np.float64]) -> float:
    """Min-entropy -log2(max_x p_x) in bits of a probability vector."""
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0:
        raise ValueError("empty probability vector")
    if np.any(p < -1e-12):
        raise ValueError("probability vector has negative entries")
    total = float(np.sum(p))
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"probability vector sums to {total}, expected 1")
    return float(-np.log2(np.max(p)))
