"""Jump process generated by -D^s on the leaves, and Monte Carlo checks of p_t.

Paths use counter-based random numbers: draw ``2k`` of path ``i`` (holding
time) and draw ``2k + 1`` (jump target) are pure functions of
``(seed, i, k)``.  Chunking or threading therefore never changes a result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import operator as vp
from ._rng import stream_keys, uniforms
from .operator import OperatorParams
from .tree import TruncatedTree


@dataclass
class JumpRates:
    rates: np.ndarray                  # exit rate of each leaf, equal to diag(M)
    jump: np.ndarray                   # jump[i, k]: probability of jumping i -> k
    cumulative: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return len(self.rates)


def build_rates(tree: TruncatedTree, params: OperatorParams) -> JumpRates:
    M = vp.assemble_matrix(tree, params).entries
    r = np.diag(M).copy()
    if np.any(r <= 0):
        raise ValueError("every state needs a positive exit rate")
    Q = -M / r[:, None]
    np.fill_diagonal(Q, 0.0)
    cum = np.cumsum(Q, axis=1)
    cum[:, -1] = 1.0
    return JumpRates(r, Q, cum)


@dataclass
class PathSample:
    initial: int
    times: list[float]
    states: list[int]     # states[0] is the initial state; states[k] entered at times[k-1]

    def state_at(self, t: float) -> int:
        return self.states[int(np.searchsorted(self.times, t, side="right"))]


def _next_state(cum_rows, u):
    return np.sum(cum_rows <= u[:, None], axis=1)


def sample_path(rates: JumpRates, x0: int, T: float, seed: int, index: int = 0) -> PathSample:
    """One path on [0, T], identical to path ``index`` of :func:`sample_paths`."""
    key = stream_keys(seed, [index])
    state, t, k = int(x0), 0.0, 0
    times, states = [], [state]
    while True:
        u_hold = uniforms(key, 2 * k)[0]
        t += -np.log1p(-u_hold) / rates.rates[state]
        if t > T:
            return PathSample(int(x0), times, states)
        u_jump = uniforms(key, 2 * k + 1)
        state = int(_next_state(rates.cumulative[[state]], u_jump)[0])
        times.append(t)
        states.append(state)
        k += 1


def _final_states(rates, x0, T, seed, indices):
    keys = stream_keys(seed, indices)
    state = np.full(len(indices), x0, dtype=np.int64)
    clock = np.zeros(len(indices))
    alive = np.arange(len(indices))
    k = 0
    while alive.size:
        u_hold = uniforms(keys[alive], 2 * k)
        clock[alive] += -np.log1p(-u_hold) / rates.rates[state[alive]]
        alive = alive[clock[alive] <= T]
        if alive.size:
            u_jump = uniforms(keys[alive], 2 * k + 1)
            state[alive] = _next_state(rates.cumulative[state[alive]], u_jump)
        k += 1
    return state


@dataclass
class Empirical:
    counts: np.ndarray
    n_paths: int
    T: float
    x0: int

    @property
    def distribution(self) -> np.ndarray:
        return self.counts / self.n_paths


def sample_paths(rates: JumpRates, x0: int, T: float, n_paths: int, seed: int,
                 chunk: int = 65536, n_jobs: int = 1) -> Empirical:
    """Empirical law at time T of ``n_paths`` independent paths started at ``x0``."""
    if T <= 0:
        raise ValueError("T must be positive")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    starts = range(0, n_paths, chunk)

    def run(start):
        idx = np.arange(start, min(start + chunk, n_paths), dtype=np.uint64)
        return np.bincount(_final_states(rates, x0, T, seed, idx), minlength=rates.n_states)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    return Empirical(np.sum(parts, axis=0), n_paths, T, int(x0))


def tv_distance(p, q) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"distributions have shapes {p.shape} and {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())
