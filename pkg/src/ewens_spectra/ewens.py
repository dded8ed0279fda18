"""Ewens(theta) virtual permutations grown by the Chinese-restaurant rule.

Only the cycle structure is tracked: cycles are indexed by order of
appearance (increasing smallest element), which is all the eigenangle
statistics depend on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np


class RandomStream(Protocol):
    def random(self, size=None): ...


@dataclass(frozen=True)
class ThetaParam:
    theta: float

    def __post_init__(self):
        t = float(self.theta)
        if not math.isfinite(t) or t <= 0:
            raise ValueError(f"theta must be finite and > 0, got {self.theta!r}")
        object.__setattr__(self, "theta", t)

    def __float__(self) -> float:
        return self.theta


def as_theta(theta) -> ThetaParam:
    return theta if isinstance(theta, ThetaParam) else ThetaParam(theta)


@dataclass(frozen=True)
class CycleLengths:
    n: int
    lengths: tuple[int, ...]

    def __post_init__(self):
        lengths = tuple(int(v) for v in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if any(v < 1 for v in lengths):
            raise ValueError("cycle lengths must be >= 1")
        if sum(lengths) != self.n:
            raise ValueError(f"lengths sum to {sum(lengths)}, expected n={self.n}")

    @property
    def num_cycles(self) -> int:
        return len(self.lengths)

    def cycle_type(self) -> tuple[int, ...]:
        """Lengths sorted in decreasing order (an integer partition of n)."""
        return tuple(sorted(self.lengths, reverse=True))

    def to_json(self) -> str:
        return json.dumps(list(self.lengths))

    @classmethod
    def from_json(cls, text: str) -> "CycleLengths":
        lengths = json.loads(text)
        return cls(sum(lengths), tuple(lengths))


@dataclass(frozen=True)
class NormalizedCycles:
    values: tuple[float, ...]


def crp_grow(state: CycleLengths, theta, rng: RandomStream) -> CycleLengths:
    """Add element n+1 to the virtual permutation.

    It opens a new cycle with probability theta/(n+theta); otherwise it is
    inserted into cycle j with probability lengths[j]/(n+theta).
    """
    t = as_theta(theta).theta
    n = state.n
    x = float(rng.random()) * (n + t)
    if x < t:
        return CycleLengths(n + 1, state.lengths + (1,))
    x -= t
    acc = 0
    j = len(state.lengths) - 1
    for i, ell in enumerate(state.lengths):
        acc += ell
        if x < acc:
            j = i
            break
    lengths = list(state.lengths)
    lengths[j] += 1
    return CycleLengths(n + 1, tuple(lengths))


def sample_virtual(n_max: int, theta, rng: RandomStream) -> list[CycleLengths]:
    """Return the coupled cycle structures of sigma_1, ..., sigma_{n_max}."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    state = CycleLengths(1, (1,))
    out = [state]
    for _ in range(n_max - 1):
        state = crp_grow(state, theta, rng)
        out.append(state)
    return out


def normalize(state: CycleLengths) -> NormalizedCycles:
    return NormalizedCycles(tuple(float(Fraction(ell, state.n)) for ell in state.lengths))


def derived_r(theta) -> float:
    """Smallest r with E(y_j) <= r**j for all j under GEM(theta)."""
    t = as_theta(theta).theta
    return max(t / (t + 1.0), 1.0 / (t + 1.0))


def expected_stick(theta, j: int) -> float:
    t = as_theta(theta).theta
    return (t / (t + 1.0)) ** (j - 1) / (t + 1.0)


def ewens_type_probability(partition: Sequence[int], theta) -> float:
    """Ewens sampling formula: probability that sigma_n has the given cycle type."""
    t = as_theta(theta).theta
    n = sum(partition)
    counts: dict[int, int] = {}
    for part in partition:
        counts[part] = counts.get(part, 0) + 1
    # number of permutations with this type: n! / prod(j^{c_j} c_j!)
    log_perms = math.lgamma(n + 1)
    for j, c in counts.items():
        log_perms -= c * math.log(j) + math.lgamma(c + 1)
    log_rising = sum(math.log(t + i) for i in range(n))
    return math.exp(log_perms + len(partition) * math.log(t) - log_rising)


def integer_partitions(n: int, largest: int | None = None):
    """Yield the partitions of n as non-increasing tuples."""
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in integer_partitions(n - first, first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Vectorized growth over many independent trajectories.


class _BatchCRP:
    """Grow ``size`` independent virtual permutations in lock step."""

    def __init__(self, theta: float, size: int, rng: np.random.Generator, n_max: int):
        self.theta = theta
        self.rng = rng
        self.size = size
        # cycle indices stay far below 2**15 for any sensible theta
        self.owner = np.zeros((size, n_max), dtype=np.int16)
        self.lengths = np.zeros((size, 16), dtype=np.int64)
        self.lengths[:, 0] = 1
        self.k = np.ones(size, dtype=np.int64)
        self.n = 1
        self._rows = np.arange(size)

    def step(self):
        n, t = self.n, self.theta
        x = self.rng.random(self.size) * (n + t)
        new = x < t
        pick = np.minimum(np.floor(x - t).astype(np.int64), n - 1)
        pick[new] = 0
        cyc = self.owner[self._rows, pick].astype(np.int64)
        cyc[new] = self.k[new]
        self.k += new
        if self.k.max() > self.lengths.shape[1]:
            if self.lengths.shape[1] >= 2**14:
                raise OverflowError("too many cycles for the int16 owner table")
            pad = np.zeros_like(self.lengths)
            self.lengths = np.concatenate([self.lengths, pad], axis=1)
        self.owner[:, n] = cyc
        self.lengths[self._rows, cyc] += 1
        self.n = n + 1


def batch_cycle_counts(n: int, theta, size: int, rng: np.random.Generator) -> np.ndarray:
    """Cycle lengths (in order of appearance, zero padded) of ``size`` Ewens draws on S_n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    crp = _BatchCRP(as_theta(theta).theta, size, rng, n)
    for _ in range(n - 1):
        crp.step()
    width = int(crp.k.max())
    return crp.lengths[:, :width].copy()


def batch_trajectories(
    n_max: int,
    theta,
    size: int,
    rng: np.random.Generator,
    track: int = 3,
    track_from: int | None = None,
):
    """Grow trajectories to ``n_max`` and record the oscillation of y_j^{(n)}.

    Returns ``(lengths, oscillation)`` where ``lengths`` are the cycle lengths
    at ``n_max`` and ``oscillation[:, j]`` is max - min of y_{j+1}^{(n)} over
    ``n`` in ``[track_from, n_max]`` (NaN when ``track_from`` is None).
    """
    crp = _BatchCRP(as_theta(theta).theta, size, rng, n_max)
    lo = hi = None
    for _ in range(n_max - 1):
        crp.step()
        if track_from is not None and crp.n >= track_from:
            width = crp.lengths.shape[1]
            y = crp.lengths[:, : min(track, width)] / crp.n
            if y.shape[1] < track:
                y = np.pad(y, ((0, 0), (0, track - y.shape[1])))
            if lo is None:
                lo, hi = y.copy(), y.copy()
            else:
                np.minimum(lo, y, out=lo)
                np.maximum(hi, y, out=hi)
    width = int(crp.k.max())
    osc = np.full((size, track), np.nan) if lo is None else hi - lo
    return crp.lengths[:, :width].copy(), osc
