"""GEM(theta) stick breaking and the scale-invariant Poisson process.

The Poisson process with intensity theta/x on (0, inf) is built on the log
scale, where it is a homogeneous process of rate theta: points in (eps, 1)
are exp(-T_i) and points in [1, x_max) are exp(S_i), with T_i, S_i partial
sums of independent Exp(theta) gaps.

Labels follow the convention

    ... < X_3 < X_2 < X_1 < 1 <= X_0 < X_-1 < ...

and Y_k = X_{k-1} - X_k.  ``inner`` holds X_1, X_2, ... (decreasing) and
``outer`` holds X_0, X_-1, ... (increasing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import TruncationOverflow
from .ewens import CycleLengths, as_theta

DEFAULT_TAIL_BOUND = 1e-6
DEFAULT_STICK_CAP = 10**6
_CHUNK = 64


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GemSample:
    sticks: np.ndarray
    residual: float
    u_trace: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "sticks", _frozen(self.sticks))
        if self.u_trace is not None:
            object.__setattr__(self, "u_trace", _frozen(self.u_trace))
        object.__setattr__(self, "residual", float(self.residual))

    def __len__(self) -> int:
        return len(self.sticks)

    def to_dict(self) -> dict:
        out = {"sticks": self.sticks.tolist(), "residual": self.residual}
        if self.u_trace is not None:
            out["u_trace"] = self.u_trace.tolist()
        return out


@dataclass(frozen=True)
class PhasedGem:
    gem: GemSample
    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", _frozen(self.phases))
        if len(self.phases) != len(self.gem):
            raise ValueError("one phase per stick is required")

    def to_dict(self) -> dict:
        return {**self.gem.to_dict(), "phases": self.phases.tolist()}


@dataclass(frozen=True)
class PoissonPointSample:
    inner: np.ndarray
    outer: np.ndarray
    epsilon: float
    x_max: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "inner", _frozen(self.inner))
        object.__setattr__(self, "outer", _frozen(self.outer))

    def chain(self) -> np.ndarray:
        """All observed points in increasing order: X_m < ... < X_1 < X_0 < X_-1 < ..."""
        return np.concatenate([self.inner[::-1], self.outer])

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "epsilon": self.epsilon,
            "x_max": self.x_max,
            "inner": self.inner.tolist(),
            "outer": self.outer.tolist(),
        }


@dataclass(frozen=True)
class CoupledSets:
    v_set: np.ndarray
    w_set: np.ndarray
    # Spacings Y_k with k <= 1 that are < 1, and 1 - X_1 (if observed):
    # the only candidates for the symmetric difference.
    candidates: np.ndarray = field(default_factory=lambda: np.empty(0))

    def symmetric_difference(self) -> np.ndarray:
        return np.setxor1d(self.v_set, self.w_set)


# ---------------------------------------------------------------------------
# Stick breaking


def gem_from_u(u_trace) -> GemSample:
    """Sticks y_j = U_1...U_{j-1}(1-U_j) and residual U_1...U_J from given U's."""
    u = np.asarray(u_trace, dtype=float)
    prod = np.cumprod(u)
    before = np.concatenate([[1.0], prod[:-1]])
    residual = float(prod[-1]) if len(u) else 1.0
    return GemSample(before * (1.0 - u), residual, u)


def _beta_theta_1(v: np.ndarray, theta: float):
    """U = V**(1/theta) and 1 - U, both without cancellation."""
    log_u = np.log(v) / theta
    return np.exp(log_u), -np.expm1(log_u), log_u


def sample_gem(
    theta,
    tail_bound: float = DEFAULT_TAIL_BOUND,
    scale_hint: float = 1.0,
    rng: np.random.Generator = None,
    cap: int = DEFAULT_STICK_CAP,
    keep_trace: bool = True,
) -> GemSample:
    """Break sticks with U_j ~ Beta(theta, 1) until residual * scale_hint < tail_bound."""
    t = as_theta(theta).theta
    if tail_bound <= 0:
        raise ValueError("tail_bound must be > 0")
    if scale_hint < 1:
        raise ValueError("scale_hint must be >= 1")
    limit = tail_bound / scale_hint
    us = []
    res = 1.0
    total = 0
    while True:
        v = 1.0 - rng.random(_CHUNK)  # in (0, 1]
        u = np.exp(np.log(v) / t)
        prod = np.cumprod(np.concatenate([[res], u]))[1:]  # multiplication order of one global cumprod
        hit = np.nonzero(prod < limit)[0]
        take = hit[0] + 1 if len(hit) else _CHUNK
        us.append(u[:take])
        total += take
        res = float(prod[take - 1])
        if len(hit):
            break
        if total >= cap:
            raise TruncationOverflow(f"more than {cap} sticks needed (theta={t}, tail_bound={tail_bound})")
    # same arithmetic as gem_from_u, so the trace reproduces the sticks exactly
    g = gem_from_u(np.concatenate(us))
    return g if keep_trace else GemSample(g.sticks, g.residual)


def sample_phased_gem(theta, tail_bound=DEFAULT_TAIL_BOUND, scale_hint=1.0, rng=None) -> PhasedGem:
    stick_rng, phase_rng = rng.spawn(2)
    gem = sample_gem(theta, tail_bound, scale_hint, stick_rng)
    return PhasedGem(gem, phase_rng.random(len(gem)))


def gem_batch(
    theta,
    size: int,
    rng: np.random.Generator,
    tail_bound: float = DEFAULT_TAIL_BOUND,
    scale_hint: float = 1.0,
    cap: int = DEFAULT_STICK_CAP,
):
    """Draw ``size`` GEM sequences as rows of one matrix.

    Every row is broken until its own residual * scale_hint < tail_bound;
    rows that stop early simply keep the extra (tiny) sticks.  Returns
    ``(sticks, residual)``.
    """
    t = as_theta(theta).theta
    stop = math.log(tail_bound / scale_hint)
    log_res = np.zeros(size)
    blocks = []
    width = 0
    # expected stopping index, so most draws finish in the first chunk
    chunk = max(16, int(1.25 * t * -stop) + 8)
    while True:
        v = 1.0 - rng.random((size, chunk))
        _, one_minus_u, log_u = _beta_theta_1(v, t)
        csum = log_res[:, None] + np.cumsum(log_u, axis=1)
        before = np.exp(np.concatenate([log_res[:, None], csum[:, :-1]], axis=1))
        blocks.append(before * one_minus_u)
        log_res = csum[:, -1]
        width += chunk
        if log_res.max() < stop:
            break
        if width >= cap:
            raise TruncationOverflow(f"more than {cap} sticks needed")
        chunk = 16
    return np.concatenate(blocks, axis=1), np.exp(log_res)


# ---------------------------------------------------------------------------
# Scale-invariant Poisson process


def _arrivals(rng, theta: float, limit: float) -> np.ndarray:
    """Arrival times < limit of a rate-theta Poisson process on (0, inf)."""
    out = []
    last = 0.0
    while True:
        gaps = np.asarray(rng.standard_exponential(_CHUNK), dtype=float) / theta
        times = last + np.cumsum(gaps)
        keep = times[times < limit]
        out.append(keep)
        if len(keep) < len(times):
            break
        last = float(times[-1])
    return np.concatenate(out)


def sample_scale_invariant_poisson(theta, epsilon: float, x_max: float, rng) -> PoissonPointSample:
    t = as_theta(theta).theta
    if not (0 < epsilon < 1 < x_max):
        raise ValueError("need 0 < epsilon < 1 < x_max")
    inner = np.exp(-_arrivals(rng, t, math.log(1.0 / epsilon)))
    outer = np.exp(_arrivals(rng, t, math.log(x_max)))
    return PoissonPointSample(inner, outer, epsilon, x_max, t)


def _arrivals_batch(rng, theta: float, limit: float, size: int) -> np.ndarray:
    """Rows of arrival times < limit, NaN padded."""
    chunk = max(8, int(1.5 * theta * limit) + 8)
    last = np.zeros(size)
    parts = []
    while True:
        times = last[:, None] + np.cumsum(rng.standard_exponential((size, chunk)) / theta, axis=1)
        parts.append(times)
        last = times[:, -1]
        if last.min() >= limit:
            break
        chunk = 8
    times = np.concatenate(parts, axis=1)
    times[times >= limit] = np.nan
    width = int(np.max(np.sum(~np.isnan(times), axis=1), initial=0))
    return times[:, :width]


def poisson_batch(theta, epsilon: float, x_max: float, size: int, rng: np.random.Generator):
    """``(inner, outer)`` point matrices for ``size`` independent draws (NaN padded)."""
    t = as_theta(theta).theta
    inner = np.exp(-_arrivals_batch(rng, t, math.log(1.0 / epsilon), size))
    outer = np.exp(_arrivals_batch(rng, t, math.log(x_max), size))
    return inner, outer


def default_window(theta, tail_bound: float, scale: float = 1.0) -> tuple[float, float]:
    """(epsilon, x_max) with missed mass theta*epsilon and missed W-count <= theta^2/x_max."""
    t = as_theta(theta).theta
    eps = min(tail_bound / (t * scale), 0.5)
    return eps, max(t * t / tail_bound, 2.0)


# ---------------------------------------------------------------------------
# Continuous Feller coupling


def build_coupled_sets(pts: PoissonPointSample) -> CoupledSets:
    inner = pts.inner
    if len(inner):
        v_set = np.concatenate([[1.0 - inner[0]], inner[:-1] - inner[1:]])
    else:
        v_set = np.empty(0)
    chain = pts.chain()
    spacings = chain[1:] - chain[:-1]  # Y_m, ..., Y_2, Y_1, Y_0, Y_-1, ...
    w_set = spacings[spacings < 1.0]
    # Y_k with k <= 1 are the spacings from X_1 upwards
    low = max(len(inner) - 1, 0)
    upper = spacings[low:] if len(inner) else spacings
    cand = upper[upper < 1.0]
    if len(inner):
        cand = np.concatenate([[1.0 - inner[0]], cand])
    return CoupledSets(_frozen(v_set), _frozen(w_set), _frozen(cand))


def gem_from_poisson(pts: PoissonPointSample) -> GemSample:
    """Spacings (1 - X_1, X_1 - X_2, ...) read as stick lengths; residual X_last."""
    if not len(pts.inner):
        raise ValueError("no points of the process in (epsilon, 1)")
    inner = pts.inner
    sticks = np.concatenate([[1.0 - inner[0]], inner[:-1] - inner[1:]])
    return GemSample(sticks, float(inner[-1]))


def coupling_counts(inner: np.ndarray, outer: np.ndarray):
    """Per-row ``(#{k<=0: Y_k<1}, #(V sym-diff W))`` from batch point matrices."""
    diffs = np.diff(outer, axis=1)
    n_outer = np.sum(diffs < 1.0, axis=1)  # NaN compares False
    has_inner = ~np.isnan(inner[:, 0]) if inner.shape[1] else np.zeros(len(inner), bool)
    has_outer = ~np.isnan(outer[:, 0]) if outer.shape[1] else np.zeros(len(outer), bool)
    y1 = np.full(len(inner), np.inf)
    ok = has_inner & has_outer
    y1[ok] = outer[ok, 0] - inner[ok, 0]
    sym = n_outer + has_inner.astype(int) + (y1 < 1.0).astype(int)
    return n_outer, sym


def first_spacing(inner: np.ndarray) -> np.ndarray:
    """1 - X_1 per row (NaN when no inner point was observed)."""
    if inner.shape[1] == 0:
        return np.full(len(inner), np.nan)
    return 1.0 - inner[:, 0]


# ---------------------------------------------------------------------------
# Paintbox coupling: a virtual permutation whose limiting frequencies are known.


@dataclass(frozen=True)
class PaintboxSample:
    """Cycle lengths of sigma_n together with the exact limit frequencies.

    ``limits`` lists the limiting frequency of each cycle in order of
    appearance, followed by the sticks that have not appeared yet.
    """

    cycles: CycleLengths
    limits: np.ndarray
    residual: float


def paintbox_virtual(n: int, theta, rng: np.random.Generator, tail_bound: float = 1e-9) -> PaintboxSample:
    """Ewens(theta) cycle structure of sigma_n via Kingman's paintbox.

    Elements 1, 2, ... pick a GEM stick independently with probability equal
    to its length; cycles are the blocks in order of first appearance.  The
    joint law of (l_{m,j}) over all m <= n is the same as under Chinese
    restaurant growth, and y_j^{(m)} -> limits[j] almost surely.
    """
    stick_rng, pick_rng = rng.spawn(2)
    gem = sample_gem(theta, tail_bound, float(n), stick_rng, keep_trace=False)
    edges = np.cumsum(gem.sticks)
    labels = np.searchsorted(edges, pick_rng.random(n), side="right")
    fresh = labels >= len(edges)
    # draws from the leftover mass become singleton cycles of vanishing frequency
    labels[fresh] = len(edges) + np.arange(int(fresh.sum()))
    blocks, first, counts = np.unique(labels, return_index=True, return_counts=True)
    order = np.argsort(first)
    blocks, counts = blocks[order], counts[order]
    freq = np.concatenate([gem.sticks, np.zeros(int(fresh.sum()))])
    seen = np.zeros(len(freq), dtype=bool)
    seen[blocks] = True
    limits = np.concatenate([freq[blocks], freq[~seen]])
    return PaintboxSample(CycleLengths(n, tuple(counts.tolist())), _frozen(limits), gem.residual)
