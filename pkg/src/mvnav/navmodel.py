"""Stochastic user-navigation model on the view grid.

Second-order Markov chain over views: the switch behavior depends on the
current view and the view displayed one frame earlier.  At the edges of
the view range, the mass of the impossible move folds into "stay", keeping
every transition row stochastic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidState


@dataclass(frozen=True)
class FrameId:
    v: int
    t: int


@dataclass(frozen=True)
class TransitionModel:
    p1: float   # keep the current view when at rest
    p2: float   # continue an ongoing switch
    p3: float   # stop an ongoing switch

    def __post_init__(self):
        for p in (self.p1, self.p2, self.p3):
            if not 0.0 <= p <= 1.0:
                raise InvalidState("probabilities must lie in [0, 1]")
        if self.p2 + self.p3 > 1.0 + 1e-12:
            raise InvalidState("p2 + p3 must not exceed 1")


@dataclass(frozen=True)
class NavState:
    current: FrameId
    previous_view: int

    def __post_init__(self):
        if abs(self.current.v - self.previous_view) > 1:
            raise InvalidState("views move at most one step per frame")


@dataclass(frozen=True)
class AchievableSet:
    """Cone of frames reachable from the origin within the horizon."""

    origin: FrameId
    horizon: int
    frames: frozenset   # of (v, t)

    def __contains__(self, vt) -> bool:
        return tuple(vt) in self.frames


def achievable_set(origin: FrameId, n_t: int, n_d: int, n_views: int,
                   n_frames: int) -> AchievableSet:
    horizon = n_t + n_d
    frames = set()
    for tau in range(1, horizon + 1):
        t = origin.t + tau
        if t >= n_frames:
            break
        for v in range(max(0, origin.v - tau), min(n_views - 1, origin.v + tau) + 1):
            frames.add((v, t))
    return AchievableSet(origin=origin, horizon=horizon,
                         frames=frozenset(frames))


def _base_row(m: TransitionModel, cur: int, prev: int) -> dict[int, float]:
    d = cur - prev
    if d == 0:
        return {cur: m.p1, cur - 1: (1 - m.p1) / 2, cur + 1: (1 - m.p1) / 2}
    rev = max(0.0, 1.0 - m.p2 - m.p3)   # guard tiny negative float residue
    if d == 1:      # switching rightward
        return {cur + 1: m.p2, cur: m.p3, cur - 1: rev}
    if d == -1:     # switching leftward
        return {cur - 1: m.p2, cur: m.p3, cur + 1: rev}
    raise InvalidState("previous view must be adjacent to the current view")


def transition_row(m: TransitionModel, cur: int, prev: int,
                   n_views: int) -> dict[int, float]:
    """Next-view distribution with out-of-range mass folded into staying."""
    if not 0 <= cur < n_views:
        raise InvalidState("current view outside the grid")
    row = _base_row(m, cur, prev)
    folded: dict[int, float] = {}
    for v, p in row.items():
        target = v if 0 <= v < n_views else cur
        folded[target] = folded.get(target, 0.0) + p
    return folded


def transition_prob(m: TransitionModel, next_v: int, cur_v: int, prev_v: int,
                    n_views: int) -> float:
    if abs(next_v - cur_v) > 1:
        raise InvalidState("next view must be adjacent to the current view")
    return transition_row(m, cur_v, prev_v, n_views).get(next_v, 0.0)


@dataclass
class PopularityGrid:
    """P(frame shown | origin state) for slices t0+1 .. t0+horizon."""

    origin: NavState
    n_views: int
    horizon: int
    values: np.ndarray    # (horizon, n_views)

    def prob(self, v: int, t: int) -> float:
        tau = t - self.origin.current.t
        if not (1 <= tau <= self.horizon and 0 <= v < self.n_views):
            return 0.0
        return float(self.values[tau - 1, v])

    def slice_at(self, tau: int) -> np.ndarray:
        return self.values[tau - 1]


def popularity_paper(m: TransitionModel, s0: NavState, horizon: int,
                     n_views: int) -> PopularityGrid:
    """The marginal-product recursion over the achievable cone.

    Seeds are delta slices at t0 (current view) and t0-1 (previous view).
    The recursion multiplies the two previous marginals as if independent,
    which leaks probability mass once the horizon exceeds two; every slice
    is renormalized to sum to one, which also keeps truncation at the view
    range lossless.
    """
    v0 = s0.current.v
    slices = []
    prev2 = np.zeros(n_views)   # slice t-2 of the recursion
    prev2[s0.previous_view] = 1.0
    prev1 = np.zeros(n_views)   # slice t-1
    prev1[v0] = 1.0
    for tau in range(1, horizon + 1):
        cur = np.zeros(n_views)
        lo = max(0, v0 - tau)
        hi = min(n_views - 1, v0 + tau)
        for v in range(lo, hi + 1):
            acc = 0.0
            for vp in range(v - 1, v + 2):
                if not 0 <= vp < n_views or prev1[vp] == 0.0:
                    continue
                inner = 0.0
                for vpp in range(vp - 1, vp + 2):
                    if not 0 <= vpp < n_views or prev2[vpp] == 0.0:
                        continue
                    inner += prev2[vpp] * transition_prob(m, v, vp, vpp, n_views)
                acc += prev1[vp] * inner
            cur[v] = acc
        total = cur.sum()
        if total > 0:
            cur /= total
        slices.append(cur)
        prev2, prev1 = prev1, cur
    return PopularityGrid(origin=s0, n_views=n_views, horizon=horizon,
                          values=np.array(slices))


def popularity_exact(m: TransitionModel, s0: NavState, horizon: int,
                     n_views: int) -> PopularityGrid:
    """Reference computation: dynamic program over joint (previous, current)
    view states of the second-order chain; marginals match exhaustive path
    enumeration exactly."""
    joint = {(s0.previous_view, s0.current.v): 1.0}
    slices = []
    for _ in range(horizon):
        nxt: dict[tuple[int, int], float] = {}
        for (prev, cur), p in joint.items():
            for v, q in transition_row(m, cur, prev, n_views).items():
                if q == 0.0:
                    continue
                key = (cur, v)
                nxt[key] = nxt.get(key, 0.0) + p * q
        joint = nxt
        marg = np.zeros(n_views)
        for (_, cur), p in joint.items():
            marg[cur] += p
        slices.append(marg)
    return PopularityGrid(origin=s0, n_views=n_views, horizon=horizon,
                          values=np.array(slices))


def sample_path(m: TransitionModel, s0: NavState, length: int, seed: int,
                n_views: int) -> list[FrameId]:
    """Seeded navigation path: `length` positions after the origin frame."""
    if length < 1:
        raise InvalidState("path length must be at least 1")
    rng = np.random.default_rng(seed)
    prev, cur = s0.previous_view, s0.current.v
    t = s0.current.t
    out = []
    for _ in range(length):
        row = transition_row(m, cur, prev, n_views)
        views = sorted(row)
        probs = np.array([row[v] for v in views])
        nxt = int(rng.choice(views, p=probs / probs.sum()))
        prev, cur = cur, nxt
        t += 1
        out.append(FrameId(v=cur, t=t))
    return out
