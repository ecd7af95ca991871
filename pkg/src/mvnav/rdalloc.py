"""Popularity-weighted Lagrangian rate allocation and rate metrics.

Each side-frame offers a finite convex hull of (bits, MSE) operating
points.  For a multiplier lam every frame independently picks the point
minimizing popularity * MSE + lam * bits; lam is bisected to the
largest-rate solution that fits the budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InfeasibleBudget, InsufficientOverlap


@dataclass(frozen=True)
class RDCurve:
    frame_id: tuple               # (v, t)
    points: tuple                 # ((bits, mse), ...) lower convex hull

    def __post_init__(self):
        pts = tuple((int(r), float(d)) for r, d in self.points)
        if not pts:
            raise InfeasibleBudget("empty rate-distortion curve")
        for (r1, d1), (r2, d2) in zip(pts, pts[1:]):
            if r2 <= r1 or d2 >= d1:
                raise InfeasibleBudget("hull must increase in rate, decrease in MSE")
        object.__setattr__(self, "points", pts)

    @property
    def min_bits(self) -> int:
        return self.points[0][0]


@dataclass
class RateAllocation:
    choices: dict                 # frame_id -> (bits, mse)
    total_bits: int
    budget: int
    lam: float

    def q_index_for(self, curve: RDCurve) -> int:
        return curve.points.index(self.choices[curve.frame_id])


def _pick(curve: RDCurve, pop: float, lam: float) -> tuple[int, float]:
    """Hull point minimizing pop*D + lam*r; ties keep the lower rate."""
    best = None
    best_cost = np.inf
    for r, d in curve.points:
        cost = pop * d + lam * r
        if best is None or cost < best_cost - 1e-12 * max(1.0, abs(best_cost)):
            best, best_cost = (r, d), cost
    return best


def _solve(curves: Sequence[RDCurve], popularity: Mapping, lam: float) -> dict:
    return {c.frame_id: _pick(c, float(popularity[c.frame_id]), lam)
            for c in curves}


def allocate(curves: Sequence[RDCurve], popularity: Mapping,
             budget: int) -> RateAllocation:
    """Minimize expected MSE subject to a total bit budget."""
    min_total = sum(c.min_bits for c in curves)
    if budget < min_total:
        raise InfeasibleBudget(
            f"budget {budget} below minimum feasible rate {min_total}")

    def total(choice: dict) -> int:
        return sum(r for r, _ in choice.values())

    choice0 = _solve(curves, popularity, 0.0)
    if total(choice0) <= budget:
        return RateAllocation(choices=choice0, total_bits=total(choice0),
                              budget=budget, lam=0.0)

    lam_max = 1.0
    for c in curves:
        pop = float(popularity[c.frame_id])
        for (r1, d1), (r2, d2) in zip(c.points, c.points[1:]):
            lam_max = max(lam_max, pop * (d1 - d2) / (r2 - r1))
    lam_max *= 2.0

    lo, hi = 0.0, lam_max     # total(lo) > budget, total(hi) <= budget
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(_solve(curves, popularity, mid)) <= budget:
            hi = mid
        else:
            lo = mid
    choice = _solve(curves, popularity, hi)
    return RateAllocation(choices=choice, total_bits=total(choice),
                          budget=budget, lam=hi)


def expected_distortion(allocation: RateAllocation, curves: Sequence[RDCurve],
                        popularity: Mapping) -> float:
    return sum(float(popularity[c.frame_id]) * allocation.choices[c.frame_id][1]
               for c in curves)


# ---------------------------------------------------------------------------
# Bjontegaard rate difference

def bjontegaard_rate(curve_a: Sequence[tuple], curve_b: Sequence[tuple]
                     ) -> float:
    """Average percent rate difference of curve_b versus curve_a.

    Both curves are (bits, PSNR dB) points; log10(rate) is fit by a cubic
    in PSNR and the fit difference is averaged over the common PSNR range
    by exact polynomial integration.
    """
    a = np.asarray(curve_a, dtype=np.float64)
    b = np.asarray(curve_b, dtype=np.float64)
    if len(a) < 4 or len(b) < 4:
        raise InsufficientOverlap("need at least 4 points per curve")
    lo = max(a[:, 1].min(), b[:, 1].min())
    hi = min(a[:, 1].max(), b[:, 1].max())
    if hi <= lo:
        raise InsufficientOverlap("PSNR ranges do not overlap")
    fit_a = np.polynomial.Polynomial.fit(a[:, 1], np.log10(a[:, 0]), 3)
    fit_b = np.polynomial.Polynomial.fit(b[:, 1], np.log10(b[:, 0]), 3)
    diff = (fit_b.convert() - fit_a.convert()).integ()
    delta = (diff(hi) - diff(lo)) / (hi - lo)
    return float((10.0 ** delta - 1.0) * 100.0)


# ---------------------------------------------------------------------------
# GOP-size selection

def select_gop_size(seq, grid, model, n_t: int, candidates: Sequence[int],
                    n_paths: int, seed: int, ref_q: int = 4, n_d: int = 0,
                    start_view: int | None = None):
    """Pick the GOP size minimizing mean transmitted reference bits under
    seeded navigation paths; ties go to the smaller size.

    Returns (gop_size, {candidate: mean bits per path}).
    """
    from . import session as _session   # session imports this module

    table = {}
    for g in sorted(candidates):
        bits_map = _session.reference_stream_bits(seq, g, ref_q)
        totals = []
        for i in range(n_paths):
            totals.append(_session.simulate_reference_bits(
                bits_map, grid, model, n_t=n_t, n_d=n_d, gop_size=g,
                n_frames=seq.n_frames, seed=seed * 100003 + i,
                start_view=start_view))
        table[g] = float(np.mean(totals))
    best = min(table, key=lambda g: (table[g], g))
    return best, table
