import itertools

import numpy as np
import pytest

from mvnav.codec import lower_convex_hull
from mvnav.errors import InfeasibleBudget, InsufficientOverlap
from mvnav.navmodel import TransitionModel
from mvnav.rdalloc import (RateAllocation, RDCurve, _pick, allocate,
                           bjontegaard_rate, expected_distortion,
                           select_gop_size)
from mvnav.scene import ViewGrid, default_scene_spec, generate_synthetic_scene


def random_curve(rng, frame_id, n_points=4):
    rates = np.sort(rng.integers(50, 5000, size=n_points))
    while len(set(rates.tolist())) < n_points:
        rates = np.sort(rng.integers(50, 5000, size=n_points))
    mses = np.sort(rng.uniform(1.0, 400.0, size=n_points))[::-1]
    pts = lower_convex_hull(list(zip(rates.tolist(), mses.tolist())))
    return RDCurve(frame_id=frame_id, points=tuple(pts))


def brute_force(curves, popularity, budget):
    """Exhaustive optimum over all hull-point combinations."""
    best = None
    for combo in itertools.product(*[c.points for c in curves]):
        total = sum(r for r, _ in combo)
        if total > budget:
            continue
        dist = sum(float(popularity[c.frame_id]) * d
                   for c, (_, d) in zip(curves, combo))
        if best is None or dist < best[0] - 1e-15 \
                or (abs(dist - best[0]) <= 1e-15 and total < best[1]):
            best = (dist, total, combo)
    return best


class TestRDCurve:
    def test_validation(self):
        with pytest.raises(InfeasibleBudget):
            RDCurve(frame_id=(0, 0), points=((10, 5.0), (20, 6.0)))
        with pytest.raises(InfeasibleBudget):
            RDCurve(frame_id=(0, 0), points=())

    def test_min_bits(self):
        c = RDCurve(frame_id=(0, 0), points=((10, 5.0), (20, 2.0)))
        assert c.min_bits == 10


class TestAllocate:
    def test_infeasible(self):
        c = RDCurve(frame_id=(0, 0), points=((100, 5.0), (200, 2.0)))
        with pytest.raises(InfeasibleBudget):
            allocate([c], {(0, 0): 1.0}, 50)

    def test_large_budget_gives_finest(self):
        c1 = RDCurve(frame_id=(0, 0), points=((100, 5.0), (200, 2.0)))
        c2 = RDCurve(frame_id=(1, 0), points=((50, 9.0), (300, 1.0)))
        a = allocate([c1, c2], {(0, 0): 0.5, (1, 0): 0.5}, 10**6)
        assert a.choices[(0, 0)] == (200, 2.0)
        assert a.choices[(1, 0)] == (300, 1.0)
        assert a.lam == 0.0

    def test_zero_popularity_gets_minimum_rate(self):
        c = RDCurve(frame_id=(0, 0), points=((100, 5.0), (200, 2.0)))
        assert _pick(c, 0.0, 1.0) == (100, 5.0)

    def test_respects_budget(self, rng):
        curves = [random_curve(rng, (i, 0)) for i in range(5)]
        pops = {c.frame_id: float(rng.uniform(0.05, 1.0)) for c in curves}
        lo = sum(c.min_bits for c in curves)
        hi = sum(c.points[-1][0] for c in curves)
        for budget in np.linspace(lo, hi, 7).astype(int):
            a = allocate(curves, pops, int(budget))
            assert a.total_bits <= budget

    def test_matches_brute_force_within_one_step(self, rng):
        for trial in range(30):
            n = int(rng.integers(1, 5))
            curves = [random_curve(rng, (i, 0), n_points=int(rng.integers(2, 5)))
                      for i in range(n)]
            pops = {c.frame_id: float(rng.uniform(0.01, 1.0)) for c in curves}
            lo = sum(c.min_bits for c in curves)
            hi = sum(c.points[-1][0] for c in curves)
            budget = int(rng.integers(lo, hi + 1))
            a = allocate(curves, pops, budget)
            opt = brute_force(curves, pops, budget)
            d_alloc = expected_distortion(a, curves, pops)
            # Lagrangian-on-hull is optimal up to one hull step per frame
            step_gap = max(
                max((pops[c.frame_id] * (c.points[k][1] - c.points[k + 1][1])
                     for k in range(len(c.points) - 1)), default=0.0)
                for c in curves)
            assert d_alloc <= opt[0] + step_gap + 1e-9
            del trial

    def test_popularity_rescaling_invariance(self, rng):
        """Scaling every popularity by a power of two leaves the argmin
        unchanged exactly (all float products scale exactly)."""
        curves = [random_curve(rng, (i, 0)) for i in range(4)]
        pops = {c.frame_id: float(rng.uniform(0.05, 1.0)) for c in curves}
        scaled = {k: 4.0 * v for k, v in pops.items()}
        budget = sum(c.min_bits for c in curves) + 500
        a = allocate(curves, pops, budget)
        b = allocate(curves, scaled, budget)
        assert a.choices == b.choices


class TestBjontegaard:
    def _curve(self):
        psnr = np.array([30.0, 33.0, 36.0, 39.0, 42.0])
        rate = 1000.0 * 2.0 ** ((psnr - 30.0) / 3.0)
        return list(zip(rate, psnr))

    def test_identical_curves_zero(self):
        c = self._curve()
        assert abs(bjontegaard_rate(c, c)) < 1e-9

    def test_scaled_rate_exact(self):
        c = self._curve()
        c2 = [(r * 1.10, p) for r, p in c]
        assert bjontegaard_rate(c, c2) == pytest.approx(10.0, abs=1e-6)

    def test_antisymmetry(self):
        a = self._curve()
        b = [(r * 1.25, p + 0.5) for r, p in a]
        ab = bjontegaard_rate(a, b)
        ba = bjontegaard_rate(b, a)
        # (1+x)(1+y) = 1 for forward/backward relative differences
        assert (1 + ab / 100.0) * (1 + ba / 100.0) == pytest.approx(1.0,
                                                                    abs=1e-6)

    def test_quadrature_oracle(self, rng):
        """Exact polynomial integration equals dense numerical quadrature."""
        a = [(float(r), float(p)) for r, p in
             zip(sorted(rng.uniform(500, 50000, 5)), sorted(rng.uniform(28, 44, 5)))]
        b = [(float(r), float(p)) for r, p in
             zip(sorted(rng.uniform(500, 50000, 5)), sorted(rng.uniform(28, 44, 5)))]
        got = bjontegaard_rate(a, b)
        aa, bb = np.asarray(a), np.asarray(b)
        lo = max(aa[:, 1].min(), bb[:, 1].min())
        hi = min(aa[:, 1].max(), bb[:, 1].max())
        fa = np.polynomial.Polynomial.fit(aa[:, 1], np.log10(aa[:, 0]), 3)
        fb = np.polynomial.Polynomial.fit(bb[:, 1], np.log10(bb[:, 0]), 3)
        xs = np.linspace(lo, hi, 20001)
        delta = np.trapezoid(fb(xs) - fa(xs), xs) / (hi - lo)
        want = (10.0 ** delta - 1.0) * 100.0
        assert got == pytest.approx(want, abs=1e-4)

    def test_insufficient_points(self):
        c = self._curve()
        with pytest.raises(InsufficientOverlap):
            bjontegaard_rate(c[:3], c)

    def test_no_overlap(self):
        a = [(1000.0 * 2 ** i, 30.0 + i) for i in range(4)]
        b = [(1000.0 * 2 ** i, 40.0 + i) for i in range(4)]
        with pytest.raises(InsufficientOverlap):
            bjontegaard_rate(a, b)


@pytest.fixture(scope="module")
def tiny_seq():
    spec = default_scene_spec(width=64, height=64, n_views=2, n_frames=8,
                              seed=2)
    return generate_synthetic_scene(spec, seed=2)


class TestSelectGop:
    def test_single_candidate(self, tiny_seq):
        grid = ViewGrid(2, 1)
        m = TransitionModel(0.5, 0.3, 0.3)
        best, table = select_gop_size(tiny_seq, grid, m, n_t=4,
                                      candidates=[4], n_paths=2, seed=1)
        assert best == 4 and set(table) == {4}

    def test_static_viewer_prefers_large_gop(self, tiny_seq):
        grid = ViewGrid(2, 1)
        m = TransitionModel(p1=1.0, p2=0.0, p3=1.0)
        best, table = select_gop_size(tiny_seq, grid, m, n_t=4,
                                      candidates=[1, 8], n_paths=3, seed=1)
        assert best == 8
        assert table[8] < table[1]
