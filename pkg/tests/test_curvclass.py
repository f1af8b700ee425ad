import numpy as np
import pytest

from lorhol.bivector import classify_bivector, to_six, wedge
from lorhol.curvclass import (
    ClassificationError, classify_curvature, kernel_vectors, solve_theorem1,
)
from lorhol.pointcalc import PointFrame, frame_at, metric_spec, sample_points

from helpers import (
    ETA, biv_low, minkowski_frame, null_tetrad, random_lorentz,
    synthetic_class_b, synthetic_class_d,
)


def appendix_metric(b="1 + u^2", f="x*y"):
    return metric_spec(("u", "v", "x", "y"),
                       [[f"({b})*sqrt(v)"], ["1", "0"],
                        ["0", "0", f"u^2*exp({f})"],
                        ["0", "0", "0", f"u^2*exp({f})"]],
                       constraints=["v", "u"],
                       sample_box=[(0.5, 2), (0.5, 2), (-1, 1), (-1, 1)])


class TestKernelVectors:
    def test_class_d_kernel_spans_dual_blade(self):
        l, n, x, y = null_tetrad()
        fr = synthetic_class_d(biv_low(x, y))
        kern = kernel_vectors(fr)
        assert len(kern) == 2
        # kernel = blade of *F = span{l, n}
        for k in kern:
            assert abs(k @ ETA @ x) < 1e-10
            assert abs(k @ ETA @ y) < 1e-10

    def test_class_b_kernel_trivial(self):
        l, n, x, y = null_tetrad()
        fr = synthetic_class_b(l, n, x, y)
        assert len(kernel_vectors(fr)) == 0

    def test_flat_kernel_everything(self):
        assert len(kernel_vectors(minkowski_frame())) == 4


class TestClassify:
    def test_minkowski_is_O(self):
        assert classify_curvature(minkowski_frame()).tag == "O"

    def test_appendix_generic_point_is_A(self):
        spec = appendix_metric(b="1 + u^2", f="x*y")
        for pt in sample_points(spec, 10, seed=2):
            assert classify_curvature(frame_at(spec, pt)).tag == "A"

    def test_appendix_b_zero_is_D(self):
        spec = appendix_metric(b="0", f="x^2 + y^2")
        for pt in sample_points(spec, 10, seed=4):
            rep = classify_curvature(frame_at(spec, pt))
            assert rep.tag == "D"
            assert rep.f_class.tag == "simple-spacelike"

    def test_synthetic_d_spacelike(self):
        l, n, x, y = null_tetrad()
        rep = classify_curvature(synthetic_class_d(biv_low(x, y), alpha=2.0))
        assert rep.tag == "D"
        assert rep.f_class.theta > 0

    def test_synthetic_d_null_and_timelike(self):
        l, n, x, y = null_tetrad()
        rep = classify_curvature(synthetic_class_d(biv_low(l, x)))
        assert rep.tag == "D" and rep.f_class.tag == "simple-null"
        rep = classify_curvature(synthetic_class_d(biv_low(l, n)))
        assert rep.tag == "D" and rep.f_class.theta < 0

    def test_synthetic_b(self):
        l, n, x, y = null_tetrad()
        rep = classify_curvature(synthetic_class_b(l, n, x, y, 1.0, 1.0))
        assert rep.tag == "B"
        f, fdual = rep.dual_pair
        assert classify_bivector(f).tag == "simple-timelike"

    def test_oracle_200_random_synthetic(self):
        # classes B and D under random Lorentz-transformed tetrads
        rng = np.random.default_rng(42)
        for i in range(200):
            lam = random_lorentz(rng)
            l, n, x, y = null_tetrad(lam)
            alpha = rng.uniform(0.2, 2.0) * rng.choice([-1, 1])
            beta = rng.uniform(0.2, 2.0) * rng.choice([-1, 1])
            if i % 2 == 0:
                fr = synthetic_class_b(l, n, x, y, alpha, beta)
                rep = classify_curvature(fr)
                assert rep.tag == "B"
                assert len(rep.kernel) == 0
            else:
                p, q = [(l, n), (x, y), (l, x)][i % 3]
                fr = synthetic_class_d(biv_low(p, q), alpha)
                rep = classify_curvature(fr)
                assert rep.tag == "D"
                assert len(rep.kernel) == 2

    def test_classification_lorentz_invariant(self):
        spec = appendix_metric(b="0", f="x^2+y^2")
        fr = frame_at(spec, (1.0, 1.0, 0.2, -0.1))
        rep0 = classify_curvature(fr)
        rng = np.random.default_rng(9)
        for _ in range(10):
            lam = random_lorentz(rng)
            # transform to a non-coordinate basis: g -> L^T g L etc.
            g2 = lam.T @ fr.g @ lam
            riem2 = np.einsum("ae,bf,cg,dh,efgh->abcd",
                              lam, lam, lam, lam, fr.riem_dddd)
            rep = classify_curvature(PointFrame.synthetic(g2, riem2))
            assert rep.tag == rep0.tag

    def test_margin_reported(self):
        l, n, x, y = null_tetrad()
        rep = classify_curvature(synthetic_class_d(biv_low(x, y)))
        assert 0.0 <= rep.margin < 1e-9


class TestTheorem1:
    def test_class_a_gives_metric_only(self):
        spec = appendix_metric(b="1 + u^2", f="x^2")
        fr = frame_at(spec, (1.0, 1.0, 0.3, 0.4))
        basis, rep = solve_theorem1(fr)
        assert rep.tag == "A"
        assert len(basis) == 1
        ratio = basis[0][np.unravel_index(np.argmax(np.abs(fr.g)), (4, 4))] \
            / fr.g[np.unravel_index(np.argmax(np.abs(fr.g)), (4, 4))]
        assert np.max(np.abs(basis[0] - ratio * fr.g)) < 1e-8 * abs(ratio)

    def test_class_d_dimension_four(self):
        l, n, x, y = null_tetrad()
        fr = synthetic_class_d(biv_low(x, y))
        basis, rep = solve_theorem1(fr)
        assert rep.tag == "D"
        assert len(basis) == 4
        # solutions built on the blade of *F: g, l l, n n, l n + n l
        ll, nl = ETA @ l, ETA @ n
        span = [ETA, np.outer(ll, ll), np.outer(nl, nl),
                np.outer(ll, nl) + np.outer(nl, ll)]
        for h in basis:
            coeff, res, *_ = np.linalg.lstsq(
                np.array([m.reshape(-1) for m in span]).T,
                h.reshape(-1), rcond=None)
            rebuilt = sum(c * m for c, m in zip(coeff, span))
            assert np.max(np.abs(rebuilt - h)) < 1e-8

    def test_class_b_dimension_two(self):
        rng = np.random.default_rng(1)
        lam = random_lorentz(rng)
        l, n, x, y = null_tetrad(lam)
        fr = synthetic_class_b(l, n, x, y, 1.2, -0.7)
        basis, rep = solve_theorem1(fr)
        assert rep.tag == "B"
        assert len(basis) == 2
        ll, nl = ETA @ l, ETA @ n
        span = [ETA, np.outer(ll, nl) + np.outer(nl, ll)]
        for h in basis:
            coeff, *_ = np.linalg.lstsq(
                np.array([m.reshape(-1) for m in span]).T,
                h.reshape(-1), rcond=None)
            rebuilt = sum(c * m for c, m in zip(coeff, span))
            assert np.max(np.abs(rebuilt - h)) < 1e-8

    def test_class_c_dimension_two(self):
        # class C synthetic: R = F1 F1 + F2 F2 with F1 = l^n, F2 = l^x;
        # both annihilate exactly y, so the kernel is span{y}.
        l, n, x, y = null_tetrad()
        f1, f2 = biv_low(l, n), biv_low(l, x)
        riem = (np.einsum("ab,cd->abcd", f1, f1)
                + np.einsum("ab,cd->abcd", f2, f2))
        fr = PointFrame.synthetic(ETA, riem)
        basis, rep = solve_theorem1(fr)
        assert rep.tag == "C"
        assert len(basis) == 2
        rl = ETA @ rep.direction
        span = [ETA, np.outer(rl, rl)]
        for h in basis:
            coeff, *_ = np.linalg.lstsq(
                np.array([m.reshape(-1) for m in span]).T,
                h.reshape(-1), rcond=None)
            rebuilt = sum(c * m for c, m in zip(coeff, span))
            assert np.max(np.abs(rebuilt - h)) < 1e-8

    def test_dimension_counts_oracle(self):
        rng = np.random.default_rng(17)
        for i in range(40):
            lam = random_lorentz(rng)
            l, n, x, y = null_tetrad(lam)
            if i % 2 == 0:
                fr = synthetic_class_b(l, n, x, y,
                                       rng.uniform(0.5, 2), rng.uniform(0.5, 2))
                want = 2
            else:
                fr = synthetic_class_d(biv_low(x, y), rng.uniform(0.5, 2))
                want = 4
            basis, _ = solve_theorem1(fr)
            assert len(basis) == want
