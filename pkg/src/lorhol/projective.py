"""Projective relatedness via the Sinyukov substitution.

The linearised data is a symmetric non-degenerate tensor a and a 1-form
lambda satisfying a_ab;c = g_ac lambda_b + g_bc lambda_a.  Inverting the
pair reconstructs the projectively related metric:

    psi_a = -ainv_ab lambda^b   (ainv lowered with g)
    chi   = -1/2 ln(|det a| / |det g|),  psi = d(chi)
    g'_ab = e^{2 chi} (a^{-1})_ab       (indices lowered with g)

all of which this module performs symbolically (adjugate/determinant),
with every consistency statement verified numerically at sample points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .exprdsl import (
    Const, Expr, ParamEnv, add, const, differentiate, div, fn, mul, neg,
    sub,
)
from .pointcalc import (
    DIM, MetricSpec, PointFrame, admissible_mask, christoffel_batch,
    eval_oneform_batch, eval_sym2_batch, frame_at, metric_spec,
    oneform_cov_deriv_batch, sample_points, sym2_cov_deriv_batch,
)

__all__ = [
    "SinyukovPair", "ProjectivePair", "InversionError", "lambda_from_trace",
    "sinyukov_residual", "invert_pair", "psi_from_connections",
    "projective_residual", "curvature_relation_residual",
    "weyl_projective_at", "weyl_projective_equal", "lemma1_checks",
    "pregeodesic_check", "GeodesicReport", "check_pair_wellformed",
]

ZERO = Const(Fraction(0))


class InversionError(Exception):
    """The supplied (a, lambda) pair does not invert consistently,
    typically because it fails Sinyukov's equation."""


@dataclass(frozen=True)
class SinyukovPair:
    """Base metric with candidate Sinyukov data; lam=None means derive
    lambda from the trace gradient d(a_ab g^ab / 2)."""

    base: MetricSpec
    a: tuple[tuple[Expr, ...], ...]
    lam: tuple[Expr, Expr, Expr, Expr] | None = None

    def lam_exprs(self):
        return self.lam if self.lam is not None else lambda_from_trace(self)


@dataclass(frozen=True)
class ProjectivePair:
    base: MetricSpec
    partner: MetricSpec
    psi: tuple[Expr, Expr, Expr, Expr]
    chi: Expr | None = None


# ---------------------------------------------------------------------------
# Symbolic 4x4 linear algebra
# ---------------------------------------------------------------------------

def _sum(terms) -> Expr:
    return reduce(add, terms, ZERO)


def _det3(m, rows, cols) -> Expr:
    (r0, r1, r2), (c0, c1, c2) = rows, cols
    return _sum([
        mul(m[r0][c0], sub(mul(m[r1][c1], m[r2][c2]),
                           mul(m[r1][c2], m[r2][c1]))),
        neg(mul(m[r0][c1], sub(mul(m[r1][c0], m[r2][c2]),
                               mul(m[r1][c2], m[r2][c0])))),
        mul(m[r0][c2], sub(mul(m[r1][c0], m[r2][c1]),
                           mul(m[r1][c1], m[r2][c0]))),
    ])


def sym_det4(m) -> Expr:
    rows = (1, 2, 3)
    out = ZERO
    for j in range(4):
        cols = tuple(c for c in range(4) if c != j)
        term = mul(m[0][j], _det3(m, rows, cols))
        out = add(out, term) if j % 2 == 0 else sub(out, term)
    return out


def sym_adjugate4(m):
    """adj(m) with m assumed symmetric, so adj is symmetric too."""
    adj = [[ZERO] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(4):
            rows = tuple(r for r in range(4) if r != j)
            cols = tuple(c for c in range(4) if c != i)
            minor = _det3(m, rows, cols)
            adj[i][j] = minor if (i + j) % 2 == 0 else neg(minor)
    return adj


def _mat_vec(m, v):
    return tuple(_sum([mul(m[i][j], v[j]) for j in range(4)])
                 for i in range(4))


# ---------------------------------------------------------------------------
# Pair validation and the trace gradient
# ---------------------------------------------------------------------------

def lambda_from_trace(pair: SinyukovPair) -> tuple[Expr, ...]:
    """lambda_a = d_a (a_bc g^bc / 2), computed symbolically."""
    spec = pair.base
    adjg = sym_adjugate4(spec.g)
    detg = sym_det4(spec.g)
    trace_num = _sum([mul(adjg[a][b], pair.a[a][b])
                      for a in range(4) for b in range(4)])
    half_trace = div(trace_num, mul(const(2), detg))
    return tuple(differentiate(half_trace, c) for c in spec.coords)


def check_pair_wellformed(pair: SinyukovPair, points,
                          tol: float = 1e-9) -> None:
    """a symmetric and non-degenerate at the points; lambda curl-free."""
    spec = pair.base
    for i in range(4):
        for j in range(i):
            if pair.a[i][j] != pair.a[j][i]:
                raise InversionError("a must be symmetric")
    pts = np.atleast_2d(np.asarray(points, float))
    a_vals = eval_sym2_batch(spec, pair.a, pts)
    dets = np.linalg.det(a_vals)
    amax = np.max(np.abs(a_vals), axis=(1, 2))
    if np.any(np.abs(dets) <= 1e-12 * np.maximum(amax, 1e-300) ** 4):
        raise InversionError("a is degenerate at a sample point")
    lam = pair.lam_exprs()
    from .pointcalc import _oneform_table
    dlam = _oneform_table(spec, tuple(lam)).evaluate(pts, 1)
    curl = dlam - dlam.transpose(0, 2, 1)
    scale = max(1.0, float(np.max(np.abs(dlam))))
    if float(np.max(np.abs(curl))) > tol * scale:
        raise InversionError("lambda is not a gradient (nonzero curl)")


# ---------------------------------------------------------------------------
# Residuals
# ---------------------------------------------------------------------------

def sinyukov_residual(pair: SinyukovPair, points) -> float:
    """max |a_ab;c - g_ac lam_b - g_bc lam_a| over the points,
    normalised by max |a|.  Inadmissible points are skipped."""
    spec = pair.base
    pts = np.atleast_2d(np.asarray(points, float))
    ok = admissible_mask(spec, pts)
    pts = pts[ok]
    if not len(pts):
        raise InversionError("no admissible points supplied")
    a_vals, cov = sym2_cov_deriv_batch(spec, pair.a, pts)
    lam = eval_oneform_batch(spec, pair.lam_exprs(), pts)
    g = eval_sym2_batch(spec, spec.g, pts)
    rhs = (np.einsum("nac,nb->nabc", g, lam)
           + np.einsum("nbc,na->nabc", g, lam))
    amax = max(float(np.max(np.abs(a_vals))), 1e-300)
    return float(np.max(np.abs(cov - rhs))) / amax


def psi_from_connections(g_spec: MetricSpec, gp_spec: MetricSpec,
                         points) -> np.ndarray:
    """psi_b = (Gamma'^a_ba - Gamma^a_ba) / 5 at each point."""
    if gp_spec.coords != g_spec.coords:
        raise InversionError("metrics must share coordinates")
    pts = np.atleast_2d(np.asarray(points, float))
    _, _, gamma = christoffel_batch(g_spec, pts)
    _, _, gamma_p = christoffel_batch(gp_spec, pts)
    return (np.einsum("naba->nb", gamma_p) - np.einsum("naba->nb", gamma)) / 5.0


def projective_residual(g_spec: MetricSpec, gp_spec: MetricSpec, psi,
                        points) -> float:
    """Residual of g'_ab;c = 2 g'_ab psi_c + g'_ac psi_b + g'_bc psi_a,
    the semicolon derivative taken with the connection of g."""
    pts = np.atleast_2d(np.asarray(points, float))
    gp_vals, cov = sym2_cov_deriv_batch(g_spec, gp_spec.g, pts)
    if isinstance(psi, np.ndarray):
        psi_vals = psi
    else:
        psi_vals = eval_oneform_batch(g_spec, tuple(psi), pts)
    rhs = (2.0 * np.einsum("nab,nc->nabc", gp_vals, psi_vals)
           + np.einsum("nac,nb->nabc", gp_vals, psi_vals)
           + np.einsum("nbc,na->nabc", gp_vals, psi_vals))
    scale = max(float(np.max(np.abs(gp_vals))), 1e-300)
    return float(np.max(np.abs(cov - rhs))) / scale


def curvature_relation_residual(g_spec: MetricSpec, gp_spec: MetricSpec,
                                psi, points) -> tuple[float, float]:
    """Residuals of R'^a_bcd = R^a_bcd + delta^a_d psi_bc - delta^a_c psi_bd
    and its Ricci contraction R'_ab = R_ab - 3 psi_ab, where
    psi_ab = psi_a;b - psi_a psi_b."""
    pts = np.atleast_2d(np.asarray(points, float))
    psi_vals, cov_psi = oneform_cov_deriv_batch(g_spec, tuple(psi), pts)
    psi_ab = cov_psi - np.einsum("na,nb->nab", psi_vals, psi_vals)
    delta = np.eye(4)
    worst14 = worst_ric = 0.0
    scale14 = scale_ric = 1.0
    for k, pt in enumerate(pts):
        fr = frame_at(g_spec, pt)
        fr_p = frame_at(gp_spec, pt)
        pab = psi_ab[k]
        rel = (fr_p.riem_ud - fr.riem_ud
               - np.einsum("ad,bc->abcd", delta, pab)
               + np.einsum("ac,bd->abcd", delta, pab))
        ric = fr_p.ricci - fr.ricci + 3.0 * pab
        worst14 = max(worst14, float(np.max(np.abs(rel))))
        worst_ric = max(worst_ric, float(np.max(np.abs(ric))))
        scale14 = max(scale14, float(np.max(np.abs(fr.riem_ud))),
                      float(np.max(np.abs(fr_p.riem_ud))))
        scale_ric = max(scale_ric, float(np.max(np.abs(fr.ricci))),
                        float(np.max(np.abs(fr_p.ricci))))
    return worst14 / scale14, worst_ric / scale_ric


def weyl_projective_at(frame: PointFrame) -> np.ndarray:
    """W^a_bcd = R^a_bcd + (delta^a_d R_bc - delta^a_c R_bd) / 3."""
    delta = np.eye(4)
    return (frame.riem_ud
            + (np.einsum("ad,bc->abcd", delta, frame.ricci)
               - np.einsum("ac,bd->abcd", delta, frame.ricci)) / 3.0)


def weyl_projective_equal(g_spec: MetricSpec, gp_spec: MetricSpec,
                          points) -> float:
    """max-abs difference of the Weyl projective tensors of the two
    metrics over the points (equal when projectively related)."""
    pts = np.atleast_2d(np.asarray(points, float))
    worst, scale = 0.0, 1.0
    for pt in pts:
        w = weyl_projective_at(frame_at(g_spec, pt))
        wp = weyl_projective_at(frame_at(gp_spec, pt))
        worst = max(worst, float(np.max(np.abs(w - wp))))
        scale = max(scale, float(np.max(np.abs(w))))
    return worst / scale


# ---------------------------------------------------------------------------
# Pair inversion
# ---------------------------------------------------------------------------

def invert_pair(pair: SinyukovPair, points=None, seed: int = 7,
                tol: float = 1e-8) -> ProjectivePair:
    """Invert (a, lambda) into (g', psi) symbolically.

    psi and chi are built via the adjugate/determinant formulas above;
    the consistency d(chi) = psi and the auxiliary metric-compatibility
    of Gamma'' = Gamma - psi^a g_bc (which must kill nabla'' a) are
    asserted numerically at the sample points.
    """
    spec = pair.base
    if points is None:
        points = sample_points(spec, 25, seed=seed)
    pts = np.atleast_2d(np.asarray(points, float))
    check_pair_wellformed(pair, pts)
    lam = pair.lam_exprs()

    deta = sym_det4(pair.a)
    detg = sym_det4(spec.g)
    adja = sym_adjugate4(pair.a)
    adjg = sym_adjugate4(spec.g)

    # constant sign of det a / det g on the (connected) sample domain
    a0 = eval_sym2_batch(spec, pair.a, pts[:1])[0]
    g0 = eval_sym2_batch(spec, spec.g, pts[:1])[0]
    s = 1.0 if np.linalg.det(a0) / np.linalg.det(g0) > 0 else -1.0
    sgn = const(int(s))

    chi = mul(const(Fraction(-1, 2)),
              fn("ln", div(mul(sgn, deta), detg)))

    # lam^b = adjg[b][c] lam_c / det g ;  B_ab = g adj(a) g (mirrored so the
    # resulting metric is structurally symmetric)
    lam_up_num = _mat_vec(adjg, lam)
    b_mat = [[None] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i + 1):
            e = _sum([mul(spec.g[i][c], mul(adja[c][d], spec.g[d][j]))
                      for c in range(4) for d in range(4)])
            b_mat[i][j] = b_mat[j][i] = e
    denom = mul(deta, detg)
    psi = tuple(neg(div(_sum([mul(b_mat[i][j], lam_up_num[j])
                              for j in range(4)]), denom))
                for i in range(4))

    # g'_ab = e^{2 chi} (a^{-1})_ab = s det(g) B_ab / det(a)^2
    deta_sq = mul(deta, deta)
    gp_rows = [[None] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i + 1):
            e = div(mul(mul(sgn, detg), b_mat[i][j]), deta_sq)
            gp_rows[i][j] = gp_rows[j][i] = e
    gp = tuple(tuple(r) for r in gp_rows)
    gp_constraints = spec.constraints + (div(mul(sgn, deta), detg),)
    gp_spec = MetricSpec(spec.coords, gp, spec.params, gp_constraints,
                         spec.sample_box,
                         name=(spec.name + "-partner") if spec.name else "partner")

    # consistency: d(chi) = psi at the sample points
    dchi = tuple(differentiate(chi, c) for c in spec.coords)
    dchi_vals = eval_oneform_batch(spec, dchi, pts)
    psi_vals = eval_oneform_batch(spec, psi, pts)
    scale = max(1.0, float(np.max(np.abs(psi_vals))))
    worst = float(np.max(np.abs(dchi_vals - psi_vals)))
    if worst > tol * scale:
        raise InversionError(
            f"psi is not the gradient of chi (residual {worst:.3e}); "
            "the pair does not satisfy Sinyukov's equation")
    _assert_aux_connection(spec, pair, psi_vals, pts)
    return ProjectivePair(spec, gp_spec, psi, chi)


def _assert_aux_connection(spec, pair, psi_vals, pts, tol: float = 1e-8):
    """nabla'' a = 0 for Gamma''^a_bc = Gamma^a_bc - psi^a g_bc."""
    a_vals, cov = sym2_cov_deriv_batch(spec, pair.a, pts)
    g = eval_sym2_batch(spec, spec.g, pts)
    ginv = np.linalg.inv(g)
    psi_up = np.einsum("nab,nb->na", ginv, psi_vals)
    corr = (np.einsum("ne,nca,neb->nabc", psi_up, g, a_vals)
            + np.einsum("ne,ncb,nae->nabc", psi_up, g, a_vals))
    resid = cov + corr
    scale = max(1.0, float(np.max(np.abs(a_vals))))
    if float(np.max(np.abs(resid))) > tol * scale:
        raise InversionError("auxiliary connection fails nabla'' a = 0; "
                             "the pair does not satisfy Sinyukov's equation")


# ---------------------------------------------------------------------------
# Lemma 1 conclusions
# ---------------------------------------------------------------------------

def lemma1_checks(g_spec: MetricSpec, pair: SinyukovPair, points):
    """(a) best-fit constant c with residual of lam_a;b - c g_ab,
    (b) residual of lam_d R^d_abc, (c) residual of the theorem-1 form
    a_ae R^e_bcd + a_be R^e_acd.  Returns (c, res_a, res_b, res_c)."""
    pts = np.atleast_2d(np.asarray(points, float))
    lam_vals, cov_lam = oneform_cov_deriv_batch(g_spec, pair.lam_exprs(), pts)
    g = eval_sym2_batch(g_spec, g_spec.g, pts)
    c_fit = (float(np.sum(cov_lam * g)) / float(np.sum(g * g)))
    res_a = float(np.max(np.abs(cov_lam - c_fit * g)))
    res_a /= max(1.0, float(np.max(np.abs(cov_lam))))

    a_vals = eval_sym2_batch(g_spec, pair.a, pts)
    res_b = res_c = 0.0
    scale_b = scale_c = 1.0
    for k, pt in enumerate(pts):
        fr = frame_at(g_spec, pt)
        rd = fr.riem_dddd  # lam_d R^d_abc = lam^d R_dabc with lam^d = ginv lam
        lam_up = fr.ginv @ lam_vals[k]
        res_b = max(res_b, float(np.max(np.abs(
            np.einsum("d,dabc->abc", lam_up, rd)))))
        t = (np.einsum("ae,ebcd->abcd", a_vals[k], fr.riem_ud)
             + np.einsum("be,eacd->abcd", a_vals[k], fr.riem_ud))
        res_c = max(res_c, float(np.max(np.abs(t))))
        rmax = float(np.max(np.abs(fr.riem_ud)))
        scale_b = max(scale_b, rmax * float(np.max(np.abs(lam_up))))
        scale_c = max(scale_c, rmax * float(np.max(np.abs(a_vals[k]))))
    return c_fit, res_a, res_b / scale_b, res_c / scale_c


# ---------------------------------------------------------------------------
# Pre-geodesic check
# ---------------------------------------------------------------------------

@dataclass
class GeodesicReport:
    score: float
    trials: int
    steps: int
    truncated: list[int] = field(default_factory=list)  # trial -> step


def _gamma_masked(spec: MetricSpec, pts: np.ndarray):
    """Christoffels with a per-row validity mask instead of raising."""
    from .pointcalc import _metric_table
    table = _metric_table(spec)
    ok = admissible_mask(spec, pts)
    g = table.evaluate(pts, 0)
    dg = table.evaluate(pts, 1)
    flat_ok = (np.all(np.isfinite(g.reshape(len(pts), -1)), axis=1)
               & np.all(np.isfinite(dg.reshape(len(pts), -1)), axis=1))
    ok = ok & flat_ok
    g[~ok] = np.eye(4)  # placeholder, masked out by callers
    dg[~ok] = 0.0
    dets = np.abs(np.linalg.det(g))
    ok &= dets > 1e-12 * np.maximum(np.max(np.abs(g), axis=(1, 2)), 1e-300) ** 4
    g[~ok] = np.eye(4)
    ginv = np.linalg.inv(g)
    s = dg.transpose(0, 1, 3, 2) + dg - dg.transpose(0, 3, 1, 2)
    gamma = 0.5 * np.einsum("nad,ndbc->nabc", ginv, s)
    return gamma, ok


def pregeodesic_check(g_spec: MetricSpec, gp_spec: MetricSpec,
                      trials: int = 20, steps: int = 2000,
                      horizon: float = 2.0, seed: int = 7,
                      box=None) -> GeodesicReport:
    """Integrate geodesics of g (RK4, fixed step) and score how far the
    second connection's acceleration tilts away from the velocity.

    Along each trajectory A'^a = xdd^a + Gamma'^a_bc xd^b xd^c with
    xdd^a = -Gamma^a_bc xd^b xd^c; the score is the Euclideanised norm of
    A' ^ xd over (|A'| |xd| + machine epsilon), maximised over trials and
    steps.  Projectively related pairs give A' parallel to xd exactly.
    """
    if gp_spec.coords != g_spec.coords:
        raise InversionError("metrics must share coordinates")
    if trials < 1 or steps < 1:
        raise ValueError("trials and steps must be positive")
    if not (np.isfinite(horizon) and horizon > 0
            and horizon / steps > np.finfo(float).tiny):
        raise ValueError("step size underflow: horizon/steps too small")
    x = sample_points(g_spec, trials, seed=seed, box=box)
    rng = np.random.default_rng(seed + 1)
    v = rng.normal(size=(trials, DIM))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    h = float(horizon) / steps
    active = np.ones(trials, dtype=bool)
    truncated: dict[int, int] = {}
    score = 0.0
    eps = np.finfo(float).eps

    def acc(gamma, vel):
        return -np.einsum("nabc,nb,nc->na", gamma, vel, vel)

    for step in range(steps):
        gamma, ok = _gamma_masked(g_spec, x)
        gamma_p, ok_p = _gamma_masked(gp_spec, x)
        newly_dead = active & ~(ok & ok_p)
        for idx in np.where(newly_dead)[0]:
            truncated[int(idx)] = step
        active &= ok & ok_p
        if not np.any(active):
            break
        a_prime = acc(gamma_p - gamma, v) * -1.0  # (Gamma' - Gamma) v v
        wedge = (np.einsum("na,nb->nab", a_prime, v)
                 - np.einsum("na,nb->nab", a_prime, v).transpose(0, 2, 1))
        num = np.linalg.norm(wedge.reshape(trials, -1), axis=1) / np.sqrt(2.0)
        den = (np.linalg.norm(a_prime, axis=1) * np.linalg.norm(v, axis=1)
               + eps)
        step_scores = np.where(active, num / den, 0.0)
        score = max(score, float(np.max(step_scores)))

        # RK4 on (x, v)
        k1x, k1v = v, acc(gamma, v)
        g2, ok2 = _gamma_masked(g_spec, x + 0.5 * h * k1x)
        k2x, k2v = v + 0.5 * h * k1v, acc(g2, v + 0.5 * h * k1v)
        g3, ok3 = _gamma_masked(g_spec, x + 0.5 * h * k2x)
        k3x, k3v = v + 0.5 * h * k2v, acc(g3, v + 0.5 * h * k2v)
        g4, ok4 = _gamma_masked(g_spec, x + h * k3x)
        k4x, k4v = v + h * k3v, acc(g4, v + h * k3v)
        stage_ok = ok2 & ok3 & ok4
        newly_dead = active & ~stage_ok
        for idx in np.where(newly_dead)[0]:
            truncated[int(idx)] = step
        active &= stage_ok
        upd = active[:, None]
        x = np.where(upd, x + (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x), x)
        v = np.where(upd, v + (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v), v)

    return GeodesicReport(score, trials, steps,
                          sorted(truncated.items()))
