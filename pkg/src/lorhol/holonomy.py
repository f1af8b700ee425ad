"""Infinitesimal holonomy: generators, Lie closure and identification
against the fifteen-type subalgebra taxonomy of the Lorentz algebra.

Generators at a point are the matrices R^a_bcd X^c Y^d (plus covariant
derivative contractions at higher order); their bracket closure is a
subalgebra of so(g(m)).  Identification keys on dimension, the common
annihilated directions with their causal character, and for the two
3-dimensional types with trivial annihilator on a Pfaffian discriminant.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bivector import Bivector, canonical_span_basis, classify_bivector
from .pointcalc import MetricSpec, PointFrame, frame_at, sample_points

__all__ = [
    "HolonomyAlgebraReport", "HolonomySurveyReport", "ihol_generators",
    "lie_bracket", "close_algebra", "identify_type", "constant_directions",
    "recurrent_directions", "holonomy_survey", "TYPE_DIMENSIONS",
]

SPAN_TOL = 1e-8

TYPE_DIMENSIONS = {
    "R1": 0, "R2": 1, "R3": 1, "R4": 1, "R5": 1, "R6": 2, "R7": 2, "R8": 2,
    "R9": 3, "R10": 3, "R11": 3, "R12": 3, "R13": 3, "R14": 4, "R15": 6,
}


@dataclass
class HolonomyAlgebraReport:
    """Identified (sub)algebra at a point or aggregated over a survey."""

    dimension: int
    basis: list[np.ndarray]  # skew-self-adjoint (1,1) matrices
    label: str  # R1..R15 or "unrecognized"
    constant: list[tuple[np.ndarray, str]]  # annihilated directions + character
    recurrent: list[np.ndarray]  # null eigen-directions, nonzero eigenvalue
    omega: float | None = None  # R5 / R12 parameter (reported >= 0)
    realizable: bool = True  # False only for R5
    diagnostics: dict = field(default_factory=dict)


@dataclass
class HolonomySurveyReport:
    label: str
    representative: HolonomyAlgebraReport
    per_point: list[tuple[np.ndarray, str, int]]  # (point, label, dimension)
    mixed_types: bool
    caveat: str = ("infinitesimal holonomy is a subalgebra of the true "
                   "holonomy algebra; the label is a lower bound")


# ---------------------------------------------------------------------------
# Generators and closure
# ---------------------------------------------------------------------------

def ihol_generators(spec: MetricSpec, point, derivative_order: int = 1,
                    frame: PointFrame | None = None) -> list[np.ndarray]:
    """Raw generators R^a_bcd X^c Y^d (order 0), plus first and second
    covariant-derivative contractions for derivative_order 1 / 2."""
    if derivative_order not in (0, 1, 2):
        raise ValueError("derivative_order must be 0, 1 or 2")
    fr = frame or frame_at(spec, point)
    out = []
    r = fr.riem_ud
    scale = max(float(np.max(np.abs(r))), 1e-300)
    for c in range(4):
        for d in range(c + 1, 4):
            out.append(r[:, :, c, d])
    if derivative_order >= 1:
        cr = fr.cov_riemann
        for c in range(4):
            for d in range(c + 1, 4):
                for e in range(4):
                    out.append(cr[:, :, c, d, e])
    if derivative_order >= 2:
        c2 = fr.cov2_riemann
        for c in range(4):
            for d in range(c + 1, 4):
                for e in range(4):
                    for f in range(4):
                        out.append(c2[:, :, c, d, e, f])
    return [m for m in out if np.max(np.abs(m)) > 1e-13 * scale]


def _check_skew(m: np.ndarray, g: np.ndarray, tol: float = 1e-8) -> bool:
    gm = g @ m
    return np.max(np.abs(gm + gm.T)) <= tol * max(1.0, np.max(np.abs(gm)))


def lie_bracket(f: np.ndarray, h: np.ndarray,
                frame: PointFrame | None = None) -> np.ndarray:
    """Matrix commutator FG - GF of two (1,1) bivector matrices.

    When a frame is supplied both arguments and the result are verified
    skew-self-adjoint with respect to its metric.
    """
    f, h = np.asarray(f, float), np.asarray(h, float)
    out = f @ h - h @ f
    if frame is not None:
        for m in (f, h, out):
            if not _check_skew(m, frame.g):
                raise ValueError("bracket arguments are not skew-self-adjoint "
                                 "for this metric (mixed metric contexts?)")
    return out


def _mixed_to_vec(m: np.ndarray) -> np.ndarray:
    return m.reshape(-1)


def close_algebra(generators, frame: PointFrame,
                  tol: float = SPAN_TOL) -> list[np.ndarray]:
    """Smallest bracket-closed span containing the generators.

    The returned basis is deterministic: reduced row echelon form of the
    span with lexicographic pivoting, rows as 16-component matrices.
    """
    rows = []
    for m in generators:
        nrm = np.max(np.abs(m))
        if nrm > 0:
            rows.append(_mixed_to_vec(np.asarray(m, float)) / nrm)
    basis = canonical_span_basis(rows, tol) if rows else np.empty((0, 16))
    while True:
        mats = [v.reshape(4, 4) for v in basis]
        added = False
        new_rows = list(basis)
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                br = lie_bracket(mats[i], mats[j])
                nrm = np.max(np.abs(br))
                if nrm <= 1e-12:
                    continue
                cand = canonical_span_basis(
                    np.vstack([basis, _mixed_to_vec(br) / nrm]), tol)
                if len(cand) > len(basis):
                    new_rows.append(_mixed_to_vec(br) / nrm)
                    basis = canonical_span_basis(np.array(new_rows), tol)
                    added = True
        if not added or len(basis) >= 6:
            basis = canonical_span_basis(np.array(new_rows), tol)
            break
    if len(basis) > 6:
        raise ValueError(
            f"closure dimension {len(basis)} exceeds the Lorentz algebra; "
            "generators do not share a metric context")
    return [v.reshape(4, 4) for v in basis]


# ---------------------------------------------------------------------------
# Structure probes
# ---------------------------------------------------------------------------

def _causal_character(v: np.ndarray, g: np.ndarray, tol: float = 1e-8) -> str:
    norm2 = float(v @ g @ v)
    scale = float(v @ v) * float(np.max(np.abs(g)))
    if abs(norm2) <= tol * max(scale, 1e-300):
        return "null"
    return "timelike" if norm2 < 0 else "spacelike"


def constant_directions(basis, frame: PointFrame,
                        tol: float = SPAN_TOL) -> list[tuple[np.ndarray, str]]:
    """Common nullspace of all basis matrices, tagged by causal character;
    these integrate to covariantly constant vector fields."""
    if not len(basis):
        return [(np.eye(4)[i], _causal_character(np.eye(4)[i], frame.g))
                for i in range(4)]
    stack = np.vstack([np.asarray(m, float)
                       / max(np.max(np.abs(m)), 1e-300) for m in basis])
    _, s, vt = np.linalg.svd(stack)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    null = canonical_span_basis(vt[rank:], tol) if rank < 4 else []
    return [(v / np.linalg.norm(v), _causal_character(v, frame.g))
            for v in null]


def recurrent_directions(basis, frame: PointFrame,
                         tol: float = 1e-8) -> list[np.ndarray]:
    """Common eigen-directions of the basis with some nonzero eigenvalue.

    Candidates come from real eigenvectors of a few fixed generic
    combinations, then each is verified against every basis element.
    All surviving directions are null (skew-self-adjointness forces it).
    """
    if not len(basis):
        return []
    mats = [np.asarray(m, float) / max(np.max(np.abs(m)), 1e-300)
            for m in basis]
    rng = np.random.default_rng(20090629)  # fixed: reports are deterministic
    candidates = []
    combos = [np.mean(mats, axis=0)] + list(mats)
    for _ in range(3):
        w = rng.normal(size=len(mats))
        combos.append(sum(c * m for c, m in zip(w, mats)))
    for m in combos:
        vals, vecs = np.linalg.eig(m)
        for i, lam in enumerate(vals):
            if abs(lam.imag) > 1e-8:
                continue
            v = vecs[:, i].real
            nrm = np.linalg.norm(v)
            if nrm < 1e-12:
                continue
            candidates.append(v / nrm)
    found = []
    for v in candidates:
        mus = []
        ok = True
        for m in mats:
            mv = m @ v
            mu = float(v @ mv)  # v is unit
            if np.linalg.norm(mv - mu * v) > tol * max(1.0, np.max(np.abs(m))):
                ok = False
                break
            mus.append(mu)
        if not ok or max(abs(mu) for mu in mus) <= tol:
            continue
        if _causal_character(v, frame.g) != "null":
            continue  # numerically impossible for exact eigen-directions
        k = int(np.argmax(np.abs(v) > 1e-8))
        v = v * np.sign(v[k])
        if not any(np.linalg.norm(v - u) < 1e-6 for u in found):
            found.append(v)
    return found


def _derived_algebra(basis, tol: float = SPAN_TOL) -> np.ndarray:
    rows = []
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            br = lie_bracket(basis[i], basis[j])
            nrm = np.max(np.abs(br))
            if nrm > 1e-12:
                rows.append(_mixed_to_vec(br) / nrm)
    return canonical_span_basis(rows, tol) if rows else np.empty((0, 16))


def _mixed_to_bivector(m: np.ndarray, frame: PointFrame) -> Bivector:
    return Bivector(np.asarray(m, float) @ frame.ginv, frame)


def _adapted_null_tetrad(l: np.ndarray, frame: PointFrame):
    """Null tetrad (l, n, x, y) with the given null l, g(l,n)=1."""
    g = frame.g
    probes = [np.eye(4)[i] for i in range(4)]
    t = max(probes, key=lambda p: abs(float(l @ g @ p)))
    lt = float(l @ g @ t)
    n0 = t / lt
    n = n0 - 0.5 * float(n0 @ g @ n0) * l
    rest = []
    for p in probes:
        v = p - float(p @ g @ n) * l - float(p @ g @ l) * n
        for q in rest:
            v = v - float(v @ g @ q) * q
        nrm2 = float(v @ g @ v)
        if nrm2 > 1e-8:
            rest.append(v / np.sqrt(nrm2))
        if len(rest) == 2:
            break
    x, y = rest
    return l, n, x, y


def _project_biv(w: Bivector, p: np.ndarray, q: np.ndarray) -> float:
    """Coefficient of p^q in w, for tetrad members (uses <A,B> = A_ab B^ab)."""
    fr = w.frame
    pq = np.outer(p, q) - np.outer(q, p)
    pq_low = fr.g @ pq @ fr.g.T
    denom = float(np.sum(pq_low * pq))
    return float(np.sum(pq_low * w.comps)) / denom


def _r9_r12_discriminant(basis, frame: PointFrame, tol: float):
    """For a 3-dim algebra with trivial annihilator: the derived algebra is
    2-dim; the Pfaffian of any complement representative modulo it is zero
    for R9 and nonzero for R12 (then omega is extracted)."""
    derived = _derived_algebra(basis)
    if len(derived) != 2:
        return None
    # representative outside the derived algebra, reduced modulo it
    rep = None
    for m in basis:
        v = _mixed_to_vec(m) / max(np.max(np.abs(m)), 1e-300)
        red = v.copy()
        for row in derived:
            # derived rows are RREF rows whose pivot (first entry above
            # noise) is exactly 1
            above = np.abs(row) > 1e-7 * max(np.max(np.abs(row)), 1e-300)
            if not np.any(above):
                continue
            pivcol = int(np.argmax(above))
            red = red - red[pivcol] * row
        if np.max(np.abs(red)) > 10 * tol:
            rep = red.reshape(4, 4)
            break
    if rep is None:
        return None
    w = _mixed_to_bivector(rep, frame)
    pf = w.pfaffian
    smax = float(np.linalg.svd(w.comps, compute_uv=False)[0])
    if abs(pf) <= 1e-7 * smax ** 2:
        return ("R9", None)
    # omega: common annihilator of the derived algebra gives the null l
    dmats = [row.reshape(4, 4) for row in derived]
    anns = constant_directions(dmats, frame, tol)
    nulls = [v for v, ch in anns if ch == "null"]
    if len(anns) != 1 or not nulls:
        return None
    l, n, x, y = _adapted_null_tetrad(nulls[0], frame)
    w_ln = _project_biv(w, l, n)
    w_xy = _project_biv(w, x, y)
    if abs(w_ln) < 1e-12:
        return None
    return ("R12", abs(w_xy / w_ln))


# ---------------------------------------------------------------------------
# Identification
# ---------------------------------------------------------------------------

def identify_type(basis, frame: PointFrame,
                  tol: float = SPAN_TOL) -> HolonomyAlgebraReport:
    """Identify a bracket-closed span of bivector matrices against the
    taxonomy.  Structure that fits no type is labelled "unrecognized"
    with diagnostics instead of guessing."""
    basis = [np.asarray(m, float) for m in basis]
    diags: dict = {}
    for m in basis:
        if not _check_skew(m, frame.g):
            return HolonomyAlgebraReport(
                len(basis), basis, "unrecognized", [], [],
                diagnostics={"reason": "basis not skew-self-adjoint"})
    closure_resid = _closure_residual(basis, tol)
    if closure_resid is not None:
        return HolonomyAlgebraReport(
            len(basis), basis, "unrecognized", [], [],
            diagnostics={"reason": "basis not bracket-closed",
                         "residual": closure_resid})
    dim = len(basis)
    const = constant_directions(basis, frame, tol)
    recur = recurrent_directions(basis, frame)
    omega = None
    label = "unrecognized"
    if dim == 0:
        label = "R1"
    elif dim == 1:
        cls = classify_bivector(_mixed_to_bivector(basis[0], frame),
                                max(tol, 1e-8))
        label = {"simple-timelike": "R2", "simple-null": "R3",
                 "simple-spacelike": "R4", "non-simple": "R5"}.get(
                     cls.tag, "unrecognized")
        if label == "R5":
            g_t, h_s = cls.pair
            omega = float(np.sqrt(h_s.theta / -g_t.theta))
    elif dim == 2:
        chars = [ch for _, ch in const]
        if len(const) == 1:
            label = {"spacelike": "R6", "null": "R8"}.get(chars[0],
                                                          "unrecognized")
        elif len(const) == 0:
            label = "R7"
    elif dim == 3:
        chars = [ch for _, ch in const]
        if len(const) == 1:
            label = {"spacelike": "R10", "null": "R11",
                     "timelike": "R13"}.get(chars[0], "unrecognized")
        elif len(const) == 0:
            got = _r9_r12_discriminant(basis, frame, tol)
            if got is not None:
                label, omega = got
            else:
                diags["reason"] = "dim-3 discriminant failed"
    elif dim == 4:
        if recur and all(_causal_character(v, frame.g) == "null"
                         for v in recur):
            label = "R14"
        else:
            diags["reason"] = "dim-4 algebra without a null eigen-direction"
    elif dim == 5:
        diags["reason"] = "the Lorentz algebra has no 5-dim subalgebra"
    elif dim == 6:
        label = "R15"
    return HolonomyAlgebraReport(
        dim, basis, label, const, recur, omega,
        realizable=(label != "R5"), diagnostics=diags)


def _closure_residual(basis, tol: float):
    if len(basis) < 2:
        return None
    rows = np.array([_mixed_to_vec(m) / max(np.max(np.abs(m)), 1e-300)
                     for m in basis])
    span = canonical_span_basis(rows, tol)
    worst = 0.0
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            br = lie_bracket(basis[i], basis[j])
            nrm = np.max(np.abs(br))
            if nrm <= 1e-12:
                continue
            aug = canonical_span_basis(
                np.vstack([span, _mixed_to_vec(br) / nrm]), max(tol, 1e-6))
            if len(aug) > len(span):
                worst = max(worst, nrm)
    return worst if worst > 0 else None


# ---------------------------------------------------------------------------
# Survey
# ---------------------------------------------------------------------------

def holonomy_survey(spec: MetricSpec, samples: int = 32, seed: int = 7,
                    derivative_order: int = 1, box=None,
                    tol: float = SPAN_TOL) -> HolonomySurveyReport:
    """Identify the infinitesimal holonomy algebra over sampled points.

    Each point is closed and identified in its own frame (the matrices at
    different points are skew-self-adjoint for different g(m), so a naive
    cross-point union of chart components is not an algebra and is not
    attempted).  The aggregate label is the maximal-dimension per-point
    identification; disagreements are flagged.
    """
    pts = sample_points(spec, samples, seed=seed, box=box)
    per_point = []
    best: HolonomyAlgebraReport | None = None
    for pt in pts:
        fr = frame_at(spec, pt)
        gens = ihol_generators(spec, pt, derivative_order, frame=fr)
        basis = close_algebra(gens, fr, tol)
        rep = identify_type(basis, fr, tol)
        per_point.append((pt, rep.label, rep.dimension))
        if best is None or _better(rep, best):
            best = rep
    labels = {lab for _, lab, _ in per_point}
    mixed = len(labels) > 1
    return HolonomySurveyReport(best.label, best, per_point, mixed)


def _better(a: HolonomyAlgebraReport, b: HolonomyAlgebraReport) -> bool:
    if a.dimension != b.dimension:
        return a.dimension > b.dimension
    return b.label == "unrecognized" and a.label != "unrecognized"
