"""Positive semidefinite Hermitian matrix fields as metrics on trivial bundles.

A ``MatrixMetric`` samples an r x r Hermitian matrix h(z) over a grid, with
``0 < det h < inf`` away from a declared singular node set.  The squared
length of a holomorphic section v = (v^1..v^r) is the pairing

    |v|_h^2 = sum_ij h_ij v^i conj(v^j),

and curvature sign conventions are phrased through it: h is negatively
curved (in the Griffiths sense) when log |v|_h^2 is plurisubharmonic for
every holomorphic v, and positively curved when the transpose-inverse dual
is negatively curved.  The tests here sample that definition over finite
section lists, so they are necessary conditions, not proofs.

Metrics built by the named constructors carry an analytic entry evaluator,
which is what lets curvature checks run finite-difference stencils off the
grid; purely sampled fields support the algebraic checks only.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .defaults import DEFAULTS
from .errors import (
    DegenerateSectionError,
    InvalidArgument,
    MetricInconsistencyError,
    NearSingularError,
    OutOfRange,
    UnsupportedRankError,
)
from .field import GridDomain, PshReport, Weight, is_psh, _tag_values

__all__ = [
    "MatrixMetric",
    "SectionSample",
    "make_matrix_metric",
    "raufi_example",
    "scalar_metric",
    "constant_metric",
    "dual_metric",
    "det_weight",
    "eigen_bounds_check",
    "EigenBoundsReport",
    "griffiths_negative_test",
    "griffiths_positive_test",
    "GriffithsReport",
    "entry_cauchy_schwarz_check",
    "PolyMap",
    "pullback_metric",
    "restrict_sub",
    "quotient_metric",
    "sym_power_metric",
    "taut_metric",
    "default_sections",
    "section_norm_weight",
]


# ---------------------------------------------------------------------------
# types


@dataclass
class SectionSample:
    """Holomorphic section with polynomial components, v = (v^1..v^r).

    ``components`` is a tuple of one-variable coefficient arrays (constant
    sections are degree-0 polynomials).
    """

    components: tuple
    label: str = ""

    def __post_init__(self):
        comps = tuple(np.atleast_1d(np.asarray(c, dtype=complex)) for c in self.components)
        if not comps or all(np.all(c == 0) for c in comps):
            raise DegenerateSectionError("section is identically zero")
        object.__setattr__(self, "components", comps)

    @property
    def rank(self) -> int:
        return len(self.components)

    def values(self, points) -> np.ndarray:
        pts = np.asarray(points)
        out = np.empty(pts.shape + (self.rank,), dtype=complex)
        for i, c in enumerate(self.components):
            out[..., i] = np.polynomial.polynomial.polyval(pts, c)
        return out


@dataclass
class MatrixMetric:
    """r x r Hermitian PSD matrix field over a grid.

    ``entries`` has shape (N, r, r); ``singular`` flags nodes where the field
    is allowed to degenerate (semidefinite or non-finite) and is excluded
    from curvature tests.  ``entry_fn`` evaluates entries at arbitrary points
    when the metric comes from a named construction.  ``det_tags`` encode a
    known log-tag structure of log det h; ``degeneracy_points`` are candidate
    points where sections may acquire extra vanishing (used to peel tags off
    section norms before stencil tests).
    """

    dom: GridDomain
    rank: int
    entries: np.ndarray
    singular: np.ndarray
    entry_fn: Optional[Callable] = None
    det_tags: tuple = ()
    degeneracy_points: tuple = ()
    descriptor: Optional[dict] = None

    def dets(self) -> np.ndarray:
        return np.real(np.linalg.det(self.entries))

    def entries_at(self, points) -> np.ndarray:
        if self.entry_fn is None:
            raise InvalidArgument(
                "metric has no analytic entry evaluator; off-grid evaluation "
                "needs a metric built by a named constructor"
            )
        return self.entry_fn(np.asarray(points))

    def section_norm_sq(self, v: SectionSample, points=None) -> np.ndarray:
        """|v|_h^2 = sum h_ij v^i conj(v^j) on the nodes or given points."""
        if points is None:
            H = self.entries
            vals = v.values(self.dom.nodes)
        else:
            H = self.entries_at(points)
            vals = v.values(points)
        return np.real(np.einsum("nij,ni,nj->n", H, vals, np.conj(vals)))


def _entry_bound(entries) -> float:
    return float(np.max(np.abs(entries)))


def _auto_singular(entries, declared=None):
    r = entries.shape[-1]
    dets = np.real(np.linalg.det(entries))
    C = _entry_bound(entries)
    thresh = DEFAULTS["metric.singular_det_factor"] * (r * C) ** r
    sing = dets < thresh
    if declared is not None:
        sing = sing | np.asarray(declared, dtype=bool)
    return sing


def make_matrix_metric(
    dom: GridDomain,
    entries,
    singular=None,
    entry_fn=None,
    det_tags=(),
    degeneracy_points=(),
    descriptor=None,
) -> MatrixMetric:
    """Validate and assemble a matrix metric from node samples.

    Enforces Hermitian symmetry to 1e-12, positive semidefiniteness off the
    singular set, and det > 0 off the singular set (the almost-everywhere
    nondegeneracy a singular Hermitian metric must satisfy).
    """
    entries = np.asarray(entries, dtype=complex)
    if entries.ndim != 3 or entries.shape[0] != dom.size or entries.shape[1] != entries.shape[2]:
        raise InvalidArgument(f"entries must have shape (N, r, r), got {entries.shape}")
    r = entries.shape[1]
    herm_defect = np.max(np.abs(entries - np.conj(np.transpose(entries, (0, 2, 1)))))
    scale = max(_entry_bound(entries), 1.0)
    if herm_defect > 1e-12 * scale:
        raise MetricInconsistencyError(
            f"entries not Hermitian: worst conjugate-symmetry defect {herm_defect:.3g}"
        )
    entries = 0.5 * (entries + np.conj(np.transpose(entries, (0, 2, 1))))
    sing = _auto_singular(entries, singular)
    ok = ~sing
    if np.any(ok):
        eigs = np.linalg.eigvalsh(entries[ok])
        if eigs[:, 0].min() < -1e-10 * scale:
            i = int(np.flatnonzero(ok)[np.argmin(np.linalg.eigvalsh(entries[ok])[:, 0])])
            raise MetricInconsistencyError(
                f"not positive semidefinite at node {i} "
                f"(min eigenvalue {eigs[:, 0].min():.3g})"
            )
        dets = np.real(np.linalg.det(entries[ok]))
        if dets.min() <= 0:
            raise MetricInconsistencyError(
                "det <= 0 at a node outside the declared singular set"
            )
    return MatrixMetric(
        dom, r, entries, sing, entry_fn, tuple(det_tags),
        tuple(degeneracy_points), descriptor,
    )


# ---------------------------------------------------------------------------
# constructors


def raufi_example(grid: GridDomain) -> MatrixMetric:
    """Rank-2 metric ((1+|z|^2, z), (zbar, |z|^2)) on a disc grid.

    Negatively curved, with det h = |z|^4, yet its connection coefficients
    are not locally integrable at 0: the standard example showing a curvature
    tensor need not exist for a singular metric.  The nodes nearest the
    origin are flagged singular.
    """
    if grid.dims != 1:
        raise InvalidArgument("the example lives on a one-variable disc")

    def entry_fn(pts):
        z = np.asarray(pts)
        H = np.empty(z.shape + (2, 2), dtype=complex)
        H[..., 0, 0] = 1.0 + np.abs(z) ** 2
        H[..., 0, 1] = z
        H[..., 1, 0] = np.conj(z)
        H[..., 1, 1] = np.abs(z) ** 2
        return H

    entries = entry_fn(grid.nodes)
    declared = np.abs(grid.nodes) <= np.min(np.abs(grid.nodes)) + 1e-15
    return make_matrix_metric(
        grid,
        entries,
        singular=declared,
        entry_fn=entry_fn,
        det_tags=((0.0 + 0.0j, 2.0),),
        degeneracy_points=(0.0 + 0.0j,),
        descriptor={"kind": "raufi"},
    )


def scalar_metric(w: Weight) -> MatrixMetric:
    """Rank-1 metric e^{-phi} from a weight."""
    dom = w.dom
    if w.evaluable:
        vals_fn = w.values

        def entry_fn(pts, _f=vals_fn):
            v = np.exp(-np.asarray(_f(pts)))
            return v[..., None, None].astype(complex)

    else:
        entry_fn = None
    entries = np.exp(-w.node_values())[:, None, None].astype(complex)
    det_tags = tuple((p, -a) for p, a in w.log_tags)
    return MatrixMetric(
        dom, 1, entries, _auto_singular(entries), entry_fn, det_tags,
        tuple(p for p, _ in w.log_tags), {"kind": "scalar", "weight": w.descriptor},
    )


def constant_metric(dom: GridDomain, matrix) -> MatrixMetric:
    matrix = np.asarray(matrix, dtype=complex)
    r = matrix.shape[0]

    def entry_fn(pts, _M=matrix):
        pts = np.asarray(pts)
        return np.broadcast_to(_M, pts.shape[:1] + (r, r)).copy()

    entries = entry_fn(dom.nodes)
    return make_matrix_metric(
        dom, entries, entry_fn=entry_fn, descriptor={"kind": "constant"}
    )


def diag_weight_metric(dom: GridDomain, weights) -> MatrixMetric:
    """Diagonal metric diag(e^{-phi_1}, ..., e^{-phi_r})."""
    ws = list(weights)
    r = len(ws)
    if not all(w.evaluable for w in ws):
        raise InvalidArgument("diagonal constructor needs evaluable weights")

    def entry_fn(pts, _ws=tuple(ws)):
        pts = np.asarray(pts)
        H = np.zeros(pts.shape[:1] + (r, r), dtype=complex)
        for i, w in enumerate(_ws):
            H[:, i, i] = np.exp(-np.asarray(w.values(pts)))
        return H

    entries = entry_fn(dom.nodes)
    det_tags = {}
    for w in ws:
        for p, a in w.log_tags:
            det_tags[p] = det_tags.get(p, 0.0) - a
    return make_matrix_metric(
        dom,
        entries,
        entry_fn=entry_fn,
        det_tags=tuple(det_tags.items()),
        degeneracy_points=tuple(det_tags),
        descriptor={"kind": "diag", "weights": [w.descriptor for w in ws]},
    )


# ---------------------------------------------------------------------------
# duality, determinant, bounds


def dual_metric(h: MatrixMetric) -> MatrixMetric:
    """Transpose-inverse dual, an involution on the nondegenerate nodes.

    Nodes with vanishing det move to the singular set of the output; a
    non-singular node whose condition number exceeds the trusted limit
    aborts with the node list.
    """
    ok = ~h.singular
    eigs = np.linalg.eigvalsh(h.entries[ok])
    cond = eigs[:, -1] / np.maximum(eigs[:, 0], 1e-300)
    limit = DEFAULTS["metric.cond_limit"]
    if np.any(cond > limit):
        nodes = np.flatnonzero(ok)[cond > limit]
        raise NearSingularError(
            f"{nodes.size} nodes exceed condition number {limit:.1e}; "
            f"first offenders {nodes[:5].tolist()}"
        )
    entries = np.empty_like(h.entries)
    entries[ok] = np.swapaxes(np.linalg.inv(h.entries[ok]), -1, -2)
    entries[h.singular] = np.eye(h.rank)  # placeholder, flagged singular

    entry_fn = None
    if h.entry_fn is not None:
        base = h.entry_fn

        def entry_fn(pts, _f=base):
            return np.swapaxes(np.linalg.inv(_f(pts)), -1, -2)

    return MatrixMetric(
        h.dom,
        h.rank,
        entries,
        h.singular.copy(),
        entry_fn,
        tuple((p, -a) for p, a in h.det_tags),
        h.degeneracy_points,
        {"kind": "dual", "base": h.descriptor},
    )


def det_weight(h: MatrixMetric) -> Weight:
    """The weight log det h, i.e. det h = e^{+weight}.

    For a negatively curved metric this weight is plurisubharmonic; the
    declared det tags of the constructors are peeled off so the smooth part
    stays stencil-friendly near the degeneracy.
    """
    dets = h.dets()
    ok = ~h.singular
    if np.any(dets[ok] <= 0):
        i = int(np.flatnonzero(ok & (dets <= 0))[0])
        raise MetricInconsistencyError(
            f"det h = {dets[i]:.3g} <= 0 at non-singular node {i}"
        )
    if h.entry_fn is not None:
        base = h.entry_fn
        tags = h.det_tags

        def smooth(pts, _f=base, _tags=tags, _dims=h.dom.dims):
            d = np.real(np.linalg.det(_f(pts)))
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.log(np.abs(d))
            return vals - _tag_values(pts, _tags, _dims)

        return Weight(
            h.dom, smooth, h.det_tags,
            {"kind": "log_det", "base": h.descriptor},
        )
    with np.errstate(divide="ignore"):
        node_vals = np.log(np.maximum(dets, 0.0))
    node_vals = node_vals - _tag_values(h.dom.nodes, h.det_tags, h.dom.dims)
    return Weight(h.dom, node_vals, h.det_tags, {"kind": "log_det"})


@dataclass
class EigenBoundsReport:
    """Entry-bound eigenvalue control: with C = max |h_ij| on the region,
    every eigenvalue is <= rank*C and the smallest is >= det/(rank*C)^(r-1)."""

    C: float
    lambda_max_ok: bool
    lambda_min_ok: bool
    worst_max_margin: float
    worst_min_margin: float
    nodes_checked: int

    @property
    def passed(self) -> bool:
        return self.lambda_max_ok and self.lambda_min_ok

    def __bool__(self):
        return self.passed


def eigen_bounds_check(h: MatrixMetric, region=None, C=None, slack=1e-10) -> EigenBoundsReport:
    """Check the entry-bound eigenvalue inequalities on a node region."""
    if region is None:
        idx = np.flatnonzero(~h.singular)
    else:
        region = np.asarray(region)
        idx = np.flatnonzero(region) if region.dtype == bool else region.astype(int)
    if idx.size == 0:
        raise InvalidArgument("empty region")
    E = h.entries[idx]
    if not np.all(np.isfinite(E)):
        raise InvalidArgument("entries not finite on the region")
    r = h.rank
    Cval = _entry_bound(E) if C is None else float(C)
    eigs = np.linalg.eigvalsh(E)
    dets = np.real(np.linalg.det(E))
    tol = slack * max(Cval, 1.0)
    max_margin = float(np.min(r * Cval - eigs[:, -1]))
    lower = dets / (r * Cval) ** (r - 1)
    min_margin = float(np.min(eigs[:, 0] - lower))
    return EigenBoundsReport(
        Cval,
        bool(max_margin >= -tol),
        bool(min_margin >= -tol),
        max_margin,
        min_margin,
        int(idx.size),
    )


def entry_cauchy_schwarz_check(h: MatrixMetric, slack=1e-12) -> bool:
    """|h_ij|^2 <= h_ii h_jj at every node, for all i != j."""
    if h.rank < 2:
        raise InvalidArgument("needs rank >= 2")
    E = h.entries
    diag = np.real(np.einsum("nii->ni", E))
    scale = max(_entry_bound(E) ** 2, 1.0)
    for i in range(h.rank):
        for j in range(h.rank):
            if i == j:
                continue
            lhs = np.abs(E[:, i, j]) ** 2
            if np.any(lhs > diag[:, i] * diag[:, j] + slack * scale):
                return False
    return True


# ---------------------------------------------------------------------------
# curvature sampling tests


def default_sections(h: MatrixMetric, seed=0, n_random=4, max_degree=2):
    """The frozen sampling list: coordinate constants, pairwise sums and
    i-sums, plus seeded random polynomial sections of degree <= 2."""
    r = h.rank
    secs = []
    eye = np.eye(r)
    for i in range(r):
        secs.append(SectionSample(tuple(eye[i]), label=f"e{i + 1}"))
    for i in range(r):
        for j in range(i + 1, r):
            v = eye[i] + eye[j]
            secs.append(SectionSample(tuple(v), label=f"e{i + 1}+e{j + 1}"))
            v = eye[i] + 1j * eye[j]
            secs.append(SectionSample(tuple(v), label=f"e{i + 1}+i*e{j + 1}"))
    rng = np.random.default_rng(seed)
    for k in range(n_random):
        comps = []
        for _ in range(r):
            c = rng.normal(size=max_degree + 1) + 1j * rng.normal(size=max_degree + 1)
            comps.append(c)
        # keep the first component nonvanishing at candidate degeneracy
        # points so random probes do not sit on the metric kernel
        for p in h.degeneracy_points:
            v0 = np.polynomial.polynomial.polyval(p, comps[0])
            if abs(v0) < 0.3:
                comps[0][0] += 1.0 + 0.5j
        secs.append(SectionSample(tuple(comps), label=f"rand{k}"))
    return secs


def _poly_roots_in(coeffs, radius, tol=1e-9):
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if c.size <= 1:
        return []
    roots = np.polynomial.polynomial.polyroots(c)
    return [complex(r) for r in roots if abs(r) < radius + tol]


def section_norm_weight(h: MatrixMetric, v: SectionSample) -> Weight:
    """log |v|_h^2 as a weight, with detected zeros peeled off as log-tags.

    Candidate tag points are the metric's declared degeneracy points plus
    common roots of the section components inside the domain; the local
    vanishing order of |v|_h^2 is estimated on two small circles and, when it
    is (nearly) a positive integer, peeled off so the finite-difference
    stencil only ever sees the smooth remainder.
    """
    if h.entry_fn is None:
        raise InvalidArgument("curvature sampling needs an analytic entry evaluator")
    g_nodes = h.section_norm_sq(v)
    peak = float(np.max(g_nodes))
    if peak <= 0.0 or not np.isfinite(peak):
        raise DegenerateSectionError(f"section {v.label or v.components} has |v|_h^2 == 0")

    # candidate points where g could vanish
    radius = h.dom.radii[0]
    cands = list(h.degeneracy_points)
    common = None
    for c in v.components:
        roots = set()
        if np.max(np.abs(c)) > 0:
            roots = {complex(np.round(r.real, 9) + 1j * np.round(r.imag, 9))
                     for r in _poly_roots_in(c, radius)}
            common = roots if common is None else {
                a for a in common if any(abs(a - b) < 1e-8 for b in roots)
            }
        else:
            common = common if common is not None else None
    if common:
        cands.extend(common)

    tags = []
    rho = 1e-5 * radius
    angles = np.exp(2j * np.pi * np.arange(16) / 16)
    for p in cands:
        if abs(p) >= radius:
            continue
        g1 = float(np.mean(h.section_norm_sq(v, p + rho * angles)))
        g2 = float(np.mean(h.section_norm_sq(v, p + 2 * rho * angles)))
        if g1 <= 0 or g2 <= 0:
            continue
        k_hat = np.log(g2 / g1) / (2.0 * np.log(2.0))
        if k_hat < 0.1:
            continue
        k_round = round(k_hat)
        a = float(k_round) if abs(k_hat - k_round) < 0.05 and k_round >= 1 else float(k_hat)
        tags.append((complex(p), a))
    tags = tuple(tags)

    def smooth(pts, _h=h, _v=v, _tags=tags, _dims=h.dom.dims):
        g = _h.section_norm_sq(_v, pts)
        with np.errstate(divide="ignore"):
            vals = np.log(np.maximum(g, 0.0))
        return vals - _tag_values(pts, _tags, _dims)

    return Weight(h.dom, smooth, tags, {"kind": "section_log_norm", "label": v.label})


@dataclass
class GriffithsReport:
    """Outcome of the finite sampling test for curvature sign.

    A pass is a necessary condition only: the definition quantifies over all
    local holomorphic sections, the test over ``sections`` alone.
    """

    passed: bool
    worst_label: str
    worst_node: object
    worst_value: float
    per_section: list = dc_field(default_factory=list)
    note: str = "sampling test over a finite section list; necessary, not sufficient"

    def __bool__(self):
        return self.passed

    def __iter__(self):
        return iter((self.passed, (self.worst_label, self.worst_node, self.worst_value)))


def griffiths_negative_test(h: MatrixMetric, sections=None, tol=None, seed=0) -> GriffithsReport:
    """Sampled Griffiths semi-negativity: log |v|_h^2 psh for each probe."""
    secs = default_sections(h, seed=seed) if sections is None else list(sections)
    if not secs:
        raise InvalidArgument("empty section list")
    worst = (np.inf, "", None)
    per = []
    for v in secs:
        w = section_norm_weight(h, v)
        rep = is_psh(w, tol=tol)
        per.append((v.label, rep))
        if rep.worst_value < worst[0]:
            worst = (rep.worst_value, v.label, rep.worst_node)
    passed = all(rep.passed for _, rep in per)
    return GriffithsReport(passed, worst[1], worst[2], worst[0], per)


def griffiths_positive_test(h: MatrixMetric, sections=None, tol=None, seed=0) -> GriffithsReport:
    """Sampled Griffiths semi-positivity: the dual must test semi-negative."""
    hd = dual_metric(h)
    if sections is None:
        sections = default_sections(hd, seed=seed)
    return griffiths_negative_test(hd, sections, tol=tol, seed=seed)


# ---------------------------------------------------------------------------
# functoriality


@dataclass(frozen=True)
class PolyMap:
    """Holomorphic polynomial map between one-variable grids, w -> p(w)."""

    source: GridDomain
    target: GridDomain
    coeffs: tuple

    def __call__(self, pts):
        return np.polynomial.polynomial.polyval(
            np.asarray(pts), np.asarray(self.coeffs, dtype=complex)
        )


def pullback_metric(h: MatrixMetric, mp: PolyMap) -> MatrixMetric:
    """Entries composed with the map; curvature signs are inherited.

    Known det tags transport to the map's preimages with multiplicity.
    """
    if h.entry_fn is None:
        raise InvalidArgument("pullback needs an analytic entry evaluator")
    if mp.source.dims != 1 or h.dom.dims != 1:
        raise InvalidArgument("polynomial maps are one-variable at desk scale")
    image = mp(mp.source.nodes)
    if np.max(np.abs(image)) > h.dom.radii[0] + 1e-12:
        raise OutOfRange(
            f"map image reaches |z|={np.max(np.abs(image)):.4g}, outside the "
            f"target radius {h.dom.radii[0]}"
        )

    base = h.entry_fn

    def entry_fn(pts, _f=base, _mp=mp):
        return _f(_mp(pts))

    def preimages(p):
        shifted = np.asarray(mp.coeffs, dtype=complex).copy()
        shifted[0] -= p
        roots = _poly_roots_in(shifted, mp.source.radii[0])
        out = {}
        for r0 in roots:
            key = next((k for k in out if abs(k - r0) < 1e-8), None)
            if key is None:
                out[complex(np.round(r0.real, 10) + 1j * np.round(r0.imag, 10))] = 1
            else:
                out[key] += 1
        return out

    det_tags = []
    degeneracy = []
    for p, a in h.det_tags:
        for w0, mult in preimages(p).items():
            det_tags.append((w0, a * mult))
    for p in h.degeneracy_points:
        degeneracy.extend(preimages(p).keys())

    return make_matrix_metric(
        mp.source,
        entry_fn(mp.source.nodes),
        entry_fn=entry_fn,
        det_tags=tuple(det_tags),
        degeneracy_points=tuple(degeneracy),
        descriptor={"kind": "pullback", "base": h.descriptor,
                    "map": [complex(c).real for c in mp.coeffs]
                    if all(complex(c).imag == 0 for c in mp.coeffs)
                    else None},
    )


def restrict_sub(h: MatrixMetric, frame) -> MatrixMetric:
    """Metric induced on a constant subbundle spanned by the frame columns.

    With the pairing |v|_h^2 = sum h_ij v^i conj(v^j), the induced matrix on
    coordinates s is F^T h conj(F).  Negativity (as a sampling test) passes
    to the restriction when it holds upstairs.
    """
    F = np.asarray(frame, dtype=complex)
    if F.ndim != 2 or F.shape[0] != h.rank:
        raise InvalidArgument(f"frame must be {h.rank} x s")
    if np.linalg.matrix_rank(F, tol=1e-10) < F.shape[1]:
        raise InvalidArgument("frame columns are linearly dependent")

    def project(E, _F=F):
        return np.einsum("ia,...ij,jb->...ab", _F, E, np.conj(_F))

    entry_fn = None
    if h.entry_fn is not None:
        base = h.entry_fn
        entry_fn = lambda pts, _f=base: project(_f(pts))

    return make_matrix_metric(
        h.dom,
        project(h.entries),
        singular=h.singular,
        entry_fn=entry_fn,
        degeneracy_points=h.degeneracy_points,
        descriptor={"kind": "sub", "base": h.descriptor},
    )


def quotient_metric(h: MatrixMetric, surjection) -> MatrixMetric:
    """Metric induced on a constant quotient of a positively curved metric.

    Computed through double duality: dualize, restrict to the image of the
    dual injection, dualize back.  For a coordinate projection this is the
    Schur complement of the discarded block, the inner-product quotient.
    """
    Q = np.asarray(surjection, dtype=complex)
    if Q.ndim != 2 or Q.shape[1] != h.rank:
        raise InvalidArgument(f"surjection must be q x {h.rank}")
    if np.linalg.matrix_rank(Q, tol=1e-10) < Q.shape[0]:
        raise InvalidArgument("surjection is not of full rank")
    dual_frame = np.conj(Q).T  # dual injection of the quotient into E^*
    hq = dual_metric(restrict_sub(dual_metric(h), dual_frame))
    hq.descriptor = {"kind": "quotient", "base": h.descriptor}
    return hq


def _multiset_perms(multiset):
    return sorted(set(itertools.permutations(multiset)))


def sym_power_metric(h: MatrixMetric, m: int) -> MatrixMetric:
    """Induced metric on the m-th symmetric power of a rank-2 metric.

    Basis: unnormalized symmetrized monomials e1^m, e1^(m-1)e2, ..., e2^m
    (sums over distinct permutations of elementary tensors), so multiplicity
    weights land in the metric: diag(a, b) maps to binomial-weighted
    diag(..., C(m,k) a^(m-k) b^k, ...).  Small cases stay integer-exact.
    """
    if h.rank != 2:
        raise UnsupportedRankError("symmetric powers are implemented for rank 2")
    m = int(m)
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    if m == 1:
        return h
    multisets = [(0,) * (m - k) + (1,) * k for k in range(m + 1)]
    perms = [_multiset_perms(ms) for ms in multisets]

    def induced(E, _perms=perms, _m=m):
        n = E.shape[0]
        dim = len(_perms)
        out = np.zeros((n, dim, dim), dtype=complex)
        for a, pa in enumerate(_perms):
            for b, pb in enumerate(_perms):
                acc = np.zeros(n, dtype=complex)
                for sa in pa:
                    for sb in pb:
                        prod = np.ones(n, dtype=complex)
                        for t in range(_m):
                            prod = prod * E[:, sa[t], sb[t]]
                        acc += prod
                out[:, a, b] = acc
        return out

    entry_fn = None
    if h.entry_fn is not None:
        base = h.entry_fn
        entry_fn = lambda pts, _f=base: induced(_f(np.asarray(pts)))

    return make_matrix_metric(
        h.dom,
        induced(h.entries),
        singular=h.singular,
        entry_fn=entry_fn,
        degeneracy_points=h.degeneracy_points,
        descriptor={"kind": "sym_power", "m": m, "base": h.descriptor},
    )


def taut_metric(h: MatrixMetric, line, node: int) -> float:
    """Dual tautological metric g* = |line|_{h*}^2 at a grid node.

    The induced metric g = 1/g* on the tautological quotient then satisfies
    g <= (rC)^(r-1) det h with C the entry bound of the dual on the region,
    because g* is the dual norm restricted to a line and hence at least the
    smallest dual eigenvalue.
    """
    node = int(node)
    if h.singular[node]:
        raise NearSingularError(f"metric is singular at node {node}")
    xi = np.asarray(line, dtype=complex)
    if xi.shape != (h.rank,):
        raise InvalidArgument(f"line must be a vector of length {h.rank}")
    nrm = np.linalg.norm(xi)
    if nrm == 0:
        raise InvalidArgument("line must be nonzero")
    xi = xi / nrm
    hstar = np.swapaxes(np.linalg.inv(h.entries[node]), -1, -2)
    val = float(np.real(np.einsum("ij,i,j->", hstar, xi, np.conj(xi))))
    return val
