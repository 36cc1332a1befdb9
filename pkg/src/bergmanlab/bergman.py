"""Pseudo-norms, Bergman kernels, twisted Gram forms, and relative kernels.

The quantities here are the package's reason to exist.  For a polynomial
section space on a weighted disc,

* the L^{2/m} pseudo-norm  ||u||_m = (int |u|^{2/m} e^{-phi/m} dA)^{m/2}
  (degree-1 homogeneous, a norm only at m = 1);
* the m-th Bergman kernel  B_m(x) = sup { |u(x)|^2 : ||u||_m <= 1 },
  computed at m = 1 by the reproducing-kernel closed form and for m >= 2 by
  multi-start projected ascent of the scale-invariant Rayleigh objective
  log|u(x)|^2 - 2 log||u||_m on the coefficient sphere (the reported value
  is exact for the reported extremal section, hence a certified lower bound
  of the sup);
* the twisted weight of h_{m-1} = (B_m^{-1})^{(m-1)/m} h^{1/m}, which feeds
  the m-th Narashimhan-Simha Gram form
  g_m(u, v) = int u conj(v) e^{-phi_{m-1}} dA;
* relative kernels over a one-parameter base t with a jointly psh weight
  phi(t, z), together with the finite-difference verification that
  log B_m(t, z) is plurisubharmonic on the product grid and that the
  fiberwise Gram field is Griffiths-positive in the sampled dual sense.

Conventions: metrics are e^{-phi}; scaling the metric by c > 0 sends B_m to
B_m / c and the twisted Gram to c times itself, and the implementation is
exactly equivariant under that scaling (same iterates, shifted objective).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .defaults import DEFAULTS
from .errors import (
    IntegrabilityError,
    InvalidArgument,
    PreconditionError,
)
from .field import (
    GridDomain,
    PshReport,
    Weight,
    is_psh,
    make_product_grid,
    make_weight,
    quadrature,
    reg_sup,
    scale_weight,
    weight_from_descriptor,
)
from .sections import Section, SectionSpace, make_poly_space, vanishing_order

__all__ = [
    "BergmanResult",
    "pseudo_norm",
    "j_m_integrable",
    "bergman_closed_form_m1",
    "bergman_kernel",
    "kernel_field_values",
    "twisted_weight_h_m_minus_1",
    "ns_gram",
    "extremal_bound_check",
    "holder_chain_check",
    "FamilyWeight",
    "make_family_weight",
    "Family",
    "RelativeKernelField",
    "relative_kernel",
    "psh_variation_check",
    "PshVariationReport",
    "uniform_bound_check",
    "UniformBoundReport",
    "envelope_metric",
    "family_ns_gram",
    "NSPositivityReport",
    "gram_lower_bound_scan",
    "GramScanReport",
]


# ---------------------------------------------------------------------------
# pseudo-norms and integrability predicates


def _inside_tags(w: Weight):
    return [(p, a) for p, a in w.log_tags if abs(p) < w.dom.radii[0]]


def _pseudo_norm_integrable(order_at, w: Weight, m) -> bool:
    # local exponent of |u|^{2/m} e^{-phi/m} near a tag: (2 ord - 2a)/m > -2
    for p, a in _inside_tags(w):
        if not (2.0 * order_at(p) - 2.0 * a) / m > -2.0:
            return False
    return True


def pseudo_norm(u: Section, w: Weight, m) -> float:
    """L^{2/m} pseudo-norm (int |u|^{2/m} e^{-phi/m})^{m/2}.

    Positively homogeneous of degree one; coincides with the weighted L2
    norm at m = 1.  Divergence near log-tags is decided by exponent
    arithmetic before quadrature.
    """
    m = float(m)
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    if not _pseudo_norm_integrable(lambda p: vanishing_order(u, p), w, m):
        raise IntegrabilityError("pseudo-norm diverges at a log-tag")
    dens = np.abs(u.node_values()) ** (2.0 / m) * np.exp(-w.node_values() / m)
    val = quadrature(dens, w.dom)
    return float(val ** (m / 2.0))


def j_m_integrable(u: Section, w: Weight, m) -> bool:
    """Pointwise multiplier-type predicate: is int |u|^{2/m} e^{-phi} finite?

    Note e^{-phi}, not e^{-phi/m}: at a tag (p, a) with vanishing order k of
    u the local exponent is (2/m) k - 2a, and finiteness on the bounded
    domain holds iff it exceeds -2 at every tag.
    """
    m = float(m)
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    for p, a in _inside_tags(w):
        if not (2.0 / m) * vanishing_order(u, p) - 2.0 * a > -2.0:
            return False
    return True


def _integrable_basis_mask(space: SectionSpace, w: Weight, m) -> np.ndarray:
    mask = np.ones(space.dim, dtype=bool)
    inside = _inside_tags(w)
    if not inside or space.dom.dims != 1:
        return mask
    for j, e in enumerate(space.exponents):
        for p, a in inside:
            ordj = e if abs(p) < 1e-12 else 0
            if not (2.0 * ordj - 2.0 * a) / m > -2.0:
                mask[j] = False
    return mask


# ---------------------------------------------------------------------------
# kernels


@dataclass
class BergmanResult:
    """Kernel value at a point with its extremal section.

    ``value`` is exact for ``extremal`` (a certified lower bound for the
    sup); ``gap`` is best minus second-best over restarts, a crude basin
    diagnostic.  ``zero_extremal`` marks the degenerate convention B = 0
    when no admissible section is available or all vanish at the point.
    """

    value: float
    extremal: Optional[Section]
    restarts_used: int = 0
    gap: float = np.inf
    zero_extremal: bool = False
    method: str = "closed_form"


def bergman_closed_form_m1(space: SectionSpace, w: Weight, x) -> float:
    """Reproducing-kernel identity: B_1(x) = conj(b(x))^H G^{-1} conj(b(x)).

    Exact in the finite-dimensional space; the m = 1 oracle for the
    optimizer.  The empty space returns 0 by convention.
    """
    from .sections import gram

    if space.dim == 0:
        return 0.0
    mask = _integrable_basis_mask(space, w, 1)
    if not np.any(mask):
        return 0.0
    sub = _subspace(space, mask)
    G = gram(sub, w)
    beta = sub.basis_at(x)
    gamma = np.conj(beta)
    try:
        sol = np.linalg.solve(G, gamma)
    except np.linalg.LinAlgError as exc:
        raise IntegrabilityError(f"singular Gram matrix: {exc}") from exc
    return float(np.real(np.dot(beta, sol)))


def _subspace(space: SectionSpace, mask) -> SectionSpace:
    if np.all(mask):
        return space
    exps = tuple(e for e, keep in zip(space.exponents, mask) if keep)
    return SectionSpace(space.dom, space.degree, space.twist, exps)


class _RayleighObjective:
    """log|u(x)|^2 - 2 log||u||_m on coefficients, with Wirtinger gradient."""

    def __init__(self, V, density, beta, m):
        self.V = V
        self.density = density  # quad weights * e^{-phi/m}
        self.beta = beta
        self.m = float(m)

    def __call__(self, c):
        ux = np.dot(self.beta, c)
        un = self.V @ c
        I = float(np.dot(self.density, np.abs(un) ** (2.0 / self.m)))
        if abs(ux) == 0.0 or I <= 0.0:
            return -np.inf, np.zeros_like(c), I
        absu = np.abs(un)
        expo = 2.0 / self.m - 2.0
        t = np.where(absu > 1e-150, absu**expo, 0.0) * un * self.density
        grad = np.conj(self.beta) / np.conj(ux) - (np.conj(self.V).T @ t) / I
        L = np.log(abs(ux) ** 2) - self.m * np.log(I)
        return L, grad, I

    def value(self, c):
        return self(c)[0]


def _project_ascend(obj, c0, max_iter, gtol):
    c = c0 / np.linalg.norm(c0)
    L, g, _ = obj(c)
    if not np.isfinite(L):
        c = c + 0.5 * np.conj(obj.beta) / max(np.linalg.norm(obj.beta), 1e-30)
        c = c / np.linalg.norm(c)
        L, g, _ = obj(c)
        if not np.isfinite(L):
            return c, -np.inf
    eta = 0.5
    for _ in range(max_iter):
        gt = g - np.vdot(c, g) * c
        gn = np.linalg.norm(gt)
        if gn <= gtol * max(1.0, abs(L)):
            break
        accepted = False
        while eta > 1e-18:
            cn = c + eta * gt
            cn = cn / np.linalg.norm(cn)
            Ln, gnew, _ = obj(cn)
            if Ln > L + 1e-4 * eta * gn * gn:
                c, L, g = cn, Ln, gnew
                eta = min(eta * 2.0, 64.0)
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break
    return c, L


def _norm_density(w: Weight, m):
    return w.dom.quad_weights * np.exp(-w.node_values() / float(m))


def bergman_kernel(
    space: SectionSpace,
    w: Weight,
    m: int,
    x,
    restarts: Optional[int] = None,
    seed: int = 0,
    method: str = "auto",
    warm_start=None,
    max_iter: Optional[int] = None,
) -> BergmanResult:
    """Kernel value B_m(x) = max over u != 0 of |u(x)|^2 / ||u||_m^2.

    m = 1 uses the closed form unless ``method='optimize'`` forces the
    ascent path (useful as a cross-check).  For m >= 2 the unit pseudo-norm
    ball is non-convex, so the maximizer runs seeded multi-start projected
    ascent; deterministic starts (each coordinate direction and the m = 1
    extremal) are always included, which guarantees the reported value
    dominates every basis section's ratio.
    """
    m = int(m)
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    if space.dim == 0:
        return BergmanResult(0.0, None, 0, np.inf, True)
    mask = _integrable_basis_mask(space, w, m)
    if not np.any(mask):
        raise IntegrabilityError("no basis element has finite pseudo-norm")
    sub = _subspace(space, mask)
    beta = np.asarray(sub.basis_at(x))
    if np.max(np.abs(beta)) == 0.0:
        return BergmanResult(0.0, None, 0, np.inf, True)

    if m == 1 and method in ("auto", "closed"):
        from .sections import gram

        G = gram(sub, w)
        gamma = np.conj(beta)
        sol = np.linalg.solve(G, gamma)
        val = float(np.real(np.dot(beta, sol)))
        coeffs = _embed(space, mask, sol)
        nrm = np.linalg.norm(coeffs)
        extremal = Section(space, coeffs / nrm) if nrm > 0 else None
        return BergmanResult(val, extremal, 0, np.inf, False, "closed_form")

    restarts = DEFAULTS["optimizer.restarts"] if restarts is None else int(restarts)
    max_iter = DEFAULTS["optimizer.max_iter"] if max_iter is None else int(max_iter)
    gtol = DEFAULTS["optimizer.grad_tol"]
    obj = _RayleighObjective(sub.node_basis, _norm_density(w, m), beta, m)

    starts = []
    if warm_start is not None and np.linalg.norm(warm_start) > 0:
        starts.append(np.asarray(warm_start, dtype=complex))
    d = sub.dim
    for j in range(d):
        e = np.zeros(d, dtype=complex)
        e[j] = 1.0
        if abs(beta[j]) > 0:
            starts.append(e)
    try:
        m1_val = bergman_closed_form_m1(space, w, x)
        if m1_val > 0:
            from .sections import gram

            sol = np.linalg.solve(gram(sub, w), np.conj(beta))
            starts.append(sol)
    except (IntegrabilityError, np.linalg.LinAlgError):
        pass
    rng_master = np.random.default_rng(seed)
    for k in range(restarts):
        rng = np.random.default_rng([seed, k])
        starts.append(rng.normal(size=d) + 1j * rng.normal(size=d))
    del rng_master

    best = None
    values = []
    for c0 in starts:
        c, L = _project_ascend(obj, c0, max_iter, gtol)
        if np.isfinite(L):
            values.append(L)
            if best is None or L > best[1]:
                best = (c, L)
    if best is None:
        return BergmanResult(0.0, None, len(starts), np.inf, True, "optimize")
    c_star, _ = best
    u_star = Section(space, _embed(space, mask, c_star))
    nrm = pseudo_norm(u_star, w, m)
    val = float(abs(u_star(x)) ** 2 / nrm**2)
    values.sort(reverse=True)
    gap = values[0] - values[1] if len(values) > 1 else np.inf
    coeffs = u_star.coeffs / np.linalg.norm(u_star.coeffs)
    return BergmanResult(val, Section(space, coeffs), len(starts), gap, False, "optimize")


def _embed(space, mask, sub_coeffs):
    out = np.zeros(space.dim, dtype=complex)
    out[np.flatnonzero(mask)] = sub_coeffs
    return out


def kernel_field_values(
    space: SectionSpace,
    w: Weight,
    m: int,
    points,
    restarts: Optional[int] = None,
    seed: int = 0,
) -> np.ndarray:
    """Kernel values along a sweep of points, warm-starting each solve from
    its predecessor (m >= 2); closed form pointwise at m = 1."""
    pts = np.asarray(points)
    if m == 1:
        from .sections import gram

        mask = _integrable_basis_mask(space, w, 1)
        sub = _subspace(space, mask)
        G = gram(sub, w)
        B = np.conj(sub.basis_at(pts))
        sol = np.linalg.solve(G, B.T)
        return np.real(np.einsum("nj,jn->n", np.conj(B), sol))
    restarts = DEFAULTS["optimizer.field_restarts"] if restarts is None else restarts
    warm_iter = DEFAULTS["optimizer.warm_iter"]
    out = np.empty(pts.shape[0], dtype=float)
    warm = None
    for i in range(pts.shape[0]):
        res = bergman_kernel(
            space, w, m, pts[i], restarts=restarts, seed=seed,
            warm_start=warm, max_iter=None if warm is None else warm_iter,
        )
        out[i] = res.value
        warm = res.extremal.coeffs if res.extremal is not None else None
    return out


# ---------------------------------------------------------------------------
# twisted weights and Narashimhan-Simha forms


def twisted_weight_h_m_minus_1(B_field, w: Weight, m: int) -> Weight:
    """Weight of the twisted metric h_{m-1} = (B_m^{-1})^{(m-1)/m} h^{1/m}.

    In weight terms phi_{m-1} = ((m-1)/m) log B_m + phi/m; at m = 1 the
    input weight is returned unchanged.  Nodes with B_m = 0 get weight
    -inf (the metric degenerates to +inf there).
    """
    m = int(m)
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    if m == 1:
        return w
    B = np.asarray(B_field, dtype=float)
    if B.shape != (w.dom.size,):
        raise InvalidArgument("kernel field must be sampled on the fiber nodes")
    with np.errstate(divide="ignore"):
        logB = np.log(np.maximum(B, 0.0))
    smooth_nodes = w.smooth_values(None)
    vals = ((m - 1.0) / m) * logB + smooth_nodes / m
    tags = tuple((p, a / m) for p, a in w.log_tags)
    return Weight(w.dom, vals, tags, {"kind": "twisted", "m": m, "base": w.descriptor})


def ns_gram(
    space: SectionSpace,
    w: Weight,
    m: int,
    B_field=None,
    restarts: Optional[int] = None,
    seed: int = 0,
) -> np.ndarray:
    """Twisted Gram form g_m[j,k] = int conj(b_j) b_k e^{-phi_{m-1}} dA.

    At m = 1 this is literally the weighted Gram matrix.  For m >= 2 the
    kernel field over the fiber nodes is computed (or supplied) first; the
    pairing is then an ordinary weighted Gram against the twisted weight.
    """
    from .sections import check_pair_integrable, gram

    m = int(m)
    if m == 1:
        return gram(space, w)
    if B_field is None:
        B_field = kernel_field_values(
            space, w, m, space.dom.nodes, restarts=restarts, seed=seed
        )
    tw = twisted_weight_h_m_minus_1(B_field, w, m)
    for j in range(space.dim):
        for k in range(j, space.dim):
            check_pair_integrable(space, tw, j, k)
    dens = np.exp(-tw.node_values()) * space.dom.quad_weights
    if not np.all(np.isfinite(dens)):
        bad = int(np.flatnonzero(~np.isfinite(dens))[0])
        raise IntegrabilityError(
            f"twisted density non-finite at node {bad}; kernel vanished "
            "where sections do not"
        )
    V = space.node_basis
    G = np.conj(V).T @ (dens[:, None] * V)
    return 0.5 * (G + np.conj(G).T)


def extremal_bound_check(
    space: SectionSpace,
    w: Weight,
    m: int,
    probes: Sequence[Section],
    points,
    kernel_values=None,
    restarts: Optional[int] = None,
    seed: int = 0,
    slack: float = 1e-8,
):
    """Defining extremal property: |u(x)|^2 <= B_m(x) ||u||_m^2 for probes.

    Returns (passed, worst_margin); a failure means some probe beats the
    maximizer, i.e. the optimizer is unsound at that point.
    """
    pts = np.asarray(points)
    if kernel_values is None:
        kernel_values = kernel_field_values(
            space, w, m, pts, restarts=restarts, seed=seed
        )
    worst = np.inf
    ok = True
    for u in probes:
        nrm2 = pseudo_norm(u, w, m) ** 2
        if nrm2 == 0.0:
            continue
        vals = np.abs(u.space.basis_at(pts) @ u.coeffs) ** 2
        margin = np.min(kernel_values * nrm2 * (1.0 + slack) - vals)
        worst = min(worst, float(margin))
        ok = ok and margin >= 0.0
    return ok, worst


def holder_chain_check(
    space: SectionSpace, w: Weight, m: int, B_field, sections=None, slack=1e-8
):
    """Pointwise chain |u|^2 e^{-phi_{m-1}} <= ||u||_m^{2(m-1)/m}
    (|u|^2 e^{-phi})^{1/m}, a consequence of the extremal property.

    Checked nodewise for the basis sections by default; returns
    (passed, worst_margin).
    """
    if sections is None:
        sections = [
            Section(space, np.eye(space.dim, dtype=complex)[j])
            for j in range(space.dim)
        ]
    B = np.asarray(B_field, dtype=float)
    phi = w.node_values()
    ok = True
    worst = np.inf
    for u in sections:
        nrm = pseudo_norm(u, w, m)
        dens = np.abs(u.node_values()) ** 2
        lhs = dens * np.where(B > 0, B ** (-(m - 1.0) / m), np.inf) * np.exp(-phi / m)
        rhs = nrm ** (2.0 * (m - 1.0) / m) * (dens * np.exp(-phi)) ** (1.0 / m)
        margin = np.min(rhs * (1.0 + slack) - lhs)
        worst = min(worst, float(margin))
        ok = ok and margin >= 0.0
    return ok, worst


# ---------------------------------------------------------------------------
# families


class FamilyWeight:
    """Joint weight phi(t, z) over a one-parameter base and a disc fiber.

    Kinds:
      ``product``        phi(t, z) = psi(z), a fixed fiber weight
      ``tz_abs_sq``      phi(t, z) = c |t z|^2
      ``poly_abs_sq``    phi(t, z) = sum_k |q_k(t, z)|^2, q_k polynomial
      ``moving_log``     phi(t, z) = psi(z) + a log|z - p(t)|^2, p polynomial
    All are plurisubharmonic in (t, z) jointly (for c, a >= 0 and psh psi).
    """

    def __init__(self, fiber_dom: GridDomain, kind: str, **params):
        if fiber_dom.dims != 1:
            raise InvalidArgument("fibers are one-variable discs")
        self.fiber_dom = fiber_dom
        self.kind = kind
        self.params = params
        if kind == "product":
            self._psi = weight_from_descriptor(fiber_dom, params["weight"])
        elif kind == "tz_abs_sq":
            self._c = float(params.get("coeff", 1.0))
            if self._c < 0:
                raise InvalidArgument("coeff must be >= 0")
        elif kind == "poly_abs_sq":
            self._polys = [np.asarray(c, dtype=complex) for c in params["polys"]]
        elif kind == "moving_log":
            self._a = float(params["coeff"])
            if self._a < 0:
                raise InvalidArgument("tag coefficient must be >= 0")
            self._path = np.asarray(params["path"], dtype=complex)
            base = params.get("base")
            self._base = (
                weight_from_descriptor(fiber_dom, base) if base else None
            )
        else:
            raise InvalidArgument(f"unknown family weight kind {kind!r}")

    # -- evaluation

    def joint_values(self, t, z) -> np.ndarray:
        t = np.asarray(t)
        z = np.asarray(z)
        if self.kind == "product":
            vals = self._psi.values(np.broadcast_to(z, np.broadcast_shapes(t.shape, z.shape)).ravel())
            return vals.reshape(np.broadcast_shapes(t.shape, z.shape))
        if self.kind == "tz_abs_sq":
            return self._c * np.abs(t * z) ** 2
        if self.kind == "poly_abs_sq":
            out = 0.0
            for c in self._polys:
                v = np.polynomial.polynomial.polyval2d(
                    *np.broadcast_arrays(t, z), c
                )
                out = out + np.abs(v) ** 2
            return out
        if self.kind == "moving_log":
            p = np.polynomial.polynomial.polyval(t, self._path)
            with np.errstate(divide="ignore"):
                vals = self._a * np.log(np.abs(z - p) ** 2)
            if self._base is not None:
                vals = vals + self._base.values(
                    np.broadcast_to(z, vals.shape).ravel()
                ).reshape(vals.shape)
            return vals
        raise AssertionError(self.kind)

    def joint_weight(self, product_dom: GridDomain) -> Weight:
        def smooth(pts, _fw=self):
            pts = np.asarray(pts)
            return _fw.joint_values(pts[..., 0], pts[..., 1])

        if self.kind == "moving_log":
            # the moving tag is a genuine joint singularity along z = p(t);
            # the joint-psh precondition for such families is structural
            # (a log|holomorphic|^2 term), not stencil-checkable
            raise InvalidArgument(
                "joint stencils across a moving log singularity are not "
                "supported; the moving_log family is psh by construction"
            )
        return Weight(product_dom, smooth, (), self.descriptor())

    def fiber_weight(self, t) -> Weight:
        t = complex(t)
        if self.kind == "product":
            return self._psi
        if self.kind == "tz_abs_sq":
            return make_weight(self.fiber_dom, "abs_sq", coeff=self._c * abs(t) ** 2)
        if self.kind == "poly_abs_sq":
            fiber_polys = []
            for c in self._polys:
                # restrict q(t, z) to fixed t: coefficients in z
                tp = np.array([t**i for i in range(c.shape[0])])
                fiber_polys.append(tp @ c)
            return make_weight(self.fiber_dom, "abs_poly_sq", polys=fiber_polys)
        if self.kind == "moving_log":
            p = complex(np.polynomial.polynomial.polyval(t, self._path))
            base = self._base
            smooth = (
                base.smooth if base is not None and callable(base.smooth)
                else (lambda pts: np.zeros(np.asarray(pts).shape[:1]))
            )
            return Weight(
                self.fiber_dom,
                smooth,
                ((p, self._a),),
                {"kind": "moving_log_fiber", "t": [t.real, t.imag]},
            )
        raise AssertionError(self.kind)

    def descriptor(self) -> dict:
        out = {"kind": self.kind}
        for k, v in self.params.items():
            arr = np.asarray(v)
            if arr.dtype.kind == "c":
                out[k] = {"re": arr.real.tolist(), "im": arr.imag.tolist()}
            elif isinstance(v, (list, tuple, np.ndarray)):
                out[k] = arr.tolist()
            else:
                out[k] = v
        return out


def make_family_weight(fiber_dom: GridDomain, kind: str, **params) -> FamilyWeight:
    return FamilyWeight(fiber_dom, kind, **params)


@dataclass
class Family:
    """One-parameter family: base grid in t, fixed fiber section basis,
    joint weight phi(t, z), pluricanonical level m.

    Using the same polynomial basis on every fiber models the situation
    where all fiberwise sections extend across the base; degenerating bases
    are out of scope.
    """

    base: GridDomain
    space: SectionSpace
    weight: FamilyWeight
    m: int = 1
    name: str = ""
    _psh_checked: bool = dc_field(default=False, repr=False)

    def __post_init__(self):
        if self.base.dims != 1:
            raise InvalidArgument("base must be a one-variable grid")
        if self.space.dom.dims != 1:
            raise InvalidArgument("fibers must be one-variable grids")
        if int(self.m) < 1:
            raise InvalidArgument("m must be >= 1")

    def fiber_gram_density(self, t) -> np.ndarray:
        w = self.weight.fiber_weight(t)
        return np.exp(-w.node_values()) * self.space.dom.quad_weights

    def descriptor(self) -> dict:
        return {
            "base": self.base.descriptor(),
            "fiber": self.space.dom.descriptor(),
            "degree": self.space.degree,
            "m": self.m,
            "weight": self.weight.descriptor(),
            "name": self.name,
        }


def _check_joint_psh(fam: Family, tol=None):
    if fam._psh_checked:
        return
    if fam.weight.kind == "moving_log":
        # psh by construction: a*log|z - p(t)|^2 with holomorphic p
        fam._psh_checked = True
        return
    cap = DEFAULTS["family.joint_psh_max_nodes"]
    base, fiber = fam.base, fam.space.dom

    def strided(dom, stride):
        if stride <= 1:
            return dom
        from .field import make_polydisc_grid

        nr, nt = dom.resolution
        return make_polydisc_grid(
            dom.radii, (max(8, nr // stride), max(8, nt // stride))
        )

    stride = 1
    while (
        strided(base, stride).size * strided(fiber, stride).size > cap
    ):
        stride += 1
    product = make_product_grid(strided(base, stride), strided(fiber, stride))
    w = fam.weight.joint_weight(product)
    rep = is_psh(w, tol=tol if tol is not None else DEFAULTS["psh.tol"])
    if not rep.passed:
        raise PreconditionError(
            f"family weight is not plurisubharmonic in (t, z): worst Levi "
            f"eigenvalue {rep.worst_value:.3g} at {rep.worst_node}"
        )
    fam._psh_checked = True


class RelativeKernelField:
    """Evaluator of (t, z) -> B_m(t, z) for a family.

    m = 1 values come from the fiberwise reproducing-kernel closed form
    (one small Cholesky per distinct t); m >= 2 values run the projected
    ascent with warm starts chained across calls.
    """

    def __init__(self, fam: Family, restarts=None, seed=0):
        _check_joint_psh(fam)
        self.fam = fam
        self.restarts = (
            DEFAULTS["optimizer.field_restarts"] if restarts is None else restarts
        )
        self.seed = seed
        self._warm = None
        space = fam.space
        self._V = space.node_basis
        self._qw = space.dom.quad_weights

    def _fiber_weight(self, t):
        return self.fam.weight.fiber_weight(t)

    def _gram_chol(self, t):
        w = self._fiber_weight(t)
        dens = np.exp(-w.node_values()) * self._qw
        G = np.conj(self._V).T @ (dens[:, None] * self._V)
        G = 0.5 * (G + np.conj(G).T)
        return np.linalg.cholesky(G)

    def b_values(self, t, z_points, warm=None):
        """Kernel values at fixed t over a batch of fiber points."""
        z_points = np.asarray(z_points)
        fam = self.fam
        if fam.m == 1:
            Lc = self._gram_chol(t)
            Bc = np.conj(fam.space.basis_at(z_points))
            y = np.linalg.solve(Lc, Bc.T)
            return np.sum(np.abs(y) ** 2, axis=0), None
        w = self._fiber_weight(t)
        out = np.empty(z_points.shape[0])
        warm_local = self._warm if warm is None else warm
        for i in range(z_points.shape[0]):
            res = bergman_kernel(
                fam.space, w, fam.m, z_points[i],
                restarts=self.restarts, seed=self.seed,
                warm_start=warm_local,
                max_iter=DEFAULTS["optimizer.warm_iter"] if warm_local is not None else None,
            )
            out[i] = res.value
            if res.extremal is not None:
                warm_local = res.extremal.coeffs
        self._warm = warm_local
        return out, warm_local

    def base_field(self, x_fiber) -> np.ndarray:
        """t -> B_m(t, x_fiber) over the base nodes."""
        fam = self.fam
        out = np.empty(fam.base.size)
        warm = None
        for i, t in enumerate(fam.base.nodes):
            vals, warm = self.b_values(t, np.asarray([x_fiber]), warm=warm)
            out[i] = vals[0]
        return out


def relative_kernel(fam: Family, x_fiber, restarts=None, seed=0) -> np.ndarray:
    """Fiberwise kernel value at a fixed fiber point, as a field over t.

    The joint weight must be plurisubharmonic in (t, z); that precondition
    is checked once per family and violations raise with the worst node.
    """
    return RelativeKernelField(fam, restarts=restarts, seed=seed).base_field(x_fiber)


@dataclass
class PshVariationReport:
    """Finite-difference log-plurisubharmonicity of the relative kernel."""

    passed: bool
    worst_value: float
    worst_node: object
    checked: int
    skipped_zero: int
    t_subharmonic_min: float
    tol: float

    def __bool__(self):
        return self.passed


def psh_variation_check(
    field: RelativeKernelField,
    tol=None,
    step=None,
    base_indices=None,
    fiber_indices=None,
) -> PshVariationReport:
    """Check that log B_m(t, z) is psh on the product grid.

    Runs the 2x2 finite-difference Levi form at every admissible product
    node (m = 1) or on a deterministic subsample (m >= 2, where each stencil
    value costs an ascent run and tolerances are looser).  Also reports the
    minimum finite-difference t-Laplacian, the "subharmonic in t at fixed z"
    slice of the claim.  Nodes where the kernel is not strictly positive are
    skipped and counted.
    """
    fam = field.fam
    m = fam.m
    if tol is None:
        tol = 1e-4 if m == 1 else DEFAULTS["psh.tol_optimizer"]
    rel = DEFAULTS["psh.step_rel"] if m == 1 else DEFAULTS["psh.step_rel_optimizer"]
    ht = rel * fam.base.radii[0] if step is None else step[0]
    hz = rel * fam.space.dom.radii[0] if step is None else step[1]

    tmask = fam.base.interior_mask(2.0 * ht)
    zmask = fam.space.dom.interior_mask(2.0 * hz)
    t_idx = np.flatnonzero(tmask)
    z_idx = np.flatnonzero(zmask)
    if base_indices is not None:
        t_idx = np.intersect1d(t_idx, np.asarray(base_indices))
    if fiber_indices is not None:
        z_idx = np.intersect1d(z_idx, np.asarray(fiber_indices))
    if m >= 2 and base_indices is None and fiber_indices is None:
        budget = DEFAULTS["family.m2_check_nodes"]
        per_axis = max(4, int(np.sqrt(budget)))
        t_idx = t_idx[:: max(1, t_idx.size // per_axis)]
        z_idx = z_idx[:: max(1, z_idx.size // per_axis)]
    if t_idx.size == 0 or z_idx.size == 0:
        raise InvalidArgument("no admissible product nodes to check")

    zs = fam.space.dom.nodes[z_idx]
    z_variants = [zs, zs + hz, zs - hz, zs + 1j * hz, zs - 1j * hz]

    worst = np.inf
    worst_node = None
    t_sub_min = np.inf
    skipped = 0
    checked = 0
    eps = 1e-300

    for ti in t_idx:
        t0 = fam.base.nodes[ti]
        t_variants = [t0, t0 + ht, t0 - ht, t0 + 1j * ht, t0 - 1j * ht]
        F = np.empty((5, 5, zs.size))
        warm_center = field._warm
        for a, tv in enumerate(t_variants):
            warm = warm_center
            for b, zgrid in enumerate(z_variants):
                vals, warm = field.b_values(tv, zgrid, warm=warm)
                F[a, b] = np.log(np.maximum(vals, eps))
            if a == 0:
                warm_center = field._warm
        good = np.all(np.isfinite(F), axis=(0, 1)) & (F[0, 0] > np.log(eps) + 1)
        skipped += int(np.sum(~good))
        if not np.any(good):
            continue
        Fg = F[:, :, good]
        htt = (Fg[1, 0] + Fg[2, 0] + Fg[3, 0] + Fg[4, 0] - 4 * Fg[0, 0]) / (4 * ht * ht)
        hzz = (Fg[0, 1] + Fg[0, 2] + Fg[0, 3] + Fg[0, 4] - 4 * Fg[0, 0]) / (4 * hz * hz)
        fxx = (Fg[1, 1] - Fg[1, 2] - Fg[2, 1] + Fg[2, 2]) / (4 * ht * hz)
        fyy = (Fg[3, 3] - Fg[3, 4] - Fg[4, 3] + Fg[4, 4]) / (4 * ht * hz)
        fxy = (Fg[1, 3] - Fg[1, 4] - Fg[2, 3] + Fg[2, 4]) / (4 * ht * hz)
        fyx = (Fg[3, 1] - Fg[3, 2] - Fg[4, 1] + Fg[4, 2]) / (4 * ht * hz)
        htz = 0.25 * (fxx + fyy + 1j * (fxy - fyx))
        mean = 0.5 * (htt + hzz)
        radius = np.sqrt(0.25 * (htt - hzz) ** 2 + np.abs(htz) ** 2)
        lam = mean - radius
        checked += int(lam.size)
        t_sub_min = min(t_sub_min, float(np.min(htt)))
        i = int(np.argmin(lam))
        if lam[i] < worst:
            worst = float(lam[i])
            worst_node = (t0, zs[good][i])

    return PshVariationReport(
        worst >= -tol, worst, worst_node, checked, skipped, t_sub_min, tol
    )


@dataclass
class UniformBoundReport:
    """Is sup_x B_m(t, x)^(1/m) bounded uniformly in t?

    ``constant`` is the observed sup of B_m^{1/m}; the default pass rule is
    max over t within ``ratio_limit`` times the median over t.
    """

    constant: float
    max_over_t: float
    median_over_t: float
    ratio: float
    ratio_limit: float
    passed: bool

    def __bool__(self):
        return self.passed


def uniform_bound_check(
    fam: Family, fiber_points=None, restarts=None, seed=0, ratio_limit=None
) -> UniformBoundReport:
    """Scan B_m(t, x) over sampled (t, x) and test t-uniformity."""
    ratio_limit = (
        DEFAULTS["uniform_bound.ratio"] if ratio_limit is None else float(ratio_limit)
    )
    r = fam.space.dom.radii[0]
    if fiber_points is None:
        fiber_points = np.asarray([0.0, 0.35 * r, -0.45 * r, 0.3j * r, (0.25 + 0.25j) * r])
    field = RelativeKernelField(fam, restarts=restarts, seed=seed)
    per_t = np.zeros(fam.base.size)
    for x in np.asarray(fiber_points):
        per_t = np.maximum(per_t, field.base_field(x))
    m_vals = np.maximum(per_t, 0.0) ** (1.0 / fam.m)
    mx = float(np.max(m_vals))
    med = float(np.median(m_vals))
    ratio = mx / med if med > 0 else np.inf
    return UniformBoundReport(mx, mx, med, ratio, ratio_limit, ratio <= ratio_limit)


def envelope_metric(entries, grid: GridDomain, tol=None) -> Weight:
    """Upper envelope of level-normalized weights sup_k (1/k) phi_k.

    Returns the regularized supremum; a psh check runs on the result and is
    attached as ``.psh_report`` (expected to pass when the inputs are psh).
    """
    entries = list(entries)
    if not entries:
        raise InvalidArgument("empty envelope")
    normalized = []
    for k, w in entries:
        k = float(k)
        if k <= 0:
            raise InvalidArgument("levels k must be positive")
        normalized.append(scale_weight(w, 1.0 / k) if k != 1.0 else w)
    out = reg_sup(normalized, grid)
    out.psh_report = is_psh(out, tol=tol)
    return out


@dataclass
class NSPositivityReport:
    """Dual-probe Griffiths positivity of the fiberwise Gram field: for each
    constant dual vector, log of the dual norm xi -> xi^H G(t)^{-1} xi must
    be subharmonic in t."""

    passed: bool
    worst_value: float
    worst_dual: int
    worst_t: object
    n_duals: int
    tol: float
    skipped_singular: int = 0

    def __bool__(self):
        return self.passed


def _family_gram(fam: Family, t, restarts=None, seed=0):
    from .sections import gram

    w = fam.weight.fiber_weight(t)
    if fam.m == 1:
        return gram(fam.space, w)
    return ns_gram(fam.space, w, fam.m, restarts=restarts, seed=seed)


def family_ns_gram(
    fam: Family,
    duals=None,
    n_random_duals: int = 16,
    tol: float = 1e-4,
    seed: int = 0,
    restarts=None,
):
    """Fiberwise twisted Gram field over the base plus a positivity report.

    Returns (gram_field, report): gram_field[i] is G(t_i) on the base nodes.
    The report runs the sampled Griffiths-positivity test of the direct
    image: subharmonicity in t of log(xi^H G(t)^{-1} xi) for the basis
    duals plus seeded random duals.
    """
    _check_joint_psh(fam)
    d = fam.space.dim
    if duals is None:
        duals = [np.eye(d, dtype=complex)[j] for j in range(d)]
        rng = np.random.default_rng(seed)
        for _ in range(n_random_duals):
            xi = rng.normal(size=d) + 1j * rng.normal(size=d)
            duals.append(xi / np.linalg.norm(xi))
    duals = [np.asarray(x, dtype=complex) for x in duals]

    G_field = np.empty((fam.base.size, d, d), dtype=complex)
    for i, t in enumerate(fam.base.nodes):
        G_field[i] = _family_gram(fam, t, restarts=restarts, seed=seed)

    ht = DEFAULTS["psh.step_rel"] * fam.base.radii[0]
    t_idx = np.flatnonzero(fam.base.interior_mask(2.0 * ht))
    worst = np.inf
    worst_dual = -1
    worst_t = None
    skipped = 0

    def dual_logs(t):
        G = _family_gram(fam, t, restarts=restarts, seed=seed)
        try:
            Gi = np.linalg.inv(G)
        except np.linalg.LinAlgError:
            return None
        return np.array(
            [np.log(np.real(np.conj(xi) @ Gi @ xi)) for xi in duals]
        )

    for i in t_idx:
        t0 = fam.base.nodes[i]
        center = dual_logs(t0)
        stencil = [dual_logs(t0 + ht), dual_logs(t0 - ht),
                   dual_logs(t0 + 1j * ht), dual_logs(t0 - 1j * ht)]
        if center is None or any(s is None for s in stencil):
            skipped += 1
            continue
        lap = (sum(stencil) - 4.0 * center) / (4.0 * ht * ht)
        j = int(np.argmin(lap))
        if lap[j] < worst:
            worst = float(lap[j])
            worst_dual = j
            worst_t = t0
    report = NSPositivityReport(
        worst >= -tol, worst, worst_dual, worst_t, len(duals), tol, skipped
    )
    return G_field, report


@dataclass
class GramScanReport:
    inf_lambda_min: float
    argmin_t: complex
    floor: Optional[float]
    passed: Optional[bool]
    values: np.ndarray

    def __bool__(self):
        return bool(self.passed) if self.passed is not None else True


def gram_lower_bound_scan(fam: Family, t_path, floor=None, restarts=None, seed=0) -> GramScanReport:
    """Scan the smallest Gram eigenvalue along a base path.

    A numerical probe of the lower bound that keeps fiberwise norms of a
    frame away from zero near a boundary point; not a proof.
    """
    t_path = np.asarray(t_path, dtype=complex)
    vals = np.empty(t_path.size)
    for i, t in enumerate(t_path):
        G = _family_gram(fam, t, restarts=restarts, seed=seed)
        vals[i] = float(np.linalg.eigvalsh(G)[0])
    k = int(np.argmin(vals))
    passed = None if floor is None else bool(vals[k] >= floor)
    return GramScanReport(float(vals[k]), complex(t_path[k]), floor, passed, vals)
