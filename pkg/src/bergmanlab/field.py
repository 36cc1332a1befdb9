"""Grids, quadrature, weights, Levi forms, mollification, upper envelopes.

The sampling stage for everything else in the package: polar tensor grids on
polydiscs (Gauss-Legendre radial nodes times uniform angles, so smooth radial
integrands are integrated to near machine precision), scalar weights
``phi`` with the metric convention ``e^{-phi}``, finite-difference complex
Hessians, and the plurisubharmonicity predicate used by every curvature
check downstream.

Weights are real-valued evaluators plus an explicit list of logarithmic
singularities ("log-tags"): a tag ``(p, a)`` stands for an additive term
``a*log|z-p|^2``.  Tags are kept symbolic so integrability questions reduce
to exponent arithmetic at the tag and quadrature of the smooth remainder;
a plain grid cannot decide whether ``|z|^{-2a}`` is integrable.  In one
complex variable a tag term is harmonic away from its tag point, so Levi
stencils evaluate the smooth part only and are exact for the full weight
away from tags.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .defaults import DEFAULTS
from .errors import InvalidArgument, NonFiniteIntegrand, OutOfRange

__all__ = [
    "GridDomain",
    "Weight",
    "make_polydisc_grid",
    "make_product_grid",
    "make_weight",
    "quadrature",
    "levi_hermitian",
    "levi_min_eig",
    "is_psh",
    "PshReport",
    "mollify",
    "reg_sup",
    "scale_weight",
    "shift_weight",
]


# ---------------------------------------------------------------------------
# grids


@dataclass
class GridDomain:
    """Sampled polydisc in 1 or 2 complex variables with quadrature weights.

    ``nodes`` has shape (N,) complex for one variable and (N, 2) for two.
    All nodes are strictly interior; quad_weights are positive and sum to
    the Euclidean volume pi*r1^2 (* pi*r2^2) up to radial-rule exactness.
    """

    dims: int
    radii: tuple
    resolution: tuple
    nodes: np.ndarray
    quad_weights: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def spacings(self) -> tuple:
        # representative radial gap per variable, used for envelope radii
        return tuple(
            r / n for r, n in zip(self.radii, self.resolution[0::2])
        )

    def coords(self, var: int) -> np.ndarray:
        """Complex coordinates of all nodes in variable ``var``."""
        if self.dims == 1:
            return self.nodes
        return self.nodes[:, var]

    def descriptor(self) -> dict:
        return {
            "dims": self.dims,
            "radii": list(self.radii),
            "resolution": list(self.resolution),
        }

    def interior_mask(self, margin) -> np.ndarray:
        """Nodes at distance > margin (per variable) from the boundary."""
        margin = np.broadcast_to(np.asarray(margin, dtype=float), (self.dims,))
        if self.dims == 1:
            return np.abs(self.nodes) < self.radii[0] - margin[0]
        keep = np.ones(self.size, dtype=bool)
        for j in range(self.dims):
            keep &= np.abs(self.nodes[:, j]) < self.radii[j] - margin[j]
        return keep


def _radial_rule(radius: float, n: int):
    x, w = leggauss(n)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * w
    return r, wr


def _disc_samples(radius: float, n_r: int, n_theta: int):
    r, wr = _radial_rule(radius, n_r)
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    z = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    w = (wr * r)[:, None] * (2.0 * np.pi / n_theta)
    w = np.broadcast_to(w, (n_r, n_theta)).ravel()
    return z, w.copy()


def make_polydisc_grid(radii, resolution) -> GridDomain:
    """Polar-product grid: Gauss-Legendre radial times uniform angular nodes.

    ``radii`` is a scalar or a tuple of one or two positive radii;
    ``resolution`` lists (radial, angular) counts per variable, each >= 8.
    """
    radii = tuple(np.atleast_1d(np.asarray(radii, dtype=float)))
    resolution = tuple(int(k) for k in np.atleast_1d(resolution))
    dims = len(radii)
    if dims not in (1, 2):
        raise InvalidArgument(f"dims must be 1 or 2, got {dims}")
    if len(resolution) != 2 * dims:
        raise InvalidArgument(
            f"resolution needs {2 * dims} entries for dims={dims}, "
            f"got {len(resolution)}"
        )
    if any(r <= 0 for r in radii):
        raise InvalidArgument(f"radii must be positive, got {radii}")
    if any(k < 8 for k in resolution):
        raise InvalidArgument(f"resolution must be >= 8 per axis, got {resolution}")

    if dims == 1:
        z, w = _disc_samples(radii[0], resolution[0], resolution[1])
        return GridDomain(1, radii, resolution, z, w)

    z1, w1 = _disc_samples(radii[0], resolution[0], resolution[1])
    z2, w2 = _disc_samples(radii[1], resolution[2], resolution[3])
    nodes = np.empty((z1.size * z2.size, 2), dtype=complex)
    nodes[:, 0] = np.repeat(z1, z2.size)
    nodes[:, 1] = np.tile(z2, z1.size)
    w = (w1[:, None] * w2[None, :]).ravel()
    return GridDomain(2, radii, resolution, nodes, w)


def make_product_grid(base: GridDomain, fiber: GridDomain) -> GridDomain:
    """Join two one-variable grids into the (t, z) product grid."""
    if base.dims != 1 or fiber.dims != 1:
        raise InvalidArgument("product grids are built from two 1-variable grids")
    nodes = np.empty((base.size * fiber.size, 2), dtype=complex)
    nodes[:, 0] = np.repeat(base.nodes, fiber.size)
    nodes[:, 1] = np.tile(fiber.nodes, base.size)
    w = (base.quad_weights[:, None] * fiber.quad_weights[None, :]).ravel()
    return GridDomain(
        2,
        (base.radii[0], fiber.radii[0]),
        base.resolution + fiber.resolution,
        nodes,
        w,
    )


def quadrature(f, dom: GridDomain) -> float:
    """Sum of node values against quadrature weights.

    ``f`` is an array of node values or a callable evaluated on the nodes.
    Linear in f, exactly zero for f == 0; NaN/inf samples raise with the
    offending node spelled out.
    """
    vals = f(dom.nodes) if callable(f) else np.asarray(f)
    if vals.shape != (dom.size,):
        raise InvalidArgument(
            f"integrand has shape {vals.shape}, expected ({dom.size},)"
        )
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteIntegrand(
            f"integrand is {vals[i]} at node {i} ({dom.nodes[i]})"
        )
    return float(np.real(np.dot(vals, dom.quad_weights)))


# ---------------------------------------------------------------------------
# weights


def _tag_values(points, log_tags, dims):
    if not log_tags:
        return 0.0
    pts = np.asarray(points)
    out = np.zeros(pts.shape[:1] if pts.ndim else (), dtype=float)
    for p, a in log_tags:
        if dims == 1:
            d2 = np.abs(pts - p) ** 2
        else:
            d2 = np.abs(pts[..., 0] - p[0]) ** 2 + np.abs(pts[..., 1] - p[1]) ** 2
        with np.errstate(divide="ignore"):
            out = out + a * np.log(d2)
    return out


@dataclass
class Weight:
    """A scalar weight phi; the associated metric is e^{-phi}.

    ``smooth`` is either a vectorized callable on points or an array of node
    values (a sampled weight; usable for quadrature but not for stencils).
    ``log_tags`` is a tuple of (point, coefficient) pairs, each standing for
    an additive term a*log|z-p|^2.  Tag points are excluded from stencils,
    and a tag with a >= 0 is plurisubharmonic by inspection.
    """

    dom: GridDomain
    smooth: object
    log_tags: tuple = ()
    descriptor: Optional[dict] = None
    _node_cache: Optional[np.ndarray] = None

    @property
    def evaluable(self) -> bool:
        return callable(self.smooth)

    def smooth_values(self, points=None) -> np.ndarray:
        if points is None:
            if callable(self.smooth):
                return np.asarray(self.smooth(self.dom.nodes), dtype=float)
            return np.asarray(self.smooth, dtype=float)
        if not callable(self.smooth):
            raise InvalidArgument(
                "sampled weight supports node values only; build it from a "
                "named analytic family for off-grid evaluation"
            )
        return np.asarray(self.smooth(points), dtype=float)

    def values(self, points=None) -> np.ndarray:
        """Full weight values, tags included (may be -inf at tag points)."""
        if points is None:
            if self._node_cache is None:
                vals = self.smooth_values(None)
                vals = vals + _tag_values(self.dom.nodes, self.log_tags, self.dom.dims)
                self._node_cache = vals
            return self._node_cache
        return self.smooth_values(points) + _tag_values(
            points, self.log_tags, self.dom.dims
        )

    def node_values(self) -> np.ndarray:
        return self.values(None)


def scale_weight(w: Weight, s: float) -> Weight:
    """The weight s*phi (tags scale with it)."""
    tags = tuple((p, s * a) for p, a in w.log_tags)
    if callable(w.smooth):
        base = w.smooth
        smooth = lambda pts, _b=base, _s=s: _s * np.asarray(_b(pts))
    else:
        smooth = s * np.asarray(w.smooth, dtype=float)
    desc = {"kind": "scaled", "factor": s, "base": w.descriptor}
    return Weight(w.dom, smooth, tags, desc)


def shift_weight(w: Weight, c: float) -> Weight:
    """The weight phi + c."""
    if callable(w.smooth):
        base = w.smooth
        smooth = lambda pts, _b=base, _c=c: np.asarray(_b(pts)) + _c
    else:
        smooth = np.asarray(w.smooth, dtype=float) + c
    desc = {"kind": "shifted", "offset": c, "base": w.descriptor}
    return Weight(w.dom, smooth, w.log_tags, desc)


def _normalize_tags(dom, log_tags, allow_negative=False):
    tags = []
    for entry in log_tags or ():
        p, a = entry
        a = float(a)
        if a < 0 and not allow_negative:
            raise InvalidArgument(
                f"log-tag coefficient must be >= 0 (e^-phi ~ |z-p|^(-2a)), got {a}"
            )
        if a == 0.0:
            continue
        if dom.dims == 1:
            tags.append((complex(p), a))
        else:
            raise InvalidArgument("log-tags are supported in one variable only")
    return tuple(tags)


def _poly_val(coeffs, z):
    return np.polynomial.polynomial.polyval(z, np.asarray(coeffs))


def _poly_val2d(coeffs, x, y):
    return np.polynomial.polynomial.polyval2d(x, y, np.asarray(coeffs))


def _smooth_builder(dom, kind, params):
    dims = dom.dims
    if kind == "zero":
        return lambda pts: np.zeros(np.asarray(pts).shape[:1], dtype=float)
    if kind == "const":
        c = float(params["value"])
        return lambda pts: np.full(np.asarray(pts).shape[:1], c, dtype=float)
    if kind == "abs_sq":
        c = float(params.get("coeff", 1.0))
        if dims == 1:
            return lambda pts: c * np.abs(np.asarray(pts)) ** 2
        return lambda pts: c * np.sum(np.abs(np.asarray(pts)) ** 2, axis=-1)
    if kind == "hermitian_form":
        H = np.asarray(params["matrix"], dtype=complex)
        if H.shape != (dims, dims):
            raise InvalidArgument(f"hermitian_form matrix must be {dims}x{dims}")

        def _form(pts, _H=H):
            pts = np.asarray(pts)
            zs = pts[..., None] if dims == 1 else pts
            out = np.einsum("jk,...j,...k->...", _H, zs, np.conj(zs))
            return np.real(out)

        return _form
    if kind == "re_poly":
        coeffs = np.asarray(params["coeffs"], dtype=complex)
        if dims == 1:
            return lambda pts: np.real(_poly_val(coeffs, np.asarray(pts)))
        return lambda pts: np.real(
            _poly_val2d(coeffs, np.asarray(pts)[..., 0], np.asarray(pts)[..., 1])
        )
    if kind == "abs_poly_sq":
        polys = [np.asarray(c, dtype=complex) for c in params["polys"]]

        def _sumsq(pts, _polys=polys):
            pts = np.asarray(pts)
            out = 0.0
            for c in _polys:
                if dims == 1:
                    v = _poly_val(c, pts)
                else:
                    v = _poly_val2d(c, pts[..., 0], pts[..., 1])
                out = out + np.abs(v) ** 2
            return out

        return _sumsq
    raise InvalidArgument(f"unknown weight kind {kind!r}")


def make_weight(dom: GridDomain, kind: str, log_tags=(), **params) -> Weight:
    """Build a weight from a named analytic family plus optional log-tags.

    Kinds: ``zero``, ``const(value)``, ``abs_sq(coeff)`` for c*sum|z_j|^2,
    ``hermitian_form(matrix)`` for sum H_jk z_j conj(z_k), ``re_poly(coeffs)``
    (pluriharmonic), ``abs_poly_sq(polys)`` for sum_k |p_k(z)|^2.
    """
    smooth = _smooth_builder(dom, kind, params)
    tags = _normalize_tags(dom, log_tags)
    desc = {"kind": kind, "params": _descriptor_params(kind, params),
            "log_tags": [[p.real, p.imag, a] for p, a in tags]}
    return Weight(dom, smooth, tags, desc)


def _descriptor_params(kind, params):
    out = {}
    for k, v in params.items():
        arr = np.asarray(v)
        if arr.dtype.kind == "c":
            out[k] = {"re": arr.real.tolist(), "im": arr.imag.tolist()}
        elif isinstance(v, (list, tuple, np.ndarray)):
            out[k] = arr.tolist()
        else:
            out[k] = v
    return out


def weight_from_descriptor(dom: GridDomain, desc: dict) -> Weight:
    """Rebuild a factory weight from its descriptor (inverse of make_weight)."""
    kind = desc["kind"]
    params = {}
    for k, v in desc.get("params", {}).items():
        if isinstance(v, dict) and set(v) == {"re", "im"}:
            params[k] = np.asarray(v["re"]) + 1j * np.asarray(v["im"])
        else:
            params[k] = v
    tags = [(complex(t[0], t[1]), t[2]) for t in desc.get("log_tags", [])]
    return make_weight(dom, kind, log_tags=tags, **params)


# ---------------------------------------------------------------------------
# Levi forms and the psh predicate


def _shift(points, dims, var, delta):
    pts = np.array(points, copy=True)
    if dims == 1:
        return pts + delta
    pts[:, var] += delta
    return pts


def levi_hermitian(w: Weight, points, step) -> np.ndarray:
    """Centered finite-difference complex Hessian of the smooth part.

    Returns an array of shape (N, dims, dims), Hermitian at each point, with
    O(step^2) truncation error.  Log-tag terms are omitted: in one variable
    they are harmonic away from the tag, so the result equals the Hessian of
    the full weight wherever the stencil avoids tag points.
    """
    dims = w.dom.dims
    pts = np.asarray(points)
    if dims == 1 and pts.ndim == 0:
        pts = pts[None]
    n = pts.shape[0]
    step = np.broadcast_to(np.asarray(step, dtype=float), (dims,))
    S = w.smooth_values
    H = np.zeros((n, dims, dims), dtype=complex)

    f0 = S(pts)
    for j in range(dims):
        h = step[j]
        lap = (
            S(_shift(pts, dims, j, h))
            + S(_shift(pts, dims, j, -h))
            + S(_shift(pts, dims, j, 1j * h))
            + S(_shift(pts, dims, j, -1j * h))
            - 4.0 * f0
        ) / (h * h)
        H[:, j, j] = 0.25 * lap

    for j in range(dims):
        for k in range(j + 1, dims):
            hj, hk = step[j], step[k]

            def cross(dj, dk):
                pp = _shift(_shift(pts, dims, j, dj), dims, k, dk)
                pm = _shift(_shift(pts, dims, j, dj), dims, k, -dk)
                mp = _shift(_shift(pts, dims, j, -dj), dims, k, dk)
                mm = _shift(_shift(pts, dims, j, -dj), dims, k, -dk)
                return (S(pp) - S(pm) - S(mp) + S(mm)) / (4.0 * hj * hk)

            d_xx = cross(hj, hk)
            d_yy = cross(1j * hj, 1j * hk)
            d_xy = cross(hj, 1j * hk)
            d_yx = cross(1j * hj, hk)
            # d^2/dz_j dzbar_k = (f_xx + f_yy + i(f_xy - f_yx)) / 4
            H[:, j, k] = 0.25 * (d_xx + d_yy + 1j * (d_xy - d_yx))
            H[:, k, j] = np.conj(H[:, j, k])
    return H


def _default_step(dom: GridDomain, rel=None):
    rel = DEFAULTS["psh.step_rel"] if rel is None else rel
    return np.asarray([rel * r for r in dom.radii])


def _admissible(w: Weight, step) -> np.ndarray:
    dom = w.dom
    margin = DEFAULTS["psh.exclusion_steps"] * np.asarray(step)
    keep = dom.interior_mask(margin)
    if w.log_tags and dom.dims == 1:
        for p, _a in w.log_tags:
            keep &= np.abs(dom.nodes - p) > margin[0]
    return keep


def levi_min_eig(w: Weight, x, step=None) -> float:
    """Smallest eigenvalue of the finite-difference complex Hessian at x."""
    dom = w.dom
    step = _default_step(dom) if step is None else np.broadcast_to(
        np.asarray(step, dtype=float), (dom.dims,)
    )
    pts = np.asarray([x]) if dom.dims == 1 else np.asarray(x)[None, :]
    margin = DEFAULTS["psh.exclusion_steps"] * step
    if dom.dims == 1:
        if abs(pts[0]) >= dom.radii[0] - margin[0]:
            raise OutOfRange(f"stencil at {x} exits the domain")
        for p, _a in w.log_tags:
            if abs(pts[0] - p) <= margin[0]:
                raise OutOfRange(f"stencil at {x} hits log-tag at {p}")
    else:
        for j in range(2):
            if abs(pts[0, j]) >= dom.radii[j] - margin[j]:
                raise OutOfRange(f"stencil at {x} exits the domain")
    H = levi_hermitian(w, pts, step)
    if dom.dims == 1:
        return float(np.real(H[0, 0, 0]))
    return float(np.linalg.eigvalsh(H[0])[0])


@dataclass
class PshReport:
    """Outcome of a sampled plurisubharmonicity check.

    Iterates as the 3-tuple (passed, worst_node, worst_value) for unpacking;
    ``checked`` and ``excluded`` carry the node bookkeeping.
    """

    passed: bool
    worst_node: object
    worst_value: float
    checked: int = 0
    excluded: int = 0

    def __iter__(self):
        return iter((self.passed, self.worst_node, self.worst_value))

    def __bool__(self):
        return self.passed


def is_psh(w: Weight, tol=None, step=None, chunk=1 << 16) -> PshReport:
    """Sampled psh test: Levi minimum eigenvalue >= -tol at admissible nodes.

    Nodes within the exclusion margin of the boundary or of a log-tag point
    are skipped; tag terms with coefficient a >= 0 are psh by inspection and
    contribute nothing to the stencil.  A negative-coefficient tag fails the
    test outright (the weight jumps to +inf at the tag point).
    """
    tol = DEFAULTS["psh.tol"] if tol is None else float(tol)
    if tol < 0:
        raise InvalidArgument("tol must be >= 0")
    dom = w.dom
    for p, a in w.log_tags:
        if a < 0:
            return PshReport(False, p, -np.inf)
    step = _default_step(dom) if step is None else np.broadcast_to(
        np.asarray(step, dtype=float), (dom.dims,)
    )
    keep = _admissible(w, step)
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        raise InvalidArgument("no admissible interior nodes at this step size")

    worst_val = np.inf
    worst_node = None
    for start in range(0, idx.size, chunk):
        sel = idx[start : start + chunk]
        pts = dom.nodes[sel]
        H = levi_hermitian(w, pts, step)
        if dom.dims == 1:
            eigs = np.real(H[:, 0, 0])
        else:
            eigs = np.linalg.eigvalsh(H)[:, 0]
        i = int(np.argmin(eigs))
        if eigs[i] < worst_val:
            worst_val = float(eigs[i])
            worst_node = dom.nodes[sel[i]]
    return PshReport(
        worst_val >= -tol, worst_node, worst_val, int(idx.size),
        int(dom.size - idx.size),
    )


# ---------------------------------------------------------------------------
# mollification


def _mollifier_offsets(dims, kernel_resolution):
    """Offsets and weights of a normalized radial smoothing kernel on the
    unit disc (profile (1-s^2)^3), tensored over variables for dims=2."""
    n_r, n_t = kernel_resolution
    s, ws = _radial_rule(1.0, n_r)
    theta = 2.0 * np.pi * np.arange(n_t) / n_t
    offs = (s[:, None] * np.exp(1j * theta)[None, :]).ravel()
    kap = ((1.0 - s**2) ** 3 * ws * s)[:, None] * np.ones(n_t)[None, :]
    kap = kap.ravel()
    kap /= kap.sum()
    if dims == 1:
        return offs[None, :], kap
    o1 = np.repeat(offs, offs.size)
    o2 = np.tile(offs, offs.size)
    k2 = (kap[:, None] * kap[None, :]).ravel()
    return np.stack([o1, o2]), k2


def mollify(w: Weight, epsilon: float, kernel_resolution=None) -> Weight:
    """Convolution with a radial kernel of radius epsilon.

    For a psh weight the result dominates the input pointwise and increases
    with epsilon (circle means of subharmonic functions are nondecreasing in
    the radius, and the kernel is radial), which is the monotone smooth
    approximation property the package relies on.  Constants are reproduced
    exactly because the discrete kernel is normalized to total mass one.
    """
    if epsilon <= 0:
        raise InvalidArgument("epsilon must be positive")
    cap = DEFAULTS["mollify.max_radius_rel"] * min(w.dom.radii)
    if epsilon > cap:
        raise InvalidArgument(
            f"epsilon={epsilon} too large for domain (cap {cap:.3g})"
        )
    if not w.evaluable:
        raise InvalidArgument("cannot mollify a sampled weight")
    dims = w.dom.dims
    for p, _a in w.log_tags:
        if abs(p) <= w.dom.radii[0] + epsilon:
            raise InvalidArgument(
                "mollification requires a tag-free evaluation region; "
                f"log-tag at {p} is too close"
            )
    kernel_resolution = kernel_resolution or DEFAULTS["mollify.kernel_resolution"]
    offs, kap = _mollifier_offsets(dims, kernel_resolution)
    base_vals = w.values

    def smooth(pts, _offs=offs, _kap=kap, _eps=epsilon):
        pts = np.asarray(pts)
        if dims == 1:
            grid = pts[:, None] + _eps * _offs[0][None, :]
            vals = base_vals(grid.ravel()).reshape(grid.shape)
        else:
            big = np.empty((pts.shape[0], _kap.size, 2), dtype=complex)
            big[:, :, 0] = pts[:, None, 0] + _eps * _offs[0][None, :]
            big[:, :, 1] = pts[:, None, 1] + _eps * _offs[1][None, :]
            vals = base_vals(big.reshape(-1, 2)).reshape(pts.shape[0], _kap.size)
        return vals @ _kap

    desc = {"kind": "mollified", "epsilon": epsilon, "base": w.descriptor}
    return Weight(w.dom, smooth, (), desc)


# ---------------------------------------------------------------------------
# upper envelopes


def reg_sup(ws: Sequence[Weight], grid: GridDomain, radius_steps=None) -> Weight:
    """Pointwise supremum with upper-semicontinuous regularization.

    For the finite families handled here (continuous or log-tagged weights)
    the pointwise max is already upper semicontinuous, so the regularization
    pass is the identity and in particular singletons are returned unchanged;
    ``radius_steps`` is kept for interface stability.  Ties take the common
    value.  Tags survive only at points tagged by every input, with the
    smallest coefficient.
    """
    ws = list(ws)
    if not ws:
        raise InvalidArgument("reg_sup of an empty list")
    if any(v.dom is not grid and v.dom.descriptor() != grid.descriptor() for v in ws):
        raise InvalidArgument("all weights must live on the given grid")
    if len(ws) == 1:
        return ws[0]
    if not all(v.evaluable for v in ws):
        raise InvalidArgument("reg_sup needs evaluable weights")

    # tags common to all inputs (same point), with the minimum coefficient
    tags = []
    for p, a in ws[0].log_tags:
        coeffs = [a]
        for v in ws[1:]:
            match = [b for q, b in v.log_tags if abs(q - p) < 1e-12]
            if not match:
                coeffs = None
                break
            coeffs.append(min(match))
        if coeffs is not None:
            tags.append((p, min(coeffs)))
    tags = tuple(tags)

    fns = [v.values for v in ws]

    def smooth(pts, _fns=tuple(fns), _tags=tags, _dims=grid.dims):
        vals = _fns[0](pts)
        for fn in _fns[1:]:
            vals = np.maximum(vals, fn(pts))
        return vals - _tag_values(pts, _tags, _dims)

    desc = {"kind": "upper_envelope", "bases": [v.descriptor for v in ws]}
    return Weight(grid, smooth, tags, desc)
