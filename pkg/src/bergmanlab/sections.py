"""Truncated polynomial section spaces with weighted L2 pairings.

A ``SectionSpace`` is a monomial basis up to a degree bound on a sampled
disc or bidisc; it stands in for the finite-dimensional space of global
holomorphic sections of a pluricanonical-type line bundle on a fiber, written
in a single chart.  The weighted Gram matrix of the basis realizes the
canonical L2 pairing against e^{-phi}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import IntegrabilityError, InvalidArgument
from .field import GridDomain, Weight, quadrature

__all__ = [
    "SectionSpace",
    "Section",
    "make_poly_space",
    "evaluate",
    "gram",
    "l2_norm",
    "vanishing_order",
]


@dataclass(frozen=True)
class SectionSpace:
    """Monomial basis z^0..z^d (one variable) or total degree <= d (two).

    ``twist`` records the pluricanonical level m the space models; it does
    not change the basis, only how downstream norms read it.
    Basis order is by total degree, then lexicographic in the exponents,
    so Gram matrices are bit-for-bit reproducible.
    """

    dom: GridDomain
    degree: int
    twist: int
    exponents: tuple

    @property
    def dim(self) -> int:
        return len(self.exponents)

    @cached_property
    def node_basis(self) -> np.ndarray:
        """Basis evaluated on the grid nodes, shape (N, dim)."""
        return self.basis_at(self.dom.nodes)

    def basis_at(self, points) -> np.ndarray:
        pts = np.asarray(points)
        scalar = pts.ndim == 0 or (self.dom.dims == 2 and pts.ndim == 1)
        if scalar:
            pts = pts[None] if self.dom.dims == 1 else pts[None, :]
        n = pts.shape[0]
        V = np.empty((n, self.dim), dtype=complex)
        if self.dom.dims == 1:
            maxdeg = max((e for e in self.exponents), default=0)
            pows = np.ones((n, maxdeg + 1), dtype=complex)
            for k in range(1, maxdeg + 1):
                pows[:, k] = pows[:, k - 1] * pts
            for j, e in enumerate(self.exponents):
                V[:, j] = pows[:, e]
        else:
            z1, z2 = pts[:, 0], pts[:, 1]
            m1 = max((e[0] for e in self.exponents), default=0)
            m2 = max((e[1] for e in self.exponents), default=0)
            p1 = np.ones((n, m1 + 1), dtype=complex)
            p2 = np.ones((n, m2 + 1), dtype=complex)
            for k in range(1, m1 + 1):
                p1[:, k] = p1[:, k - 1] * z1
            for k in range(1, m2 + 1):
                p2[:, k] = p2[:, k - 1] * z2
            for j, (a, b) in enumerate(self.exponents):
                V[:, j] = p1[:, a] * p2[:, b]
        return V[0] if scalar else V


@dataclass
class Section:
    space: SectionSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (self.space.dim,):
            raise InvalidArgument(
                f"coefficient vector has length {self.coeffs.shape}, "
                f"space dimension is {self.space.dim}"
            )

    def __call__(self, points):
        return evaluate(self, points)

    def node_values(self) -> np.ndarray:
        return self.space.node_basis @ self.coeffs


def make_poly_space(dom: GridDomain, degree: int, m: int = 1) -> SectionSpace:
    """Monomial space of degree <= degree, modeling sections at level m."""
    degree = int(degree)
    m = int(m)
    if degree < 0:
        raise InvalidArgument("degree must be >= 0")
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    if dom.dims == 1:
        exps = tuple(range(degree + 1))
    else:
        exps = tuple(
            (a, d - a) for d in range(degree + 1) for a in sorted(range(d + 1))
        )
        exps = tuple(sorted(exps, key=lambda e: (e[0] + e[1], e)))
    return SectionSpace(dom, degree, m, exps)


def evaluate(u: Section, x) -> complex:
    """Evaluate a section at a point (Horner per variable)."""
    if u.space.dom.dims == 1:
        coeffs = np.zeros(u.space.degree + 1, dtype=complex)
        for j, e in enumerate(u.space.exponents):
            coeffs[e] += u.coeffs[j]
        val = np.polynomial.polynomial.polyval(np.asarray(x), coeffs)
        return complex(val) if np.ndim(x) == 0 else val
    vals = u.space.basis_at(x) @ u.coeffs
    return complex(vals) if np.ndim(vals) == 0 else vals


def vanishing_order(u: Section, p: complex, tol: float = 1e-12) -> int:
    """Order of vanishing of a one-variable section at p (exact at p=0)."""
    if u.space.dom.dims != 1:
        raise InvalidArgument("vanishing order is implemented in one variable")
    coeffs = np.zeros(u.space.degree + 1, dtype=complex)
    for j, e in enumerate(u.space.exponents):
        coeffs[e] += u.coeffs[j]
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return len(coeffs)  # zero section: vanishes to full available order
    if abs(p) < tol:
        nz = np.flatnonzero(np.abs(coeffs) > tol * scale)
        return int(nz[0]) if nz.size else len(coeffs)
    # synthetic division by (z - p) while the remainder vanishes
    order = 0
    work = coeffs.copy()
    for _ in range(len(coeffs)):
        rem = np.polynomial.polynomial.polyval(p, work)
        if abs(rem) > tol * max(scale, 1.0):
            break
        work = _deflate(work, p)
        order += 1
        if work.size == 0:
            break
    return order


def _deflate(coeffs, p):
    # divide by (z - p), dropping the (vanishing) remainder
    n = len(coeffs) - 1
    out = np.zeros(n, dtype=complex)
    acc = 0.0
    for k in range(n, 0, -1):
        acc = coeffs[k] + (acc * p if k < n else 0.0)
        out[k - 1] = acc
    return out


def _monomial_order_at(space: SectionSpace, j: int, p: complex) -> int:
    e = space.exponents[j]
    if space.dom.dims != 1:
        raise IntegrabilityError("log-tag arithmetic needs a one-variable space")
    return e if abs(p) < 1e-12 else 0


def check_pair_integrable(space: SectionSpace, w: Weight, j: int, k: int):
    """Exponent arithmetic: b_j bbar_k e^{-phi} is integrable near each tag
    iff ord_p(b_j) + ord_p(b_k) - 2a > -2."""
    for p, a in w.log_tags:
        expo = _monomial_order_at(space, j, p) + _monomial_order_at(space, k, p) - 2 * a
        if not expo > -2:
            raise IntegrabilityError(
                f"pair (z^{space.exponents[j]}, z^{space.exponents[k]}) "
                f"against tag (p={p}, a={a}): local exponent {expo} <= -2"
            )


def gram(space: SectionSpace, w: Weight) -> np.ndarray:
    """Weighted Gram matrix G[j,k] = int conj(b_j) b_k e^{-phi} dA.

    Hermitian positive semidefinite; positive definite whenever the weight
    is integrable on the closed domain.  Divergent pairs are rejected by tag
    exponent arithmetic before any quadrature runs.
    """
    for j in range(space.dim):
        for k in range(j, space.dim):
            check_pair_integrable(space, w, j, k)
    vals = w.node_values()
    density = np.exp(-vals) * w.dom.quad_weights
    if not np.all(np.isfinite(density)):
        bad = int(np.flatnonzero(~np.isfinite(density))[0])
        raise IntegrabilityError(
            f"weight density non-finite at node {bad} ({w.dom.nodes[bad]})"
        )
    V = space.node_basis
    G = np.conj(V).T @ (density[:, None] * V)
    return 0.5 * (G + np.conj(G).T)


def l2_norm(u: Section, w: Weight) -> float:
    """Canonical weighted L2 norm sqrt(int |u|^2 e^{-phi})."""
    G = gram(u.space, w)
    val = np.real(np.conj(u.coeffs) @ G @ u.coeffs)
    return float(np.sqrt(max(val, 0.0)))


def norm_sq_values(u: Section, w: Weight) -> np.ndarray:
    """Nodewise |u|^2 e^{-phi} (the L2 density), for inequality checks."""
    return np.abs(u.node_values()) ** 2 * np.exp(-w.node_values())


def weighted_quadrature(space: SectionSpace, w: Weight, f_nodes) -> float:
    return quadrature(np.asarray(f_nodes) * np.exp(-w.node_values()), space.dom)
