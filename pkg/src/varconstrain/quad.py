"""Numerical integration: Gauss-Legendre rules, boundary rules, Monte Carlo.

Gauss-Legendre nodes are found by Newton iteration on the Legendre
recurrence (no library call), so the rule construction itself is covered
by the polynomial-exactness tests.  Integration of tape-recorded
integrands returns a differentiable Var; plain array integrands integrate
to a float.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import vwsum

__all__ = [
    "Rule1D",
    "Rule2D",
    "BoundaryRule",
    "MCSample",
    "gauss_legendre",
    "tensor_rule",
    "integrate_1d",
    "integrate_2d",
    "boundary_rule",
    "mc_sample",
    "mc_integrate",
    "QuadratureError",
]


class QuadratureError(Exception):
    pass


@dataclass(frozen=True)
class Rule1D:
    nodes: np.ndarray
    weights: np.ndarray
    a: float
    b: float


@dataclass(frozen=True)
class Rule2D:
    """Tensor product of two 1-d rules; points flattened to (2, n1*n2)."""

    rx: Rule1D
    ry: Rule1D

    @property
    def points(self) -> np.ndarray:
        X, Y = np.meshgrid(self.rx.nodes, self.ry.nodes, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()])

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.rx.weights, self.ry.weights).ravel()


@dataclass(frozen=True)
class BoundaryRule:
    """Quadrature points on a domain boundary: points (d, n), positive weights (n,)."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class MCSample:
    points: np.ndarray  # (d, n), uniform in the box
    volume: float
    seed: int


def _legendre_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Roots and weights of P_n on (-1, 1) by Newton iteration."""
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))  # classic initial guess
    for _ in range(100):
        # P_n(x) and P'_n(x) via the three-term recurrence
        p0 = np.ones_like(x)
        p1 = x.copy()
        if n == 1:
            pn, pm = p1, p0
        else:
            for m in range(2, n + 1):
                p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
            pn, pm = p1, p0
        dpn = n * (x * pn - pm) / (x * x - 1.0)
        dx = pn / dpn
        x = x - dx
        if np.max(np.abs(dx)) < 1e-14:
            break
    else:
        raise QuadratureError(f"Legendre Newton iteration failed to converge for n={n}")
    # recompute derivative at the converged roots for the weight formula
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 1:
        pn, pm = p1, p0
    else:
        for m in range(2, n + 1):
            p0, p1 = p1, ((2 * m - 1) * x * p1 - (m - 1) * p0) / m
        pn, pm = p1, p0
    dpn = n * (x * pn - pm) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dpn * dpn)
    order = np.argsort(x)
    return x[order], w[order]


def gauss_legendre(n: int, a: float, b: float) -> Rule1D:
    """n-point Gauss-Legendre rule on (a, b); exact for polynomials of degree 2n-1."""
    if n < 1:
        raise QuadratureError("need at least one node")
    if not a < b:
        raise QuadratureError("empty interval")
    if n == 1:
        x = np.array([0.0])
        w = np.array([2.0])
    else:
        x, w = _legendre_nodes(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return Rule1D(nodes=mid + half * x, weights=half * w, a=float(a), b=float(b))


def tensor_rule(nx: int, ax: float, bx: float, ny: int, ay: float, by: float) -> Rule2D:
    return Rule2D(gauss_legendre(nx, ax, bx), gauss_legendre(ny, ay, by))


def integrate_1d(rule: Rule1D, integrand):
    """sum(w_i * f(x_i)); a Var result stays differentiable."""
    vals = integrand(rule.nodes)
    return vwsum(rule.weights, vals)


def integrate_2d(rule: Rule2D, integrand):
    """Tensor-weight integration; the integrand receives points of shape (2, n)."""
    vals = integrand(rule.points)
    return vwsum(rule.weights, vals)


def boundary_rule(domain, n_per_piece: int) -> BoundaryRule:
    """Quadrature on the boundary pieces where a constraint lives.

    * ("segment", a, b, r0): Gauss-Legendre on the parameter interval (a, b)
      with the first coordinate pinned at r0 (constraint on one edge only).
    * ("rectangle", (ax, bx), (ay, by)): one 1-d rule per edge, 4 edges.
    * ("box", (ax, bx), (ay, by), (az, bz)): one tensor rule per face, 6 faces.
    """
    kind = domain[0]
    if kind == "segment":
        _, a, b, r0 = domain
        r = gauss_legendre(n_per_piece, a, b)
        pts = np.stack([np.full_like(r.nodes, r0), r.nodes])
        return BoundaryRule(points=pts, weights=r.weights.copy())
    if kind == "rectangle":
        _, (ax, bx), (ay, by) = domain
        pieces_p, pieces_w = [], []
        rx = gauss_legendre(n_per_piece, ax, bx)
        ry = gauss_legendre(n_per_piece, ay, by)
        for y0 in (ay, by):  # bottom, top
            pieces_p.append(np.stack([rx.nodes, np.full_like(rx.nodes, y0)]))
            pieces_w.append(rx.weights)
        for x0 in (ax, bx):  # left, right
            pieces_p.append(np.stack([np.full_like(ry.nodes, x0), ry.nodes]))
            pieces_w.append(ry.weights)
        return BoundaryRule(points=np.concatenate(pieces_p, axis=1), weights=np.concatenate(pieces_w))
    if kind == "box":
        _, (ax, bx), (ay, by), (az, bz) = domain
        axes = [(ax, bx), (ay, by), (az, bz)]
        pieces_p, pieces_w = [], []
        for fixed_axis in range(3):
            other = [i for i in range(3) if i != fixed_axis]
            r0 = gauss_legendre(n_per_piece, *axes[other[0]])
            r1 = gauss_legendre(n_per_piece, *axes[other[1]])
            U, V = np.meshgrid(r0.nodes, r1.nodes, indexing="ij")
            W = np.outer(r0.weights, r1.weights).ravel()
            for bound in axes[fixed_axis]:
                pts = np.empty((3, U.size))
                pts[fixed_axis] = bound
                pts[other[0]] = U.ravel()
                pts[other[1]] = V.ravel()
                pieces_p.append(pts)
                pieces_w.append(W)
        return BoundaryRule(points=np.concatenate(pieces_p, axis=1), weights=np.concatenate(pieces_w))
    raise QuadratureError(f"unsupported domain kind {kind!r}")


def mc_sample(box, n: int, seed: int) -> MCSample:
    """n uniform points in the box [(a0,b0), (a1,b1), ...]; deterministic per seed."""
    if n < 1:
        raise QuadratureError("need at least one sample point")
    rng = np.random.default_rng(seed)
    lo = np.array([a for a, _ in box])
    hi = np.array([b for _, b in box])
    pts = rng.uniform(0.0, 1.0, size=(len(box), n)) * (hi - lo)[:, None] + lo[:, None]
    vol = float(np.prod(hi - lo))
    return MCSample(points=pts, volume=vol, seed=seed)


def mc_integrate(sample: MCSample, integrand):
    """volume * mean of the integrand over the sample points."""
    vals = integrand(sample.points)
    n = sample.points.shape[1]
    return vwsum(np.full(n, sample.volume / n), vals)
