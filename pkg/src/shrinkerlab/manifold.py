"""Parametrized submanifolds of R^N: charts, quadrature sampling, geometry.

A chart is a smooth map from a parameter box into R^N, optionally replicated
by a list of ambient affine isometries (``branches``) so that disconnected
unions such as the doubled logarithmic spiral fit in a single spec.  Sampling
produces node positions, area elements sqrt(det J J^T) times quadrature
weights, tangent frames, and (when second derivatives are available) mean
curvature vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfc, roots_legendre

from .weights import sphere_area

__all__ = [
    "Axis",
    "ChartSpec",
    "QuadratureGrid",
    "SampledManifold",
    "DegenerateJacobianError",
    "CatalogError",
    "build_grid",
    "build_samples",
    "mean_curvature_at",
    "shrinker_residual",
    "catalog_make",
    "product_with_plane",
    "transform_chart",
    "chart_manifest",
    "default_resolution",
    "CATALOG_NAMES",
]

# Probe window used when estimating truncation-tail contributions of
# non-compact catalog entries (scales rho, t in this range).
PROBE_SCALE_WINDOW = (0.05, 20.0)


class DegenerateJacobianError(RuntimeError):
    """Raised when det(J J^T) falls below the degeneracy floor at a node."""


class CatalogError(ValueError):
    """Unknown catalog entry or invalid catalog parameters."""


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    periodic: bool = False

    @property
    def span(self) -> float:
        return self.hi - self.lo


@dataclass
class ChartSpec:
    """One parametrized piece of an n-submanifold of R^N.

    ``embed`` maps a (K, n) array of parameter points to (K, N) positions;
    ``jacobian``/``hessian`` are optional analytic derivatives with shapes
    (K, n, N) and (K, n, n, N).  ``branches`` lists affine isometries
    (A, b) replicating the image; ``multiplicity`` scales the area measure
    (1/2 for a double cover).
    """

    name: str
    intrinsic_dim: int
    ambient_dim: int
    embed: Callable[[np.ndarray], np.ndarray]
    domain: tuple[Axis, ...]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    multiplicity: float = 1.0
    branches: tuple[tuple[np.ndarray, np.ndarray], ...] | None = None
    truncation_note: str = ""
    tail_bound: float = 0.0
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.intrinsic_dim < 1 or self.ambient_dim < self.intrinsic_dim:
            raise ValueError("need 1 <= intrinsic_dim <= ambient_dim")
        if self.multiplicity <= 0:
            raise ValueError("multiplicity must be positive")
        if len(self.domain) != self.intrinsic_dim:
            raise ValueError("domain must list one Axis per intrinsic dimension")
        if self.branches is None:
            self.branches = ((np.eye(self.ambient_dim), np.zeros(self.ambient_dim)),)


@dataclass(frozen=True)
class QuadratureGrid:
    """Parameter-space nodes and positive weights; weights sum to the box volume."""

    nodes: np.ndarray  # (K, n)
    weights: np.ndarray  # (K,)


@dataclass
class SampledManifold:
    """Quadrature sample of a chart: positions, area elements, frames, curvature.

    ``area`` already includes the quadrature weight, sqrt(det g), and the
    cover multiplicity, so plain weighted sums over nodes approximate
    integrals against n-dimensional Hausdorff measure of the sampled set.
    """

    positions: np.ndarray  # (K, N)
    area: np.ndarray  # (K,)
    tangents: np.ndarray  # (K, n, N)
    mean_curvature: np.ndarray | None
    intrinsic_dim: int
    ambient_dim: int
    multiplicity: float = 1.0
    tail_bound: float = 0.0
    label: str = ""

    @property
    def total_area(self) -> float:
        return float(self.area.sum())

    def centroid(self) -> np.ndarray:
        return self.area @ self.positions / self.total_area

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def tangential_component(self, vectors: np.ndarray) -> np.ndarray:
        """Project per-node ambient vectors onto the tangent space at each node."""
        J = self.tangents
        g = np.einsum("kin,kjn->kij", J, J)
        rhs = np.einsum("kin,kn->ki", J, vectors)
        coeff = np.linalg.solve(g, rhs[..., None])[..., 0]
        return np.einsum("ki,kin->kn", coeff, J)

    def normal_component(self, vectors: np.ndarray) -> np.ndarray:
        return vectors - self.tangential_component(vectors)


@lru_cache(maxsize=64)
def _leggauss(count: int) -> tuple[np.ndarray, np.ndarray]:
    ref, wref = roots_legendre(count)
    ref.flags.writeable = False
    wref.flags.writeable = False
    return ref, wref


def _axis_rule(axis: Axis, count: int) -> tuple[np.ndarray, np.ndarray]:
    if count < 4:
        raise ValueError(f"need at least 4 nodes per axis, got {count}")
    if axis.periodic:
        step = axis.span / count
        nodes = axis.lo + step * np.arange(count)
        return nodes, np.full(count, step)
    ref, wref = _leggauss(count)
    mid, half = 0.5 * (axis.lo + axis.hi), 0.5 * axis.span
    return mid + half * ref, half * wref


def _as_resolution(chart: ChartSpec, resolution) -> tuple[int, ...]:
    if np.isscalar(resolution):
        return (int(resolution),) * chart.intrinsic_dim
    res = tuple(int(r) for r in resolution)
    if len(res) != chart.intrinsic_dim:
        raise ValueError(f"resolution must give {chart.intrinsic_dim} per-axis counts")
    return res


def build_grid(chart: ChartSpec, resolution) -> QuadratureGrid:
    """Tensor-product quadrature: Gauss-Legendre on bounded axes, uniform on periodic ones."""
    res = _as_resolution(chart, resolution)
    axes = [_axis_rule(ax, r) for ax, r in zip(chart.domain, res)]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(nodes.shape[0])
    for w in wgrids:
        weights = weights * w.ravel()
    return QuadratureGrid(nodes=nodes, weights=weights)


def _fd_steps(chart: ChartSpec) -> np.ndarray:
    # Central differences; catalog embeds evaluate on a slightly enlarged box.
    return np.array([ax.span * 1e-4 for ax in chart.domain])


def _fd_jacobian(chart: ChartSpec, u: np.ndarray) -> np.ndarray:
    K, n = u.shape
    h = _fd_steps(chart)
    J = np.empty((K, n, chart.ambient_dim))
    for i in range(n):
        up, um = u.copy(), u.copy()
        up[:, i] += h[i]
        um[:, i] -= h[i]
        J[:, i, :] = (chart.embed(up) - chart.embed(um)) / (2.0 * h[i])
    return J


def _fd_hessian(chart: ChartSpec, u: np.ndarray) -> np.ndarray:
    K, n = u.shape
    h = _fd_steps(chart)
    H = np.empty((K, n, n, chart.ambient_dim))
    f0 = chart.embed(u)
    for i in range(n):
        up, um = u.copy(), u.copy()
        up[:, i] += h[i]
        um[:, i] -= h[i]
        H[:, i, i, :] = (chart.embed(up) - 2.0 * f0 + chart.embed(um)) / h[i] ** 2
        for j in range(i + 1, n):
            upp, upm, ump, umm = u.copy(), u.copy(), u.copy(), u.copy()
            upp[:, [i, j]] += h[[i, j]]
            umm[:, [i, j]] -= h[[i, j]]
            upm[:, i] += h[i]
            upm[:, j] -= h[j]
            ump[:, i] -= h[i]
            ump[:, j] += h[j]
            mixed = (chart.embed(upp) - chart.embed(upm) - chart.embed(ump) + chart.embed(umm)) / (
                4.0 * h[i] * h[j]
            )
            H[:, i, j, :] = mixed
            H[:, j, i, :] = mixed
    return H


def _chart_derivatives(chart: ChartSpec, u: np.ndarray, derivative_mode: str):
    if derivative_mode not in ("auto", "analytic", "finite-difference"):
        raise ValueError(f"unknown derivative_mode {derivative_mode!r}")
    use_analytic = derivative_mode == "analytic" or (
        derivative_mode == "auto" and chart.jacobian is not None
    )
    if use_analytic and chart.jacobian is None:
        raise ValueError(f"chart {chart.name!r} has no analytic Jacobian")
    if use_analytic:
        J = chart.jacobian(u)
        H = chart.hessian(u) if chart.hessian is not None else _fd_hessian(chart, u)
    else:
        J = _fd_jacobian(chart, u)
        H = _fd_hessian(chart, u)
    return J, H


def build_samples(chart: ChartSpec, resolution, derivative_mode: str = "auto") -> SampledManifold:
    """Sample a chart on a tensor quadrature grid.

    Positions, area elements via sqrt(det(J J^T)) times quadrature weight and
    multiplicity, tangent frames, and mean curvature (normal projection of the
    metric-traced second derivatives).  Raises DegenerateJacobianError naming
    the first offending node if det(J J^T) <= 1e-14 anywhere.
    """
    grid = build_grid(chart, resolution)
    u, w = grid.nodes, grid.weights
    J, Hess = _chart_derivatives(chart, u, derivative_mode)
    g = np.einsum("kin,kjn->kij", J, J)
    detg = np.linalg.det(g)
    bad = np.flatnonzero(detg <= 1e-14)
    if bad.size:
        k = int(bad[0])
        raise DegenerateJacobianError(
            f"degenerate Jacobian on chart {chart.name!r}: det(g)={detg[k]:.3e} "
            f"at node {k} (parameters {u[k].tolist()})"
        )
    # trace of second derivatives against g^{-1}, then normal projection
    ginv = np.linalg.inv(g)
    traced = np.einsum("kij,kijn->kn", ginv, Hess)
    coeff = np.linalg.solve(g, np.einsum("kin,kn->ki", J, traced)[..., None])[..., 0]
    H = traced - np.einsum("ki,kin->kn", coeff, J)

    base_area = chart.multiplicity * w * np.sqrt(detg)
    F = chart.embed(u)

    pos_parts, area_parts, tan_parts, mc_parts = [], [], [], []
    for A, b in chart.branches:
        pos_parts.append(F @ A.T + b)
        tan_parts.append(np.einsum("kin,mn->kim", J, A))
        mc_parts.append(H @ A.T)
        # |det A|^(1/N) is the conformal factor of the branch isometry
        s = abs(np.linalg.det(A)) ** (1.0 / chart.ambient_dim)
        area_parts.append(base_area * s**chart.intrinsic_dim)
    return SampledManifold(
        positions=np.concatenate(pos_parts),
        area=np.concatenate(area_parts),
        tangents=np.concatenate(tan_parts),
        mean_curvature=np.concatenate(mc_parts),
        intrinsic_dim=chart.intrinsic_dim,
        ambient_dim=chart.ambient_dim,
        multiplicity=chart.multiplicity,
        tail_bound=chart.tail_bound,
        label=chart.name,
    )


def mean_curvature_at(chart: ChartSpec, u, h: float) -> np.ndarray:
    """Finite-difference mean curvature vector at a single parameter point.

    H = g^{ij} (d^2 F / du_i du_j)^perp with central differences of step h;
    second-order accurate.  The point must sit at distance >= 2h from any
    non-periodic boundary.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (chart.intrinsic_dim,):
        raise ValueError(f"expected a parameter point of dimension {chart.intrinsic_dim}")
    for ax, ui in zip(chart.domain, u):
        if not ax.periodic and (ui - ax.lo < 2 * h or ax.hi - ui < 2 * h):
            raise ValueError(f"point {u.tolist()} closer than 2h to a non-periodic boundary")
    n, N = chart.intrinsic_dim, chart.ambient_dim
    pt = u[None, :]

    def emb(du):
        return chart.embed(pt + du)[0]

    J = np.empty((n, N))
    Hess = np.empty((n, n, N))
    f0 = emb(np.zeros(n))
    eye = np.eye(n)
    for i in range(n):
        fp, fm = emb(h * eye[i]), emb(-h * eye[i])
        J[i] = (fp - fm) / (2 * h)
        Hess[i, i] = (fp - 2 * f0 + fm) / h**2
        for j in range(i + 1, n):
            mixed = (
                emb(h * (eye[i] + eye[j]))
                - emb(h * (eye[i] - eye[j]))
                - emb(h * (eye[j] - eye[i]))
                + emb(-h * (eye[i] + eye[j]))
            ) / (4 * h**2)
            Hess[i, j] = mixed
            Hess[j, i] = mixed
    g = J @ J.T
    if np.linalg.det(g) <= 1e-14:
        raise DegenerateJacobianError(f"degenerate metric at {u.tolist()} on {chart.name!r}")
    traced = np.einsum("ij,ijn->n", np.linalg.inv(g), Hess)
    tang = J.T @ np.linalg.solve(g, J @ traced)
    return traced - tang


def shrinker_residual(sampled: SampledManifold) -> float:
    """max over nodes of |H + x^perp / 2|; zero exactly on self-shrinkers."""
    if sampled.mean_curvature is None:
        raise ValueError("sampled manifold carries no mean curvature data")
    xperp = sampled.normal_component(sampled.positions)
    return float(np.linalg.norm(sampled.mean_curvature + 0.5 * xperp, axis=1).max())


# ---------------------------------------------------------------------------
# catalog


def _sphere_coords(u):
    th, ph = u[:, 0], u[:, 1]
    st, ct = np.sin(th), np.cos(th)
    sp, cp = np.sin(ph), np.cos(ph)
    p = np.stack([st * cp, st * sp, ct], axis=-1)
    p_th = np.stack([ct * cp, ct * sp, -st], axis=-1)
    p_ph = np.stack([-st * sp, st * cp, np.zeros_like(th)], axis=-1)
    p_thth = -p
    p_thph = np.stack([-ct * sp, ct * cp, np.zeros_like(th)], axis=-1)
    p_phph = np.stack([-st * cp, -st * sp, np.zeros_like(th)], axis=-1)
    return p, p_th, p_ph, p_thth, p_thph, p_phph


_SQ3 = math.sqrt(3.0)
# Symmetric forms of the degree-2 minimal embedding of the unit 2-sphere
# (double cover of the projective plane) into the unit 4-sphere.
_VERONESE_FORMS = np.array(
    [
        [[0, _SQ3 / 2, 0], [_SQ3 / 2, 0, 0], [0, 0, 0]],
        [[0, 0, _SQ3 / 2], [0, 0, 0], [_SQ3 / 2, 0, 0]],
        [[0, 0, 0], [0, 0, _SQ3 / 2], [0, _SQ3 / 2, 0]],
        [[_SQ3 / 2, 0, 0], [0, -_SQ3 / 2, 0], [0, 0, 0]],
        [[0.5, 0, 0], [0, 0.5, 0], [0, 0, -1.0]],
    ]
)


def _gaussian_tail(scale_area: float, halfwidth: float) -> float:
    # Gaussian-functional tail of an axis truncated at +-halfwidth, worst
    # probe scale in PROBE_SCALE_WINDOW.
    t = PROBE_SCALE_WINDOW[1]
    return float(scale_area * erfc(halfwidth / (2.0 * math.sqrt(t))))


def catalog_make(name: str, params: Sequence[float] = ()) -> ChartSpec:
    """Build a named catalog chart.

    Entries: plane_patch(n, half_width[, ambient[, kappa]]), sphere(n, R),
    cylinder(R, half_length), clifford_torus(scale), veronese(scale),
    loxodrome(alpha, t_max), ellipse(a, b).  Non-compact entries are
    truncated and record a tail estimate over the probe window.
    """
    params = tuple(float(p) for p in params)

    if name == "plane_patch":
        if not params:
            raise CatalogError("plane_patch needs (n, half_width[, ambient[, kappa]])")
        n = int(params[0])
        hw = params[1] if len(params) > 1 else 1.0
        N = int(params[2]) if len(params) > 2 else n
        kappa = params[3] if len(params) > 3 else 0.0
        if n < 1 or hw <= 0 or N < n or kappa < 0:
            raise CatalogError(f"invalid plane_patch parameters {params}")

        if kappa == 0.0:
            def embed(u, n=n, N=N):
                out = np.zeros((u.shape[0], N))
                out[:, :n] = u
                return out

            def jac(u, n=n, N=N):
                J = np.zeros((u.shape[0], n, N))
                J[:, np.arange(n), np.arange(n)] = 1.0
                return J

            def hess(u, n=n, N=N):
                return np.zeros((u.shape[0], n, n, N))

            domain = tuple(Axis(-hw, hw) for _ in range(n))
            note = f"flat {n}-patch truncated at half-width {hw}"
            tail = _gaussian_tail(1.0, hw) if hw > 8 else 0.0
        else:
            # sinh-stretched parametrization of the same box: resolves
            # weights of width O(1) on half-widths up to ~1e9
            c = hw / math.sinh(kappa)

            def embed(u, n=n, N=N, c=c, kappa=kappa):
                out = np.zeros((u.shape[0], N))
                out[:, :n] = c * np.sinh(kappa * u)
                return out

            def jac(u, n=n, N=N, c=c, kappa=kappa):
                J = np.zeros((u.shape[0], n, N))
                d = c * kappa * np.cosh(kappa * u)
                J[:, np.arange(n), np.arange(n)] = d
                return J

            def hess(u, n=n, N=N, c=c, kappa=kappa):
                H = np.zeros((u.shape[0], n, n, N))
                d2 = c * kappa * kappa * np.sinh(kappa * u)
                H[:, np.arange(n), np.arange(n), np.arange(n)] = d2
                return H

            domain = tuple(Axis(-1.0, 1.0) for _ in range(n))
            note = f"flat {n}-patch, half-width {hw}, sinh-stretched nodes (kappa={kappa})"
            # Moebius-weight tail ~ 4 n / (rho_min * hw), normalized by |S^n|
            tail = 4.0 * n / (PROBE_SCALE_WINDOW[0] * hw) / sphere_area(n)
        return ChartSpec(
            name=f"plane_patch({n},{hw})",
            intrinsic_dim=n,
            ambient_dim=N,
            embed=embed,
            jacobian=jac,
            hessian=hess,
            domain=domain,
            truncation_note=note,
            tail_bound=tail,
            params=params,
        )

    if name == "sphere":
        if len(params) != 2:
            raise CatalogError("sphere needs (n, R)")
        n, R = int(params[0]), params[1]
        if R <= 0:
            raise CatalogError(f"sphere radius must be positive, got {R}")
        if n == 1:
            def embed(u, R=R):
                th = u[:, 0]
                return R * np.stack([np.cos(th), np.sin(th)], axis=-1)

            def jac(u, R=R):
                th = u[:, 0]
                return R * np.stack([-np.sin(th), np.cos(th)], axis=-1)[:, None, :]

            def hess(u, R=R):
                return -embed(u)[:, None, None, :]

            return ChartSpec(
                name=f"sphere(1,{R})",
                intrinsic_dim=1,
                ambient_dim=2,
                embed=embed,
                jacobian=jac,
                hessian=hess,
                domain=(Axis(0.0, 2.0 * math.pi, periodic=True),),
                params=params,
            )
        if n == 2:
            def embed(u, R=R):
                return R * _sphere_coords(u)[0]

            def jac(u, R=R):
                _, p_th, p_ph, *_ = _sphere_coords(u)
                return R * np.stack([p_th, p_ph], axis=1)

            def hess(u, R=R):
                *_, p_thth, p_thph, p_phph = _sphere_coords(u)
                top = np.stack([p_thth, p_thph], axis=1)
                bot = np.stack([p_thph, p_phph], axis=1)
                return R * np.stack([top, bot], axis=1)

            return ChartSpec(
                name=f"sphere(2,{R})",
                intrinsic_dim=2,
                ambient_dim=3,
                embed=embed,
                jacobian=jac,
                hessian=hess,
                domain=(Axis(0.0, math.pi), Axis(0.0, 2.0 * math.pi, periodic=True)),
                params=params,
            )
        raise CatalogError(f"sphere supports n in {{1, 2}}, got n={n}")

    if name == "cylinder":
        if len(params) != 2:
            raise CatalogError("cylinder needs (R, half_length)")
        R, hl = params
        if R <= 0 or hl <= 0:
            raise CatalogError(f"invalid cylinder parameters {params}")

        def embed(u, R=R):
            th, z = u[:, 0], u[:, 1]
            return np.stack([R * np.cos(th), R * np.sin(th), z], axis=-1)

        def jac(u, R=R):
            th = u[:, 0]
            zero = np.zeros_like(th)
            row0 = np.stack([-R * np.sin(th), R * np.cos(th), zero], axis=-1)
            row1 = np.stack([zero, zero, np.ones_like(th)], axis=-1)
            return np.stack([row0, row1], axis=1)

        def hess(u, R=R):
            th = u[:, 0]
            zero = np.zeros_like(th)
            H = np.zeros((u.shape[0], 2, 2, 3))
            H[:, 0, 0, :] = np.stack([-R * np.cos(th), -R * np.sin(th), zero], axis=-1)
            return H

        return ChartSpec(
            name=f"cylinder({R},{hl})",
            intrinsic_dim=2,
            ambient_dim=3,
            embed=embed,
            jacobian=jac,
            hessian=hess,
            domain=(Axis(0.0, 2.0 * math.pi, periodic=True), Axis(-hl, hl)),
            truncation_note=f"cylinder axis truncated at half-length {hl}",
            tail_bound=_gaussian_tail(2.0 * math.pi * R, hl),
            params=params,
        )

    if name == "clifford_torus":
        if len(params) != 1:
            raise CatalogError("clifford_torus needs (scale,)")
        s = params[0]
        if s <= 0:
            raise CatalogError(f"scale must be positive, got {s}")
        r = s / math.sqrt(2.0)

        def embed(u, r=r):
            th, ph = u[:, 0], u[:, 1]
            return r * np.stack([np.cos(th), np.sin(th), np.cos(ph), np.sin(ph)], axis=-1)

        def jac(u, r=r):
            th, ph = u[:, 0], u[:, 1]
            zero = np.zeros_like(th)
            row0 = r * np.stack([-np.sin(th), np.cos(th), zero, zero], axis=-1)
            row1 = r * np.stack([zero, zero, -np.sin(ph), np.cos(ph)], axis=-1)
            return np.stack([row0, row1], axis=1)

        def hess(u, r=r):
            th, ph = u[:, 0], u[:, 1]
            zero = np.zeros_like(th)
            H = np.zeros((u.shape[0], 2, 2, 4))
            H[:, 0, 0, :] = r * np.stack([-np.cos(th), -np.sin(th), zero, zero], axis=-1)
            H[:, 1, 1, :] = r * np.stack([zero, zero, -np.cos(ph), -np.sin(ph)], axis=-1)
            return H

        return ChartSpec(
            name=f"clifford_torus({s})",
            intrinsic_dim=2,
            ambient_dim=4,
            embed=embed,
            jacobian=jac,
            hessian=hess,
            domain=(
                Axis(0.0, 2.0 * math.pi, periodic=True),
                Axis(0.0, 2.0 * math.pi, periodic=True),
            ),
            params=params,
        )

    if name == "veronese":
        if len(params) != 1:
            raise CatalogError("veronese needs (scale,)")
        s = params[0]
        if s <= 0:
            raise CatalogError(f"scale must be positive, got {s}")
        A = _VERONESE_FORMS

        def embed(u, s=s, A=A):
            p = _sphere_coords(u)[0]
            return s * np.einsum("ki,mij,kj->km", p, A, p)

        def jac(u, s=s, A=A):
            p, p_th, p_ph, *_ = _sphere_coords(u)
            dth = 2.0 * s * np.einsum("ki,mij,kj->km", p, A, p_th)
            dph = 2.0 * s * np.einsum("ki,mij,kj->km", p, A, p_ph)
            return np.stack([dth, dph], axis=1)

        def hess(u, s=s, A=A):
            p, p_th, p_ph, p_thth, p_thph, p_phph = _sphere_coords(u)

            def second(da, db, dab):
                return 2.0 * s * (
                    np.einsum("ki,mij,kj->km", da, A, db)
                    + np.einsum("ki,mij,kj->km", p, A, dab)
                )

            h_tt = second(p_th, p_th, p_thth)
            h_tp = second(p_th, p_ph, p_thph)
            h_pp = second(p_ph, p_ph, p_phph)
            top = np.stack([h_tt, h_tp], axis=1)
            bot = np.stack([h_tp, h_pp], axis=1)
            return np.stack([top, bot], axis=1)

        return ChartSpec(
            name=f"veronese({s})",
            intrinsic_dim=2,
            ambient_dim=5,
            embed=embed,
            jacobian=jac,
            hessian=hess,
            domain=(Axis(0.0, math.pi), Axis(0.0, 2.0 * math.pi, periodic=True)),
            multiplicity=0.5,
            params=params,
        )

    if name == "loxodrome":
        if not params or len(params) > 2:
            raise CatalogError("loxodrome needs (alpha[, t_max])")
        alpha = params[0]
        tmax = params[1] if len(params) > 1 else 10.0
        if alpha < 0:
            raise CatalogError(f"loxodrome pitch must be nonnegative, got {alpha}")
        if tmax <= 0:
            raise CatalogError(f"loxodrome t_max must be positive, got {tmax}")

        def embed(u, a=alpha):
            t = u[:, 0]
            et = np.exp(t)
            return np.stack([et * np.cos(a * t), et * np.sin(a * t)], axis=-1)

        def jac(u, a=alpha):
            t = u[:, 0]
            et = np.exp(t)
            c, s = np.cos(a * t), np.sin(a * t)
            return np.stack([et * (c - a * s), et * (s + a * c)], axis=-1)[:, None, :]

        def hess(u, a=alpha):
            t = u[:, 0]
            et = np.exp(t)
            c, s = np.cos(a * t), np.sin(a * t)
            d2 = np.stack(
                [et * ((1 - a * a) * c - 2 * a * s), et * ((1 - a * a) * s + 2 * a * c)],
                axis=-1,
            )
            return d2[:, None, None, :]

        # doubled spiral: second branch is the point reflection of the first
        branches = ((np.eye(2), np.zeros(2)), (-np.eye(2), np.zeros(2)))
        # Moebius-weight tail past radius e^tmax at the smallest probe scale
        tail = 8.0 * math.sqrt(1.0 + alpha * alpha) / (
            PROBE_SCALE_WINDOW[0] * math.exp(tmax)
        ) / (2.0 * math.pi)
        return ChartSpec(
            name=f"loxodrome({alpha},{tmax})",
            intrinsic_dim=1,
            ambient_dim=2,
            embed=embed,
            jacobian=jac,
            hessian=hess,
            domain=(Axis(-tmax, tmax),),
            branches=branches,
            truncation_note=(
                f"doubled spiral truncated to t in [-{tmax}, {tmax}] "
                f"(radii {math.exp(-tmax):.2e} .. {math.exp(tmax):.2e})"
            ),
            tail_bound=tail,
            params=params,
        )

    if name == "ellipse":
        if len(params) != 2:
            raise CatalogError("ellipse needs (a, b)")
        a, b = params
        if a <= 0 or b <= 0:
            raise CatalogError(f"invalid ellipse parameters {params}")

        def embed(u, a=a, b=b):
            th = u[:, 0]
            return np.stack([a * np.cos(th), b * np.sin(th)], axis=-1)

        def jac(u, a=a, b=b):
            th = u[:, 0]
            return np.stack([-a * np.sin(th), b * np.cos(th)], axis=-1)[:, None, :]

        def hess(u, a=a, b=b):
            return -embed(u)[:, None, None, :]

        return ChartSpec(
            name=f"ellipse({a},{b})",
            intrinsic_dim=1,
            ambient_dim=2,
            embed=embed,
            jacobian=jac,
            hessian=hess,
            domain=(Axis(0.0, 2.0 * math.pi, periodic=True),),
            params=params,
        )

    if name == "lattice_torus":
        raise CatalogError(
            "lattice tori are not sampled as embedded surfaces; "
            "use weights.lattice_bound for the conformal-volume evaluator"
        )
    raise CatalogError(f"unknown catalog entry {name!r}")


CATALOG_NAMES = (
    "plane_patch",
    "sphere",
    "cylinder",
    "clifford_torus",
    "veronese",
    "loxodrome",
    "ellipse",
)

_DEFAULT_RESOLUTION = {
    "plane_patch": 256,
    "sphere": {1: (512,), 2: (64, 128)},
    "cylinder": (128, 384),
    "clifford_torus": (96, 96),
    "veronese": (64, 128),
    "loxodrome": (8192,),
    "ellipse": (512,),
}


def default_resolution(chart: ChartSpec) -> tuple[int, ...]:
    """Per-axis node counts giving desk-scale accuracy for catalog entries."""
    base = chart.name.split("(")[0]
    if base == "sphere":
        return _DEFAULT_RESOLUTION["sphere"][chart.intrinsic_dim]
    if base == "plane_patch":
        per = 256 if chart.intrinsic_dim == 1 else 128
        return (per,) * chart.intrinsic_dim
    res = _DEFAULT_RESOLUTION.get(base)
    if res is None:
        return (64,) * chart.intrinsic_dim
    return tuple(res)


def product_with_plane(
    chart: ChartSpec, m: int, half_width: float, kappa: float = 8.0
) -> ChartSpec:
    """Chart for Sigma x R^(2m), each Euclidean factor truncated at +-half_width.

    The plane factors are parametrized by a sinh stretch so that weights of
    width O(1) stay resolved on wide truncation boxes; used for the m = 1
    cross-checks of the product-integration identity (m > 2 rejected for
    quadrature cost).
    """
    if m < 1 or m != int(m):
        raise ValueError(f"need an integer m >= 1, got {m!r}")
    if m > 2:
        raise ValueError(f"m={m} rejected: quadrature over 2m extra axes is too costly")
    if half_width <= 0 or kappa <= 0:
        raise ValueError("half_width and kappa must be positive")
    m = int(m)
    n, N = chart.intrinsic_dim, chart.ambient_dim
    c = half_width / math.sinh(kappa)

    def embed(u, base=chart.embed, n=n, N=N, m=m, c=c, kappa=kappa):
        out = np.zeros((u.shape[0], N + 2 * m))
        out[:, :N] = base(u[:, :n])
        out[:, N:] = c * np.sinh(kappa * u[:, n:])
        return out

    base_jac = chart.jacobian
    base_hess = chart.hessian

    def jac(u, n=n, N=N, m=m, c=c, kappa=kappa):
        K = u.shape[0]
        J = np.zeros((K, n + 2 * m, N + 2 * m))
        Jb = base_jac(u[:, :n]) if base_jac is not None else _fd_jacobian(chart, u[:, :n])
        J[:, :n, :N] = Jb
        d = c * kappa * np.cosh(kappa * u[:, n:])
        idx = np.arange(2 * m)
        J[:, n + idx, N + idx] = d
        return J

    def hess(u, n=n, N=N, m=m, c=c, kappa=kappa):
        K = u.shape[0]
        H = np.zeros((K, n + 2 * m, n + 2 * m, N + 2 * m))
        Hb = base_hess(u[:, :n]) if base_hess is not None else _fd_hessian(chart, u[:, :n])
        H[:, :n, :n, :N] = Hb
        d2 = c * kappa * kappa * np.sinh(kappa * u[:, n:])
        idx = np.arange(2 * m)
        H[:, n + idx, n + idx, N + idx] = d2
        return H

    branches = tuple(
        (
            np.block(
                [[A, np.zeros((N, 2 * m))], [np.zeros((2 * m, N)), np.eye(2 * m)]]
            ),
            np.concatenate([b, np.zeros(2 * m)]),
        )
        for A, b in chart.branches
    )
    return ChartSpec(
        name=f"{chart.name} x R^{2 * m}",
        intrinsic_dim=n + 2 * m,
        ambient_dim=N + 2 * m,
        embed=embed,
        jacobian=jac,
        hessian=hess,
        domain=chart.domain + tuple(Axis(-1.0, 1.0) for _ in range(2 * m)),
        multiplicity=chart.multiplicity,
        branches=branches,
        truncation_note=(
            chart.truncation_note
            + f"; {2 * m} Euclidean factors truncated at +-{half_width} (sinh nodes)"
        ).lstrip("; "),
        tail_bound=chart.tail_bound,
        params=chart.params,
    )


def transform_chart(
    chart: ChartSpec,
    rotation: np.ndarray | None = None,
    translation: np.ndarray | None = None,
    scale: float = 1.0,
) -> ChartSpec:
    """Apply the ambient similarity x -> scale * Q x + b to every branch."""
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale!r}")
    N = chart.ambient_dim
    Q = np.eye(N) if rotation is None else np.asarray(rotation, dtype=float)
    b = np.zeros(N) if translation is None else np.asarray(translation, dtype=float)
    if Q.shape != (N, N) or b.shape != (N,):
        raise ValueError("rotation/translation dimensions do not match the chart")
    branches = tuple((scale * Q @ A, scale * Q @ bb + b) for A, bb in chart.branches)
    return ChartSpec(
        name=f"{chart.name} (transformed)",
        intrinsic_dim=chart.intrinsic_dim,
        ambient_dim=N,
        embed=chart.embed,
        jacobian=chart.jacobian,
        hessian=chart.hessian,
        domain=chart.domain,
        multiplicity=chart.multiplicity,
        branches=branches,
        truncation_note=chart.truncation_note,
        tail_bound=chart.tail_bound,
        params=chart.params,
    )


def chart_manifest(chart: ChartSpec, resolution) -> dict:
    """JSON-serializable description {name, params, resolution, truncation}."""
    return {
        "name": chart.name.split("(")[0],
        "params": list(chart.params),
        "resolution": list(_as_resolution(chart, resolution)),
        "truncation": chart.truncation_note,
    }
