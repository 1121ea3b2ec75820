"""Grid laboratory for heat-kernel convolution and log-concavity estimates.

Positive mass-one densities live on uniform grids over [-L, L]^N with
N in {1, 2}.  The laboratory evolves them by discrete heat-kernel
convolution, estimates the virtual time (the largest tau with
2 tau grad^2 log u + g >= 0) by finite-difference Hessian eigenvalue scans,
and checks the matrix-Harnack margin, the mean-value bound, the linear
growth of virtual time along the flow, and long-time convergence to a
moment-matched Gaussian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.ndimage import binary_erosion, convolve1d

from . import weights

__all__ = [
    "GridDensity",
    "VirtualTimeEstimate",
    "GridError",
    "TailMassError",
    "density_from_weight",
    "gaussian_density",
    "bump_density",
    "heat_at",
    "grid_from_callable",
    "estimate_virtual_time",
    "check_harnack",
    "check_meanvalue_bound",
    "check_tau_growth",
    "gaussian_distance",
    "grid_mean",
    "grid_second_moment",
]

# Nodes below this fraction of the peak are excluded from log-Hessian scans;
# log u of smaller values amplifies rounding noise.
VALUE_FLOOR = 1e-12


class GridError(ValueError):
    """Grid geometry or resolution violates an operation's precondition."""


class TailMassError(GridError):
    """The continuum density leaves more mass outside the grid than allowed."""


@dataclass
class GridDensity:
    """Nonnegative density sampled on a uniform grid over [-L, L]^N, N <= 2.

    ``values`` has shape (K,) or (K, K); the Riemann-sum mass is cached at
    construction (normalized constructors make it exactly 1).
    """

    N: int
    L: float
    h: float
    values: np.ndarray
    mass: float = 0.0
    # zone near the grid edge where values are unreliable (zero padding of
    # past convolutions); Hessian scans stay clear of it
    boundary_pad: float = 0.0

    def __post_init__(self):
        if self.N not in (1, 2):
            raise GridError(f"grid dimension must be 1 or 2, got {self.N}")
        if self.values.ndim != self.N:
            raise GridError("values array rank does not match the grid dimension")
        if np.any(self.values < 0):
            raise GridError("density values must be nonnegative")
        if not np.any(self.values > 0):
            raise GridError("density must have positive mass")
        self.mass = float(self.values.sum() * self.h**self.N)

    @property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.values.shape[0])

    @property
    def peak(self) -> float:
        return float(self.values.max())

    def boundary_ratio(self) -> float:
        """Largest boundary value relative to the peak."""
        v = self.values
        if self.N == 1:
            edge = max(v[0], v[-1])
        else:
            edge = max(v[0, :].max(), v[-1, :].max(), v[:, 0].max(), v[:, -1].max())
        return float(edge / self.peak)

    def normalized(self) -> "GridDensity":
        return GridDensity(self.N, self.L, self.h, self.values / self.mass, boundary_pad=self.boundary_pad)


def _grid_axis(L: float, h: float) -> np.ndarray:
    if L <= 0 or h <= 0 or h >= L:
        raise GridError(f"need 0 < h < L, got L={L!r}, h={h!r}")
    K = int(round(2.0 * L / h)) + 1
    return np.linspace(-L, L, K)


def grid_from_callable(N: int, L: float, h: float, f, normalize: bool = True) -> GridDensity:
    """Sample a nonnegative function of (..., N)-shaped coordinates on the grid."""
    x = _grid_axis(L, h)
    if N == 1:
        vals = f(x[:, None])
    else:
        X, Y = np.meshgrid(x, x, indexing="ij")
        vals = f(np.stack([X, Y], axis=-1))
    dens = GridDensity(N, L, float(x[1] - x[0]), np.asarray(vals, dtype=float))
    return dens.normalized() if normalize else dens


def density_from_weight(
    N: int, m: int, rho: float, L: float, h: float, tail_tol: float = 1e-8
) -> GridDensity:
    """Chat(N, m) * What(N, m, rho) sampled and renormalized to discrete mass 1.

    Preconditions: the grid resolves the weight (h <= sqrt(rho)/10) and the
    continuum mass outside [-L, L]^N stays below ``tail_tol``.  The modified
    weights decay polynomially, so small m needs a large L; callers accepting
    a heavier tail pass an explicit ``tail_tol``.
    """
    if rho <= 0:
        raise GridError(f"need rho > 0, got {rho!r}")
    if h > math.sqrt(rho) / 10.0:
        raise GridError(f"h={h} too coarse for rho={rho}; need h <= sqrt(rho)/10")
    alpha = weights.alpha_mass(N, m, N)

    def radial(r):
        return float(alpha * weights.what_eval(N, m, rho, 0.0, r))

    if N == 1:
        tail = 2.0 * quad(radial, L, np.inf)[0]
    else:
        tail = quad(lambda r: 2.0 * math.pi * r * radial(r), L, np.inf)[0]
    if tail > tail_tol:
        raise TailMassError(
            f"mass outside the grid is {tail:.3e} > tail_tol={tail_tol:.1e}; "
            f"enlarge L (currently {L}) or loosen tail_tol"
        )

    def f(x):
        return alpha * weights.what_eval(N, m, rho, np.zeros(N), x)

    return grid_from_callable(N, L, h, f)


def gaussian_density(N: int, t: float, L: float, h: float, x0=None) -> GridDensity:
    """Heat kernel at time t centered at x0, sampled and renormalized."""
    if t <= 0:
        raise GridError(f"need t > 0, got {t!r}")
    c = np.zeros(N) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))

    def f(x):
        return weights.gaussian_eval(N, t, c, x)

    return grid_from_callable(N, L, h, f)


def bump_density(N: int, L: float, h: float, radius: float, mollify: float = 0.05) -> GridDensity:
    """Normalized indicator of [-radius, radius]^N mollified by a short heat step."""
    if radius <= 0 or radius >= L:
        raise GridError(f"need 0 < radius < L, got radius={radius!r}")

    def f(x):
        inside = np.all(np.abs(x) <= radius, axis=-1)
        return inside.astype(float)

    flat = grid_from_callable(N, L, h, f)
    return heat_at(flat, mollify) if mollify > 0 else flat


# Truncating at 10 sqrt(2t) keeps the missing kernel mass negligible even at
# points near the scan's value floor, where the saddle of the convolution
# integrand sits far off-center.
KERNEL_RADII = 10.0


def _kernel_1d(t: float, h: float) -> np.ndarray:
    radius = KERNEL_RADII * math.sqrt(2.0 * t)
    J = int(math.ceil(radius / h))
    offsets = h * np.arange(-J, J + 1)
    return h * (4.0 * math.pi * t) ** -0.5 * np.exp(-(offsets**2) / (4.0 * t))


def heat_at(u0: GridDensity, t: float) -> GridDensity:
    """Evolve a density by discrete heat-kernel convolution to time t.

    Direct separable summation with the kernel truncated at KERNEL_RADII
    standard radii and zero padding outside the grid; mass is preserved to
    the extent the density stays supported away from the boundary.  The
    returned density's ``boundary_pad`` grows by the kernel radius.
    """
    if t <= 0:
        raise GridError(f"need t > 0, got {t!r}")
    if math.sqrt(t) > u0.L / 6.0:
        raise GridError(f"sqrt(t)={math.sqrt(t):.3g} exceeds L/6={u0.L / 6.0:.3g}")
    if u0.h > math.sqrt(2.0 * t) / 2.0:
        raise GridError(f"grid spacing {u0.h} cannot resolve a kernel of variance 2t={2 * t}")
    k = _kernel_1d(t, u0.h)
    out = convolve1d(u0.values, k, axis=0, mode="constant")
    if u0.N == 2:
        out = convolve1d(out, k, axis=1, mode="constant")
    pad = u0.boundary_pad + KERNEL_RADII * math.sqrt(2.0 * t)
    return GridDensity(u0.N, u0.L, u0.h, out, boundary_pad=pad)


@dataclass
class VirtualTimeEstimate:
    """tau = -1 / (2 min eig) of the scanned log-Hessian (infinity if convex)."""

    tau: float
    min_eigenvalue: float
    argmin_node: tuple[int, ...]
    boundary_margin: float


def _interior_mask(u: GridDensity, margin: int = 3) -> np.ndarray:
    # erode so every node in the FD stencil clears the floor too
    above = u.values > VALUE_FLOOR * u.peak
    mask = binary_erosion(above, structure=np.ones((3,) * u.N, dtype=bool), border_value=0)
    K = u.values.shape[0]
    margin = max(margin, int(math.ceil(u.boundary_pad / u.h)))
    idx = np.arange(K)
    edge = (idx < margin) | (idx >= K - margin)
    if u.N == 1:
        mask[edge] = False
    else:
        mask[edge, :] = False
        mask[:, edge] = False
    return mask


def _log_hessian_min_eig(u: GridDensity) -> np.ndarray:
    """Per-node smallest eigenvalue of the FD Hessian of log u (NaN off-mask)."""
    f = np.where(u.values > 0, np.log(np.where(u.values > 0, u.values, 1.0)), -np.inf)
    h2 = u.h * u.h
    out = np.full(u.values.shape, np.nan)
    with np.errstate(invalid="ignore"):
        if u.N == 1:
            out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h2
        else:
            fxx = (f[2:, 1:-1] - 2 * f[1:-1, 1:-1] + f[:-2, 1:-1]) / h2
            fyy = (f[1:-1, 2:] - 2 * f[1:-1, 1:-1] + f[1:-1, :-2]) / h2
            fxy = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4.0 * h2)
            tr_half = 0.5 * (fxx + fyy)
            disc = np.sqrt((0.5 * (fxx - fyy)) ** 2 + fxy**2)
            out[1:-1, 1:-1] = tr_half - disc
    return out


def estimate_virtual_time(u: GridDensity) -> VirtualTimeEstimate:
    """Largest tau with 2 tau grad^2 log u + g >= 0, from an FD eigenvalue scan.

    Nodes below the value floor or within three spacings of the boundary are
    skipped; ``boundary_margin`` reports how far the minimizer sits from the
    grid edge so suspicious argmins near the floor stay visible.
    """
    mask = _interior_mask(u)
    if not mask.any():
        raise GridError("no interior node above the value floor")
    eigs = _log_hessian_min_eig(u)
    eigs = np.where(mask, eigs, np.nan)
    flat = np.nanargmin(eigs)
    idx = np.unravel_index(flat, eigs.shape)
    lam = float(eigs[idx])
    tau = math.inf if lam >= 0 else -1.0 / (2.0 * lam)
    K = u.values.shape[0]
    margin_steps = min(min(i, K - 1 - i) for i in idx)
    return VirtualTimeEstimate(
        tau=tau,
        min_eigenvalue=lam,
        argmin_node=tuple(int(i) for i in idx),
        boundary_margin=margin_steps * u.h,
    )


def check_harnack(u0: GridDensity, t: float) -> float:
    """min over interior nodes of (smallest eig of grad^2 log U(t)) + 1/(2t).

    Nonnegative, up to discretization error, for any mass-one initial data.
    """
    U = heat_at(u0, t)
    est = estimate_virtual_time(U)
    return est.min_eigenvalue + 1.0 / (2.0 * t)


def check_meanvalue_bound(u: GridDensity, T: float, sample_points) -> float:
    """min over samples of C0 T^(-N/2) int_{B_sqrt(T)(x0)} u - u(x0).

    C0 = omega_N^(-1) exp(1/(4(N+2))).  Every ball must sit inside the grid;
    the bound also enforces u(x0) <= C0 T^(-N/2).
    """
    if T <= 0:
        raise GridError(f"need T > 0, got {T!r}")
    from .functionals import unit_ball_volume

    c0 = math.exp(1.0 / (4.0 * (u.N + 2))) / unit_ball_volume(u.N)
    rad = math.sqrt(T)
    x = u.axis
    margin = math.inf
    for pt in sample_points:
        p = np.atleast_1d(np.asarray(pt, dtype=float))
        if np.any(np.abs(p) + rad > u.L):
            raise GridError(f"ball of radius sqrt(T)={rad:.3g} around {p.tolist()} leaves the grid")
        if u.N == 1:
            sel = np.abs(x - p[0]) <= rad
            ball = float(u.values[sel].sum()) * u.h
            at = float(u.values[int(round((p[0] + u.L) / u.h))])
        else:
            X, Y = np.meshgrid(x, x, indexing="ij")
            sel = (X - p[0]) ** 2 + (Y - p[1]) ** 2 <= rad * rad
            ball = float(u.values[sel].sum()) * u.h**2
            i = int(round((p[0] + u.L) / u.h))
            j = int(round((p[1] + u.L) / u.h))
            at = float(u.values[i, j])
        bound = c0 * T ** (-u.N / 2.0)
        margin = min(margin, bound * ball - at, bound - at)
    return margin


def check_tau_growth(u0: GridDensity, tau0: float, times) -> list[float]:
    """Per-time margins estimate_virtual_time(heat_at(u0, t)).tau - (tau0 + t).

    Nonnegative (up to estimator tolerance) when tau0 certifies the virtual
    time of the initial data; zero for Gaussian initial data.
    """
    if tau0 <= 0:
        raise GridError(f"need tau0 > 0, got {tau0!r}")
    margins = []
    for t in times:
        est = estimate_virtual_time(heat_at(u0, t))
        margins.append(est.tau - (tau0 + t))
    return margins


def gaussian_distance(u: GridDensity, t: float, T0: float, x0) -> tuple[float, float]:
    """(L1, t^(N/2) sup) distances from u to the Gaussian H(t - T0, ., x0)."""
    if t <= T0:
        raise GridError(f"need t > T0, got t={t!r}, T0={T0!r}")
    ref = gaussian_density(u.N, t - T0, u.L, u.h, x0)
    diff = np.abs(u.values - ref.values)
    l1 = float(diff.sum() * u.h**u.N)
    scaled_sup = float(t ** (u.N / 2.0) * diff.max())
    return l1, scaled_sup


def grid_mean(u: GridDensity) -> np.ndarray:
    """Discrete mean of the density."""
    x = u.axis
    if u.N == 1:
        return np.array([float((x * u.values).sum() * u.h / u.mass)])
    X, Y = np.meshgrid(x, x, indexing="ij")
    w = u.values * u.h**2 / u.mass
    return np.array([float((X * w).sum()), float((Y * w).sum())])


def grid_second_moment(u: GridDensity) -> float:
    """Centered second moment; the matched Gaussian time is m2 / (2N)."""
    c = grid_mean(u)
    x = u.axis
    if u.N == 1:
        r2 = (x - c[0]) ** 2
    else:
        X, Y = np.meshgrid(x, x, indexing="ij")
        r2 = (X - c[0]) ** 2 + (Y - c[1]) ** 2
    return float((r2 * u.values).sum() * u.h**u.N / u.mass)
