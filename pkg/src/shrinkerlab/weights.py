"""Closed-form weight families, Gaussian kernels, and exact constants.

Three families of positive densities on R^N are evaluated here:

  conformal weights   W(M, rho; x)   = rho^M / (1 + rho^2 |x|^2 / 4)^M
  modified weights    What(n, m, rho; x)
                      = (4 pi rho)^(-n/2) (1 + |x|^2 / (4 (n+m) rho))^(-(n+m))
  Gaussian kernels    G(n, t; x)     = (4 pi t)^(-n/2) exp(-|x|^2 / (4 t))

together with the combinatorial constants that couple their integrals over
products with Euclidean factors:

  C(M, m)    = (4 pi)^m (M+m-1)! / (M+2m-1)!
  Chat(n, m) = (4 pi / (n+m))^(n/2) |S^(n+2m)|^(-1) C(n, m)
  alpha(n, m, N) = (4 pi)^((n-N)/2) Chat(N, n-N+m)

All constants are evaluated in the log domain once the arguments are large
enough to overflow a double; small arguments use exact integer factorials so
that identities such as Chat(2, 0) = 1/2 hold bit-exactly.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "sphere_area",
    "log_sphere_area",
    "c_const",
    "c_hat",
    "alpha_mass",
    "weight_eval",
    "what_eval",
    "gaussian_eval",
    "log_hessian_weight",
    "virtual_time_closed",
    "sphere_entropy_exact",
    "lattice_bound",
]

# Above this exponent / factorial size the direct formulas are evaluated in
# logs; below, exact integer arithmetic keeps small constants bit-exact.
_LOG_DOMAIN_CUTOFF = 120


def log_sphere_area(k: int) -> float:
    """log |S^k|, via |S^k| = 2 pi^((k+1)/2) / Gamma((k+1)/2)."""
    if k < 0 or k != int(k):
        raise ValueError(f"sphere dimension must be a nonnegative integer, got {k!r}")
    return math.log(2.0) + 0.5 * (k + 1) * math.log(math.pi) - math.lgamma(0.5 * (k + 1))


def sphere_area(k: int) -> float:
    """Surface measure |S^k| of the unit k-sphere.

    |S^0| = 2 and |S^1| = 2 pi seed the upward recursion
    |S^(k+2)| = 2 pi / (k+1) |S^k|; large k switches to the log-domain
    gamma-function form.
    """
    if k < 0 or k != int(k):
        raise ValueError(f"sphere dimension must be a nonnegative integer, got {k!r}")
    k = int(k)
    if k > _LOG_DOMAIN_CUTOFF:
        return math.exp(log_sphere_area(k))
    area = 2.0 if k % 2 == 0 else 2.0 * math.pi
    for j in range(k % 2, k, 2):
        area *= 2.0 * math.pi / (j + 1)
    return area


def c_const(M: int, m: int, form: str = "factorial") -> float:
    """Iteration constant C(M, m) relating weighted integrals over Sigma x R^(2m).

    Two equivalent expressions are available:
      form="factorial":   (4 pi)^m (M+m-1)! / (M+2m-1)!
      form="sphere":      2^m |S^(M+2m)| |S^(M+2m-1)| / (|S^(M+m)| |S^(M+m-1)|)
    """
    if M < 1 or m < 0 or M != int(M) or m != int(m):
        raise ValueError(f"need integers M >= 1, m >= 0, got M={M!r}, m={m!r}")
    M, m = int(M), int(m)
    if form == "sphere":
        return math.exp(
            m * math.log(2.0)
            + log_sphere_area(M + 2 * m)
            + log_sphere_area(M + 2 * m - 1)
            - log_sphere_area(M + m)
            - log_sphere_area(M + m - 1)
        )
    if form != "factorial":
        raise ValueError(f"unknown form {form!r}")
    if M + 2 * m - 1 <= _LOG_DOMAIN_CUTOFF:
        ratio = math.factorial(M + m - 1) / math.factorial(M + 2 * m - 1)
        return (4.0 * math.pi) ** m * ratio
    return math.exp(m * math.log(4.0 * math.pi) + math.lgamma(M + m) - math.lgamma(M + 2 * m))


def c_hat(n: int, m: int) -> float:
    """Normalized iteration constant Chat(n, m), strictly increasing to 1 in m."""
    if n < 1 or m < 0 or n != int(n) or m != int(m):
        raise ValueError(f"need integers n >= 1, m >= 0, got n={n!r}, m={m!r}")
    n, m = int(n), int(m)
    if n + 2 * m <= _LOG_DOMAIN_CUTOFF:
        return (4.0 * math.pi / (n + m)) ** (n / 2.0) * c_const(n, m) / sphere_area(n + 2 * m)
    return math.exp(
        0.5 * n * (math.log(4.0 * math.pi) - math.log(n + m))
        - log_sphere_area(n + 2 * m)
        + m * math.log(4.0 * math.pi)
        + math.lgamma(n + m)
        - math.lgamma(n + 2 * m)
    )


def alpha_mass(n: int, m: int, N: int) -> float:
    """Normalizer making alpha * What(n, m, 1; .) a unit-mass density on R^N.

    Requires m >= N - n, otherwise the weight fails to be integrable over R^N
    (the decay exponent 2(n+m) must exceed N).
    """
    if n < 1 or N < 1 or n > N:
        raise ValueError(f"need 1 <= n <= N, got n={n!r}, N={N!r}")
    if m < N - n:
        raise ValueError(
            f"modified weight with n={n}, m={m} is not integrable over R^{N}; need m >= N - n = {N - n}"
        )
    return (4.0 * math.pi) ** (0.5 * (n - N)) * c_hat(N, n - N + m)


def _sqdist(x, x0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if x.ndim == 0:
        return np.asarray((x - x0) ** 2)
    return np.sum((x - x0) ** 2, axis=-1)


def weight_eval(M: float, rho: float, x0, x) -> np.ndarray:
    """Conformal weight rho^M (1 + rho^2 |x - x0|^2 / 4)^(-M)."""
    if M <= 0 or rho <= 0:
        raise ValueError(f"need M > 0 and rho > 0, got M={M!r}, rho={rho!r}")
    r2 = _sqdist(x, x0)
    return np.exp(M * (math.log(rho) - np.log1p(0.25 * rho * rho * r2)))


def what_eval(n: int, m: float, rho: float, x0, x) -> np.ndarray:
    """Modified weight (4 pi rho)^(-n/2) (1 + |x-x0|^2 / (4(n+m)rho))^(-(n+m)).

    Evaluated through log1p so that the m -> infinity Gaussian limit is
    reached without cancellation.
    """
    if n < 1 or m < 0 or rho <= 0:
        raise ValueError(f"need n >= 1, m >= 0, rho > 0, got n={n!r}, m={m!r}, rho={rho!r}")
    r2 = _sqdist(x, x0)
    mm = n + m
    return np.exp(-0.5 * n * math.log(4.0 * math.pi * rho) - mm * np.log1p(r2 / (4.0 * mm * rho)))


def gaussian_eval(n: float, t: float, x0, x) -> np.ndarray:
    """Gaussian kernel (4 pi t)^(-n/2) exp(-|x - x0|^2 / (4 t)).

    The dimension exponent n may differ from the ambient dimension of x;
    the kernel has unit mass over R^N exactly when n = N.
    """
    if t <= 0:
        raise ValueError(f"need t > 0, got {t!r}")
    r2 = _sqdist(x, x0)
    return np.exp(-0.5 * n * math.log(4.0 * math.pi * t) - r2 / (4.0 * t))


def log_hessian_weight(M: float, rho: float, x) -> np.ndarray:
    """Closed-form Hessian of log W(M, rho; .) at x, as an N x N matrix.

    grad^2 log W = -(M rho^2 / 2) (1 + rho^2|x|^2/4)^(-1) I
                   + (M rho^4 / 4) (1 + rho^2|x|^2/4)^(-2) x x^T

    Its smallest eigenvalue is >= -M rho^2 / 2 everywhere, with equality
    exactly at x = 0.
    """
    if M <= 0 or rho <= 0:
        raise ValueError(f"need M > 0 and rho > 0, got M={M!r}, rho={rho!r}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    denom = 1.0 + 0.25 * rho * rho * float(x @ x)
    dim = x.shape[0]
    return (-0.5 * M * rho * rho / denom) * np.eye(dim) + (
        0.25 * M * rho**4 / denom**2
    ) * np.outer(x, x)


def virtual_time_closed(kind: str, *, M: float | None = None, rho: float) -> float:
    """Exact virtual time of a weight: 1/(M rho^2) for W, rho for What.

    ``kind`` is "W" (conformal family, needs M) or "What" (modified family,
    any stabilization index).
    """
    if rho <= 0:
        raise ValueError(f"need rho > 0, got {rho!r}")
    if kind == "W":
        if M is None or M <= 0:
            raise ValueError("kind='W' needs an exponent M > 0")
        return 1.0 / (M * rho * rho)
    if kind == "What":
        return float(rho)
    raise ValueError(f"unknown weight kind {kind!r}")


def sphere_entropy_exact(k: int) -> float:
    """Gaussian-density entropy of the round k-sphere: (2k/(4 pi e))^(k/2) |S^k|.

    Decreases in k toward the limit sqrt(2).
    """
    if k < 1 or k != int(k):
        raise ValueError(f"need an integer k >= 1, got {k!r}")
    k = int(k)
    if k <= _LOG_DOMAIN_CUTOFF:
        return (2.0 * k / (4.0 * math.pi * math.e)) ** (k / 2.0) * sphere_area(k)
    return math.exp(0.5 * k * (math.log(2.0 * k) - math.log(4.0 * math.pi * math.e)) + log_sphere_area(k))


def lattice_bound(x: float, y: float) -> float:
    """Conformal-volume lower bound pi y / (x^2 + y^2 - x + 1) for a torus.

    (x, y) parametrizes the conformal class of the lattice; the admissible
    fundamental domain is 0 <= x <= 1/2, y >= sqrt(1 - x^2).
    """
    if not (0.0 <= x <= 0.5):
        raise ValueError(f"lattice parameter x must lie in [0, 1/2], got {x!r}")
    if y < math.sqrt(max(1.0 - x * x, 0.0)) - 1e-12:
        raise ValueError(f"lattice parameter y={y!r} below the fundamental domain at x={x!r}")
    return math.pi * y / (x * x + y * y - x + 1.0)
