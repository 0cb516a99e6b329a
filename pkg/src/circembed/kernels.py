"""Stationary covariance kernels and their spectral densities.

Provides the Matern family (including its Gaussian nu = inf limit) and a
hook for user-supplied stationary symbols.  Kernels are immutable values;
every evaluation is pure.

Conventions
-----------
A kernel is isotropic when rho(x) = kappa(||x||_2 / lam) for a radial
profile kappa with kappa(0) = sigma2.  Its spectral density uses the
ordinary-frequency Fourier transform

    rho_hat(xi) = integral rho(x) exp(-2 pi i xi . x) dx
                = lam^d kappa_hat_d(lam ||xi||_2),

so that positive definiteness of rho is equivalent to rho_hat > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import gammaln, kve

from .errors import CapabilityError, QuadratureError

__all__ = [
    "MaternKernel",
    "CustomStationaryKernel",
    "gaussian_kernel",
    "spectral_tail_integral",
    "covariance_tail_integral",
]

# Order threshold above which the uniform large-order expansion of K_nu is
# used instead of scipy's kve (which overflows for large order at small
# argument).  At nu = 128 the truncated expansion is accurate to ~1e-10.
_NU_UNIFORM = 128.0


def _log_bessel_k_uniform(nu, z):
    """log K_nu(z) by the uniform large-order asymptotic expansion.

    Valid for nu >= _NU_UNIFORM, any z > 0.  Four series terms give
    relative error O(nu^-4).
    """
    w = z / nu
    sq = np.sqrt(1.0 + w * w)
    eta = sq + np.log(w / (1.0 + sq))
    t = 1.0 / sq
    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - t2 * (462.0 - 385.0 * t2)) / 1152.0
    u3 = (t * t2 * (30375.0 - t2 * (369603.0 - t2 * (765765.0 - 425425.0 * t2)))
          / 414720.0)
    series = 1.0 - u1 / nu + u2 / nu**2 - u3 / nu**3
    return 0.5 * np.log(np.pi / (2.0 * nu)) - nu * eta - 0.25 * np.log1p(w * w) \
        + np.log(series)


def _log_bessel_k(nu, z):
    """log K_nu(z) for scalar order nu >= 0.5 and array z > 0."""
    z = np.asarray(z, dtype=float)
    if nu >= _NU_UNIFORM:
        return _log_bessel_k_uniform(nu, z)
    out = np.empty_like(z)
    scaled = kve(nu, z)
    ok = np.isfinite(scaled)
    out[ok] = np.log(scaled[ok]) - z[ok]
    if not ok.all():
        # kve overflowed: only happens for small z at moderately large
        # order, where the leading small-argument form is accurate.
        zb = z[~ok]
        corr = zb * zb / (4.0 * (1.0 - nu)) if nu != 1.0 else 0.0
        out[~ok] = (math.log(0.5) + gammaln(nu) + nu * (math.log(2.0) - np.log(zb))
                    + np.log1p(corr))
    return out


def _gammaln_ratio(nu, a):
    """gammaln(nu + a) - gammaln(nu), stable also for very large nu."""
    if nu < 1e8:
        return gammaln(nu + a) - gammaln(nu)
    return a * math.log(nu) + a * (a - 1.0) / (2.0 * nu)


@dataclass(frozen=True)
class MaternKernel:
    """Matern covariance with variance sigma2, correlation length lam,
    smoothness nu (math.inf selects the Gaussian limit) and dimension d.

    The analyzed smoothness range is nu >= 1/2; values in (0, 1/2) are
    accepted only with allow_small_nu=True and carry no guarantees from
    the bound evaluators.
    """

    sigma2: float
    lam: float
    nu: float
    d: int
    allow_small_nu: bool = False

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("MaternKernel: sigma2 must be positive")
        if not self.lam > 0:
            raise ValueError("MaternKernel: lam must be positive")
        if self.d not in (1, 2, 3):
            raise ValueError("MaternKernel: d must be 1, 2 or 3")
        if not (self.nu > 0):
            raise ValueError("MaternKernel: nu must be positive")
        if self.nu < 0.5 and not self.allow_small_nu:
            raise ValueError(
                "MaternKernel: nu < 1/2 is outside the analyzed range; "
                "pass allow_small_nu=True to accept it anyway")

    # -- capabilities -----------------------------------------------------

    @property
    def is_gaussian(self) -> bool:
        return math.isinf(self.nu)

    @property
    def is_isotropic(self) -> bool:
        return True

    @property
    def has_spectral_density(self) -> bool:
        return True

    # -- radial profile ---------------------------------------------------

    def kappa(self, r):
        """Radial profile kappa(r) with r the scaled lag ||x||_2 / lam."""
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if np.any(r < 0):
            raise ValueError("kappa: requires r >= 0")
        out = np.empty_like(r)
        if self.is_gaussian:
            out = self.sigma2 * np.exp(-0.5 * r * r)
        else:
            pos = r > 0
            out[~pos] = self.sigma2
            if pos.any():
                nu = self.nu
                z = math.sqrt(2.0 * nu) * r[pos]
                log_k = ((1.0 - nu) * math.log(2.0) - gammaln(nu)
                         + nu * np.log(z) + _log_bessel_k(nu, z))
                out[pos] = self.sigma2 * np.exp(log_k)
        return float(out[0]) if scalar else out

    def rho(self, x):
        """Covariance rho(x) at a lag x (shape (d,)) or lags (shape (n, d)).

        For d = 1 a bare scalar or 1-d array of lags is also accepted.
        """
        x = np.asarray(x, dtype=float)
        if self.d == 1 and (x.ndim == 0 or (x.ndim == 1 and x.shape[-1] != 1)):
            r = np.abs(x)
        else:
            if x.shape[-1] != self.d:
                raise ValueError(f"rho: expected lag(s) with last axis {self.d}")
            r = np.sqrt(np.sum(x * x, axis=-1))
        return self.kappa(r / self.lam)

    # -- spectral side ----------------------------------------------------

    def log_kappa_hat(self, r):
        """log of the d-dimensional radial spectral profile kappa_hat_d(r)."""
        r = np.asarray(r, dtype=float)
        d = self.d
        if self.is_gaussian:
            return (math.log(self.sigma2) + 0.5 * d * math.log(2.0 * math.pi)
                    - 2.0 * np.pi**2 * r * r)
        nu = self.nu
        two_pi_r = 2.0 * np.pi * r
        return (math.log(self.sigma2) + d * math.log(2.0)
                + 0.5 * d * math.log(math.pi)
                + _gammaln_ratio(nu, 0.5 * d)
                - 0.5 * d * math.log(2.0 * nu)
                - (nu + 0.5 * d) * np.log1p(two_pi_r * two_pi_r / (2.0 * nu)))

    def kappa_hat(self, r):
        """Radial spectral profile kappa_hat_d(r); strictly positive."""
        r = np.asarray(r, dtype=float)
        out = np.exp(self.log_kappa_hat(r))
        return float(out) if out.ndim == 0 else out

    def spectral_density(self, xi):
        """Spectral density rho_hat(xi) = lam^d kappa_hat_d(lam ||xi||_2)."""
        xi = np.asarray(xi, dtype=float)
        if self.d == 1 and (xi.ndim == 0 or (xi.ndim == 1 and xi.shape[-1] != 1)):
            r = np.abs(xi)
        else:
            if xi.shape[-1] != self.d:
                raise ValueError(f"spectral_density: expected last axis {self.d}")
            r = np.sqrt(np.sum(xi * xi, axis=-1))
        out = self.lam**self.d * self.kappa_hat(self.lam * r)
        return float(out) if np.ndim(out) == 0 else out

    def to_json(self) -> dict:
        return {
            "family": "matern",
            "sigma2": self.sigma2,
            "lambda": self.lam,
            "nu": "inf" if self.is_gaussian else self.nu,
            "d": self.d,
        }

    @staticmethod
    def from_json(obj: dict) -> "MaternKernel":
        nu = obj["nu"]
        nu = math.inf if nu in ("inf", None) else float(nu)
        return MaternKernel(sigma2=float(obj["sigma2"]), lam=float(obj["lambda"]),
                            nu=nu, d=int(obj["d"]), allow_small_nu=True)


def gaussian_kernel(sigma2: float, lam: float, d: int) -> MaternKernel:
    """Gaussian covariance sigma2 exp(-||x||^2 / (2 lam^2)) as the Matern
    nu = inf limit."""
    return MaternKernel(sigma2=sigma2, lam=lam, nu=math.inf, d=d)


@dataclass(frozen=True)
class CustomStationaryKernel:
    """User-supplied stationary symbol.

    `rho_fn` must accept an (n, d) array of lags and return n covariance
    values; `rho_hat_fn` (optional) does the same for frequencies.  The
    caller is responsible for rho being symmetric in each coordinate,
    which the embedding machinery relies on.
    """

    rho_fn: Callable[[np.ndarray], np.ndarray]
    d: int
    rho_hat_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def is_gaussian(self) -> bool:
        return False

    @property
    def is_isotropic(self) -> bool:
        return False

    @property
    def has_spectral_density(self) -> bool:
        return self.rho_hat_fn is not None

    def rho(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim <= 1
        pts = np.atleast_2d(x)
        if pts.shape[-1] != self.d:
            raise ValueError(f"rho: expected lag(s) with last axis {self.d}")
        out = np.asarray(self.rho_fn(pts), dtype=float).reshape(pts.shape[0])
        return float(out[0]) if scalar else out

    def spectral_density(self, xi):
        if self.rho_hat_fn is None:
            raise CapabilityError(
                "kernel capability missing: no spectral density supplied")
        xi = np.asarray(xi, dtype=float)
        scalar = xi.ndim <= 1
        pts = np.atleast_2d(xi)
        if pts.shape[-1] != self.d:
            raise ValueError(f"spectral_density: expected last axis {self.d}")
        out = np.asarray(self.rho_hat_fn(pts), dtype=float).reshape(pts.shape[0])
        return float(out[0]) if scalar else out

    def to_json(self) -> dict:
        return {"family": "custom", "d": self.d,
                "has_spectral_density": self.has_spectral_density}


# -- radial tail integrals ----------------------------------------------

_QUAD_REL_TOL = 1e-8


def _require_isotropic(kernel):
    if not getattr(kernel, "is_isotropic", False):
        raise CapabilityError("operation requires an isotropic kernel")


def _checked_quad(f, lower, rel_tol=_QUAD_REL_TOL):
    val, err = integrate.quad(f, lower, np.inf, epsabs=0.0, epsrel=1e-11,
                              limit=400)
    if not np.isfinite(val) or (val != 0.0 and err > rel_tol * abs(val)):
        raise QuadratureError(
            f"tail quadrature did not converge: value={val!r}, "
            f"error estimate={err!r}")
    return val


def spectral_tail_integral(kernel, lower: float) -> float:
    """integral_lower^inf r^(d-1) kappa_hat_d(r) dr for an isotropic kernel.

    Computed by adaptive quadrature on the transformed half line to
    relative accuracy 1e-8; raises QuadratureError when the estimate does
    not reach that.
    """
    _require_isotropic(kernel)
    if lower < 0:
        raise ValueError("spectral_tail_integral: requires lower >= 0")
    d = kernel.d

    def f(r):
        return r**(d - 1) * float(np.exp(kernel.log_kappa_hat(r)))

    return _checked_quad(f, lower)


def covariance_tail_integral(kernel, lower: float) -> float:
    """integral_lower^inf r^(d-1) |kappa(r)| dr for an isotropic kernel.

    kappa >= 0 for the Matern family, so the absolute value is free.
    """
    _require_isotropic(kernel)
    if lower < 0:
        raise ValueError("covariance_tail_integral: requires lower >= 0")
    d = kernel.d

    def f(r):
        return r**(d - 1) * abs(float(kernel.kappa(r)))

    return _checked_quad(f, lower)
