"""Scalar special functions backing the covariance formulas.

All functions accept scalars or numpy arrays and evaluate in 64-bit
arithmetic.  Accuracy is set so that downstream eigenvalue checks at 1e-10
are never limited by this layer.
"""

import numpy as np
from scipy import special as _sp

__all__ = ["gamma", "log_gamma", "bessel_k", "inv_normal_cdf"]


def _domain_check(cond, message):
    if not np.all(cond):
        raise ValueError(message)


def gamma(x):
    """Gamma function for positive real arguments."""
    x = np.asarray(x, dtype=float)
    _domain_check(x > 0, "gamma: requires x > 0")
    out = _sp.gamma(x)
    return float(out) if out.ndim == 0 else out


def log_gamma(x):
    """Natural log of the gamma function for positive real arguments."""
    x = np.asarray(x, dtype=float)
    _domain_check(x > 0, "log_gamma: requires x > 0")
    out = _sp.gammaln(x)
    return float(out) if out.ndim == 0 else out


def bessel_k(nu, x):
    """Modified Bessel function of the second kind K_nu(x) for real order.

    The symmetry K_{-nu} = K_nu is applied, so the sign of `nu` is
    irrelevant.  Saturates to 0 on exponent underflow for large x instead
    of raising; x <= 0 is a domain error.
    """
    nu = np.abs(np.asarray(nu, dtype=float))
    x = np.asarray(x, dtype=float)
    _domain_check(x > 0, "bessel_k: requires x > 0")
    # kve = exp(x) K_nu(x) stays representable far past where K_nu itself
    # underflows; the product underflows gracefully to 0.
    out = _sp.kve(nu, x) * np.exp(-x)
    return float(out) if out.ndim == 0 else out


def inv_normal_cdf(p):
    """Inverse of the standard normal CDF on the open interval (0, 1)."""
    p = np.asarray(p, dtype=float)
    _domain_check((p > 0) & (p < 1), "inv_normal_cdf: requires 0 < p < 1")
    out = _sp.ndtri(p)
    return float(out) if out.ndim == 0 else out
