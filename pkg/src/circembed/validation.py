"""Monte-Carlo validation of sampled fields against the target moments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embedding import GridSpec

__all__ = ["ValidationReport", "grid_points", "dense_covariance",
           "validate_samples"]


@dataclass
class ValidationReport:
    n_samples: int
    max_mean_error: float
    mean_tolerance: float
    max_cov_error: float
    cov_tolerance: float
    mean_ok: bool
    cov_ok: bool
    passed: bool
    message: str = ""

    def to_json(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "max_mean_error": self.max_mean_error,
            "mean_tolerance": self.mean_tolerance,
            "max_cov_error": self.max_cov_error,
            "cov_tolerance": self.cov_tolerance,
            "mean_ok": self.mean_ok,
            "cov_ok": self.cov_ok,
            "passed": self.passed,
            "message": self.message,
        }


def grid_points(grid: GridSpec) -> np.ndarray:
    """Physical grid points x_k = h0 k, lexicographic, shape (M, d)."""
    axis = grid.h0 * np.arange(grid.m0 + 1)
    grids = np.meshgrid(*([axis] * grid.d), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=-1)


def dense_covariance(kernel, grid: GridSpec, max_points: int = 4096) -> np.ndarray:
    """Target covariance matrix R[i, j] = rho(x_i - x_j), assembled densely."""
    pts = grid_points(grid)
    n = pts.shape[0]
    if n > max_points:
        raise MemoryError(f"dense_covariance: {n} points exceeds cap {max_points}")
    out = np.empty((n, n))
    for i in range(n):
        out[i] = kernel.rho(pts[i][None, :] - pts)
    return out


def validate_samples(values: np.ndarray, kernel, grid: GridSpec,
                     mean=0.0, min_samples: int = 1000) -> ValidationReport:
    """Compare empirical mean and covariance of sampled fields (rows of
    `values`) against the prescribed mean and covariance matrix.

    The covariance tolerance is the Monte-Carlo bound 7 (1 + max|R|)/sqrt(n);
    the mean tolerance is 4 sqrt(max R_ii / n).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("validate_samples: expected a (n_samples, M) array")
    n, M = values.shape
    if M != grid.n_points:
        raise ValueError(
            f"validate_samples: samples have {M} points, grid has "
            f"{grid.n_points}")
    if n < min_samples:
        raise ValueError(f"validate_samples: need at least {min_samples} "
                         f"samples, got {n}")
    R = dense_covariance(kernel, grid)
    mean = np.asarray(mean, dtype=float)
    mean_target = np.full(M, float(mean)) if mean.ndim == 0 else mean.reshape(M)

    emp_mean = values.mean(axis=0)
    centered = values - emp_mean
    emp_cov = centered.T @ centered / (n - 1)
    max_cov_err = float(np.abs(emp_cov - R).max())
    max_mean_err = float(np.abs(emp_mean - mean_target).max())

    if np.allclose(values.var(axis=0), 0.0):
        return ValidationReport(
            n_samples=n, max_mean_error=max_mean_err, mean_tolerance=0.0,
            max_cov_error=max_cov_err, cov_tolerance=0.0, mean_ok=False,
            cov_ok=False, passed=False,
            message="degenerate input: all samples have zero variance")

    cov_tol = float(7.0 * (1.0 + np.abs(R).max()) / math.sqrt(n))
    mean_tol = float(4.0 * math.sqrt(R.diagonal().max() / n))
    mean_ok = bool(max_mean_err <= mean_tol)
    cov_ok = bool(max_cov_err <= cov_tol)
    return ValidationReport(
        n_samples=n, max_mean_error=max_mean_err, mean_tolerance=mean_tol,
        max_cov_error=max_cov_err, cov_tolerance=cov_tol, mean_ok=mean_ok,
        cov_ok=cov_ok, passed=mean_ok and cov_ok)
