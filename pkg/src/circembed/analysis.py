"""Executable diagnostics for the embedding theory.

Contains the sufficient positive-definiteness criterion for isotropic
kernels, the extension-length bound evaluators for the Matern family and
its Gaussian limit (with empirically calibrated constants; the theory
proves their existence, not their values), the eigenvalues of the
continuous periodized covariance operator, the norm-ordered integer
lattice, eigenvalue-decay reports, the dimension-independence sum used by
QMC convergence theory, and an aliasing (sampling-theorem) identity check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .embedding import GridSpec, Spectrum
from .errors import CapabilityError, ConvergenceError
from .kernels import MaternKernel, covariance_tail_integral, spectral_tail_integral

__all__ = [
    "OrderedLattice",
    "DecayReport",
    "BoundConstants",
    "PdCriterionResult",
    "SamplingIdentityResult",
    "pd_criterion",
    "matern_ell_bound",
    "gaussian_ell_bound",
    "continuous_eigenvalue",
    "lattice_ordering",
    "decay_report",
    "qmc_criterion_sum",
    "sampling_theorem_check",
    "calibrate_constants",
]


@dataclass(frozen=True)
class OrderedLattice:
    """Integer lattice points k(1)=0, k(2), ... with nondecreasing
    Euclidean norm; ties broken lexicographically on the coordinates."""

    seq: np.ndarray  # shape (J, d), integer

    def __len__(self):
        return self.seq.shape[0]


@dataclass
class DecayReport:
    """Least-squares log-log fit of the normalized eigenvalue decay
    sqrt(Lambda_j / s) against the rank j over a fit window."""

    j_lo: int
    j_hi: int
    slope: float
    expected_beta: float
    rel_dev: float
    passed: bool
    degenerate: bool
    points: np.ndarray  # (j, sqrt(Lambda_j/s)) pairs over the window


@dataclass
class BoundConstants:
    """Constants for the extension-length bounds.  The theory only proves
    existence; values are user-supplied or calibrated from sweep data."""

    C1: Optional[float] = None
    C2: Optional[float] = None
    C3: Optional[float] = None
    C4: Optional[float] = None
    B: Optional[float] = None


@dataclass
class PdCriterionResult:
    lhs: float
    rhs: float
    satisfied: bool


def pd_criterion(kernel: MaternKernel, grid: GridSpec,
                 ell: float) -> PdCriterionResult:
    """Sufficient condition for the extended circulant to be positive
    definite, for an isotropic kernel with decreasing |kappa| and positive
    decreasing kappa_hat:

        int_{3 lam sqrt(d)/(2 h0)}^inf r^(d-1) kappa_hat_d(r) dr
          >  (3^d - 1) 3^(d-1) d^(d/2-1) / (2 (h0/lam)^d)
             * int_{(ell - h0)/lam}^inf r^(d-1) |kappa(r)| dr .

    Both sides are linear in sigma2, so the verdict is variance-free.
    """
    if not getattr(kernel, "is_isotropic", False):
        raise CapabilityError("pd_criterion requires an isotropic kernel")
    d, h0, lam = grid.d, grid.h0, kernel.lam
    if ell <= h0:
        raise ValueError("pd_criterion: requires ell > h0")
    lhs = spectral_tail_integral(kernel, 3.0 * lam * math.sqrt(d) / (2.0 * h0))
    coef = (3**d - 1) * 3 ** (d - 1) * d ** (0.5 * d - 1.0) / (2.0 * (h0 / lam) ** d)
    rhs = coef * covariance_tail_integral(kernel, (ell - h0) / lam)
    return PdCriterionResult(lhs=lhs, rhs=rhs, satisfied=bool(lhs > rhs))


def matern_ell_bound(nu: float, lam: float, h0: float,
                     consts: BoundConstants) -> float:
    """Extension length sufficient for positive definiteness in the Matern
    case:  lam * (C1 + C2 nu^(1/2) log(max(lam/h0, nu^(1/2)))).

    Hypotheses: 1/2 <= nu < inf, lam <= 1, h0/lam <= 1/e; violations are
    reported rather than silently ignored.  C2 >= 2 sqrt(2) is required.
    """
    if consts.C1 is None or consts.C2 is None:
        raise ValueError("matern_ell_bound: needs C1 and C2")
    if consts.C2 < 2.0 * math.sqrt(2.0):
        raise ValueError("matern_ell_bound: requires C2 >= 2 sqrt(2)")
    if not (0.5 <= nu < math.inf):
        raise ValueError("matern_ell_bound hypothesis violated: 1/2 <= nu < inf")
    if lam > 1.0:
        raise ValueError("matern_ell_bound hypothesis violated: lam <= 1")
    if h0 / lam > math.exp(-1.0):
        raise ValueError("matern_ell_bound hypothesis violated: h0/lam <= 1/e")
    return lam * (consts.C1 + consts.C2 * math.sqrt(nu)
                  * math.log(max(lam / h0, math.sqrt(nu))))


def gaussian_ell_bound(lam: float, h0: float, B: float) -> float:
    """Extension length sufficient for positive definiteness in the
    Gaussian (nu = inf) case:  1 + lam * max(sqrt(2) lam/h0, B)."""
    return 1.0 + lam * max(math.sqrt(2.0) * lam / h0, B)


def continuous_eigenvalue(kernel, ell: float, k, quad_n: int = 64,
                          rel_tol: float = 1e-8,
                          max_doublings: int = 16) -> float:
    """Eigenvalue of the continuous periodized covariance operator,

        lambda_k(ell) = int_{[-ell, ell]^d} rho(x) cos(2 pi xi_k . x) dx,
        xi_k = k / (2 ell),

    by the tensor rectangle rule with quad_n points per axis, doubled
    until two successive values agree to `rel_tol` relatively.
    """
    if quad_n < 2:
        raise ValueError("continuous_eigenvalue: quad_n must be >= 2")
    d = kernel.d
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.size != d:
        raise ValueError(f"continuous_eigenvalue: k must have {d} components")
    xi = k / (2.0 * ell)

    def rect(n: int) -> float:
        if n**d > 2**24:
            raise ConvergenceError(
                "continuous_eigenvalue: rectangle rule grid too large")
        axis = -ell + 2.0 * ell * np.arange(n) / n
        if d == 1:
            pts = axis[:, None]
        else:
            grids = np.meshgrid(*([axis] * d), indexing="ij")
            pts = np.stack([g.reshape(-1) for g in grids], axis=-1)
        vals = kernel.rho(pts) * np.cos(2.0 * np.pi * (pts @ xi))
        return float(vals.sum() * (2.0 * ell / n) ** d)

    prev = rect(quad_n)
    n = quad_n
    for _ in range(max_doublings):
        n *= 2
        cur = rect(n)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise ConvergenceError(
        f"continuous_eigenvalue: rectangle rule did not converge to "
        f"rel_tol={rel_tol} within {max_doublings} doublings")


def lattice_ordering(d: int, J: int) -> OrderedLattice:
    """First J integer lattice points ordered by Euclidean norm, ties
    broken lexicographically; the ordering for smaller J is a prefix of
    the ordering for larger J."""
    if J < 1:
        raise ValueError("lattice_ordering: J must be >= 1")
    if d not in (1, 2, 3):
        raise ValueError("lattice_ordering: d must be 1, 2 or 3")
    # radius guaranteeing at least J points: volume comparison with slack
    R = 1
    while (2 * (R / math.sqrt(d)) + 1) ** d < 2 * J + 2 * d:
        R += 1
    while True:
        axis = np.arange(-R, R + 1)
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        pts = np.stack([g.reshape(-1) for g in grids], axis=-1)
        norm2 = np.sum(pts * pts, axis=1)
        keep = norm2 <= R * R  # only full shells are safely ordered
        pts, norm2 = pts[keep], norm2[keep]
        if pts.shape[0] >= J:
            break
        R *= 2
    keys = tuple(pts[:, i] for i in reversed(range(d))) + (norm2,)
    order = np.lexsort(keys)
    return OrderedLattice(seq=pts[order[:J]])


def decay_report(spec: Spectrum, nu: float, d: int,
                 fit_range: Optional[tuple] = None,
                 rel_tol: float = 0.15) -> DecayReport:
    """Fit the decay rate of the nonincreasing sqrt(Lambda_j / s) sequence
    on a log-log scale and compare with the conjectured exponent
    -(1 + 2 nu / d) / 2.

    `fit_range` is an inclusive (j_lo, j_hi) rank window; the default is
    (s^0.1, s^0.6).  Zero eigenvalues inside the window (clamped or below
    the floating-point floor) are excluded from the fit.
    """
    flat = spec.values_flat
    s = flat.size
    if fit_range is None:
        fit_range = (s**0.1, s**0.6)
    j_lo = max(1, int(math.ceil(fit_range[0])))
    j_hi = min(s, int(math.floor(fit_range[1])))
    if not (1 <= j_lo < j_hi <= s):
        raise ValueError(f"decay_report: invalid fit range {fit_range}")
    vals = np.sort(np.sqrt(np.maximum(flat, 0.0) / s))[::-1]
    j = np.arange(1, s + 1)
    window = (j >= j_lo) & (j <= j_hi)
    points = np.column_stack([j[window], vals[window]])
    positive = window & (vals > 0)
    expected_beta = 0.5 * (1.0 + 2.0 * nu / d)
    x = np.log(j[positive])
    y = np.log(vals[positive])
    degenerate = bool(positive.sum() < 2 or np.ptp(y) == 0.0)
    if degenerate:
        slope = 0.0
    else:
        slope = float(np.polyfit(x, y, 1)[0])
    rel_dev = float(abs(slope - (-expected_beta)) / expected_beta)
    passed = bool((not degenerate) and rel_dev <= rel_tol)
    return DecayReport(j_lo=j_lo, j_hi=j_hi, slope=slope,
                       expected_beta=expected_beta, rel_dev=rel_dev,
                       passed=passed, degenerate=degenerate, points=points)


def qmc_criterion_sum(spec: Spectrum, p: float) -> float:
    """sum_k (Lambda_k / s)^(p/2) over the whole spectrum; the quantity
    whose boundedness in s underpins dimension-independent QMC rates."""
    if not (0.0 < p < 1.0):
        raise ValueError("qmc_criterion_sum: requires 0 < p < 1")
    flat = spec.values_flat
    if flat.min() < 0.0:
        raise ValueError("qmc_criterion_sum: spectrum must be nonnegative")
    s = flat.size
    return float(np.sum((flat / s) ** (0.5 * p)))


@dataclass
class SamplingIdentityResult:
    lhs: float
    rhs: float
    residual: float


def sampling_theorem_check(kernel, h: float, xi, k_trunc: int,
                           r_trunc: int,
                           target_residual: Optional[float] = None
                           ) -> SamplingIdentityResult:
    """Check the aliasing identity

        sum_k rho(h k) cos(2 pi h k . xi)  =  h^(-d) sum_r rho_hat(xi + r/h)

    with both lattice sums truncated at the given sup-norm radii.  When
    `target_residual` is given and the omitted covariance tail (estimated
    from the truncation shell) cannot meet it, a warning is emitted.
    """
    if not getattr(kernel, "has_spectral_density", False):
        raise CapabilityError(
            "kernel capability missing: identity check needs a spectral density")
    d = kernel.d
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.size != d:
        raise ValueError(f"sampling_theorem_check: xi must have {d} components")
    if (2 * k_trunc + 1) ** d > 5e7 or (2 * r_trunc + 1) ** d > 5e7:
        raise MemoryError("sampling_theorem_check: truncation box too large")

    axis = np.arange(-k_trunc, k_trunc + 1)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=-1).astype(float)
    rho_vals = kernel.rho(h * pts)
    lhs = float(np.sum(rho_vals * np.cos(2.0 * np.pi * h * (pts @ xi))))

    axis_r = np.arange(-r_trunc, r_trunc + 1)
    grids_r = np.meshgrid(*([axis_r] * d), indexing="ij")
    shifts = np.stack([g.reshape(-1) for g in grids_r], axis=-1).astype(float)
    rhs = float(np.sum(kernel.spectral_density(xi[None, :] + shifts / h)) / h**d)

    if target_residual is not None:
        shell = float(np.sum(np.abs(rho_vals[np.max(np.abs(pts), axis=1)
                                             == k_trunc])))
        if shell > 0.5 * target_residual:
            warnings.warn(
                f"sampling_theorem_check: covariance truncation shell "
                f"({shell:.3e}) suggests the target residual "
                f"{target_residual:.1e} is unreachable at k_trunc={k_trunc}",
                stacklevel=2)
    return SamplingIdentityResult(lhs=lhs, rhs=rhs, residual=abs(lhs - rhs))


def calibrate_constants(sweep_results: Sequence[tuple]) -> tuple:
    """Fit bound constants from sweep rows (d, nu, lam, h0, empirical_ell).

    Finite-nu rows calibrate (C1, C2) as the least upper envelope of
    ell/lam over the feature nu^(1/2) log(max(lam/h0, nu^(1/2))) (linear
    program: minimize total slack subject to domination, C1 >= 0 and
    C2 >= 2 sqrt(2)).  Rows with nu = inf calibrate B as the smallest
    value making 1 + lam max(sqrt(2) lam/h0, B) dominate.

    Returns (BoundConstants, stats) where stats reports per-family slack.
    """
    rows = list(sweep_results)
    if not rows:
        raise ValueError("calibrate_constants: empty input")
    finite = [(d, nu, lam, h0, ell) for (d, nu, lam, h0, ell) in rows
              if not math.isinf(nu)]
    gauss = [(d, nu, lam, h0, ell) for (d, nu, lam, h0, ell) in rows
             if math.isinf(nu)]
    consts = BoundConstants()
    stats: dict = {}

    if finite:
        if len(finite) < 4:
            raise ValueError("calibrate_constants: need at least 4 finite-nu "
                             "rows to fit C1, C2")
        x = np.array([math.sqrt(nu) * math.log(max(lam / h0, math.sqrt(nu)))
                      for (_, nu, lam, h0, _) in finite])
        y = np.array([ell / lam for (_, _, lam, _, ell) in finite])
        c2_min = 2.0 * math.sqrt(2.0)
        n = len(finite)
        # minimize sum of slacks (C1 + C2 x_i - y_i) over C1 >= 0, C2 >= c2_min
        res = optimize.linprog(c=[n, float(x.sum())],
                               A_ub=np.column_stack([-np.ones(n), -x]),
                               b_ub=-y,
                               bounds=[(0.0, None), (c2_min, None)],
                               method="highs")
        if not res.success:
            raise RuntimeError(
                f"calibrate_constants: envelope fit infeasible: {res.message}")
        consts.C1, consts.C2 = float(res.x[0]), float(res.x[1])
        slack = consts.C1 + consts.C2 * x - y
        stats["matern"] = {"n": n, "max_slack": float(slack.max()),
                           "mean_slack": float(slack.mean()),
                           "min_slack": float(slack.min())}

    if gauss:
        needed = [(ell - 1.0) / lam for (_, _, lam, h0, ell) in gauss
                  if math.sqrt(2.0) * lam / h0 < (ell - 1.0) / lam]
        consts.B = float(max(needed)) if needed else 0.0
        bounds = np.array([gaussian_ell_bound(lam, h0, consts.B)
                           for (_, _, lam, h0, _) in gauss])
        ells = np.array([ell for (*_, ell) in gauss])
        stats["gaussian"] = {"n": len(gauss),
                             "max_slack": float((bounds - ells).max()),
                             "mean_slack": float((bounds - ells).mean()),
                             "min_slack": float((bounds - ells).min())}
    return consts, stats
