"""Shared dense-matrix oracles used across the test suite.

These deliberately avoid the package's FFT path: the extended matrix is
assembled entry by entry from the reflected covariance and handed to a
dense symmetric eigensolver, so agreement is a genuine two-route check.
"""

import numpy as np
import pytest

from circembed import Embedding, GridSpec, phi


def multi_indices(n_per_axis, d):
    axis = np.arange(n_per_axis)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=-1)


def dense_extended_matrix(kernel, embedding: Embedding) -> np.ndarray:
    """R_ext[k, k'] = rho_ext(h0 (k - k')), dense, lexicographic.

    The reflection phi(h0 j) = h0 min(j mod 2m, 2m - j mod 2m) is applied
    on the integer lags so entries are bit-identical to direct evaluation
    at the folded coordinates.
    """
    grid = embedding.grid
    idx = multi_indices(2 * embedding.m, grid.d)
    h0, two_m = grid.h0, 2 * embedding.m
    s = idx.shape[0]
    out = np.empty((s, s))
    for i in range(s):
        lag = np.abs(idx[i][None, :] - idx)
        folded = np.minimum(lag, two_m - lag)
        out[i] = kernel.rho(h0 * folded)
    return out


def dense_grid_matrix(kernel, grid: GridSpec) -> np.ndarray:
    """R[k, k'] = rho(h0 (k - k')) over the physical grid indices."""
    idx = multi_indices(grid.m0 + 1, grid.d)
    n = idx.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        out[i] = kernel.rho(grid.h0 * (idx[i][None, :] - idx))
    return out


def dense_orthogonal_factor(embedding: Embedding) -> np.ndarray:
    """Q_ext = Re(F) + Im(F) with F the unitary positive-exponent Fourier
    matrix, assembled densely in lexicographic layout."""
    grid = embedding.grid
    idx = multi_indices(2 * embedding.m, grid.d)
    s = idx.shape[0]
    phase = 2.0 * np.pi * (idx @ idx.T) / (2 * embedding.m)
    return (np.cos(phase) + np.sin(phase)) / np.sqrt(s)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
