"""Exact field sampling from a nonnegative circulant spectrum.

One sample costs a single complex d-dimensional FFT: scale an s-vector of
standard normals by the eigenvalue square roots, apply the unitary
positive-exponent DFT, add real and imaginary parts (the real symmetric
orthogonal factor of the circulant), and read off the physical grid
entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .embedding import Spectrum
from .specialfn import inv_normal_cdf

__all__ = [
    "FieldSample",
    "draw_normal",
    "qmc_map",
    "importance_ordering",
    "sample",
    "batch_sample",
]


@dataclass
class FieldSample:
    """Field values at the (m0+1)^d physical grid points x_k = h0 k,
    lexicographic, plus provenance metadata."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)


def draw_normal(s: int, seed: int, stream: int = 0) -> np.ndarray:
    """s i.i.d. standard normals from a counter-based generator.

    Distinct (seed, stream) pairs give independent streams; the output is
    deterministic for a fixed pair.
    """
    if s < 1:
        raise ValueError("draw_normal: s must be >= 1")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.standard_normal(s)


def qmc_map(point: np.ndarray, ordering: np.ndarray) -> np.ndarray:
    """Map one QMC point in (0,1)^s to normal inputs by the inverse CDF,
    routing coordinate j to position ordering[j] (most carefully
    stratified coordinate first -> largest-eigenvalue direction)."""
    point = np.asarray(point, dtype=float)
    ordering = np.asarray(ordering)
    if point.shape != ordering.shape:
        raise ValueError("qmc_map: point and ordering must have equal length")
    y = np.empty_like(point)
    y[ordering] = inv_normal_cdf(point)
    return y


def importance_ordering(spec: Spectrum) -> np.ndarray:
    """Flat (lexicographic) indices sorted by eigenvalue, nonincreasing;
    ties broken by lexicographic multi-index."""
    flat = spec.values_flat
    return np.argsort(-flat, kind="stable")


def _transform(u: np.ndarray) -> np.ndarray:
    """Apply the real symmetric orthogonal circulant factor: the unitary
    positive-exponent DFT followed by Re + Im."""
    w = np.fft.ifftn(u, norm="ortho")
    return w.real + w.imag


def _resolve_mean(mean, n_points: int) -> np.ndarray:
    if mean is None:
        return np.zeros(n_points)
    mean = np.asarray(mean, dtype=float)
    if mean.ndim == 0:
        return np.full(n_points, float(mean))
    flat = mean.reshape(-1)
    if flat.size != n_points:
        raise ValueError(
            f"mean has {flat.size} entries, grid has {n_points} points")
    return flat


def sample(spec: Spectrum, mean, y: np.ndarray,
           lognormal: bool = False) -> FieldSample:
    """One exact field sample driven by the normal input vector y.

    Requires a nonnegative spectrum (clamped by the minimal-extension
    search); `mean` is a constant or an array over the physical grid.
    """
    if spec.values.min() < 0.0:
        raise ValueError("sample: spectrum has negative entries beyond the "
                         "clamp; not a valid factorization")
    emb = spec.embedding
    y = np.asarray(y, dtype=float)
    if y.size != emb.s:
        raise ValueError(f"sample: expected {emb.s} normal inputs, got {y.size}")
    u = np.sqrt(spec.values) * y.reshape(emb.shape)
    v = _transform(u)
    grid = emb.grid
    sub = v[(slice(0, grid.m0 + 1),) * grid.d].reshape(-1)
    out = sub + _resolve_mean(mean, grid.n_points)
    if lognormal:
        out = np.exp(out)
    return FieldSample(values=out, meta={"lognormal": bool(lognormal)})


def batch_sample(spec: Spectrum, mean, n: int, seed: int,
                 lognormal: bool = False, chunk: int = 256,
                 meta: Optional[dict] = None) -> list[FieldSample]:
    """n independent samples using streams 0..n-1 of the given seed.

    Sample i depends only on (seed, i); chunked batch FFTs change nothing
    about the per-sample content.
    """
    if n < 1:
        raise ValueError("batch_sample: n must be >= 1")
    values = batch_sample_values(spec, mean, n, seed, lognormal=lognormal,
                                 chunk=chunk)
    base = dict(meta or {})
    out = []
    for i in range(n):
        info = dict(base, seed=seed, stream=i, lognormal=bool(lognormal))
        out.append(FieldSample(values=values[i], meta=info))
    return out


def batch_sample_values(spec: Spectrum, mean, n: int, seed: int,
                        lognormal: bool = False, chunk: int = 256) -> np.ndarray:
    """Vectorized batch sampling; returns an (n, (m0+1)^d) array.

    Row i equals sample(spec, mean, draw_normal(s, seed, i)).values.
    """
    if spec.values.min() < 0.0:
        raise ValueError("batch_sample: spectrum has negative entries beyond "
                         "the clamp; not a valid factorization")
    emb = spec.embedding
    grid = emb.grid
    d = grid.d
    sqrt_vals = np.sqrt(spec.values)
    mean_flat = _resolve_mean(mean, grid.n_points)
    out = np.empty((n, grid.n_points))
    axes = tuple(range(1, d + 1))
    take = (slice(None),) + (slice(0, grid.m0 + 1),) * d
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        ys = np.stack([draw_normal(emb.s, seed, i).reshape(emb.shape)
                       for i in range(lo, hi)])
        w = np.fft.ifftn(sqrt_vals * ys, axes=axes, norm="ortho")
        v = w.real + w.imag
        out[lo:hi] = v[take].reshape(hi - lo, -1) + mean_flat
    if lognormal:
        np.exp(out, out=out)
    return out
