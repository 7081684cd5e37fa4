"""Compiled O(N^2) pair sums shared by the kernel, treecode and diagnostics."""

from __future__ import annotations

import os

import numba
import numpy as np
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"


def configure_threads() -> int:
    """Apply ``BRLAB_THREADS`` (0 or unset = numba default)."""
    raw = os.environ.get("BRLAB_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return numba.get_num_threads()


@njit(parallel=True, cache=True)
def cot_self_sum(e, a, delta2, out, hits):
    """out_i = sum_{j != i} cot(w/2) D / (D + delta2), w = z_i - z_j, D = cosh y - cos x.

    Works on ``e = exp(i z)`` and ``a = |e|``: cot(w/2) = i (e_i + e_j) / (e_i - e_j)
    and D = |e_i - e_j|^2 / (2 a_i a_j), so the pair loop needs no transcendentals.
    ``hits[i]`` counts coincident pairs (D = 0 with delta2 = 0).
    """
    n = e.shape[0]
    for i in prange(n):
        er = e[i].real
        ei = e[i].imag
        ai = a[i]
        acc_r = 0.0
        acc_i = 0.0
        bad = 0
        for j in range(n):
            if j == i:
                continue
            dr = er - e[j].real
            di = ei - e[j].imag
            sr = er + e[j].real
            si = ei + e[j].imag
            den = dr * dr + di * di + 2.0 * ai * a[j] * delta2
            if den == 0.0:
                bad += 1
                continue
            # i * (s * conj(d))
            pr = sr * dr + si * di
            pi_ = si * dr - sr * di
            acc_r -= pi_ / den
            acc_i += pr / den
        out[i] = acc_r + 1j * acc_i
        hits[i] = bad


@njit(parallel=True, cache=True)
def cauchy_self_sum(z, q, delta2, out, hits):
    """out_i = sum_{j != i} q_j conj(w) / (|w|^2 + delta2), w = z_i - z_j (= q_j / w for delta2 = 0)."""
    n = z.shape[0]
    for i in prange(n):
        acc = 0.0 + 0.0j
        bad = 0
        zi = z[i]
        for j in range(n):
            if j == i:
                continue
            w = zi - z[j]
            d = w.real * w.real + w.imag * w.imag + delta2
            if d == 0.0:
                bad += 1
                continue
            acc += q[j] * (w.real - 1j * w.imag) / d
        out[i] = acc
        hits[i] = bad


@njit(parallel=True, cache=True)
def cauchy_self_sum_unit(z, delta2, out, hits):
    """``cauchy_self_sum`` with unit weights."""
    n = z.shape[0]
    for i in prange(n):
        acc_r = 0.0
        acc_i = 0.0
        bad = 0
        xr = z[i].real
        xi = z[i].imag
        for j in range(n):
            if j == i:
                continue
            wr = xr - z[j].real
            wi = xi - z[j].imag
            d = wr * wr + wi * wi + delta2
            if d == 0.0:
                bad += 1
                continue
            acc_r += wr / d
            acc_i -= wi / d
        out[i] = acc_r + 1j * acc_i
        hits[i] = bad


@njit(parallel=True, cache=True)
def cot_target_sum(ew, aw, e, a, delta2, out):
    """Off-sheet analogue of ``cot_self_sum`` for targets ``ew = exp(i w)``."""
    m = ew.shape[0]
    n = e.shape[0]
    for i in prange(m):
        er = ew[i].real
        ei = ew[i].imag
        ai = aw[i]
        acc_r = 0.0
        acc_i = 0.0
        for j in range(n):
            dr = er - e[j].real
            di = ei - e[j].imag
            sr = er + e[j].real
            si = ei + e[j].imag
            den = dr * dr + di * di + 2.0 * ai * a[j] * delta2
            pr = sr * dr + si * di
            pi_ = si * dr - sr * di
            acc_r -= pi_ / den
            acc_i += pr / den
        out[i] = acc_r + 1j * acc_i


@njit(parallel=True, cache=True)
def cauchy_target_sum(w, z, delta2, out):
    m = w.shape[0]
    n = z.shape[0]
    for i in prange(m):
        acc = 0.0 + 0.0j
        for j in range(n):
            d = w[i] - z[j]
            den = d.real * d.real + d.imag * d.imag + delta2
            acc += (d.real - 1j * d.imag) / den
        out[i] = acc


def self_sum_cot(z: np.ndarray, delta: float) -> tuple[np.ndarray, int]:
    e = np.exp(1j * np.ascontiguousarray(z, dtype=np.complex128))
    out = np.empty_like(e)
    hits = np.zeros(e.shape[0], dtype=np.int64)
    cot_self_sum(e, np.abs(e), float(delta) ** 2, out, hits)
    return out, int(hits.sum())


def target_sum_cot(w: np.ndarray, z: np.ndarray, delta: float) -> np.ndarray:
    ew = np.exp(1j * np.ascontiguousarray(w, dtype=np.complex128))
    e = np.exp(1j * np.ascontiguousarray(z, dtype=np.complex128))
    out = np.empty_like(ew)
    cot_target_sum(ew, np.abs(ew), e, np.abs(e), float(delta) ** 2, out)
    return out


def self_sum_cauchy(z: np.ndarray, q: np.ndarray | None, delta: float) -> tuple[np.ndarray, int]:
    z = np.ascontiguousarray(z, dtype=np.complex128)
    out = np.empty_like(z)
    hits = np.zeros(z.shape[0], dtype=np.int64)
    if q is None:
        cauchy_self_sum_unit(z, float(delta) ** 2, out, hits)
    else:
        cauchy_self_sum(z, np.ascontiguousarray(q, dtype=np.complex128), float(delta) ** 2, out, hits)
    return out, int(hits.sum())


configure_threads()
