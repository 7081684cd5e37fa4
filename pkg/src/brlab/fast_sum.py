"""Barnes-Hut treecode for the on-sheet vortex sums.

Sources are sorted into a quadtree.  Each cell stores the moments
``a_n = sum_j (z_j - c)^n`` about its centroid ``c`` and its radius
``R = max |z_j - c|``.  A target ``w`` uses the cell's expansion when
``R < theta * r``; otherwise the cell is opened and leaves are summed directly.

* closed sheets, kernel ``1/u``:  ``sum_j 1/(u - d_j) = sum_n a_n / u^(n+1)``
  with ``u = w - c`` and ``d_j = z_j - c``;
* periodic sheets, kernel ``cot(u/2)``:  ``sum_j cot((u - d_j)/2) =
  sum_n (-1)^n a_n T_n(u)`` where ``T_n`` are the Taylor coefficients of
  ``cot((u + s)/2)``, generated from ``T' = -(1 + T^2)/2``.  The expansion sums
  all periodic images at once; ``r`` is the distance from ``u`` to the nearest
  lattice point ``2*pi*n``.

Blob kernels are used only inside opened leaves.  Far cells use the point
kernel, so with ``delta > 0`` a cell is also required to sit at least
``delta * theta^(-(p+1)/2)`` away, where the blob and point kernels differ by
about ``theta^(p+1)`` relatively; the remaining discrepancy enters the
reported bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from . import _numba  # noqa: F401  (threading layer configuration)
from .kernel import POINT, KernelKind, KernelSpec, _raise_coincident, _scaled, diagonal_correction
from .sheet_core import SheetState, Topology

_MAX_DEPTH = 60
_STACK = 4 * _MAX_DEPTH + 8


@dataclass(frozen=True)
class TreecodeParams:
    theta: float = 0.5
    max_leaf: int = 16
    expansion_order: int = 8

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if int(self.max_leaf) != self.max_leaf or self.max_leaf < 1:
            raise ValueError("max_leaf must be an integer >= 1")
        if int(self.expansion_order) != self.expansion_order or self.expansion_order < 0:
            raise ValueError("expansion_order must be an integer >= 0")

    @property
    def nominal_error(self) -> float:
        """Geometric-series estimate ``theta^(p+1) / (1 - theta)`` per accepted cell."""
        return self.theta ** (self.expansion_order + 1) / (1.0 - self.theta)


@dataclass(frozen=True)
class TreecodeResult:
    velocity: np.ndarray
    error_bound: float  # certified bound on max|tree - direct| / max|direct|
    abs_error_bound: float  # same, in velocity units
    nominal_error: float
    n_cells: int
    direct_pairs: int
    expansions: int


# --------------------------------------------------------------------------
# tree construction


@njit(cache=True)
def _build(x, y, max_leaf, cap):
    n = x.shape[0]
    perm = np.arange(n)
    start = np.empty(cap, np.int64)
    count = np.empty(cap, np.int64)
    child = np.full(cap, -1, np.int64)
    nchild = np.zeros(cap, np.int64)
    bx = np.empty(cap)
    by = np.empty(cap)
    bh = np.empty(cap)
    depth = np.empty(cap, np.int64)
    xmin, xmax = x.min(), x.max()
    ymin, ymax = y.min(), y.max()
    half = 0.5 * max(xmax - xmin, ymax - ymin)
    half = half * (1.0 + 1e-12) + 1e-300
    start[0] = 0
    count[0] = n
    bx[0] = 0.5 * (xmin + xmax)
    by[0] = 0.5 * (ymin + ymax)
    bh[0] = half
    depth[0] = 0
    n_nodes = 1
    tmp = np.empty(n, np.int64)
    node = 0
    while node < n_nodes:
        c = count[node]
        if c > max_leaf and depth[node] < _MAX_DEPTH:
            s = start[node]
            qc = np.zeros(4, np.int64)
            for m in range(s, s + c):
                j = perm[m]
                q = (1 if x[j] >= bx[node] else 0) + (2 if y[j] >= by[node] else 0)
                qc[q] += 1
            off = np.zeros(4, np.int64)
            for q in range(1, 4):
                off[q] = off[q - 1] + qc[q - 1]
            pos = off.copy()
            for m in range(s, s + c):
                j = perm[m]
                q = (1 if x[j] >= bx[node] else 0) + (2 if y[j] >= by[node] else 0)
                tmp[pos[q]] = j
                pos[q] += 1
            for m in range(c):
                perm[s + m] = tmp[m]
            nonempty = 0
            for q in range(4):
                if qc[q] > 0:
                    nonempty += 1
            if n_nodes + nonempty > cap:
                return perm, start, count, child, nchild, bx, by, bh, -1
            child[node] = n_nodes
            nchild[node] = nonempty
            h2 = 0.5 * bh[node]
            for q in range(4):
                if qc[q] == 0:
                    continue
                k = n_nodes
                start[k] = s + off[q]
                count[k] = qc[q]
                bx[k] = bx[node] + (h2 if q & 1 else -h2)
                by[k] = by[node] + (h2 if q & 2 else -h2)
                bh[k] = h2
                depth[k] = depth[node] + 1
                n_nodes += 1
        node += 1
    return perm, start, count, child, nchild, bx, by, bh, n_nodes


@njit(parallel=True, cache=True)
def _moments(z, perm, start, count, n_nodes, order):
    cen = np.empty(n_nodes, np.complex128)
    rad = np.empty(n_nodes)
    mom = np.zeros((n_nodes, order + 1), np.complex128)
    for k in prange(n_nodes):
        s = start[k]
        c = count[k]
        acc = 0.0 + 0.0j
        for m in range(s, s + c):
            acc += z[perm[m]]
        ck = acc / c
        r = 0.0
        for m in range(s, s + c):
            d = z[perm[m]] - ck
            r = max(r, abs(d))
            pw = 1.0 + 0.0j
            for n in range(order + 1):
                mom[k, n] += pw
                pw *= d
        cen[k] = ck
        rad[k] = r
    return cen, rad, mom


# --------------------------------------------------------------------------
# traversal


@njit(cache=True)
def _lattice_offset(u):
    """Nearest-image representative of ``u`` modulo ``2*pi`` (real direction)."""
    n = math.floor(u.real / (2.0 * math.pi) + 0.5)
    return u - 2.0 * math.pi * n


@njit(cache=True)
def _periodic_multipole(u, mom, order, taylor):
    e = np.exp(1j * u)
    taylor[0] = 1j * (e + 1.0) / (e - 1.0)
    for k in range(order):
        acc = 1.0 + 0.0j if k == 0 else 0.0 + 0.0j
        for m in range(k + 1):
            acc += taylor[m] * taylor[k - m]
        taylor[k + 1] = -acc / (2.0 * (k + 1))
    out = 0.0 + 0.0j
    sign = 1.0
    for n in range(order + 1):
        out += sign * mom[n] * taylor[n]
        sign = -sign
    return out


@njit(cache=True)
def _closed_multipole(u, mom, order):
    inv = 1.0 / u
    acc = mom[order]
    for n in range(order - 1, -1, -1):
        acc = acc * inv + mom[n]
    return acc * inv


@njit(cache=True)
def _image_bound(r, R, order):
    """sum over lattice images of (R/r_n)^(p+1) / (r_n - R), nearest image at r."""
    total = (R / r) ** (order + 1) / (r - R)
    last = 0.0
    for m in range(1, 33):
        rm = max(r, math.pi * (2 * m - 1))
        last = 2.0 * (R / rm) ** (order + 1) / (rm - R)
        total += last
    return total + last * 32.0 / (order + 1)


@njit(parallel=True, cache=True)
def _traverse(z, e, a, perm, start, count, child, nchild, cen, rad, mom,
              theta, order, delta2, blob_gap, periodic, out, bound, hits, stats):
    n = z.shape[0]
    for i in prange(n):
        w = z[i]
        stack = np.empty(_STACK, np.int64)
        taylor = np.empty(order + 1, np.complex128)
        top = 0
        stack[0] = 0
        top = 1
        acc = 0.0 + 0.0j
        err = 0.0
        bad = 0
        n_dir = 0
        n_exp = 0
        while top > 0:
            top -= 1
            k = stack[top]
            u = w - cen[k]
            if periodic:
                u = _lattice_offset(u)
            r = abs(u)
            R = rad[k]
            if theta > 0.0 and R < theta * r and r - R >= blob_gap:
                c = count[k]
                if periodic:
                    acc += _periodic_multipole(u, mom[k], order, taylor)
                    err += 2.0 * c * _image_bound(r, R, order)
                    if delta2 > 0.0:
                        rho = r - R
                        dmin = 2.0 * rho * rho / (math.pi * math.pi)
                        ymax = abs(u.imag) + R
                        err += c * math.sqrt((math.cosh(ymax) + 1.0) / dmin) * delta2 / dmin
                else:
                    acc += _closed_multipole(u, mom[k], order)
                    err += c * (R / r) ** (order + 1) / (r - R)
                    if delta2 > 0.0:
                        rho = r - R
                        err += c * delta2 / rho**3
                n_exp += 1
            elif child[k] < 0:
                s = start[k]
                for m in range(s, s + count[k]):
                    j = perm[m]
                    if j == i:
                        continue
                    n_dir += 1
                    if periodic:
                        dr = e[i].real - e[j].real
                        di = e[i].imag - e[j].imag
                        sr = e[i].real + e[j].real
                        si = e[i].imag + e[j].imag
                        den = dr * dr + di * di + 2.0 * a[i] * a[j] * delta2
                        if den == 0.0:
                            bad += 1
                            continue
                        acc += (-(si * dr - sr * di) + 1j * (sr * dr + si * di)) / den
                    else:
                        d = w - z[j]
                        den = d.real * d.real + d.imag * d.imag + delta2
                        if den == 0.0:
                            bad += 1
                            continue
                        acc += (d.real - 1j * d.imag) / den
            else:
                for q in range(nchild[k]):
                    stack[top] = child[k] + q
                    top += 1
        out[i] = acc
        bound[i] = err
        hits[i] = bad
        stats[i, 0] = n_dir
        stats[i, 1] = n_exp


def _tree_sum(zeta: np.ndarray, delta: float, params: TreecodeParams, periodic: bool):
    zeta = np.ascontiguousarray(zeta, dtype=np.complex128)
    n = zeta.shape[0]
    x = np.ascontiguousarray(zeta.real)
    y = np.ascontiguousarray(zeta.imag)
    cap = 4 * n + 16
    while True:
        perm, start, count, child, nchild, bx, by, bh, n_nodes = _build(x, y, int(params.max_leaf), cap)
        if n_nodes >= 0:
            break
        cap *= 2
    order = int(params.expansion_order)
    cen, rad, mom = _moments(zeta, perm, start, count, n_nodes, order)
    if periodic:
        e = np.exp(1j * zeta)
        a = np.abs(e)
    else:
        e = np.zeros(1, np.complex128)
        a = np.zeros(1)
    out = np.empty(n, np.complex128)
    bound = np.empty(n)
    hits = np.zeros(n, np.int64)
    stats = np.zeros((n, 2), np.int64)
    blob_gap = float(delta) * params.theta ** (-(order + 1) / 2.0) if delta > 0 and params.theta > 0 else 0.0
    _traverse(zeta, e, a, perm, start, count, child, nchild, cen, rad, mom,
              float(params.theta), order, float(delta) ** 2, blob_gap, periodic, out, bound, hits, stats)
    return out, bound, int(hits.sum()), n_nodes, stats.sum(axis=0)


def _finish(state, kernel, params, s, bound, hits, n_nodes, stats, corr, factor):
    if kernel.kind is KernelKind.POINT:
        _raise_coincident(hits)
        if kernel.corrected:
            s = s + corr
    peak = float(np.max(np.abs(s)))
    abs_bound = float(np.max(bound))
    if abs_bound == 0.0:
        rel = 0.0
    elif peak > abs_bound:
        rel = abs_bound / (peak - abs_bound)
    else:
        rel = float("inf")
    return TreecodeResult(factor * s, rel, abs(factor) * abs_bound, params.nominal_error, n_nodes,
                          int(stats[0]), int(stats[1]))


def treecode_velocity(state: SheetState, kernel: KernelSpec = POINT,
                      params: TreecodeParams = TreecodeParams()) -> TreecodeResult:
    """Treecode counterpart of ``velocity_closed``."""
    if state.topology is not Topology.CLOSED:
        raise ValueError("treecode_velocity needs a CLOSED state")
    s, bound, hits, n_nodes, stats = _tree_sum(state.z, kernel.delta, params, periodic=False)
    corr = 0.5 * diagonal_correction(state) if kernel.corrected else None
    factor = state.circulation_scale * state.h / (2j * np.pi)
    return _finish(state, kernel, params, s, bound, hits, n_nodes, stats, corr, factor)


def treecode_velocity_periodic(state: SheetState, kernel: KernelSpec = POINT,
                               params: TreecodeParams = TreecodeParams()) -> TreecodeResult:
    """Treecode counterpart of ``velocity_periodic`` (cot kernel, all images)."""
    if state.topology is not Topology.PERIODIC_FLAT:
        raise ValueError("treecode_velocity_periodic needs a PERIODIC_FLAT state")
    zeta, f = _scaled(state)
    s, bound, hits, n_nodes, stats = _tree_sum(zeta, kernel.delta, params, periodic=True)
    corr = diagonal_correction(state) / f if kernel.corrected else None
    factor = state.circulation_scale * f * state.h / (4j * np.pi)
    return _finish(state, kernel, params, s, bound, hits, n_nodes, stats, corr, factor)


def tree_velocity(state: SheetState, kernel: KernelSpec = POINT,
                  params: TreecodeParams = TreecodeParams()) -> TreecodeResult:
    if state.topology is Topology.PERIODIC_FLAT:
        return treecode_velocity_periodic(state, kernel, params)
    return treecode_velocity(state, kernel, params)


__all__ = ["TreecodeParams", "TreecodeResult", "tree_velocity", "treecode_velocity",
           "treecode_velocity_periodic"]
