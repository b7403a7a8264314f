"""Cumulative kernel integrals and Nystrom application of integral operators."""

from __future__ import annotations

import math

import numpy as np

from .grids import Grid, Profile, TRAPEZOID, quadrature_weights
from .model import Kernel

#: table refinement for the cumulative integral, subintervals per unit length
DEFAULT_N_PER_UNIT = 4096


class CumulativeKernel:
    """W(b) = integral of omega over [0, b], with the odd extension W(-b) = -W(b).

    Node values are accumulated once on a fine uniform table (per-cell Simpson);
    a query refines the trailing partial cell with another Simpson step, so the
    result carries the full O(dx^4) accuracy everywhere, not just at table nodes.
    """

    def __init__(self, kernel: Kernel, n_per_unit: int = DEFAULT_N_PER_UNIT,
                 b_max: float = 8.0):
        self.kernel = kernel
        self.n_per_unit = n_per_unit
        self._dx = 1.0 / n_per_unit
        self._table = np.zeros(1)
        self._extend(b_max)

    @property
    def b_max(self) -> float:
        return (len(self._table) - 1) * self._dx

    def _extend(self, b_needed: float) -> None:
        n_cells = int(math.ceil(b_needed / self._dx)) + 1
        have = len(self._table) - 1
        if n_cells <= have:
            return
        lo = np.arange(have, n_cells) * self._dx
        hi = lo + self._dx
        cells = (self.kernel(lo) + 4.0 * self.kernel(0.5 * (lo + hi)) + self.kernel(hi)) \
            * (self._dx / 6.0)
        self._table = np.concatenate([self._table, self._table[-1] + np.cumsum(cells)])

    def __call__(self, b):
        b = np.asarray(b, dtype=float)
        scalar = b.ndim == 0
        b = np.atleast_1d(b)
        ab = np.abs(b)
        self._extend(float(np.max(ab)) if ab.size else 0.0)
        idx = np.minimum((ab / self._dx).astype(int), len(self._table) - 1)
        x0 = idx * self._dx
        rem = ab - x0
        partial = (self.kernel(x0) + 4.0 * self.kernel(x0 + 0.5 * rem) + self.kernel(ab)) \
            * (rem / 6.0)
        out = np.sign(b) * (self._table[idx] + partial)
        return float(out[0]) if scalar else out


def cumulative_kernel_integral(kernel: Kernel, b: float, n: int = DEFAULT_N_PER_UNIT) -> float:
    """W(b) = integral of omega over [0, b] by composite per-cell Simpson with n cells."""
    if b < 0.0:
        raise ValueError(f"need b >= 0, got b={b}")
    if b == 0.0:
        return 0.0
    edges = np.linspace(0.0, b, n + 1)
    lo, hi = edges[:-1], edges[1:]
    cells = (kernel(lo) + 4.0 * kernel(0.5 * (lo + hi)) + kernel(hi)) * ((b / n) / 6.0)
    return float(np.sum(cells))


def indicator_convolution(kernel: Kernel, delta: float, x, W: CumulativeKernel | None = None,
                          n_per_unit: int = DEFAULT_N_PER_UNIT):
    """u_delta(x) = integral of omega(x - y) over [-delta, delta] = W(x+delta) - W(x-delta)."""
    if delta <= 0.0:
        raise ValueError(f"need delta > 0, got delta={delta}")
    if W is None:
        W = CumulativeKernel(kernel, n_per_unit=n_per_unit)
    return W(np.asarray(x, dtype=float) + delta) - W(np.asarray(x, dtype=float) - delta)


def apply_integral_operator(kernel: Kernel, weight: Profile, targets: Grid,
                            rule: str = TRAPEZOID) -> Profile:
    """Nystrom application: x -> integral of omega(x - y) weight(y) dy at the target nodes.

    Direct quadrature-weighted summation, chunked over target nodes to bound the
    size of the kernel-difference block.
    """
    w = quadrature_weights(weight.grid, rule)
    src = weight.grid.nodes()
    wv = w * weight.values
    tgt = targets.nodes()
    out = np.empty(len(tgt))
    chunk = max(1, 16_000_000 // max(len(src), 1))
    for start in range(0, len(tgt), chunk):
        block = tgt[start:start + chunk, None] - src[None, :]
        out[start:start + chunk] = kernel(block) @ wv
    return Profile(targets, out)
