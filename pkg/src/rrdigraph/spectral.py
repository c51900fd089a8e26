"""Second singular value and exact jumbledness diagnostics.

For a d-regular digraph the top singular pair is known analytically: the
constant unit vector with sigma_1 = d.  sigma_2 is therefore computed by
power iteration on M^T M with an exact deflation (projection against the
all-ones vector) at every step.  A digraph with second singular value
sigma_2 is sigma_2-jumbled, so on tiny instances the exhaustive
discrepancy maximum alpha can be checked against sigma_2 directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .matrices import BiregularBitMatrix
from .samplers import SearchSpaceTooLarge

__all__ = ["SpectralReport", "sigma2", "alpha_exact", "ALPHA_EXACT_CAP"]

ALPHA_EXACT_CAP = 14


@dataclass(frozen=True)
class SpectralReport:
    sigma1: float
    sigma2: float
    iterations: int
    residual: float
    converged: bool
    alpha_exact: Optional[float] = None


def _power_iterate(gram_apply, start: np.ndarray, ones_unit: np.ndarray,
                   tol: float, max_iters: int):
    """Largest eigenvalue of the deflated Gram operator from one start."""
    v = start - (start @ ones_unit) * ones_unit
    norm = np.linalg.norm(v)
    if norm == 0:
        return 0.0, 0, 0.0, True
    v /= norm
    lam_prev = None
    residual = float("inf")
    for it in range(1, max_iters + 1):
        w = gram_apply(v)
        w -= (w @ ones_unit) * ones_unit
        lam = float(w @ v)
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return 0.0, it, 0.0, True
        v = w / wn
        if lam_prev is not None:
            residual = abs(lam - lam_prev)
            if residual < tol:
                return max(lam, 0.0), it, residual, True
        lam_prev = lam
    return max(lam_prev or 0.0, 0.0), max_iters, residual, False


def sigma2(
    matrix: BiregularBitMatrix, tol: float = 1e-10, max_iters: int = 10**4
) -> SpectralReport:
    """sigma_2 via deflated power iteration on M^T M (square digraphs).

    Converged when successive Rayleigh quotients differ by less than tol.
    The iteration is run from two fixed start vectors and the larger
    Rayleigh limit is kept: the alternating +-1 start alone can land in an
    invariant subspace (it is an exact singular vector of circulant
    matrices), so a second incommensurate start guards against that.
    """
    if matrix.m != matrix.n:
        raise ValueError("sigma2 is defined here for the square digraph case")
    n = matrix.n
    dense = matrix.dense().astype(np.float64)
    ones_unit = np.full(n, 1.0 / math.sqrt(n))

    def gram_apply(v: np.ndarray) -> np.ndarray:
        return dense.T @ (dense @ v)

    if n == 1:
        return SpectralReport(float(matrix.d), 0.0, 0, 0.0, True)

    alternating = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(n)])
    ramp = np.cos(0.7 * np.arange(n) + 0.3)
    best_lam, iters, residual, converged = 0.0, 0, 0.0, True
    for start in (alternating, ramp):
        lam, it, res, conv = _power_iterate(gram_apply, start, ones_unit, tol, max_iters)
        iters += it
        if lam > best_lam:
            best_lam, residual, converged = lam, res, conv
    sigma_one = float(np.linalg.norm(dense @ ones_unit))
    return SpectralReport(sigma_one, math.sqrt(best_lam), iters, residual, converged)


def alpha_exact(matrix: BiregularBitMatrix, cap: int = ALPHA_EXACT_CAP) -> float:
    """max over nonempty A, B of |e(A,B) - p|A||B|| / sqrt(|A||B|).

    Exhaustive over all 2^n x 2^n set pairs, so guarded by n <= cap.  The
    numerator is the exact integer |n e - d a b| / n.
    """
    if matrix.m != matrix.n:
        raise ValueError("alpha_exact is defined here for the square digraph case")
    n, d = matrix.n, matrix.d
    if n > cap:
        raise SearchSpaceTooLarge(f"alpha_exact enumerates 4^{n} pairs; cap is n <= {cap}")
    size = 1 << n

    popcount = np.zeros(size, dtype=np.int64)
    for j in range(n):
        bit = 1 << j
        popcount[bit : 2 * bit] = popcount[:bit] + 1

    dense = matrix.dense().astype(np.int64)
    bsizes = popcount[1:]
    inv_sqrt_b = 1.0 / np.sqrt(bsizes.astype(np.float64))
    best = 0.0
    # colsum_table[mask] = column sums of the row set `mask`, filled in
    # increasing-mask order so mask ^ lowbit is always already present.
    colsum_table = np.zeros((size, n), dtype=np.int64)
    subset_e = np.zeros(size, dtype=np.int64)
    for amask in range(1, size):
        lowbit = amask & -amask
        i = lowbit.bit_length() - 1
        colsum_table[amask] = colsum_table[amask ^ lowbit] + dense[i]
        colsums = colsum_table[amask]
        a = int(popcount[amask])
        # e(A, B) for every B via subset-sum DP over columns.
        for j in range(n):
            bit = 1 << j
            subset_e[bit : 2 * bit] = subset_e[:bit] + colsums[j]
        dev = np.abs(n * subset_e[1:] - d * a * bsizes)
        cand = float((dev * inv_sqrt_b).max()) / (n * math.sqrt(a))
        best = max(best, cand)
    return best
