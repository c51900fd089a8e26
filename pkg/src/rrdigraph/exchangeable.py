"""Exchangeable-pair diagnostics for the three couplings.

For an involution Phi on a finite class and a uniform element M, the pair
(M, Phi(M)) is exchangeable.  Given an antisymmetric F with conditional
mean f(M) = E[F(M, M~) | M], concentration of f follows from a
self-bounding control on

    v_f(M) = (1/2) E[ |f(M) - f(M~)| |F(M, M~)| | M ].

This module computes f and v_f exactly (integer-scaled / rational) or by
Monte Carlo for

* the reflection coupling     (statistic: codegree of a fixed row pair),
* the simple-switching coupling (statistic: edge count e(A, B)),
* the permutation model        (statistic: e_pi(A, B)),

and evaluates the tail bound that a self-bounding pair (K1, K2) yields.

Every algebraic identity here is checked in exact arithmetic with a
declared integer scale; floats appear only in Monte Carlo estimates and
in the final bound values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Tuple, Union

import numpy as np

from .matrices import BiregularBitMatrix, VertexSetPair, codegree, edge_count
from .couplings import (
    RowOrder,
    _bad_mask,
    _bits,
    count_minor_classes,
    reflect,
)
from .samplers import PermutationTuple, ResourceGuardError

__all__ = [
    "CouplingDiagnostics",
    "GoodEventCo",
    "InvariantViolation",
    "ExactCapExceeded",
    "REFLECTION_EXACT_CAP",
    "SWITCHING_EXACT_CAP",
    "reflection_f",
    "reflection_vf",
    "switching_f",
    "switching_vf",
    "permutation_f",
    "permutation_diagnostics",
    "chatterjee_tail",
    "good_event_co",
]

# Exact v_f cost is O(d_hat^2 n^2) walks for reflection and O(K_ab m) for
# switching; beyond these caps Monte Carlo mode is mandatory.
REFLECTION_EXACT_CAP = 20
SWITCHING_EXACT_CAP = 10**8


class InvariantViolation(AssertionError):
    """An exact identity or proven inequality failed; indicates a defect."""


class ExactCapExceeded(ResourceGuardError):
    """Exact-mode v_f cost guard tripped; rerun in Monte Carlo mode."""


@dataclass
class CouplingDiagnostics:
    """Exact integer-scaled f and v_f for one coupling instance.

    f equals f_scaled / scale.  v_f is an exact Fraction in exact mode; in
    Monte Carlo mode v_f_estimate and v_f_stderr carry an unbiased
    estimate.  bound_ok records the self-bounding inequality check
    (exact comparison in exact mode; estimate - 3*stderr tolerance in MC
    mode, so only a violation beyond the CI fails).
    """

    coupling: str  # "reflection" | "switching" | "permutation"
    f_scaled: int
    scale: int
    v_f: Optional[Fraction] = None
    v_f_estimate: Optional[float] = None
    v_f_stderr: Optional[float] = None
    mc_samples: Optional[int] = None
    b: Optional[int] = None
    f1_scaled: Optional[int] = None
    f2_scaled: Optional[int] = None
    K1: Optional[Fraction] = None
    K2: Optional[Fraction] = None
    bound_ok: Optional[bool] = None
    max_step: Optional[int] = None  # worst |f - f~| seen over evaluated sites

    @property
    def f(self) -> Fraction:
        return Fraction(self.f_scaled, self.scale)


@dataclass(frozen=True)
class GoodEventCo:
    """Whether all row-pair codegrees sit within eta*p*(1-p)*n of p^2*n."""

    eta: Fraction
    holds: bool
    worst_pair: Tuple[int, int]
    worst_deviation_scaled: int  # max over pairs of |n*co - d^2|
    threshold_scaled: Fraction  # eta * d * (n - d)


def _as_fraction(x: Union[int, float, Fraction]) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# Reflection coupling: F(M1, M2) = n * (co(M1) - co(M2))
# ---------------------------------------------------------------------------


def _reflection_f_scaled(
    matrix: BiregularBitMatrix, i1: int, i2: int, order: RowOrder
) -> Tuple[int, int, int]:
    """(f_scaled, co, b) with f_scaled = n*co - d^2 + b, cross-checked."""
    counts = count_minor_classes(matrix, i1, i2, order)
    rec = codegree(matrix, i1, i2, "out")
    f_scaled = counts.nK - counts.nI_reflecting
    shifted = matrix.n * rec.co - matrix.d**2 + counts.nI_bad
    if f_scaled != shifted:
        raise InvariantViolation(
            f"reflection identity broke: {f_scaled} != n*co - d^2 + b = {shifted}"
        )
    return f_scaled, rec.co, counts.nI_bad


def reflection_f(
    matrix: BiregularBitMatrix,
    i1: int,
    i2: int,
    order: Optional[RowOrder] = None,
) -> CouplingDiagnostics:
    """Conditional mean f of the reflection pair at rows (i1, i2), scale n.

    f_scaled = #K-minors - #reflecting-I-minors = n*co - d^2 + b as exact
    integers (b = bad-pair count).
    """
    if i1 == i2:
        raise ValueError("reflection_f requires two distinct rows")
    order = RowOrder(i1, i2) if order is None else order
    f_scaled, _, b = _reflection_f_scaled(matrix, i1, i2, order)
    return CouplingDiagnostics(
        coupling="reflection",
        f_scaled=f_scaled,
        scale=matrix.n,
        b=b,
        K1=Fraction(2 * matrix.d_hat**2, matrix.n),
        K2=Fraction(1),
    )


def _reflection_active_sites(matrix, i1, i2, order):
    """Column pairs with |F| = n: K minors plus reflecting I minors."""
    r1, r2 = matrix.rows[i1], matrix.rows[i2]
    mask = (1 << matrix.n) - 1
    co_cols = _bits(r1 & r2)
    zz_cols = _bits(~(r1 | r2) & mask)
    sites = list(product(co_cols, zz_cols))  # K minors are always reflecting
    ex1, ex2, bad = _bad_mask(matrix, i1, i2, order)
    for s, c1 in enumerate(ex1):
        for t, c2 in enumerate(ex2):
            if not bad[s, t]:
                sites.append((c1, c2))
    return sites


def reflection_vf(
    matrix: BiregularBitMatrix,
    i1: int,
    i2: int,
    order: Optional[RowOrder] = None,
    mode: str = "exact",
    samples: int = 2000,
    rng: Optional[np.random.Generator] = None,
    exact_cap: int = REFLECTION_EXACT_CAP,
) -> CouplingDiagnostics:
    """v_f of the reflection pair plus the bound v_f <= f + 2*d_hat^2/n.

    Exact mode sums |f - f~| over the active column pairs (those with
    |F| = n), giving v_f = sum / (2 n^2) as an exact rational; guarded by
    n <= exact_cap.  MC mode averages over uniformly sampled (J1, J2).
    """
    if i1 == i2:
        raise ValueError("reflection_vf requires two distinct rows")
    order = RowOrder(i1, i2) if order is None else order
    n = matrix.n
    diag = reflection_f(matrix, i1, i2, order)
    bound = diag.f + Fraction(2 * matrix.d_hat**2, n)

    def delta(j1: int, j2: int) -> int:
        image = reflect(matrix, j1, j2, order)
        if image is matrix:
            return 0
        f_image, _, _ = _reflection_f_scaled(image, i1, i2, order)
        return abs(diag.f_scaled - f_image)

    if mode == "exact":
        if n > exact_cap:
            raise ExactCapExceeded(f"exact mode capped at n <= {exact_cap}; use mode='mc'")
        total = 0
        worst = 0
        for j1, j2 in _reflection_active_sites(matrix, i1, i2, order):
            step = delta(j1, j2)
            total += step
            worst = max(worst, step)
        diag.v_f = Fraction(total, 2 * n * n)
        diag.max_step = worst
        diag.bound_ok = diag.v_f <= bound
        if not diag.bound_ok:
            raise InvariantViolation(
                f"reflection self-bound failed: v_f = {diag.v_f} > {bound}"
            )
        return diag

    if mode != "mc":
        raise ValueError("mode must be 'exact' or 'mc'")
    rng = np.random.default_rng(0) if rng is None else rng
    draws = rng.integers(0, n, size=(samples, 2))
    values = np.empty(samples, dtype=float)
    worst = 0
    for k in range(samples):
        j1, j2 = int(draws[k, 0]), int(draws[k, 1])
        if j1 == j2:
            values[k] = 0.0
            continue
        step = delta(j1, j2)
        worst = max(worst, step)
        # (1/2)|f - f~||F| = |delta f_scaled| / 2 in natural units.
        values[k] = step / 2.0
    diag.v_f_estimate = float(values.mean())
    diag.v_f_stderr = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    diag.mc_samples = samples
    diag.max_step = worst
    diag.bound_ok = not (diag.v_f_estimate - 3.0 * diag.v_f_stderr > float(bound))
    return diag


# ---------------------------------------------------------------------------
# Switching coupling: F(M1, M2) = K_ab * (e_{M1}(A,B) - e_{M2}(A,B))
# ---------------------------------------------------------------------------


def _reduce_pair(matrix: BiregularBitMatrix, pair: VertexSetPair) -> VertexSetPair:
    """Replace (A, B) by complements when mu > mu-of-complements.

    The deviation event is complement-symmetric, so the analysis may
    assume a*b <= (m-a)*(n-b) (a+b <= n in the square case).
    """
    a, b = pair.a, pair.b
    if a * b > (matrix.m - a) * (matrix.n - b):
        return pair.complement(matrix)
    return pair


def _switch_stats(matrix: BiregularBitMatrix, pair: VertexSetPair):
    dense = matrix.dense().astype(np.int64)
    rows_a = sorted(pair.rows)
    rows_c = sorted(set(range(matrix.m)) - pair.rows)
    cols_b = sorted(pair.cols)
    cols_c = sorted(set(range(matrix.n)) - pair.cols)
    nb = dense[:, cols_b].sum(axis=1) if cols_b else np.zeros(matrix.m, dtype=np.int64)
    co = dense @ dense.T
    ex = matrix.d - co
    return dense, rows_a, rows_c, cols_b, cols_c, nb, ex


def switching_f(matrix: BiregularBitMatrix, pair: VertexSetPair) -> CouplingDiagnostics:
    """f of the switching pair at (A, B), with the main/error split.

    f is computed two independent ways (the minor-count double sum over
    A x A^c and the exclusive-neighbourhood form) and asserted equal as
    integers.  The main term is the edge-count recentering
    f1 = p(1-p) n m (e(A,B) - mu); scale n in the square case, n^2 for
    rectangular classes, keeps every term integral.
    """
    pair.validate(matrix)
    if not 0 < pair.a < matrix.m:
        raise ValueError("switching_f requires A to be a proper nonempty row set")
    pair = _reduce_pair(matrix, pair)
    m, n, d = matrix.m, matrix.n, matrix.d
    dense, rows_a, rows_c, cols_b, cols_c, nb, ex = _switch_stats(matrix, pair)

    # Form 1: minor-count double sum.
    sub = dense[:, cols_b] if cols_b else np.zeros((m, 0), dtype=np.int64)
    in_b = sub @ (1 - sub).T  # |Ex(i1,i2) /\ B|
    sub_c = dense[:, cols_c] if cols_c else np.zeros((m, 0), dtype=np.int64)
    in_bc = sub_c @ (1 - sub_c).T  # |Ex(i1,i2) /\ B^c|
    ia = np.ix_(rows_a, rows_c)
    ic = np.ix_(rows_c, rows_a)
    f_minor = int((in_b[ia] * in_bc[ic].T).sum() - (in_b[ic].T * in_bc[ia]).sum())

    # Form 2: exclusive-neighbourhood form.
    diff_nb = nb[rows_a][:, None] - nb[rows_c][None, :]
    f_ex = int((ex[ia] * diff_nb).sum())

    if f_minor != f_ex:
        raise InvariantViolation(
            f"switching f mismatch: minor form {f_minor} != neighbourhood form {f_ex}"
        )

    scale = n if m == n else n * n
    e = edge_count(matrix, pair)
    a, b = pair.a, pair.b
    core = d * (n - d) * (n * e - d * a * b)
    f1_scaled = core if m == n else m * core
    f_scaled = f_minor * scale
    f2_scaled = f_scaled - f1_scaled

    # Independent error-term path: sum (n*ex - d(n-d)) * (nb difference),
    # an integer at scale n; re-scale and compare.
    f2_direct_n = int(((n * ex[ia] - d * (n - d)) * diff_nb).sum())
    if f2_direct_n * (scale // n) != f2_scaled:
        raise InvariantViolation(
            f"switching error-term mismatch: {f2_direct_n} vs {f2_scaled} at scale {scale}"
        )

    return CouplingDiagnostics(
        coupling="switching",
        f_scaled=f_scaled,
        scale=scale,
        f1_scaled=f1_scaled,
        f2_scaled=f2_scaled,
        K1=Fraction(2 * matrix.m**2 * matrix.d_hat**2) * Fraction(d * a * b, n),
        K2=Fraction(matrix.m * matrix.d_hat),
    )


def _switchable_sites(dense, rows_a, rows_c, cols_b, cols_c):
    for i1 in rows_a:
        for i2 in rows_c:
            b_in_1 = [j for j in cols_b if dense[i1, j] == 1 and dense[i2, j] == 0]
            b_in_2 = [j for j in cols_b if dense[i2, j] == 1 and dense[i1, j] == 0]
            c_in_1 = [j for j in cols_c if dense[i1, j] == 1 and dense[i2, j] == 0]
            c_in_2 = [j for j in cols_c if dense[i2, j] == 1 and dense[i1, j] == 0]
            for j1 in b_in_1:
                for j2 in c_in_2:
                    yield i1, i2, j1, j2, "I"
            for j1 in b_in_2:
                for j2 in c_in_1:
                    yield i1, i2, j1, j2, "J"


def _switch_delta_f(matrix, dense, nb, ex, rows_a, rows_c, cols_b_set, site):
    """f(M) - f(M~) for one switchable site, summed over affected pairs only.

    Only pairs (u1, u2) in A x A^c with u1 = I1 or u2 = I2 contribute; the
    codegree and nb updates are O(1) per pair given the precomputed stats.
    """
    i1, i2, j1, j2, kind = site
    sign = 1 if kind == "I" else -1  # entries at (i1,j1),(i2,j2) drop by `sign`
    b1 = 1 if j1 in cols_b_set else 0
    b2 = 1 if j2 in cols_b_set else 0
    nb_i1_new = nb[i1] + sign * (b2 - b1)
    nb_i2_new = nb[i2] + sign * (b1 - b2)

    col1 = dense[:, j1]
    col2 = dense[:, j2]
    delta = 0
    for u2 in rows_c:
        old = ex[i1, u2] * (nb[i1] - nb[u2])
        if u2 == i2:
            new = ex[i1, u2] * (nb_i1_new - nb_i2_new)
        else:
            ex_new = ex[i1, u2] + sign * (col1[u2] - col2[u2])
            new = ex_new * (nb_i1_new - nb[u2])
        delta += old - new
    for u1 in rows_a:
        if u1 == i1:
            continue  # the (i1, i2) pair was handled above
        old = ex[u1, i2] * (nb[u1] - nb[i2])
        ex_new = ex[u1, i2] + sign * (col2[u1] - col1[u1])
        new = ex_new * (nb[u1] - nb_i2_new)
        delta += old - new
    return int(delta)


def switching_vf(
    matrix: BiregularBitMatrix,
    pair: VertexSetPair,
    mode: str = "exact",
    samples: int = 2000,
    rng: Optional[np.random.Generator] = None,
    exact_cap: int = SWITCHING_EXACT_CAP,
) -> CouplingDiagnostics:
    """v_f of the switching pair plus v_f <= m*d_hat*(f + 2*m*d_hat*mu).

    Exact mode: v_f = (1/2) * sum over switchable sites of |f - f~| (the
    K_ab normalisations cancel), each difference computed incrementally
    over the affected row pairs; guarded by K_ab * m <= exact_cap.  Also
    asserts the per-site step bound |f - f~| <= 2 m d_hat.
    """
    pair.validate(matrix)
    pair = _reduce_pair(matrix, pair)
    m, n = matrix.m, matrix.n
    if not (0 < pair.a < m and 0 < pair.b < n):
        raise ValueError("switching_vf requires proper nonempty A and B")
    diag = switching_f(matrix, pair)
    a, b = pair.a, pair.b
    mu = pair.mu(matrix)
    d_hat = matrix.d_hat
    bound = Fraction(m * d_hat) * (diag.f + 2 * m * d_hat * mu)
    step_cap = 2 * m * d_hat
    k_ab = a * (m - a) * b * (n - b)

    dense, rows_a, rows_c, cols_b, cols_c, nb, ex = _switch_stats(matrix, pair)
    cols_b_set = set(cols_b)

    if mode == "exact":
        if k_ab * m > exact_cap:
            raise ExactCapExceeded(
                f"exact mode capped at K_ab*m <= {exact_cap} operations; use mode='mc'"
            )
        total = 0
        worst = 0
        for site in _switchable_sites(dense, rows_a, rows_c, cols_b, cols_c):
            step = abs(
                _switch_delta_f(matrix, dense, nb, ex, rows_a, rows_c, cols_b_set, site)
            )
            if step > step_cap:
                raise InvariantViolation(
                    f"switching step bound failed: |f - f~| = {step} > {step_cap}"
                )
            total += step
            worst = max(worst, step)
        diag.v_f = Fraction(total, 2)
        diag.max_step = worst
        diag.bound_ok = diag.v_f <= bound
        if not diag.bound_ok:
            raise InvariantViolation(
                f"switching self-bound failed: v_f = {diag.v_f} > {bound}"
            )
        return diag

    if mode != "mc":
        raise ValueError("mode must be 'exact' or 'mc'")
    rng = np.random.default_rng(0) if rng is None else rng
    arr_a = np.array(rows_a)
    arr_c = np.array(rows_c)
    arr_b = np.array(cols_b)
    arr_bc = np.array(cols_c)
    i1s = arr_a[rng.integers(0, len(arr_a), samples)]
    i2s = arr_c[rng.integers(0, len(arr_c), samples)]
    j1s = arr_b[rng.integers(0, len(arr_b), samples)]
    j2s = arr_bc[rng.integers(0, len(arr_bc), samples)]
    values = np.zeros(samples, dtype=float)
    worst = 0
    for k in range(samples):
        i1, i2, j1, j2 = int(i1s[k]), int(i2s[k]), int(j1s[k]), int(j2s[k])
        x11, x12 = dense[i1, j1], dense[i1, j2]
        x21, x22 = dense[i2, j1], dense[i2, j2]
        if x11 == x22 and x12 == x21 and x11 != x12:
            kind = "I" if x11 == 1 else "J"
            step = abs(
                _switch_delta_f(
                    matrix, dense, nb, ex, rows_a, rows_c, cols_b_set,
                    (i1, i2, j1, j2, kind),
                )
            )
            worst = max(worst, step)
            values[k] = 0.5 * k_ab * step
    diag.v_f_estimate = float(values.mean())
    diag.v_f_stderr = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    diag.mc_samples = samples
    diag.max_step = worst
    diag.bound_ok = not (diag.v_f_estimate - 3.0 * diag.v_f_stderr > float(bound))
    return diag


# ---------------------------------------------------------------------------
# Permutation model: resample one permutation at a random transposition
# ---------------------------------------------------------------------------


def permutation_diagnostics(
    pi: PermutationTuple, pair: VertexSetPair
) -> CouplingDiagnostics:
    """f and exact v_f for the permutation-model pair at (A, B).

    f is the full (J, I1, I2) enumeration at scale n and must equal
    e_pi(A, B) - d*a*b/n exactly; v_f = f/2 + T/n with T <= d*a*b checked
    exactly, where T counts the (transposed-minor) triples.
    """
    n = pi.n
    d = pi.d
    a, b = pair.a, pair.b
    if not 0 < a < n:
        raise ValueError("permutation coupling requires A proper and nonempty")
    if b == 0:
        raise ValueError("permutation coupling requires B nonempty")
    rows_a = sorted(pair.rows)
    rows_c = sorted(set(range(n)) - pair.rows)
    in_b = np.zeros(n, dtype=bool)
    in_b[sorted(pair.cols)] = True

    s_total = 0  # scale-n numerator of f
    t_total = 0  # scale-n numerator of v_f - f/2
    e_pi = 0
    for perm in pi.perms:
        perm_arr = np.asarray(perm)
        hits = in_b[perm_arr]  # hits[i] = 1(perm(i) in B)
        ha = hits[rows_a]
        hc = hits[rows_c]
        e_pi += int(ha.sum())
        # Enumerate (I1, I2) in A x A^c as an outer product of indicators.
        plus = np.outer(ha, ~hc)
        minus = np.outer(~ha, hc)
        s_total += int(plus.sum()) - int(minus.sum())
        t_total += int(minus.sum())

    identity_rhs = n * e_pi - d * a * b
    if s_total != identity_rhs:
        raise InvariantViolation(
            f"permutation identity broke: enumerated {s_total} != n*e - d*a*b = {identity_rhs}"
        )
    v_f = Fraction(s_total, 2 * n) + Fraction(t_total, n)
    bound = Fraction(s_total, 2 * n) + Fraction(d * a * b, n)
    bound_ok = t_total <= d * a * b
    if not bound_ok:
        raise InvariantViolation(
            f"permutation self-bound failed: T = {t_total} > d*a*b = {d * a * b}"
        )
    return CouplingDiagnostics(
        coupling="permutation",
        f_scaled=s_total,
        scale=n,
        v_f=v_f,
        K1=Fraction(d * a * b, n),
        K2=Fraction(1, 2),
        bound_ok=bound_ok,
    )


def permutation_f(pi: PermutationTuple, pair: VertexSetPair) -> Fraction:
    """f(pi) = e_pi(A, B) - d*a*b/n as an exact rational."""
    return permutation_diagnostics(pi, pair).f


# ---------------------------------------------------------------------------
# Tail bound from a self-bounding exchangeable pair, and the codegree event
# ---------------------------------------------------------------------------


def chatterjee_tail(k1: float, k2: float, t: float) -> Tuple[float, float]:
    """(upper, lower) tail bounds for a (K1, K2) self-bounding pair.

    upper = exp(-t^2 / (2(K1 + K2 t))) bounds P(f >= t); lower =
    exp(-t^2 / (2 K1)) bounds P(f <= -t).
    """
    if k1 <= 0:
        raise ValueError("K1 must be positive")
    if k2 < 0 or t < 0:
        raise ValueError("K2 and t must be nonnegative")
    upper = math.exp(-(t * t) / (2.0 * (k1 + k2 * t)))
    lower = math.exp(-(t * t) / (2.0 * k1))
    return upper, lower


def good_event_co(
    matrix: BiregularBitMatrix, eta: Union[int, float, Fraction]
) -> GoodEventCo:
    """Scan all row pairs for |co - p^2 n| <= eta p(1-p) n, exactly.

    The comparison is |n*co - d^2| <= eta * d * (n-d) over the integers
    (eta exact as a Fraction), so no float tolerance enters.
    """
    eta = _as_fraction(eta)
    if eta < 0:
        raise ValueError("eta must be >= 0")
    n, d = matrix.n, matrix.d
    dense = matrix.dense().astype(np.int64)
    co = dense @ dense.T
    dev = np.abs(n * co - d * d)
    iu = np.triu_indices(matrix.m, k=1)
    if iu[0].size == 0:
        return GoodEventCo(eta, True, (0, 0), 0, eta * d * (n - d))
    flat = dev[iu]
    k = int(flat.argmax())
    worst = (int(iu[0][k]), int(iu[1][k]))
    worst_dev = int(flat[k])
    threshold = eta * d * (n - d)
    return GoodEventCo(eta, Fraction(worst_dev) <= threshold, worst, worst_dev, threshold)
