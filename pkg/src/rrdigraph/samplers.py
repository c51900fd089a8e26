"""Samplers for regular digraph distributions.

Five generation modes:

* ``rejection``: stub matching (a fiber of d out-points per row, dp
  in-points per column, matched by a uniform permutation and collapsed),
  accepted iff the collapse is simple.  Conditioned on simplicity the
  output is exactly uniform on the biregular class.  Acceptance decays
  like exp(-Theta(d^2)), so a budget guard signals when to fall back to
  the switch chain.
* ``switch_mcmc``: start from a deterministic circulant matrix and apply
  uniformly random simple switchings; stays inside the class at every
  step, approximately uniform after enough steps.
* ``permutation_model``: sum of d iid uniform permutation matrices (a
  d-regular directed multigraph).
* ``erdos_renyi``: iid Bernoulli(p) entries, the comparison baseline.
* ``enumerate``: exhaustive generation of tiny classes, the exact oracle
  for distribution tests.

Randomness comes from counter-based Philox streams keyed by
(seed, stream), so distinct stream indices give independent reproducible
streams with no coordination.  Identical (spec, count) always reproduces
the same output sequence bit for bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .matrices import BiregularBitMatrix

__all__ = [
    "SamplerSpec",
    "PermutationTuple",
    "ResourceGuardError",
    "RejectionBudgetExhausted",
    "SearchSpaceTooLarge",
    "stream_generator",
    "circulant",
    "sample_rejection",
    "sample_switch_mcmc",
    "sample_permutation_model",
    "sample_er",
    "sample_many",
    "rejection_dense",
    "switch_mcmc_dense",
    "permutation_batch",
    "er_dense",
    "enumerate_all",
    "enumeration_size_bound",
]

SAMPLER_KINDS = ("rejection", "switch_mcmc", "permutation_model", "erdos_renyi", "enumerate")

DEFAULT_MAX_ATTEMPTS = 10**6
DEFAULT_ENUMERATION_CAP = 10**8
_REJECTION_BLOCK = 256


class ResourceGuardError(RuntimeError):
    """A deliberate feasibility guard tripped (budget or search-space cap)."""


class RejectionBudgetExhausted(ResourceGuardError):
    """No simple collapse found within max_attempts; use switch_mcmc."""

    def __init__(self, attempts: int):
        super().__init__(f"rejection sampler found no simple graph in {attempts} attempts")
        self.attempts = attempts


class SearchSpaceTooLarge(ResourceGuardError):
    """Exhaustive enumeration guard tripped."""


@dataclass(frozen=True)
class SamplerSpec:
    """Fully-resolved sampler configuration.

    (seed, stream) pairs key independent reproducible Philox streams;
    identical specs produce bit-identical output sequences.
    """

    kind: str
    n: int = 0
    d: int = 0
    m: Optional[int] = None
    dp: Optional[int] = None
    p: Optional[float] = None
    steps: Optional[int] = None
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.kind == "erdos_renyi":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ValueError("erdos_renyi requires p in [0, 1]")
            if self.n <= 0:
                raise ValueError("erdos_renyi requires n >= 1")
            return
        m = self.n if self.m is None else self.m
        dp = self.d if self.dp is None else self.dp
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "dp", dp)
        if self.n <= 0 or m <= 0:
            raise ValueError("matrix dimensions must be positive")
        if not 0 <= self.d <= self.n or not 0 <= dp <= m:
            raise ValueError(f"degrees out of range: d={self.d} (n={self.n}), dp={dp} (m={m})")
        if m * self.d != self.n * dp:
            raise ValueError(f"edge-count mismatch: m*d = {m * self.d} != n*dp = {self.n * dp}")
        if self.kind == "switch_mcmc" and self.resolved_steps < 0:
            raise ValueError("steps must be >= 0")

    @property
    def resolved_steps(self) -> int:
        if self.steps is not None:
            return self.steps
        return 100 * self.n * self.d

    def rng(self) -> np.random.Generator:
        return stream_generator(self.seed, self.stream)


def stream_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for worker stream `stream` of seed `seed`."""
    key = np.array([seed % (1 << 64), stream % (1 << 64)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# -- deterministic start state ----------------------------------------------------


def circulant(n: int, d: int, m: Optional[int] = None) -> BiregularBitMatrix:
    """Deterministic member of the class, valid for all 0 <= d <= n.

    Square case: row i has ones in columns i, i+1, ..., i+d-1 (mod n).
    Biregular case: row i covers the block i*d, ..., i*d+d-1 (mod n); the
    blocks tile Z_n so every column is hit exactly m*d/n times.
    """
    m = n if m is None else m
    rows = []
    for i in range(m):
        start = i if m == n else i * d
        r = 0
        for t in range(d):
            r |= 1 << ((start + t) % n)
        rows.append(r)
    return BiregularBitMatrix(rows, n)


def _circulant_dense(n: int, d: int, m: int) -> np.ndarray:
    return circulant(n, d, m).dense().copy()


# -- rejection (configuration model) -----------------------------------------------


def rejection_dense(spec: SamplerSpec, count: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """`count` exactly-uniform class members as a (count, m, n) uint8 array."""
    if spec.kind != "rejection":
        raise ValueError("spec.kind must be 'rejection'")
    m, n, d, dp = spec.m, spec.n, spec.d, spec.dp
    rng = spec.rng() if rng is None else rng
    out = np.empty((count, m, n), dtype=np.uint8)
    if d == 0 or d == n:
        # Degenerate class with a single element; nothing to sample.
        out[:] = 0 if d == 0 else 1
        return out
    md = m * d
    point_rows = np.repeat(np.arange(m, dtype=np.int64), d)
    accepted = 0
    failures_since_last = 0
    while accepted < count:
        block = min(_REJECTION_BLOCK, max(1, count - accepted))
        # A uniform matching of out-points to in-points per attempt.
        perms = rng.permuted(np.tile(np.arange(md, dtype=np.int64), (block, 1)), axis=1)
        codes = point_rows[None, :] * n + perms // dp
        sorted_codes = np.sort(codes, axis=1)
        simple = ~(sorted_codes[:, 1:] == sorted_codes[:, :-1]).any(axis=1)
        hits = np.flatnonzero(simple)
        if hits.size == 0:
            failures_since_last += block
            if failures_since_last >= spec.max_attempts:
                raise RejectionBudgetExhausted(failures_since_last)
            continue
        failures_since_last = int(block - 1 - hits[-1])
        take = hits[: count - accepted]
        flat = np.zeros((take.size, m * n), dtype=np.uint8)
        offsets = np.repeat(np.arange(take.size) * (m * n), md)
        flat.ravel()[offsets + codes[take].ravel()] = 1
        out[accepted : accepted + take.size] = flat.reshape(take.size, m, n)
        accepted += take.size
    return out


def sample_rejection(spec: SamplerSpec, rng: Optional[np.random.Generator] = None) -> BiregularBitMatrix:
    """One exactly-uniform draw from the biregular class."""
    dense = rejection_dense(spec, 1, rng)
    return BiregularBitMatrix.from_dense(dense[0])


# -- switch chain --------------------------------------------------------------------


def switch_mcmc_dense(spec: SamplerSpec, count: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """`count` independent switch chains, each run for spec.resolved_steps steps.

    Chains start at the circulant matrix and apply uniformly random simple
    switchings (no-op when the sampled 2x2 minor is not switchable), so
    every state is a class member.
    """
    if spec.kind != "switch_mcmc":
        raise ValueError("spec.kind must be 'switch_mcmc'")
    m, n = spec.m, spec.n
    rng = spec.rng() if rng is None else rng
    states = np.broadcast_to(_circulant_dense(n, spec.d, m), (count, m, n)).copy()
    k = np.arange(count)
    for _ in range(spec.resolved_steps):
        ii = rng.integers(0, m, size=(count, 2))
        jj = rng.integers(0, n, size=(count, 2))
        i1, i2 = ii[:, 0], ii[:, 1]
        j1, j2 = jj[:, 0], jj[:, 1]
        x11 = states[k, i1, j1]
        x12 = states[k, i1, j2]
        x21 = states[k, i2, j1]
        x22 = states[k, i2, j2]
        # I or J minor: equal diagonals, equal anti-diagonals, and the two
        # values differ.  Degenerate sites (repeated index) never qualify.
        sw = (x11 == x22) & (x12 == x21) & (x11 != x12)
        if sw.any():
            w = np.flatnonzero(sw)
            states[k[w], i1[w], j1[w]] ^= 1
            states[k[w], i1[w], j2[w]] ^= 1
            states[k[w], i2[w], j1[w]] ^= 1
            states[k[w], i2[w], j2[w]] ^= 1
    return states


def sample_switch_mcmc(spec: SamplerSpec, rng: Optional[np.random.Generator] = None) -> BiregularBitMatrix:
    """One approximately-uniform draw via the switch chain."""
    dense = switch_mcmc_dense(spec, 1, rng)
    return BiregularBitMatrix.from_dense(dense[0])


# -- permutation model ---------------------------------------------------------------


@dataclass(frozen=True)
class PermutationTuple:
    """d permutations of [n]; their matrix sum is a d-regular multigraph."""

    perms: tuple  # tuple of d tuples, each a permutation of range(n)

    @property
    def d(self) -> int:
        return len(self.perms)

    @property
    def n(self) -> int:
        return len(self.perms[0])

    def multiplicity(self) -> np.ndarray:
        """Entrywise sum of the d permutation matrices (values in [0, d])."""
        n = self.n
        out = np.zeros((n, n), dtype=np.int64)
        for perm in self.perms:
            out[np.arange(n), list(perm)] += 1
        return out

    def validate(self) -> None:
        n = self.n
        for perm in self.perms:
            if sorted(perm) != list(range(n)):
                raise ValueError("not a permutation of range(n)")


def permutation_batch(spec: SamplerSpec, count: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """(count, d, n) array of iid uniform permutations."""
    if spec.kind != "permutation_model":
        raise ValueError("spec.kind must be 'permutation_model'")
    rng = spec.rng() if rng is None else rng
    n, d = spec.n, spec.d
    base = np.tile(np.arange(n, dtype=np.int64), (count * d, 1))
    perms = rng.permuted(base, axis=1)
    return perms.reshape(count, d, n)


def sample_permutation_model(spec: SamplerSpec, rng: Optional[np.random.Generator] = None) -> PermutationTuple:
    perms = permutation_batch(spec, 1, rng)[0]
    return PermutationTuple(tuple(tuple(int(x) for x in perm) for perm in perms))


# -- Erdos-Renyi digraph --------------------------------------------------------------


def er_dense(spec: SamplerSpec, count: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """(count, n, n) iid Bernoulli(p) 0/1 entries."""
    if spec.kind != "erdos_renyi":
        raise ValueError("spec.kind must be 'erdos_renyi'")
    rng = spec.rng() if rng is None else rng
    n = spec.n
    return (rng.random((count, n, n)) < spec.p).astype(np.uint8)


def sample_er(spec: SamplerSpec, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """One n x n Bernoulli(p) 0/1 matrix (no regularity constraint)."""
    return er_dense(spec, 1, rng)[0]


# -- exhaustive enumeration ------------------------------------------------------------


def enumeration_size_bound(m: int, n: int, d: int) -> int:
    """Crude upper bound on the backtracking search space."""
    return math.comb(n, d) ** m


def enumerate_all(
    m: int,
    n: int,
    d: int,
    dp: Optional[int] = None,
    max_states: int = DEFAULT_ENUMERATION_CAP,
) -> Iterator[BiregularBitMatrix]:
    """Every class member exactly once, ascending packed-row order.

    Rows are packed with bit j = column j; rows are emitted depth-first
    with each row's candidate masks in ascending integer order.  Guarded
    by a search-space cap (raises SearchSpaceTooLarge).
    """
    dp = d * m // n if dp is None else dp
    if m * d != n * dp:
        raise ValueError(f"edge-count mismatch: m*d = {m * d} != n*dp = {n * dp}")
    if not (0 <= d <= n and 0 <= dp <= m):
        raise ValueError("degrees out of range")
    if enumeration_size_bound(m, n, d) > max_states:
        raise SearchSpaceTooLarge(
            f"C({n},{d})^{m} = {enumeration_size_bound(m, n, d)} exceeds cap {max_states}"
        )
    candidates = sorted(
        sum(1 << j for j in combo) for combo in itertools.combinations(range(n), d)
    )
    rem = [dp] * n
    rows: list = []

    def feasible(rows_left: int) -> bool:
        full = 0
        for r in rem:
            if r > rows_left:
                return False
            if r == rows_left:
                full += 1
        return full <= d or rows_left == 0

    def rec() -> Iterator[BiregularBitMatrix]:
        i = len(rows)
        if i == m:
            yield BiregularBitMatrix(list(rows), n, _trusted=True)
            return
        rows_left = m - i - 1
        for mask in candidates:
            bits = mask
            ok = True
            while bits:
                low = bits & -bits
                if rem[low.bit_length() - 1] == 0:
                    ok = False
                    break
                bits ^= low
            if not ok:
                continue
            bits = mask
            while bits:
                low = bits & -bits
                rem[low.bit_length() - 1] -= 1
                bits ^= low
            if feasible(rows_left):
                rows.append(mask)
                yield from rec()
                rows.pop()
            bits = mask
            while bits:
                low = bits & -bits
                rem[low.bit_length() - 1] += 1
                bits ^= low

    return rec()


# -- unified front door -----------------------------------------------------------------


def sample_many(spec: SamplerSpec, count: int):
    """Draw `count` samples of the spec's kind (objects, not raw arrays).

    This is the canonical sequence: identical (spec, count) reproduces it
    bit for bit.  Dense-array kernels back the heavy Monte Carlo paths.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if spec.kind == "rejection":
        dense = rejection_dense(spec, count)
        return [BiregularBitMatrix.from_dense(dense[i]) for i in range(count)]
    if spec.kind == "switch_mcmc":
        dense = switch_mcmc_dense(spec, count)
        return [BiregularBitMatrix.from_dense(dense[i]) for i in range(count)]
    if spec.kind == "permutation_model":
        perms = permutation_batch(spec, count)
        return [
            PermutationTuple(tuple(tuple(int(x) for x in perm) for perm in sample))
            for sample in perms
        ]
    if spec.kind == "erdos_renyi":
        return list(er_dense(spec, count))
    if spec.kind == "enumerate":
        raise ValueError("use enumerate_all() for exhaustive generation")
    raise ValueError(f"unknown sampler kind {spec.kind!r}")
