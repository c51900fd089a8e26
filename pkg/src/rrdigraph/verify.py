"""Sampled verification suites behind the `verify` CLI subcommand.

Each suite draws matrices (or permutation tuples), checks every exact
identity and proven inequality of its coupling on each draw, and emits
one record per invariant with a status, the number of instances checked,
and the worst margin seen.  A failed record means a defect somewhere:
all of these are theorems.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from .couplings import RowOrder, SwitchSite, column_walk, reflect, simple_switch
from .exchangeable import (
    InvariantViolation,
    good_event_co,
    permutation_diagnostics,
    reflection_f,
    reflection_vf,
    switching_f,
    switching_vf,
    _reduce_pair,
)
from .matrices import VertexSetPair, codegree
from .samplers import SamplerSpec, sample_many, stream_generator

__all__ = ["VerifyRecord", "SuiteResult", "run_suite", "SUITES"]

SUITES = ("reflection", "switching", "permutation", "all")

SCHEMA_VERSION = 1


@dataclass
class VerifyRecord:
    invariant: str
    status: str  # "pass" | "fail"
    checked: int
    worst_margin: Optional[float] = None  # slack of the tightest instance
    detail: str = ""

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class SuiteResult:
    suite: str
    records: List[VerifyRecord]
    config: dict

    @property
    def ok(self) -> bool:
        return all(r.status == "pass" for r in self.records)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "ok": self.ok,
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
        }


class _Tracker:
    """Counts checks, remembers the smallest slack and first failure."""

    def __init__(self, invariant: str):
        self.invariant = invariant
        self.checked = 0
        self.failures = 0
        self.worst: Optional[float] = None
        self.detail = ""

    def check(self, ok: bool, margin: Optional[float] = None, detail: str = ""):
        self.checked += 1
        if margin is not None and (self.worst is None or margin < self.worst):
            self.worst = margin
        if not ok:
            self.failures += 1
            if not self.detail:
                self.detail = detail

    def record(self) -> VerifyRecord:
        return VerifyRecord(
            invariant=self.invariant,
            status="pass" if self.failures == 0 else "fail",
            checked=self.checked,
            worst_margin=self.worst,
            detail=self.detail,
        )


def _sample_matrices(n, d, count, seed, m=None, dp=None, steps=None):
    kind = "rejection" if d <= 2 or n - d <= 2 else "switch_mcmc"
    steps = steps if steps is not None else min(100 * n * d, 4000)
    spec = SamplerSpec(kind=kind, n=n, d=d, m=m, dp=dp, steps=steps, seed=seed)
    return sample_many(spec, count)


def _reflection_suite(n, d, samples, seed, exact_cap, m=None, dp=None, steps=None):
    mats = _sample_matrices(n, d, samples, seed, m, dp, steps)
    rng = stream_generator(seed, 10_000)
    t_invol = _Tracker("reflect twice is the identity")
    t_member = _Tracker("reflection outputs stay in the class")
    t_ident = _Tracker("scale-n identity: n*f = n*co - d^2 + b")
    t_anti = _Tracker("antisymmetry of the codegree difference")
    t_walk = _Tracker("walk returns to 0 with at most min(dp, m-dp) up-steps")
    t_vf = _Tracker("reflection self-bound v_f <= f + 2*d_hat^2/n")
    for mat in mats:
        mm = mat.m
        i1, i2 = 0, 1
        if mm > 2 and rng.random() < 0.5:
            pick = rng.choice(mm, 2, replace=False)
            i1, i2 = int(pick[0]), int(pick[1])
        order = RowOrder(i1, i2)
        j1, j2 = (int(x) for x in rng.choice(mat.n, 2, replace=False))

        image = reflect(mat, j1, j2, order)
        t_invol.check(reflect(image, j1, j2, order) == mat)
        try:
            image.validate()
            t_member.check(True)
        except Exception as exc:  # pragma: no cover - indicates a defect
            t_member.check(False, detail=str(exc))

        try:
            diag = reflection_f(mat, i1, i2, order)
            t_ident.check(True, detail="")
        except InvariantViolation as exc:
            t_ident.check(False, detail=str(exc))
            continue

        delta_fwd = codegree(mat, i1, i2).co - codegree(image, i1, i2).co
        delta_bwd = codegree(image, i1, i2).co - codegree(mat, i1, i2).co
        t_anti.check(delta_fwd == -delta_bwd)

        walk = column_walk(mat, j1, j2, order)
        cap = min(mat.dp, mat.m - mat.dp)
        t_walk.check(
            walk.positions[-1] == 0 and walk.r <= cap,
            margin=float(cap - walk.r),
        )

        try:
            if mat.n <= exact_cap:
                diag = reflection_vf(mat, i1, i2, order, mode="exact")
                margin = float(
                    diag.f + Fraction(2 * mat.d_hat**2, mat.n) - diag.v_f
                )
            else:
                diag = reflection_vf(
                    mat, i1, i2, order, mode="mc", samples=500, rng=rng
                )
                margin = (
                    float(diag.f) + 2 * mat.d_hat**2 / mat.n - diag.v_f_estimate
                )
            t_vf.check(bool(diag.bound_ok), margin=margin)
        except InvariantViolation as exc:
            t_vf.check(False, detail=str(exc))
    return [t.record() for t in (t_invol, t_member, t_ident, t_anti, t_walk, t_vf)]


def _switching_suite(n, d, samples, seed, exact_cap, m=None, dp=None, steps=None):
    mats = _sample_matrices(n, d, samples, seed, m, dp, steps)
    rng = stream_generator(seed, 20_000)
    t_invol = _Tracker("switch twice is the identity")
    t_member = _Tracker("switching outputs stay in the class")
    t_ident = _Tracker("minor-count form equals neighbourhood form; f = f1 + f2")
    t_f2 = _Tracker("error term: |f2| <= eta*(f1 + 2p(1-p)n*m*mu) at minimal eta")
    t_vf = _Tracker("switching self-bound v_f <= m*d_hat*(f + 2*m*d_hat*mu)")
    for mat in mats:
        mm, nn = mat.m, mat.n
        site = SwitchSite(
            *(int(x) for x in rng.choice(mm, 2, replace=False)),
            *(int(x) for x in rng.choice(nn, 2, replace=False)),
        )
        image = simple_switch(mat, site)
        t_invol.check(simple_switch(image, site) == mat)
        if image is not mat:
            try:
                image.validate()
                t_member.check(True)
            except Exception as exc:  # pragma: no cover
                t_member.check(False, detail=str(exc))

        a = int(rng.integers(1, mm))
        b = int(rng.integers(1, nn))
        pair = VertexSetPair.of(
            (int(x) for x in rng.choice(mm, a, replace=False)),
            (int(x) for x in rng.choice(nn, b, replace=False)),
        )
        try:
            diag = switching_f(mat, pair)
            t_ident.check(True)
        except InvariantViolation as exc:
            t_ident.check(False, detail=str(exc))
            continue

        reduced = _reduce_pair(mat, pair)
        ok, margin = _f2_good_event_check(mat, reduced, diag)
        t_f2.check(ok, margin=margin)

        k_ab = (
            reduced.a * (mm - reduced.a) * reduced.b * (nn - reduced.b)
        )
        try:
            if k_ab * mm <= exact_cap:
                vf = switching_vf(mat, pair, mode="exact")
                bound = Fraction(mm * mat.d_hat) * (
                    vf.f + 2 * mm * mat.d_hat * reduced.mu(mat)
                )
                margin = float(bound - vf.v_f)
            else:
                vf = switching_vf(mat, pair, mode="mc", samples=400, rng=rng)
                bound_f = float(
                    Fraction(mm * mat.d_hat)
                    * (vf.f + 2 * mm * mat.d_hat * reduced.mu(mat))
                )
                margin = bound_f - vf.v_f_estimate
            t_vf.check(bool(vf.bound_ok), margin=margin)
        except InvariantViolation as exc:
            t_vf.check(False, detail=str(exc))
    return [t.record() for t in (t_invol, t_member, t_ident, t_f2, t_vf)]


def _f2_good_event_check(mat, pair, diag):
    """|f2| <= eta*(f1 + 2 p(1-p) n m mu) at the smallest eta that holds.

    Scaled through: with W = max|n co - d^2| over row pairs (so eta* =
    W/(d(n-d))), the check is |f2_s| d(n-d) <= W (f1_s + 2 d(n-d) d a b R)
    where R = m for the n^2 scale and 1 for the square scale n.
    """
    n, d, mm = mat.n, mat.d, mat.m
    if d in (0, n):
        return True, None
    event = good_event_co(mat, 0)
    w = event.worst_deviation_scaled
    r_factor = 1 if diag.scale == n else mm
    lhs = abs(diag.f2_scaled) * d * (n - d)
    rhs = w * (diag.f1_scaled + 2 * d * (n - d) * d * pair.a * pair.b * r_factor)
    return lhs <= rhs, float(rhs - lhs)


def _permutation_suite(n, d, samples, seed, exact_cap, m=None, dp=None, steps=None):
    spec = SamplerSpec(kind="permutation_model", n=n, d=d, seed=seed)
    tuples = sample_many(spec, samples)
    rng = stream_generator(seed, 30_000)
    t_mult = _Tracker("multiplicity matrix has all margins equal to d")
    t_invol = _Tracker("transposing one factor twice is the identity")
    t_ident = _Tracker("scale-n identity: n*f = n*e_pi - d*a*b")
    t_vf = _Tracker("permutation self-bound v_f <= f/2 + (d/n)ab")
    for pi in tuples:
        mult = pi.multiplicity()
        t_mult.check(
            bool((mult.sum(axis=0) == d).all() and (mult.sum(axis=1) == d).all())
        )
        j = int(rng.integers(0, d))
        u, v = (int(x) for x in rng.choice(n, 2, replace=False))
        swapped = _transpose_factor(pi, j, u, v)
        t_invol.check(_transpose_factor(swapped, j, u, v) == pi)

        a = int(rng.integers(1, n))
        b = int(rng.integers(1, n + 1))
        pair = VertexSetPair.of(
            (int(x) for x in rng.choice(n, a, replace=False)),
            (int(x) for x in rng.choice(n, b, replace=False)),
        )
        try:
            diag = permutation_diagnostics(pi, pair)
            t_ident.check(True)
            bound = Fraction(diag.f_scaled, 2 * n) + Fraction(d * a * b, n)
            t_vf.check(bool(diag.bound_ok), margin=float(bound - diag.v_f))
        except InvariantViolation as exc:
            t_ident.check(False, detail=str(exc))
    return [t.record() for t in (t_mult, t_invol, t_ident, t_vf)]


def _transpose_factor(pi, j, u, v):
    from .samplers import PermutationTuple

    perms = [list(p) for p in pi.perms]
    perms[j][u], perms[j][v] = perms[j][v], perms[j][u]
    return PermutationTuple(tuple(tuple(p) for p in perms))


def run_suite(
    suite: str,
    n: int,
    d: int,
    samples: int,
    seed: int = 0,
    exact_cap: Optional[int] = None,
    m: Optional[int] = None,
    dp: Optional[int] = None,
    steps: Optional[int] = None,
) -> List[SuiteResult]:
    """Run one named suite (or all three) and return their results."""
    if suite not in SUITES:
        raise ValueError(f"suite must be one of {SUITES}")
    config = {
        "n": n,
        "d": d,
        "m": n if m is None else m,
        "dp": d if dp is None else dp,
        "samples": samples,
        "seed": seed,
        "exact_cap": exact_cap,
        "steps": steps,
    }
    runners = {
        "reflection": (_reflection_suite, 20),
        "switching": (_switching_suite, 10**6),
        "permutation": (_permutation_suite, 0),
    }
    chosen = SUITES[:3] if suite == "all" else (suite,)
    results = []
    for name in chosen:
        runner, default_cap = runners[name]
        cap = default_cap if exact_cap is None else exact_cap
        records = runner(n, d, samples, seed, cap, m, dp, steps)
        results.append(SuiteResult(name, records, dict(config, exact_cap=cap)))
    return results
