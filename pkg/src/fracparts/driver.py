"""The density-increment solve loop and the exponent-measurement harness.

Fallback ladder (the analytic argument's dichotomies need not fire at desk
scale): Fourier branch, then the reduction branch, then brute force within
the enumeration cap, else an inconclusive outcome.  Every fallback is
recorded in the run stats, and every Found is re-verified exactly against
the root system before it is reported.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath

from .core import (
    DEFAULT_ENUM_CAP,
    DEFAULT_PRECISION_BITS,
    Epsilons,
    HorizonCapError,
    Poly,
    PolySystem,
    Real,
    SystemState,
    _checkpointed_min,
    eval_system,
    first_hit,
    horizon_count,
)
from .denomstruct import cluster_by_denominator
from .diophantine import build_relations, default_q_rel, sigma_vector
from .expsum import (
    DEFAULT_MAX_BOX,
    HIT_DENSITY,
    BoxTooLargeError,
    large_coefficients,
)
from .latgeom import GeneratorSet, NoShortVector, quasi_orthogonal_generators
from .reduction import (
    TERMINAL_EXHAUSTED,
    TERMINAL_FOUND,
    Certificate,
    DegenerateHorizonError,
    HorizonOverflowError,
    IntegralityError,
    LiftVerificationError,
    ReductionPreconditionError,
    density_invariant,
    lift_solution,
    reduce_dimension,
)

STATUS_FOUND = "found"
STATUS_NOT_FOUND = "not-found"
STATUS_INCONCLUSIVE = "inconclusive"


@dataclass
class SolverConfig:
    c_hit: float = 0.05
    C_cfg: int = 4
    c_orth: float = 0.05
    delta_const: Optional[str] = None     # fraction string; None = per-(k,d) default
    tol_rel: float = 1.0
    precision_bits: int = DEFAULT_PRECISION_BITS
    enum_cap: int = DEFAULT_ENUM_CAP
    max_box: int = DEFAULT_MAX_BOX
    max_depth: Optional[int] = None       # None = k - 1 (k strictly decreases)
    brute_force_threshold: int = 64
    seed: int = 0
    q_rel_cap: int = 10 ** 6
    C_impl: Optional[float] = None  # None: per-step implementation constant

    def delta_fraction(self) -> Optional[Fraction]:
        return Fraction(self.delta_const) if self.delta_const is not None else None

    def to_dict(self) -> dict:
        return {
            "c_hit": self.c_hit, "C_cfg": self.C_cfg, "c_orth": self.c_orth,
            "delta_const": self.delta_const, "tol_rel": self.tol_rel,
            "precision_bits": self.precision_bits, "enum_cap": self.enum_cap,
            "max_box": self.max_box, "max_depth": self.max_depth,
            "brute_force_threshold": self.brute_force_threshold,
            "seed": self.seed, "q_rel_cap": self.q_rel_cap, "C_impl": self.C_impl,
        }

    @staticmethod
    def from_dict(d: dict) -> "SolverConfig":
        cfg = SolverConfig()
        for key, val in d.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config field {key!r}")
            setattr(cfg, key, val)
        return cfg


@dataclass
class SolveStats:
    evaluations: int = 0
    reductions: int = 0
    max_depth_reached: int = 0
    fourier_branches: List[str] = field(default_factory=list)
    fallbacks: List[str] = field(default_factory=list)
    density_reports: List[dict] = field(default_factory=list)
    delta_gate: List[bool] = field(default_factory=list)
    lift_failures: int = 0
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "evaluations": self.evaluations,
            "reductions": self.reductions,
            "max_depth_reached": self.max_depth_reached,
            "fourier_branches": list(self.fourier_branches),
            "fallbacks": list(self.fallbacks),
            "density_reports": list(self.density_reports),
            "delta_gate": list(self.delta_gate),
            "lift_failures": self.lift_failures,
            "wall_time": self.wall_time,
        }


@dataclass
class SolveOutcome:
    status: str
    n: Optional[int]
    certificate: Certificate
    stats: SolveStats

    def to_dict(self) -> dict:
        return {"status": self.status, "n": self.n,
                "certificate": self.certificate.to_dict(),
                "stats": self.stats.to_dict()}


def _found_certificate(state: SystemState, n: int, constants: dict) -> Certificate:
    dists = eval_system(state.system, n)
    return Certificate(root=state.to_dict(), chain=[],
                       terminal={"kind": TERMINAL_FOUND, "n": n,
                                 "dists": [str(dv) for dv in dists]},
                       constants=constants)


def _exhausted_certificate(state: SystemState, reason: str, constants: dict) -> Certificate:
    return Certificate(root=state.to_dict(), chain=[],
                       terminal={"kind": TERMINAL_EXHAUSTED, "reason": reason},
                       constants=constants)


def generator_bounds(eps: Epsilons) -> List[int]:
    """B_i = max(ceil(1/eps_i), floor(eps_i^-1 Delta^(-2/(2k)^4))).

    Large enough that meeting 1/B_i implies meeting eps_i, and wide enough
    to contain the post-clustering frequency range.
    """
    k = eps.k
    delta = eps.delta_product
    with mpmath.workprec(96):
        factor = mpmath.power(mpmath.mpf(delta.numerator) / delta.denominator,
                              -2.0 / (2 * k) ** 4)
        out = []
        for e in eps.eps:
            inv = 1 / e.value
            cap = int(mpmath.floor(factor * mpmath.mpf(inv.numerator) / inv.denominator))
            out.append(max(math.ceil(inv), cap, 2))
    return out


def _refit_generators(gens: GeneratorSet, system: PolySystem, q0: int):
    """Reinterpret generator numerators over denominator q0 (a_j = round(q0 sigma_j)).

    Returns None when some refit residual leaves the eta window, meaning q0
    is not actually the common denominator of these relations.
    """
    new_a = []
    for h in gens.h_vecs:
        sig = sigma_vector(system, h)
        a_vec = []
        for j, s in enumerate(sig, start=1):
            a_j = round(q0 * s)
            slack = sum(abs(hi) * system.polys[i].coeffs[j - 1].err
                        for i, hi in enumerate(h))
            if abs(s - Fraction(a_j, q0)) + slack > gens.eta ** j:
                return None
            a_vec.append(a_j)
        new_a.append(tuple(a_vec))
    return GeneratorSet(r=gens.r, h_vecs=gens.h_vecs, a_vecs=tuple(new_a),
                        B=gens.B, eta=gens.eta, tilde_product=gens.tilde_product,
                        orth_ratio=gens.orth_ratio, orth_ratio_sq=gens.orth_ratio_sq)


def solve(state: SystemState, config: Optional[SolverConfig] = None) -> SolveOutcome:
    """Find n < x meeting every tolerance, preferring structure to brute force.

    Never raises for a solver-path failure; all failure modes land in the
    outcome.  A Found outcome has been re-verified exactly on the root
    system.
    """
    if config is None:
        config = SolverConfig()
    stats = SolveStats()
    t0 = time.monotonic()
    constants = {
        "config": config.to_dict(),
        # the analytic guarantee is only claimed for eps_i <= 1/100; larger
        # tolerances are solved anyway and the departure is recorded
        "within_theorem_hypothesis": state.eps.within_theorem_hypothesis,
    }
    outcome = _solve_level(state, config, stats, depth=0, constants=constants,
                           root_k=state.k)
    if outcome.status == STATUS_FOUND:
        dists = eval_system(state.system, outcome.n)
        if not all(dv < e.value for dv, e in zip(dists, state.eps.eps)):
            raise LiftVerificationError(0, max(dists), min(e.value for e in state.eps.eps))
    stats.wall_time = time.monotonic() - t0
    return outcome


def _scan_level(state: SystemState, config: SolverConfig, stats: SolveStats,
                constants: dict, reason: str) -> SolveOutcome:
    try:
        n = first_hit(state.system, state.eps, state.y.value, enum_cap=config.enum_cap)
        stats.evaluations += horizon_count(state.y) if n is None else n
    except HorizonCapError:
        stats.fallbacks.append(f"{reason}:enum-cap")
        return SolveOutcome(STATUS_INCONCLUSIVE, None,
                            _exhausted_certificate(state, f"{reason}; horizon over enum cap",
                                                   constants), stats)
    if n is not None:
        return SolveOutcome(STATUS_FOUND, n, _found_certificate(state, n, constants), stats)
    return SolveOutcome(STATUS_NOT_FOUND, None,
                        _exhausted_certificate(state, f"{reason}; exhaustive scan found no hit",
                                               constants), stats)


def _solve_level(state: SystemState, config: SolverConfig, stats: SolveStats,
                 depth: int, constants: dict, root_k: int) -> SolveOutcome:
    stats.max_depth_reached = max(stats.max_depth_reached, depth)
    budget = config.max_depth if config.max_depth is not None else root_k - 1
    assert depth <= budget, "recursion exceeded its depth budget (k must shrink)"
    # record whether the analytic argument's hypothesis held at this level:
    # Delta^-1 <= x^(2/C)  <=>  x^2 Delta^C >= 1 (exact rational comparison)
    xv = state.y.value
    stats.delta_gate.append(
        xv * xv * state.eps.delta_product ** config.C_cfg >= 1)
    horizon = horizon_count(state.y)
    if horizon <= config.brute_force_threshold:
        return _scan_level(state, config, stats, constants, "below brute-force threshold")

    try:
        dich = large_coefficients(state.system, state.eps, state.y.value,
                                  c_hit=config.c_hit, max_box=config.max_box,
                                  enum_cap=config.enum_cap)
    except (BoxTooLargeError, ValueError, HorizonCapError) as exc:
        stats.fallbacks.append(f"fourier:{exc}")
        return _scan_level(state, config, stats, constants, "fourier unavailable")
    stats.fourier_branches.append(dich.branch)

    if dich.branch == HIT_DENSITY:
        # the count already located hits; return the smallest one
        return _scan_level(state, config, stats, constants, "hit-density scan")

    outcome = _reduction_path(state, config, stats, depth, constants, dich, root_k)
    if outcome is not None:
        return outcome
    stats.fallbacks.append("reduction-path-exhausted")
    return _scan_level(state, config, stats, constants, "reduction path exhausted")


def _reduction_path(state, config, stats, depth, constants, dich,
                    root_k: int) -> Optional[SolveOutcome]:
    relations = build_relations(state.system, state.eps, state.y.value, dich,
                                Q_rel=default_q_rel(state.eps, config.C_cfg,
                                                    config.q_rel_cap),
                                tol_rel=config.tol_rel, C_cfg=config.C_cfg)
    if not relations:
        stats.fallbacks.append("no-relations")
        return None
    cluster = cluster_by_denominator(relations)
    B = generator_bounds(state.eps)
    x = state.y.value
    q0_candidates = [1]
    if cluster.q_merged > 1:
        q0_candidates.append(cluster.q_merged)
    for q0 in q0_candidates:
        eta = min(Fraction(1, 100), Fraction(q0 ** config.C_cfg) / (2 * x))
        if eta <= 0:
            continue
        gens = quasi_orthogonal_generators(state.system, B, eta,
                                           N_target=max(2, 2 * len(cluster.members) + 1),
                                           c_orth=config.c_orth,
                                           max_r=state.k - 1)
        if isinstance(gens, NoShortVector):
            stats.fallbacks.append(f"q0={q0}:no-short-vector")
            continue
        if gens.r >= state.k:
            stats.fallbacks.append(f"q0={q0}:r-not-below-k")
            continue
        if q0 > 1:
            refit = _refit_generators(gens, state.system, q0)
            if refit is None:
                stats.fallbacks.append(f"q0={q0}:refit-failed")
                continue
            gens = refit
        try:
            step = reduce_dimension(state, gens, q0, C_cfg=config.C_cfg,
                                    delta_const=config.delta_fraction())
        except (ReductionPreconditionError, IntegralityError,
                DegenerateHorizonError) as exc:
            stats.fallbacks.append(f"q0={q0}:{type(exc).__name__}")
            continue
        stats.reductions += 1
        stats.density_reports.append(
            density_invariant(state, step, C_impl=config.C_impl).to_dict())
        child = _solve_level(step.child_state(), config, stats, depth + 1,
                             constants, root_k)
        if child.status != STATUS_FOUND:
            stats.fallbacks.append(f"q0={q0}:child-{child.status}")
            continue
        try:
            n, dists = lift_solution(step, child.n, state)
        except (LiftVerificationError, HorizonOverflowError):
            stats.lift_failures += 1
            stats.fallbacks.append(f"q0={q0}:lift-verification")
            continue
        step.child_hit = child.n
        cert = Certificate(root=state.to_dict(),
                           chain=[step] + child.certificate.chain,
                           terminal={"kind": TERMINAL_FOUND, "n": n,
                                     "dists": [str(dv) for dv in dists]},
                           constants=constants)
        return SolveOutcome(STATUS_FOUND, n, cert, stats)
    return None


# ---------------------------------------------------------------------------
# Exponent measurement harness.
# ---------------------------------------------------------------------------

GENERATOR_SPECS = ("monomial", "full", "zero")


@dataclass
class ExperimentRow:
    k: int
    d: int
    x: int
    trial_id: int
    seed: int
    min_max_dist: Fraction
    fitted_exponent: float
    flagged: bool = False

    def csv_row(self) -> List[str]:
        min_field = "" if self.min_max_dist < 0 else repr(float(self.min_max_dist))
        return [str(self.k), str(self.d), str(self.x), str(self.trial_id),
                str(self.seed), min_field,
                "nan" if math.isnan(self.fitted_exponent) else repr(self.fitted_exponent)]


CSV_COLUMNS = ["k", "d", "x", "trial_id", "seed", "min_max_dist", "fitted_exponent"]


def _counter_uniform(seed: int, trial: int, index: int,
                     bits: int = DEFAULT_PRECISION_BITS) -> Fraction:
    """Deterministic uniform draw in [0,1): a keyed counter hashed to bits."""
    digest = hashlib.sha256(f"{seed}:{trial}:{index}".encode()).digest()
    value = int.from_bytes(digest, "big") >> (256 - bits)
    return Fraction(value, 1 << bits)


def draw_system(generator_spec: str, k: int, d: int, seed: int, trial: int,
                bits: int = DEFAULT_PRECISION_BITS) -> PolySystem:
    if generator_spec not in GENERATOR_SPECS:
        raise ValueError(f"unknown generator spec {generator_spec!r}")
    polys = []
    index = 0
    for _i in range(k):
        coeffs = []
        for j in range(1, d + 1):
            if generator_spec == "zero":
                coeffs.append(Real(Fraction(0)))
            elif generator_spec == "monomial" and j < d:
                coeffs.append(Real(Fraction(0)))
            else:
                coeffs.append(Real(_counter_uniform(seed, trial, index, bits),
                                   exact=True))
            index += 1
        polys.append(Poly(tuple(coeffs)))
    return PolySystem(tuple(polys))


def _fit_exponent(xs: Sequence[int], mins: Sequence[Fraction]) -> float:
    """Least-squares slope of log(min) against log(x), negated."""
    pts = [(math.log(float(x)), math.log(float(m))) for x, m in zip(xs, mins)
           if m > 0]
    if len(pts) < 2:
        return float("nan")
    mx = sum(p[0] for p in pts) / len(pts)
    my = sum(p[1] for p in pts) / len(pts)
    var = sum((p[0] - mx) ** 2 for p in pts)
    cov = sum((p[0] - mx) * (p[1] - my) for p in pts)
    if var == 0:
        return float("nan")
    return -(cov / var)


def measure_exponent(generator_spec: str, k: int, d: int, x_grid: Sequence[int],
                     trials: int, config: Optional[SolverConfig] = None):
    """Seeded trials of min_{n<x} max_i ||f_i(n)|| across an ascending x grid.

    Returns (rows, summary); summary carries the per-trial fitted exponents
    and their median.  Rows whose minimum is exactly zero (degenerate
    generators) are flagged and excluded from the fit.
    """
    if config is None:
        config = SolverConfig()
    xs = sorted(set(int(x) for x in x_grid))
    if xs != [int(x) for x in x_grid]:
        raise ValueError("x grid must be ascending and duplicate-free")
    rows: List[ExperimentRow] = []
    exponents: List[float] = []
    for trial in range(trials):
        system = draw_system(generator_spec, k, d, config.seed, trial,
                             config.precision_bits)
        try:
            results = _checkpointed_min(system, xs, enum_cap=config.enum_cap)
        except HorizonCapError:
            for x in xs:
                rows.append(ExperimentRow(k, d, x, trial, config.seed,
                                          Fraction(-1), float("nan"), flagged=True))
            continue
        mins = [v for _n, v in results]
        exponent = _fit_exponent(xs, mins)
        if not math.isnan(exponent):
            exponents.append(exponent)
        for x, m in zip(xs, mins):
            rows.append(ExperimentRow(k, d, x, trial, config.seed, m, exponent,
                                      flagged=(m == 0)))
    exponents.sort()
    median = exponents[len(exponents) // 2] if exponents else float("nan")
    summary = {
        "generator_spec": generator_spec, "k": k, "d": d,
        "x_grid": xs, "trials": trials, "seed": config.seed,
        "fitted_exponents": exponents, "median_exponent": median,
    }
    return rows, summary
