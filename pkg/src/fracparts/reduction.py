"""Dimension reduction: from quasi-orthogonal generators with a common
denominator to a strictly smaller polynomial system, plus the lifting map
back and the density bookkeeping.

Soundness is never assumed: a lifted solution is re-evaluated exactly
against the parent system and rejected loudly if any tolerance fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import mpmath

from .core import Epsilons, Poly, PolySystem, Real, SystemState, eval_system
from .intlinalg import det_bareiss, det_fraction, frac_inverse, mat_vec, solve_integer
from .latgeom import (
    GeneratorSet,
    LatticeBasis,
    reduce_basis,
    solution_lattice_basis,
    sublattice_determinants,
)

class ReductionPreconditionError(ValueError):
    pass


class IntegralityError(ArithmeticError):
    """No integer b' table exists; the generator set or q0 is invalid."""


class DegenerateHorizonError(ValueError):
    """The reduced horizon collapsed to y <= 1; reduction is unprofitable."""


class LiftVerificationError(AssertionError):
    """A lifted solution failed exact re-evaluation against the parent."""

    def __init__(self, index: int, dist: Fraction, bound: Fraction):
        self.index = index
        self.dist = dist
        self.bound = bound
        super().__init__(
            f"constraint {index}: distance {dist} >= tolerance {bound}")


class HorizonOverflowError(ValueError):
    pass


def default_delta_const(k: int, d: int) -> Fraction:
    """Desk-scale default for the reduction constant delta.

    The proof only needs delta small in terms of k and d; 1/4 keeps the
    child horizon y ~ delta^3-sized windows usable at desk scale, and the
    exact lift re-verification bounds the risk of a too-large choice.
    """
    return Fraction(1, 4)


def _fraction(v) -> Fraction:
    return v.value if isinstance(v, Real) else Fraction(v)


def _linf_col(Z: Sequence[Sequence[int]], col: int) -> int:
    return max(abs(Z[row][col]) for row in range(len(Z)))


@dataclass
class ReductionStep:
    """One executed dimension reduction with everything needed to replay it."""

    k: int
    k_prime: int
    r: int
    perm: Tuple[int, ...]         # position p holds original index perm[p] (0-based)
    q0: int
    D1: int
    D2: int
    Z: List[List[int]]            # columns: reduced basis of the solution lattice
    b_prime_upper: List[List[int]]   # rows i = 1..r, slots j = 1..d
    b_prime: List[List[int]]         # rows i = r+1..k, slots j = 1..d
    g: PolySystem
    eps_prime: Epsilons
    y: Real
    delta_const: Fraction
    C_cfg: int
    parent_digest: str
    gens: GeneratorSet
    B_prime: Tuple[Fraction, ...]
    min_h_tilde: Fraction
    child_hit: Optional[int] = None

    def child_state(self) -> SystemState:
        return SystemState(self.g, self.eps_prime, self.y)

    def scale(self) -> int:
        """The lift multiplier: n = n' * q0 * D2."""
        return self.q0 * self.D2

    def to_dict(self) -> dict:
        return {
            "k": self.k, "k_prime": self.k_prime, "r": self.r,
            "perm": list(self.perm), "q0": self.q0, "D1": self.D1, "D2": self.D2,
            "Z": [list(row) for row in self.Z],
            "b_prime_upper": [list(row) for row in self.b_prime_upper],
            "b_prime": [list(row) for row in self.b_prime],
            "g": [[c.to_str() for c in p.coeffs] for p in self.g.polys],
            "g_err": [[str(c.err) for c in p.coeffs] for p in self.g.polys],
            "eps_prime": [e.to_str() for e in self.eps_prime.eps],
            "y": self.y.to_str(),
            "delta_const": str(self.delta_const),
            "C_cfg": self.C_cfg,
            "parent_digest": self.parent_digest,
            "gens": self.gens.to_dict(),
            "B_prime": [str(b) for b in self.B_prime],
            "min_h_tilde": str(self.min_h_tilde),
            "child_hit": self.child_hit,
        }

    @staticmethod
    def from_dict(d: dict) -> "ReductionStep":
        g_polys = []
        for coeffs, errs in zip(d["g"], d["g_err"]):
            g_polys.append(Poly(tuple(
                Real(Fraction(c), exact=(Fraction(e) == 0), err=Fraction(e))
                for c, e in zip(coeffs, errs))))
        return ReductionStep(
            k=d["k"], k_prime=d["k_prime"], r=d["r"], perm=tuple(d["perm"]),
            q0=d["q0"], D1=d["D1"], D2=d["D2"],
            Z=[list(row) for row in d["Z"]],
            b_prime_upper=[list(row) for row in d["b_prime_upper"]],
            b_prime=[list(row) for row in d["b_prime"]],
            g=PolySystem(tuple(g_polys)),
            eps_prime=Epsilons(tuple(Fraction(e) for e in d["eps_prime"])),
            y=Real(Fraction(d["y"])),
            delta_const=Fraction(d["delta_const"]), C_cfg=d["C_cfg"],
            parent_digest=d["parent_digest"],
            gens=GeneratorSet.from_dict(d["gens"]),
            B_prime=tuple(Fraction(b) for b in d["B_prime"]),
            min_h_tilde=Fraction(d["min_h_tilde"]),
            child_hit=d.get("child_hit"))


def _best_leading_columns(h_tilde: List[List[Fraction]], k: int, r: int) -> Tuple[int, ...]:
    """Columns of the maximal r x r minor (exact |det|, lexicographic ties)."""
    best_cols = None
    best_val = None
    for cols in combinations(range(k), r):
        val = abs(det_fraction([[row[c] for c in cols] for row in h_tilde]))
        if best_val is None or val > best_val:
            best_val, best_cols = val, cols
    if best_val == 0:
        raise ReductionPreconditionError("generator h vectors are rank deficient")
    return best_cols


def reduce_dimension(state: SystemState, gens: GeneratorSet, q0: int,
                     C_cfg: int = 4, delta_const=None) -> ReductionStep:
    """Build the k' = k - r reduced system from a generator set.

    The generators' a-vectors are read as numerators over q0 (q0 = 1 when
    they came straight from the relation lattice).  The b' table is solved
    exactly over Z; a non-integral solve raises IntegralityError, and a
    collapsed child horizon raises DegenerateHorizonError.
    """
    k, d = state.k, state.system.d
    r = gens.r
    if not (1 <= r < k):
        raise ReductionPreconditionError(f"need 1 <= r < k, got r={r}, k={k}")
    if q0 < 1:
        raise ReductionPreconditionError("q0 must be a positive integer")
    if delta_const is None:
        delta_const = default_delta_const(k, d)
    delta = Fraction(delta_const)
    if not (0 < delta < 1):
        raise ReductionPreconditionError("delta_const must lie in (0, 1)")
    x = _fraction(state.y)
    eta = gens.eta
    if not (eta * x < q0 ** C_cfg):
        raise ReductionPreconditionError(
            f"residual scale eta={eta} fails eta < q0^C/x = {q0 ** C_cfg}/{x}")

    # membership of each generator relative to q0, with coefficient error slack
    for ell in range(r):
        h = gens.h_vecs[ell]
        a = gens.a_vecs[ell]
        for j in range(1, d + 1):
            center = Fraction(0)
            slack = Fraction(0)
            for i, hi in enumerate(h):
                if hi:
                    c = state.system.coeff(i + 1, j)
                    center += hi * c.value
                    slack += abs(hi) * c.err
            if abs(center - Fraction(a[j - 1], q0)) + slack > eta ** j:
                raise ReductionPreconditionError(
                    f"generator {ell} slot {j}: residual exceeds eta^{j}")

    h_tilde = gens.h_tilde()
    lead = _best_leading_columns(h_tilde, k, r)
    perm = tuple(list(lead) + [c for c in range(k) if c not in lead])

    H1 = [[gens.h_vecs[ell][perm[p]] for p in range(r)] for ell in range(r)]
    H2 = [[gens.h_vecs[ell][perm[p]] for p in range(r, k)] for ell in range(r)]
    D1 = abs(det_bareiss(H1))
    rep = sublattice_determinants(H1, H2)
    D2 = rep.det2

    Z_cols = solution_lattice_basis(H1, H2)  # (k-r) x (k-r), columns generate
    # LLL-reduce the solution lattice (rows of the transpose are the columns)
    rows = [[Fraction(Z_cols[i][j]) for i in range(k - r)] for j in range(k - r)]
    red = reduce_basis(LatticeBasis(vectors=rows))
    Z = [[int(red.vectors[j][i]) for j in range(k - r)] for i in range(k - r)]
    if abs(det_bareiss(Z)) * D2 != D1:
        raise ArithmeticError("solution lattice determinant mismatch")

    # b' tables: H1 u_j - H2 w_j = D2^j q0^(j-1) a_j, solved exactly over Z
    A = [list(H1[ell]) + [-v for v in H2[ell]] for ell in range(r)]
    b_upper = [[0] * d for _ in range(r)]
    b_lower = [[0] * d for _ in range(k - r)]
    for j in range(1, d + 1):
        rhs = [D2 ** j * q0 ** (j - 1) * gens.a_vecs[ell][j - 1] for ell in range(r)]
        v = solve_integer(A, rhs)
        if v is None:
            raise IntegralityError(f"no integer b' for slot {j}")
        for i in range(r):
            b_upper[i][j - 1] = v[i]
        for i in range(k - r):
            b_lower[i][j - 1] = v[r + i]

    # f~_i(X) = f_perm(i)(D2 q0 X) - sum_j b'_{i,j} X^j for the trailing block
    scale = D2 * q0
    ftil = []  # list over i = r+1..k of coefficient Reals
    for p in range(r, k):
        orig = state.system.polys[perm[p]]
        coeffs = []
        for j in range(1, d + 1):
            c = orig.coeffs[j - 1]
            val = c.value * scale ** j - b_lower[p - r][j - 1]
            err = c.err * scale ** j
            coeffs.append(Real(val, exact=(err == 0), err=err))
        ftil.append(coeffs)

    Zinv = frac_inverse(Z)
    g_polys = []
    for m in range(k - r):
        coeffs = []
        for j in range(d):
            val = sum(Zinv[m][p] * ftil[p][j].value for p in range(k - r))
            err = sum(abs(Zinv[m][p]) * ftil[p][j].err for p in range(k - r))
            coeffs.append(Real(val, exact=(err == 0), err=err))
        g_polys.append(Poly(tuple(coeffs)))
    g = PolySystem(tuple(g_polys))

    B_perm = [gens.B[perm[p]] for p in range(k)]
    B_prime = tuple(delta ** -2 * B_perm[r + i] * _linf_col(Z, i)
                    for i in range(k - r))
    eps_prime = Epsilons(tuple(1 / b for b in B_prime))

    min_h = min(max(abs(v) for v in h_tilde[ell]) for ell in range(r))
    y_new = delta * x * min_h / (q0 ** (C_cfg + 1) * D2)
    if y_new <= 1:
        raise DegenerateHorizonError(f"reduced horizon {y_new} <= 1")

    return ReductionStep(
        k=k, k_prime=k - r, r=r, perm=perm, q0=q0, D1=D1, D2=D2, Z=Z,
        b_prime_upper=b_upper, b_prime=b_lower, g=g, eps_prime=eps_prime,
        y=Real(y_new), delta_const=delta, C_cfg=C_cfg,
        parent_digest=state.digest(), gens=gens, B_prime=B_prime,
        min_h_tilde=min_h)


def lift_solution(step: ReductionStep, n_prime: int, parent: SystemState):
    """Map a solution of the reduced system to the parent: n = n' q0 D2.

    The parent system is re-evaluated exactly at n and every tolerance is
    enforced; failure raises LiftVerificationError with the offending index.
    """
    if n_prime < 1:
        raise ValueError("n' must be a positive integer")
    if not (n_prime < _fraction(step.y)):
        raise HorizonOverflowError(f"n' = {n_prime} not below child horizon {step.y.value}")
    child_dists = eval_system(step.g, n_prime)
    for i, (dist, e) in enumerate(zip(child_dists, step.eps_prime.eps)):
        if dist >= e.value:
            raise LiftVerificationError(i, dist, e.value)
    n = n_prime * step.scale()
    if not (n < _fraction(parent.y)):
        raise HorizonOverflowError(f"lifted n = {n} not below parent horizon {parent.y.value}")
    dists = eval_system(parent.system, n)
    for i, (dist, e) in enumerate(zip(dists, parent.eps.eps)):
        if dist >= e.value:
            raise LiftVerificationError(i, dist, e.value)
    return n, dists


@dataclass
class DensityReport:
    lhs_str: str
    rhs_str: str
    ratio: float
    log10_ratio: float
    passed: bool
    C_impl: float           # may be inf as a float; the log form is always finite
    log10_C_impl: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs_str, "rhs": self.rhs_str, "ratio": self.ratio,
                "log10_ratio": self.log10_ratio, "passed": self.passed,
                "C_impl": self.C_impl, "log10_C_impl": self.log10_C_impl}


def implementation_constant(step: ReductionStep, C_cfg: Optional[int] = None) -> float:
    """log10 of this implementation's provable density-invariant slack.

    The chain ratio >= 1/C_impl follows from the construction's own bounds:
    prod B' = delta^(-2k') * (prod ||z_i||_inf) * (tail B) exactly, the LLL
    orthogonality defect prod||z_i|| <= 2^(k'(k'-1)/4) * D1/D2, Hadamard
    D1 <= (head B) * r^(r/2) * tilde_product, and min||h~|| >= tilde_product
    (each factor lies in (0, 1]).  Collecting terms:

        C_impl = q0^(C+1) * delta^-(1 + 2 k' E') * 2^(k'(k'-1)/4 * E')
                 * r^(r E' / 2),       E' = 3C^2 - C^2/k'^3.
    """
    C = C_cfg if C_cfg is not None else step.C_cfg
    kp, r = step.k_prime, step.r
    E_new = float(3 * C * C - Fraction(C * C, kp ** 3))
    delta = float(step.delta_const)
    log10 = ((C + 1) * math.log10(step.q0)
             - (1 + 2 * kp * E_new) * math.log10(delta)
             + (kp * (kp - 1) / 4) * E_new * math.log10(2)
             + (r * E_new / 2) * math.log10(r))
    return log10


def density_invariant(parent: SystemState, step: ReductionStep,
                      C_cfg: Optional[int] = None,
                      C_impl: Optional[float] = None) -> DensityReport:
    """Compare y' / (prod B')^(3C^2 - C^2/k'^3) with x / (prod B)^(3C^2 - C^2/k^3 - C^2/k^4).

    Computed in logs so astronomically large products stay finite; pass
    means lhs >= rhs / C_impl.  By default C_impl is the implementation's
    own provable slack for this step (see implementation_constant), recorded
    in the report; a caller may pin an explicit constant instead.
    """
    C = C_cfg if C_cfg is not None else step.C_cfg
    k, kp = step.k, step.k_prime
    C2 = Fraction(C) ** 2
    E_new = 3 * C2 - C2 / kp ** 3
    E_old = 3 * C2 - C2 / k ** 3 - C2 / k ** 4
    with mpmath.workprec(128):
        def logf(fr: Fraction):
            return mpmath.log(mpmath.mpf(fr.numerator)) - mpmath.log(mpmath.mpf(fr.denominator))

        log_bp = sum(logf(b) for b in step.B_prime)
        log_b = sum(logf(Fraction(b)) for b in step.gens.B)
        llhs = logf(_fraction(step.y)) - float(E_new) * log_bp
        lrhs = logf(_fraction(parent.y)) - float(E_old) * log_b
        lratio = llhs - lrhs
        ratio = float(mpmath.exp(lratio)) if lratio < 700 else math.inf
        lhs_s = mpmath.nstr(mpmath.exp(llhs), 8) if abs(llhs) < 700 else f"exp({mpmath.nstr(llhs, 8)})"
        rhs_s = mpmath.nstr(mpmath.exp(lrhs), 8) if abs(lrhs) < 700 else f"exp({mpmath.nstr(lrhs, 8)})"
        log10r = float(lratio / mpmath.log(10))
    if C_impl is None:
        log10_C = implementation_constant(step, C)
        C_impl_val = 10.0 ** log10_C if log10_C < 308 else math.inf
    else:
        C_impl_val = C_impl
        log10_C = math.log10(C_impl)
    passed = log10r >= -log10_C - 1e-9
    return DensityReport(lhs_str=lhs_s, rhs_str=rhs_s, ratio=ratio,
                         log10_ratio=log10r, passed=passed, C_impl=C_impl_val,
                         log10_C_impl=log10_C)


# ---------------------------------------------------------------------------
# Certificates.
# ---------------------------------------------------------------------------

TERMINAL_FOUND = "found-n"
TERMINAL_EXHAUSTED = "exhausted"


@dataclass
class Certificate:
    """Replayable record: root problem, reduction chain, terminal outcome."""

    root: dict                      # SystemState.to_dict() of the root problem
    chain: List[ReductionStep]
    terminal: dict                  # {"kind": found-n|exhausted, ...}
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "chain": [s.to_dict() for s in self.chain],
            "terminal": self.terminal,
            "constants": self.constants,
        }

    @staticmethod
    def from_dict(d: dict) -> "Certificate":
        return Certificate(root=d["root"],
                           chain=[ReductionStep.from_dict(s) for s in d["chain"]],
                           terminal=d["terminal"],
                           constants=d.get("constants", {}))


def state_from_dict(d: dict) -> SystemState:
    polys = []
    exact_flags = d.get("polys_exact")
    for pi, coeffs in enumerate(d["polys"]):
        cs = []
        for ci, cstr in enumerate(coeffs):
            val = Fraction(cstr)
            exact = exact_flags[pi][ci] if exact_flags else True
            cs.append(Real(val, exact=exact,
                           err=Fraction(0) if exact else Fraction(1, 2 ** 192)))
        polys.append(Poly(tuple(cs)))
    return SystemState(PolySystem(tuple(polys)),
                       Epsilons(tuple(Fraction(e) for e in d["eps"])),
                       Real(Fraction(d["x"])))


def verify_certificate(cert: Certificate) -> List[Tuple[str, bool, str]]:
    """Re-check every invariant of a certificate without re-running any search.

    Returns (check name, ok, detail) triples; the certificate is valid iff
    every ok flag is True.
    """
    checks: List[Tuple[str, bool, str]] = []

    def add(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    root_state = state_from_dict(cert.root)
    parent = root_state
    digest = root_state.digest()
    for idx, step in enumerate(cert.chain):
        tag = f"step{idx}"
        add(f"{tag}.digest", step.parent_digest == digest,
            f"{step.parent_digest[:12]} vs {digest[:12]}")
        add(f"{tag}.shrinks", step.k_prime < step.k,
            f"k'={step.k_prime} k={step.k}")
        k, d, r = step.k, parent.system.d, step.r
        H1 = [[step.gens.h_vecs[ell][step.perm[p]] for p in range(r)]
              for ell in range(r)]
        H2 = [[step.gens.h_vecs[ell][step.perm[p]] for p in range(r, k)]
              for ell in range(r)]
        add(f"{tag}.D1", abs(det_bareiss(H1)) == step.D1)
        try:
            rep = sublattice_determinants(H1, H2)
            add(f"{tag}.D2", rep.det2 == step.D2, f"{rep.det2} vs {step.D2}")
        except Exception as exc:  # noqa: BLE001 - report, never crash replay
            add(f"{tag}.D2", False, repr(exc))
        add(f"{tag}.detZ", abs(det_bareiss(step.Z)) * step.D2 == step.D1)
        # b' consistency per slot
        ok_b = True
        for j in range(1, d + 1):
            lhs = [sum(H1[ell][i] * step.b_prime_upper[i][j - 1] for i in range(r))
                   - sum(H2[ell][i] * step.b_prime[i][j - 1] for i in range(k - r))
                   for ell in range(r)]
            rhs = [step.D2 ** j * step.q0 ** (j - 1) * step.gens.a_vecs[ell][j - 1]
                   for ell in range(r)]
            if lhs != rhs:
                ok_b = False
        add(f"{tag}.b_prime", ok_b)
        # g construction identity at 20 sample points: Z g(t) == f~(t)
        scale = step.q0 * step.D2
        ok_g = True
        for t in range(1, 21):
            gvals = [p.eval(t) for p in step.g.polys]
            lhs = mat_vec(step.Z, gvals)
            for p in range(r, k):
                orig = parent.system.polys[step.perm[p]]
                want = orig.eval(scale * t) - sum(
                    step.b_prime[p - r][j - 1] * t ** j for j in range(1, d + 1))
                if lhs[p - r] != want:
                    ok_g = False
        add(f"{tag}.g_identity", ok_g)
        # B' / eps' / y formulas
        delta = step.delta_const
        B_perm = [Fraction(step.gens.B[step.perm[p]]) for p in range(k)]
        bp = tuple(delta ** -2 * B_perm[r + i] * _linf_col(step.Z, i)
                   for i in range(k - r))
        add(f"{tag}.B_prime", bp == tuple(step.B_prime))
        add(f"{tag}.eps_prime",
            tuple(e.value for e in step.eps_prime.eps) == tuple(1 / b for b in bp))
        h_tilde = step.gens.h_tilde()
        min_h = min(max(abs(v) for v in h_tilde[ell]) for ell in range(r))
        add(f"{tag}.min_h_tilde", min_h == step.min_h_tilde)
        y_want = delta * _fraction(parent.y) * min_h / (step.q0 ** (step.C_cfg + 1) * step.D2)
        add(f"{tag}.y", _fraction(step.y) == y_want, f"{step.y.value} vs {y_want}")
        add(f"{tag}.eta_gate",
            step.gens.eta * _fraction(parent.y) < step.q0 ** step.C_cfg)
        parent = step.child_state()
        digest = parent.digest()

    kind = cert.terminal.get("kind")
    if kind == TERMINAL_FOUND:
        n = cert.terminal["n"]
        dists = [Fraction(s) for s in cert.terminal["dists"]]
        fresh = eval_system(root_state.system, n)
        add("terminal.dists_match", fresh == dists)
        add("terminal.meets_eps",
            all(dv < e.value for dv, e in zip(fresh, root_state.eps.eps)))
        add("terminal.in_horizon", n < _fraction(root_state.y))
        # replay the lift chain bottom-up when reductions were used
        if cert.chain:
            m = cert.chain[-1].child_hit
            ok_chain = m is not None
            if ok_chain:
                for step in reversed(cert.chain):
                    m = m * step.scale()
                ok_chain = (m == n)
            add("terminal.lift_chain", ok_chain, f"recomposed {m} vs {n}")
    elif kind == TERMINAL_EXHAUSTED:
        add("terminal.exhausted", isinstance(cert.terminal.get("reason"), str))
    else:
        add("terminal.kind", False, f"unknown kind {kind!r}")
    return checks
