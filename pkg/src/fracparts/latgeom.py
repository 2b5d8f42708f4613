"""Geometry of numbers: the scaled relation lattice, LLL reduction with exact
rationals, quasi-orthogonal generator extraction, and the sublattice
determinant identity.

Reduction quality constants are explicit: LLL at delta = 0.99 with the
transform retained, successive minima estimated by reduced-basis sup norms,
and an exact shortest-vector enumeration available in small dimensions to
validate those estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import PolySystem, Real
from .intlinalg import (
    column_echelon,
    det_bareiss,
    det_fraction,
    frac_inverse,
    gram_det,
    identity,
    kernel_columns,
    lattice_det_from_columns,
    mat_mul,
    mat_vec,
)

LLL_DELTA = Fraction(99, 100)


class DependenceError(ValueError):
    pass


class SingularH1Error(ValueError):
    pass


class PrecisionError(ValueError):
    pass


def _linf(v: Sequence[Fraction]) -> Fraction:
    return max((abs(Fraction(x)) for x in v), default=Fraction(0))


def _dot(u, v) -> Fraction:
    return sum((Fraction(a) * Fraction(b) for a, b in zip(u, v)), Fraction(0))


def wedge_norm_sq(vectors: Sequence[Sequence[Fraction]]) -> Fraction:
    """Squared r-volume of the parallelepiped (Gram determinant), exact."""
    return gram_det(vectors)


def wedge_norm(vectors: Sequence[Sequence[Fraction]]) -> float:
    return math.sqrt(float(wedge_norm_sq(vectors)))


@dataclass
class LatticeBasis:
    """Basis rows over Q, optionally with the unimodular transform that
    produced them from the construction-order generators."""

    vectors: List[List[Fraction]]
    reduced_flag: bool = False
    minima_estimates: List[Fraction] = field(default_factory=list)
    transform: Optional[List[List[int]]] = None  # rows: new basis in old generators
    k: Optional[int] = None
    d: Optional[int] = None
    B: Optional[Tuple[Fraction, ...]] = None
    eta: Optional[Fraction] = None

    @property
    def n(self) -> int:
        return len(self.vectors)

    @property
    def dim(self) -> int:
        return len(self.vectors[0])


def build_relation_lattice(system: PolySystem, B: Sequence, eta) -> LatticeBasis:
    """The (k+d)-dimensional scaled relation lattice.

    Generators: (1/B_i) e_i - sum_j (beta_ij / eta^j) e_{k+j} for each i, and
    (1/eta^j) e_{k+j} for each j, with beta_ij the system coefficients.
    Lattice points with sup norm <= 1 are exactly the integer pairs (h, a)
    with |h_i| <= B_i and |sum_i h_i beta_ij - a_j| <= eta^j.
    """
    k, d = system.k, system.d
    Bv = [b.value if isinstance(b, Real) else Fraction(b) for b in B]
    if len(Bv) != k or any(b < 1 for b in Bv):
        raise ValueError("need one bound B_i >= 1 per polynomial")
    # the lemma hypothesis wants eta <= 1/100; the construction itself only
    # needs eta < 1/2 (so that unit-box points force integer a), and the
    # desk-scale examples exercise larger eta
    ev = eta.value if isinstance(eta, Real) else Fraction(eta)
    if not (0 < ev < Fraction(1, 2)):
        raise ValueError("eta must lie in (0, 1/2)")
    max_err = max((system.coeff(i, j).err for i in range(1, k + 1)
                   for j in range(1, d + 1)), default=Fraction(0))
    if max_err > ev ** d / 2 ** 20:
        raise PrecisionError(
            f"coefficient rounding radius {max_err} too coarse for eta^d = {ev ** d}")
    dim = k + d
    rows = []
    for i in range(k):
        row = [Fraction(0)] * dim
        row[i] = 1 / Bv[i]
        for j in range(1, d + 1):
            row[k + j - 1] = -system.coeff(i + 1, j).value / ev ** j
        rows.append(row)
    for j in range(1, d + 1):
        row = [Fraction(0)] * dim
        row[k + j - 1] = 1 / ev ** j
        rows.append(row)
    return LatticeBasis(vectors=rows, transform=identity(dim),
                        k=k, d=d, B=tuple(Bv), eta=ev)


def _gram_schmidt(basis):
    n = len(basis)
    ortho = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    norms = []
    for i in range(n):
        v = [Fraction(x) for x in basis[i]]
        for j in range(i):
            if norms[j] == 0:
                raise DependenceError("input vectors are linearly dependent")
            mu[i][j] = _dot(basis[i], ortho[j]) / norms[j]
            v = [a - mu[i][j] * b for a, b in zip(v, ortho[j])]
        ortho.append(v)
        norms.append(_dot(v, v))
    if any(nsq == 0 for nsq in norms):
        raise DependenceError("input vectors are linearly dependent")
    return ortho, mu, norms


def reduce_basis(basis: LatticeBasis, delta: Fraction = LLL_DELTA) -> LatticeBasis:
    """LLL reduction with exact rational arithmetic; same lattice, transform kept."""
    vecs = [list(row) for row in basis.vectors]
    n = len(vecs)
    U = [list(row) for row in (basis.transform or identity(n))]
    ortho, mu, norms = _gram_schmidt(vecs)
    kk = 1
    while kk < n:
        for j in range(kk - 1, -1, -1):
            r = round(mu[kk][j])
            if r:
                vecs[kk] = [a - r * b for a, b in zip(vecs[kk], vecs[j])]
                U[kk] = [a - r * b for a, b in zip(U[kk], U[j])]
                for t in range(j):
                    mu[kk][t] -= r * mu[j][t]
                mu[kk][j] -= r
        if norms[kk] >= (delta - mu[kk][kk - 1] ** 2) * norms[kk - 1]:
            kk += 1
        else:
            vecs[kk], vecs[kk - 1] = vecs[kk - 1], vecs[kk]
            U[kk], U[kk - 1] = U[kk - 1], U[kk]
            ortho, mu, norms = _gram_schmidt(vecs)
            kk = max(kk - 1, 1)
    estimates = sorted(_linf(v) for v in vecs)
    return LatticeBasis(vectors=vecs, reduced_flag=True, minima_estimates=estimates,
                        transform=U, k=basis.k, d=basis.d, B=basis.B, eta=basis.eta)


def shortest_vector(basis: LatticeBasis) -> Tuple[List[Fraction], Fraction]:
    """Exact shortest nonzero lattice vector (l2) by depth-first enumeration.

    Intended for validating reduced-basis estimates in dimension <= 8.
    """
    red = basis if basis.reduced_flag else reduce_basis(basis)
    vecs = red.vectors
    n = len(vecs)
    if n > 8:
        raise ValueError("exact enumeration is limited to dimension <= 8")
    ortho, mu, norms = _gram_schmidt(vecs)
    best_sq = min(_dot(v, v) for v in vecs)
    best_x = None

    def recurse(i, partial, coeffs):
        nonlocal best_sq, best_x
        if i < 0:
            if any(coeffs) and partial < best_sq:
                best_sq = partial
                best_x = list(coeffs)
            return
        center = -sum(coeffs[j] * mu[j][i] for j in range(i + 1, n))
        x0 = round(center)
        step = 0
        while True:
            done = 0
            for x in ({x0} if step == 0 else {x0 - step, x0 + step}):
                add = (x - center) ** 2 * norms[i]
                if partial + add <= best_sq:
                    coeffs[i] = x
                    recurse(i - 1, partial + add, coeffs)
                    coeffs[i] = 0
                else:
                    done += 1
            if done == (1 if step == 0 else 2):
                break
            step += 1

    recurse(n - 1, Fraction(0), [0] * n)
    if best_x is None:  # b_1 itself is the minimum
        best_x = [1] + [0] * (n - 1)
        best_sq = _dot(vecs[0], vecs[0])
    vec = [sum(best_x[j] * vecs[j][t] for j in range(n)) for t in range(red.dim)]
    return vec, best_sq


@dataclass
class GeneratorSet:
    """Quasi-orthogonal relation vectors extracted from the reduced lattice."""

    r: int
    h_vecs: Tuple[Tuple[int, ...], ...]
    a_vecs: Tuple[Tuple[int, ...], ...]
    B: Tuple[Fraction, ...]
    eta: Fraction
    tilde_product: Fraction
    orth_ratio: float
    orth_ratio_sq: Fraction  # exact wedge^2 / prod(l2^2), in (0, 1]

    def h_tilde(self) -> List[List[Fraction]]:
        return [[Fraction(h) / b for h, b in zip(hv, self.B)] for hv in self.h_vecs]

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "h_vecs": [list(h) for h in self.h_vecs],
            "a_vecs": [list(a) for a in self.a_vecs],
            "B": [str(b) for b in self.B],
            "eta": str(self.eta),
            "tilde_product": str(self.tilde_product),
            "orth_ratio": self.orth_ratio,
            "orth_ratio_sq": str(self.orth_ratio_sq),
        }

    @staticmethod
    def from_dict(d: dict) -> "GeneratorSet":
        return GeneratorSet(
            r=d["r"], h_vecs=tuple(tuple(h) for h in d["h_vecs"]),
            a_vecs=tuple(tuple(a) for a in d["a_vecs"]),
            B=tuple(Fraction(b) for b in d["B"]), eta=Fraction(d["eta"]),
            tilde_product=Fraction(d["tilde_product"]),
            orth_ratio=d["orth_ratio"], orth_ratio_sq=Fraction(d["orth_ratio_sq"]))


@dataclass
class NoShortVector:
    """Dichotomy outcome: the reduced lattice offers no usable generator subset."""

    reason: str


def membership_residuals(system: PolySystem, h: Sequence[int], a: Sequence[int]):
    """Centers and interval radii of |sum_i h_i beta_ij - a_j| per slot j."""
    centers, slacks = [], []
    for j in range(1, system.d + 1):
        c = Fraction(0)
        s = Fraction(0)
        for i, hi in enumerate(h):
            if hi:
                coeff = system.coeff(i + 1, j)
                c += hi * coeff.value
                s += abs(hi) * coeff.err
        centers.append(abs(c - a[j - 1]))
        slacks.append(s)
    return centers, slacks


def decisively_in_region(system: PolySystem, h: Sequence[int], a: Sequence[int],
                         B: Sequence[Fraction], eta: Fraction) -> bool:
    """True when (h, a) is in the region R with the coefficient error interval
    decisively inside (no false positives from rounded coefficients)."""
    if any(abs(hi) > b for hi, b in zip(h, B)):
        return False
    centers, slacks = membership_residuals(system, h, a)
    return all(c + s <= eta ** j for j, (c, s) in enumerate(zip(centers, slacks), start=1))


def quasi_orthogonal_generators(system: PolySystem, B: Sequence, eta,
                                N_target: int, c_orth: float,
                                C_slack: Optional[Fraction] = None,
                                max_r: Optional[int] = None):
    """Extract r quasi-orthogonal (h, a) pairs from the reduced relation lattice.

    Walks the maximal reduced-basis prefix of sup norm <= 1 (each member
    re-verified as a region point exactly), then searches index subsets by
    descending size; a subset qualifies when the rescaled h vectors have
    orthogonality ratio >= c_orth and sup-norm product within the slack
    factor of N_target^(-1/(d+1)).  Among qualifying subsets of a size, the
    one with the largest maximal r x r minor wins, ties lexicographic.
    Returns NoShortVector when nothing qualifies.  ``max_r`` caps the subset
    size (a caller that must leave at least one polynomial behind passes
    k - 1).
    """
    if N_target < 2:
        raise ValueError("N_target must be at least 2")
    k, d = system.k, system.d
    if C_slack is None:
        C_slack = Fraction(2 ** (k + d))
    C_slack = Fraction(C_slack)
    lat = build_relation_lattice(system, B, eta)
    red = reduce_basis(lat)
    Bv, ev = red.B, red.eta

    prefix = []  # (h, a) integer pairs for the usable prefix
    for row, coeffs in zip(red.vectors, red.transform):
        if _linf(row) > 1:
            break
        h = tuple(coeffs[:k])
        a = tuple(coeffs[k:])
        if not decisively_in_region(system, h, a, Bv, ev):
            break
        prefix.append((h, a))
    J = len(prefix)
    if J == 0:
        return NoShortVector("no reduced basis vector fits in the unit box")

    c_orth_sq = Fraction(c_orth) ** 2
    # tilde_product^(d+1) <= C_slack^(d+1) / N_target, compared exactly
    prod_bound_pow = C_slack ** (d + 1) / N_target

    htils = [[Fraction(h_i) / b for h_i, b in zip(h, Bv)] for h, _a in prefix]
    r_hi = min(J, k if max_r is None else max_r)
    for r in range(r_hi, 0, -1):
        best = None  # (max_minor_abs, subset, data)
        for subset in combinations(range(J), r):
            rows = [htils[i] for i in subset]
            wsq = wedge_norm_sq(rows)
            if wsq == 0:
                continue
            l2sq = Fraction(1)
            for v in rows:
                l2sq *= _dot(v, v)
            if wsq < c_orth_sq * l2sq:
                continue
            tp = Fraction(1)
            for v in rows:
                tp *= _linf(v)
            if tp ** (d + 1) > prod_bound_pow:
                continue
            minor = max(abs(det_fraction([[row[c] for c in cols] for row in rows]))
                        for cols in combinations(range(k), r))
            if best is None or minor > best[0]:
                best = (minor, subset, (wsq, l2sq, tp))
        if best is not None:
            _minor, subset, (wsq, l2sq, tp) = best
            ratio_sq = wsq / l2sq
            return GeneratorSet(
                r=r,
                h_vecs=tuple(prefix[i][0] for i in subset),
                a_vecs=tuple(prefix[i][1] for i in subset),
                B=Bv, eta=ev, tilde_product=tp,
                orth_ratio=math.sqrt(float(ratio_sq)),
                orth_ratio_sq=ratio_sq)
    return NoShortVector(
        f"no subset of the {J}-vector prefix met the orthogonality/product bounds")


# ---------------------------------------------------------------------------
# Sublattice determinant identity.
# ---------------------------------------------------------------------------


@dataclass
class SublatticeReport:
    det1: int
    det2: int
    det3: int
    identity_holds: bool

    def to_dict(self) -> dict:
        return {"det1": self.det1, "det2": self.det2, "det3": self.det3,
                "identity_holds": self.identity_holds}


def solution_lattice_basis(H1: Sequence[Sequence[int]],
                           H2: Sequence[Sequence[int]]) -> List[List[int]]:
    """Column basis of {y in Z^l : H1 x = H2 y solvable in integers x}.

    Computed as the projection of the integer kernel of [M | det(H1) I] with
    M = det(H1) H1^{-1} H2 (an integer matrix).
    """
    r = len(H1)
    ell = len(H2[0])
    D = det_bareiss(H1)
    if D == 0:
        raise SingularH1Error("H1 must be invertible")
    H1inv = frac_inverse(H1)
    A = mat_mul(H1inv, H2)
    M = [[int(D * A[i][j]) for j in range(ell)] for i in range(r)]
    for i in range(r):
        for j in range(ell):
            if D * A[i][j] != M[i][j]:
                raise ArithmeticError("adjugate product was not integral")
    stacked = [[M[i][j] for j in range(ell)] + [D * int(i == t) for t in range(r)]
               for i in range(r)]
    ker = kernel_columns(stacked)
    if len(ker) != ell:
        raise ArithmeticError("solution lattice is not full rank")
    return [[ker[j][i] for j in range(ell)] for i in range(ell)]  # columns -> matrix


def sublattice_determinants(H1: Sequence[Sequence[int]],
                            H2: Sequence[Sequence[int]]) -> SublatticeReport:
    """det(Lambda_1), det(Lambda_2), det(Lambda_3) and the product identity.

    Lambda_1 = H1 Z^r, Lambda_2 = H1 Z^r + H2 Z^l, Lambda_3 the solution
    lattice; all three determinants are computed independently and the
    identity det1 = det2 * det3 is checked, not assumed.
    """
    r = len(H1)
    det1 = abs(det_bareiss(H1))
    if det1 == 0:
        raise SingularH1Error("H1 must be invertible")
    combined = [list(H1[i]) + list(H2[i]) for i in range(r)]
    det2 = lattice_det_from_columns(combined)
    Zb = solution_lattice_basis(H1, H2)
    det3 = abs(det_bareiss(Zb))
    ok = det1 == det2 * det3
    if not ok:
        raise ArithmeticError(
            f"determinant identity failed: {det1} != {det2} * {det3}")
    return SublatticeReport(det1=det1, det2=det2, det3=det3, identity_holds=ok)


# ---------------------------------------------------------------------------
# Residue-enumeration oracles (used by tests to cross-check the determinants).
# ---------------------------------------------------------------------------


def _encode(coords: np.ndarray, D: int) -> np.ndarray:
    out = np.zeros(coords.shape[0], dtype=np.int64)
    for c in range(coords.shape[1]):
        out = out * D + coords[:, c]
    return out


def _decode(idx: np.ndarray, D: int, r: int) -> np.ndarray:
    out = np.empty((idx.shape[0], r), dtype=np.int64)
    rem = idx.copy()
    for c in range(r - 1, -1, -1):
        out[:, c] = rem % D
        rem //= D
    return out


def _subgroup_closure(generators: List[List[int]], D: int, r: int) -> np.ndarray:
    """Sorted encoded elements of the subgroup of (Z/D)^r the generators span.

    Cosets of the running subgroup are disjoint, so each generator g only
    needs its multiplier m (smallest m >= 1 with m g inside) and then m-1
    whole-coset appends.
    """
    S = np.array([0], dtype=np.int64)
    for g in generators:
        gv = np.array([x % D for x in g], dtype=np.int64)
        if not gv.any():
            continue
        m = 1
        acc = gv.copy()
        while True:
            code = int(_encode(acc[None, :], D)[0])
            pos = int(np.searchsorted(S, code))
            if pos < S.size and S[pos] == code:
                break
            m += 1
            acc = (acc + gv) % D
        if m == 1:
            continue
        coords = _decode(S, D, r)
        blocks = [S]
        for t in range(1, m):
            blocks.append(_encode((coords + t * gv) % D, D))
        S = np.sort(np.concatenate(blocks))
    return S


def _member(code_coords: np.ndarray, S1: np.ndarray, extra, D: int) -> bool:
    """Membership of one residue in S1 extended by the coset generators in extra."""
    import itertools as _it
    for combo in _it.product(*[range(m) for _g, m in extra]):
        w = code_coords.copy()
        for (g, _m), t in zip(extra, combo):
            if t:
                w = (w - t * g) % D
        code = int(_encode(w[None, :], D)[0])
        pos = int(np.searchsorted(S1, code))
        if pos < S1.size and S1[pos] == code:
            return True
    return False


def lambda2_residue_count(H1, H2, D: int) -> int:
    """#{z in [0,D)^r reachable as H1 x + H2 y mod D}.

    The H1 subgroup is enumerated outright; each H2 column then contributes
    its coset multiplier, and the count is the product (cosets of a subgroup
    partition it, so no residue is double-counted).
    """
    r = len(H1)
    gens1 = [[H1[i][j] for i in range(r)] for j in range(len(H1[0]))]
    S1 = _subgroup_closure(gens1, D, r)
    extra: List[Tuple[np.ndarray, int]] = []
    count = S1.size
    for j in range(len(H2[0])):
        g = np.array([H2[i][j] % D for i in range(r)], dtype=np.int64)
        if not g.any():
            continue
        m = 1
        while not _member((m * g) % D, S1, extra, D):
            m += 1
        if m > 1:
            extra.append((g, m))
            count *= m
    return int(count)


def lambda3_residue_count(H1, H2, D: int, chunk: int = 1 << 20) -> int:
    """#{y in [0,D)^l : H1 x = H2 y mod D solvable} by direct enumeration."""
    r = len(H1)
    ell = len(H2[0])
    gens1 = [[H1[i][j] for i in range(r)] for j in range(len(H1[0]))]
    S1 = _subgroup_closure(gens1, D, r)
    member = np.zeros(D ** r, dtype=bool)
    member[S1] = True
    H2a = np.array(H2, dtype=np.int64)
    total = D ** ell
    count = 0
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        ys = _decode(idx, D, ell)
        codes = _encode((ys @ H2a.T) % D, D)
        count += int(np.count_nonzero(member[codes]))
    return count
