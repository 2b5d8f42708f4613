"""Exponential sums, smoothed counting, and the equidistribution dichotomy.

Phase discipline: every phase polynomial is reduced mod 1 in exact rational
arithmetic before exponentiation, so the only floating error is the final
rounding of an exact rational phase into a float (or an mpmath float at the
requested precision).  The box scan uses numpy doubles on those exactly
reduced phase coefficients; selected witnesses are re-evaluated with per-n
exact phase reduction before they are reported.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .core import (
    DEFAULT_ENUM_CAP,
    DEFAULT_PRECISION_BITS,
    Epsilons,
    Poly,
    PolySystem,
    Real,
    _diff_state,
    _scan_tables,
    frac_dist,
    hit_count,
)

DEFAULT_MAX_BOX = 20000

FrequencyVector = Tuple[int, ...]

HIT_DENSITY = "hit-density"
LARGE_COEFFICIENTS = "large-coefficients"

# additive slack, relative to floor(x), for the dyadic window membership of
# re-evaluated witnesses
WINDOW_REL_TOL = Fraction(1, 2 ** 40)


class BoxTooLargeError(Exception):
    """The frequency box exceeds the enumeration cap."""


class InvalidApproximationError(Exception):
    """Declared rational approximation fails its own quality precondition."""


# ---------------------------------------------------------------------------
# Smoothing kernel.
# ---------------------------------------------------------------------------

# Transition profile T on [0,1]: T(0)=1, T(1)=0, C^2 with vanishing first and
# second derivatives at both ends; piecewise cubic with knots at 1/3, 2/3
# (the integral of a quadratic B-spline).
_THIRD = Fraction(1, 3)
_TWO_THIRDS = Fraction(2, 3)


def _transition(s: Fraction) -> Fraction:
    if s <= 0:
        return Fraction(1)
    if s >= 1:
        return Fraction(0)
    if s <= _THIRD:
        return 1 - Fraction(9, 2) * s ** 3
    if s <= _TWO_THIRDS:
        return Fraction(1, 2) + Fraction(9, 2) * s - Fraction(27, 2) * s ** 2 + 9 * s ** 3
    return Fraction(9, 2) * (1 - s) ** 3


@dataclass(frozen=True)
class SmoothingKernel:
    """Fixed even bump: 1 on |t| <= 1/2, supported on |t| < 1, C^2 throughout.

    The transition on [1/2, 1] is a three-piece cubic spline.  Fourier data
    is computed numerically on demand; coefficients beyond ``fourier_tail_cut``
    are treated as tail.
    """

    fourier_tail_cut: int = 64

    def phi(self, u) -> Fraction:
        u = abs(u.value if isinstance(u, Real) else Fraction(u))
        if u <= Fraction(1, 2):
            return Fraction(1)
        if u >= 1:
            return Fraction(0)
        return _transition(2 * u - 1)

    def periodized(self, t, eps) -> Fraction:
        """Phi(t) = sum_m phi((t+m)/eps); equals phi(frac_dist(t)/eps) for eps <= 1/2."""
        e = eps.value if isinstance(eps, Real) else Fraction(eps)
        if not (0 < e <= Fraction(1, 2)):
            raise ValueError("kernel width must lie in (0, 1/2]")
        return self.phi(frac_dist(t) / e)

    def phi_hat(self, u: float) -> float:
        """Fourier transform integral phi(t) e(-ut) dt (real since phi is even)."""
        pieces = [(0, 0.5), (0.5, 0.5 + 1 / 6), (0.5 + 1 / 6, 0.5 + 1 / 3), (0.5 + 1 / 3, 1.0)]
        total = mpmath.mpf(0)
        for lo, hi in pieces:
            total += mpmath.quad(
                lambda t: float(self.phi(Fraction(float(t))))
                * mpmath.cos(2 * mpmath.pi * u * t), [lo, hi])
        return float(2 * total)

    def fourier_coefficient(self, eps, h: int) -> float:
        """Coefficient of e(h t) in the Fourier series of the eps-periodization."""
        e = float(eps.value if isinstance(eps, Real) else Fraction(eps))
        return e * self.phi_hat(e * h)


# ---------------------------------------------------------------------------
# Weyl sums.
# ---------------------------------------------------------------------------


def _phase_coefficients(system: PolySystem, h: Sequence[int]) -> List[Fraction]:
    """sigma_j = sum_i h_i f_{i,j}, reduced mod 1, for j = 1..d."""
    if len(h) != system.k:
        raise ValueError("frequency vector length must equal k")
    out = []
    for j in range(1, system.d + 1):
        sigma = Fraction(0)
        for i, hi in enumerate(h):
            if hi:
                sigma += hi * system.polys[i].coeffs[j - 1].value
        out.append(sigma - sigma.__floor__())
    return out


def _phase_table(sigma: Sequence[Fraction]):
    D = 1
    for s in sigma:
        D = D * s.denominator // math.gcd(D, s.denominator)
    nums = [int(s * D) for s in sigma]
    return D, nums


def weyl_sum(system: PolySystem, h: Sequence[int], x,
             bits: int = DEFAULT_PRECISION_BITS) -> mpmath.mpc:
    """sum_{n <= x} e(sum_i h_i f_i(n)) at ``bits`` working precision.

    Each phase is an exact rational reduced mod 1 before the complex
    exponential is taken, so results at different precisions agree to the
    smaller precision's rounding.
    """
    last = int(Fraction(x.value if isinstance(x, Real) else Fraction(x)).__floor__())
    sigma = _phase_coefficients(system, h)
    D, nums = _phase_table(sigma)
    with mpmath.workprec(bits + 16):
        total = mpmath.mpc(0)
        if all(v == 0 for v in nums):
            return mpmath.mpc(last, 0)
        diffs = _diff_state(nums, D, 1)
        cache = {} if D <= 65536 else None
        for _n in range(last):
            r = diffs[0]
            if cache is not None:
                val = cache.get(r)
                if val is None:
                    val = mpmath.expjpi(mpmath.mpf(2 * r) / D)
                    cache[r] = val
            else:
                val = mpmath.expjpi(mpmath.mpf(2 * r) / D)
            total += val
            for i in range(len(diffs) - 1):
                diffs[i] = (diffs[i] + diffs[i + 1]) % D
        return total


def _abs_sum_exact_phase(sigma: Sequence[Fraction], last: int) -> float:
    """|sum_{n<=last} e(P(n))| with exact per-n phase reduction, float arithmetic.

    The phase handed to cos/sin is an exact rational in [0,1), so the float
    error is bounded by last * 2pi * 2^-52.
    """
    D, nums = _phase_table(sigma)
    if all(v == 0 for v in nums):
        return float(last)
    diffs = _diff_state(nums, D, 1)
    re = 0.0
    im = 0.0
    tau = 2 * math.pi
    cos, sin = math.cos, math.sin
    invD = 1.0 / D
    for _n in range(last):
        ang = tau * (diffs[0] * invD)
        re += cos(ang)
        im += sin(ang)
        for i in range(len(diffs) - 1):
            diffs[i] = (diffs[i] + diffs[i + 1]) % D
    return math.hypot(re, im)


# ---------------------------------------------------------------------------
# Smoothed counting.
# ---------------------------------------------------------------------------


def smoothed_count(system: PolySystem, eps: Epsilons, x,
                   kernel: Optional[SmoothingKernel] = None,
                   enum_cap: int = DEFAULT_ENUM_CAP) -> Fraction:
    """sum_{n <= x} prod_i Phi_i(f_i(n)), exactly.

    Sandwiched between the strict hit counts at eps/2 and eps because the
    kernel's plateau covers |u| <= 1/2 and its support is |u| < 1.
    """
    if kernel is None:
        kernel = SmoothingKernel()
    last = int((x.value if isinstance(x, Real) else Fraction(x)).__floor__())
    if last < 1:
        return Fraction(0)
    if last * system.k > enum_cap:
        raise BoxTooLargeError(f"{last} x {system.k} evaluations exceed cap")
    D, tables = _scan_tables(system)
    evals = [e.value for e in eps.eps]
    # integer thresholds: plateau when 2*m*den <= num*D, support while m*den < num*D
    plateau = [(e.numerator * D, e.denominator) for e in evals]
    total = Fraction(0)
    for _n in range(1, last + 1):
        prod = Fraction(1)
        for diffs, e, (numD, den) in zip(tables, evals, plateau):
            r = diffs[0]
            m = r if 2 * r <= D else D - r
            md = m * den
            if md >= numD:          # outside support
                prod = Fraction(0)
                break
            if 2 * md > numD:       # transition band
                prod *= _transition(2 * Fraction(m, D) / e - 1)
        total += prod
        for diffs in tables:
            for i in range(len(diffs) - 1):
                diffs[i] = (diffs[i] + diffs[i + 1]) % D
    return total


# ---------------------------------------------------------------------------
# The dichotomy.
# ---------------------------------------------------------------------------


@dataclass
class FourierDichotomy:
    branch: str
    x_floor: int
    h_caps: Tuple[int, ...]
    density_count: Optional[int] = None
    density_threshold: Optional[float] = None
    Q: Optional[int] = None
    witnesses: List[Tuple[FrequencyVector, float]] = field(default_factory=list)
    flagged: bool = False
    flag_reason: str = ""

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "x_floor": self.x_floor,
            "h_caps": list(self.h_caps),
            "density_count": self.density_count,
            "density_threshold": self.density_threshold,
            "Q": self.Q,
            "witnesses": [[list(h), s] for h, s in self.witnesses],
            "flagged": self.flagged,
            "flag_reason": self.flag_reason,
        }

    @staticmethod
    def from_dict(d: dict) -> "FourierDichotomy":
        return FourierDichotomy(
            branch=d["branch"], x_floor=d["x_floor"], h_caps=tuple(d["h_caps"]),
            density_count=d.get("density_count"),
            density_threshold=d.get("density_threshold"), Q=d.get("Q"),
            witnesses=[(tuple(h), s) for h, s in d.get("witnesses", [])],
            flagged=d.get("flagged", False), flag_reason=d.get("flag_reason", ""))


def frequency_caps(eps: Epsilons) -> Tuple[int, ...]:
    """h_cap_i = floor(eps_i^-1 * Delta^(-1/(2k)^4))."""
    k = eps.k
    delta = eps.delta_product
    exponent = Fraction(1, (2 * k) ** 4)
    with mpmath.workprec(96):
        factor = mpmath.power(mpmath.mpf(delta.numerator) / delta.denominator,
                              -float(exponent))
        caps = []
        for e in eps.eps:
            v = factor / (mpmath.mpf(e.value.numerator) / e.value.denominator)
            caps.append(int(mpmath.floor(v)))
    return tuple(caps)


def _half_box(caps: Sequence[int]):
    """Nonzero h with first nonzero coordinate positive (conjugate halving)."""
    ranges = [range(-c, c + 1) for c in caps]
    for h in itertools.product(*ranges):
        for v in h:
            if v > 0:
                yield h
                break
            if v < 0:
                break


def _dyadic_index(s: float, N: int) -> Optional[int]:
    """Smallest j >= 1 with N/2^j <= s; then s <= 2N/2^j automatically."""
    if s <= 0:
        return None
    j = max(1, math.ceil(math.log2(N / s)))
    while (1 << j) * s < N:  # fix float boundary wobble
        j += 1
    while j > 1 and (1 << (j - 1)) * s >= N:
        j -= 1
    return j


def large_coefficients(system: PolySystem, eps: Epsilons, x, c_hit: float = 0.05,
                       max_box: int = DEFAULT_MAX_BOX,
                       enum_cap: int = DEFAULT_ENUM_CAP) -> FourierDichotomy:
    """Hit-density versus many-large-Fourier-coefficients dichotomy.

    Branch 1 fires when the strict hit count reaches c_hit * Delta * floor(x).
    Otherwise all nonzero h in the frequency box are scanned, |S(h)| values
    are bucketed into dyadic classes [x/Q, 2x/Q] with Q = 2^j, and the
    smallest Q whose class (after precise re-evaluation of its members)
    holds at least sqrt(Q) vectors wins.  If no class qualifies, the most
    populated one is returned with a diagnostic flag.
    """
    delta = eps.delta_product
    if delta > Fraction(1, 4):
        raise ValueError(f"Delta = {delta} exceeds 1/4")
    xv = x.value if isinstance(x, Real) else Fraction(x)
    N = int(xv.__floor__())
    if N < 2:
        raise ValueError("need floor(x) >= 2")

    caps = frequency_caps(eps)
    box = 1
    for c in caps:
        box *= 2 * c + 1
    if box > max_box:
        raise BoxTooLargeError(f"frequency box {box} exceeds cap {max_box}")

    hits = hit_count(system, eps, xv, enum_cap=enum_cap)
    threshold = Fraction(c_hit) * delta * N
    if hits >= threshold:
        return FourierDichotomy(branch=HIT_DENSITY, x_floor=N, h_caps=caps,
                                density_count=hits, density_threshold=float(threshold))

    # fast pass: numpy doubles on exactly reduced phase coefficients
    n = np.arange(1, N + 1, dtype=np.float64)
    npow = [n ** j for j in range(1, system.d + 1)]
    classes: dict = {}
    fast_abs: dict = {}
    for h in _half_box(caps):
        sigma = _phase_coefficients(system, h)
        ph = np.zeros_like(n)
        for j, s in enumerate(sigma):
            if s:
                ph += float(s) * npow[j]
        s_abs = float(np.abs(np.exp(2j * np.pi * ph).sum()))
        fast_abs[h] = s_abs
        j = _dyadic_index(s_abs, N)
        if j is not None:
            classes.setdefault(j, []).append(h)

    tol = Fraction(N) * WINDOW_REL_TOL
    WITNESS_EMIT_CAP = 32  # canonical members; each implies its mirror too

    def precise(h):
        return _abs_sum_exact_phase(_phase_coefficients(system, h), N)

    def window_members(j, members, stop_at=None):
        # strongest members first so truncation keeps the largest sums
        Q = 1 << j
        lo, hi = Fraction(N, Q) - tol, Fraction(2 * N, Q) + tol
        kept = []
        for h in sorted(members, key=lambda hh: (-fast_abs[hh], hh)):
            s_precise = precise(h)
            if lo <= Fraction(s_precise) <= hi:
                kept.append((h, s_precise))
                if stop_at is not None and len(kept) >= stop_at:
                    break
        return kept

    for j in sorted(classes):
        Q = 1 << j
        need = math.isqrt(Q)
        if need * need < Q:
            need += 1
        if 2 * len(classes[j]) < need:
            continue
        canonical_need = max((need + 1) // 2, 1)
        kept = window_members(j, classes[j],
                              stop_at=max(canonical_need, WITNESS_EMIT_CAP))
        if 2 * len(kept) >= need:
            witnesses = []
            for h, s in kept:
                witnesses.append((h, s))
                witnesses.append((tuple(-v for v in h), s))
            witnesses.sort(key=lambda w: w[0])
            return FourierDichotomy(branch=LARGE_COEFFICIENTS, x_floor=N,
                                    h_caps=caps, Q=Q, witnesses=witnesses)

    # nothing met its sqrt(Q) threshold: report the fullest class, flagged
    if classes:
        j = max(sorted(classes), key=lambda jj: len(classes[jj]))
        kept = window_members(j, classes[j], stop_at=WITNESS_EMIT_CAP) \
            or [(h, fast_abs[h]) for h in classes[j][:WITNESS_EMIT_CAP]]
        witnesses = []
        for h, s in kept:
            witnesses.append((h, s))
            witnesses.append((tuple(-v for v in h), s))
        witnesses.sort(key=lambda w: w[0])
        return FourierDichotomy(branch=LARGE_COEFFICIENTS, x_floor=N, h_caps=caps,
                                Q=1 << j, witnesses=witnesses, flagged=True,
                                flag_reason="no dyadic class met its sqrt(Q) threshold")
    return FourierDichotomy(branch=LARGE_COEFFICIENTS, x_floor=N, h_caps=caps,
                            Q=2, witnesses=[], flagged=True,
                            flag_reason="all box exponential sums vanish")


# ---------------------------------------------------------------------------
# Empirical exponential-sum bound probe.
# ---------------------------------------------------------------------------


@dataclass
class WeylBoundReport:
    lhs: float
    rhs: float
    passed: bool
    q: int
    c_d: float
    C_check: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "passed": self.passed,
                "q": self.q, "c_d": self.c_d, "C_check": self.C_check}


def verify_weyl_bound(poly: Poly, alpha, a: int, q: int, Q: int, x,
                      c_d: float, C_check: float) -> WeylBoundReport:
    """Empirical probe of |sum_{n<=x} e(f(n) alpha)| <= C (x/q^c + x/(x^d/q)^c).

    Requires a monic f, gcd(a, q) = 1 and |alpha - a/q| <= 1/(qQ) with Q >= q.
    This checks an instance of the bound numerically; it proves nothing.
    """
    if poly.coeffs[-1].value != 1:
        raise ValueError("polynomial must be monic (lead coefficient exactly 1)")
    if q < 1 or math.gcd(a, q) != 1:
        raise InvalidApproximationError(f"gcd({a},{q}) != 1 or q < 1")
    if Q < q:
        raise InvalidApproximationError(f"declared Q = {Q} below q = {q}")
    av = alpha.value if isinstance(alpha, Real) else Fraction(alpha)
    if abs(av - Fraction(a, q)) > Fraction(1, q * Q):
        raise InvalidApproximationError(
            f"|alpha - {a}/{q}| exceeds 1/(qQ) = 1/{q * Q}")
    xv = x.value if isinstance(x, Real) else Fraction(x)
    N = int(xv.__floor__())
    d = poly.d
    sigma = [(c.value * av) for c in poly.coeffs]
    sigma = [s - s.__floor__() for s in sigma]
    lhs = _abs_sum_exact_phase(sigma, N)
    xf = float(xv)
    rhs = C_check * (xf / q ** c_d + xf / (xf ** d / q) ** c_d)
    return WeylBoundReport(lhs=lhs, rhs=rhs, passed=lhs <= rhs, q=q,
                           c_d=c_d, C_check=C_check)
