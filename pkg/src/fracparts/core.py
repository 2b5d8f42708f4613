"""Exact representation of polynomial systems and the brute-force ground truth.

All scalars are carried as exact rationals (`fractions.Fraction`).  Inputs
that are genuinely irrational (the ``sqrt(m)/q`` coefficient grammar) are
rounded once at ingestion to a dyadic rational with a recorded rounding
radius; every later computation is exact arithmetic on that approximant.
This gives bit-identical, machine-independent results and makes "exact for
rational inputs" literally true.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

DEFAULT_PRECISION_BITS = 192
DEFAULT_ENUM_CAP = 10 ** 8

_COEFF_RE = re.compile(
    r"^(?P<sign>[+-])?(?:"
    r"(?P<dec>\d+(?:\.\d+)?)"
    r"|(?P<num>\d+)/(?P<den>\d+)"
    r"|sqrt\((?P<rad>\d+)\)(?:/(?P<rden>\d+))?"
    r")$"
)


class HorizonCapError(Exception):
    """Enumeration horizon exceeds the configured cap."""


class ScalarParseError(ValueError):
    """Coefficient string does not match the accepted grammar."""


@dataclass(frozen=True)
class Real:
    """A real scalar: an exact rational approximant plus bookkeeping.

    ``value`` is the stored rational.  ``exact`` is True when the intended
    real equals ``value``; otherwise ``err`` bounds ``|intended - value|``.
    ``prec`` records the fractional bit count used at ingestion.
    """

    value: Fraction
    exact: bool = True
    err: Fraction = Fraction(0)
    prec: int = DEFAULT_PRECISION_BITS
    source: Optional[str] = None  # the grammar form this was parsed from, if any

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))
        object.__setattr__(self, "err", Fraction(self.err))
        if self.exact and self.err != 0:
            raise ValueError("exact scalar cannot carry a nonzero error radius")

    @staticmethod
    def exact_from(v) -> "Real":
        return Real(Fraction(v))

    def __add__(self, other: "Real") -> "Real":
        other = _as_real(other)
        return Real(self.value + other.value, self.exact and other.exact,
                    Fraction(0) if (self.exact and other.exact) else self.err + other.err,
                    min(self.prec, other.prec))

    def __sub__(self, other: "Real") -> "Real":
        return self + (-_as_real(other))

    def __neg__(self) -> "Real":
        return Real(-self.value, self.exact, self.err, self.prec)

    def __mul__(self, other: "Real") -> "Real":
        other = _as_real(other)
        exact = self.exact and other.exact
        err = Fraction(0)
        if not exact:
            err = (abs(self.value) * other.err + abs(other.value) * self.err
                   + self.err * other.err)
        return Real(self.value * other.value, exact, err, min(self.prec, other.prec))

    def __truediv__(self, other: "Real") -> "Real":
        other = _as_real(other)
        if not other.exact:
            raise ValueError("division by an inexact scalar is not supported")
        if other.value == 0:
            raise ZeroDivisionError("division by zero scalar")
        return Real(self.value / other.value, self.exact,
                    self.err / abs(other.value), min(self.prec, other.prec))

    def __float__(self) -> float:
        return float(self.value)

    def __eq__(self, other) -> bool:
        return self.value == _as_real(other).value

    def __lt__(self, other) -> bool:
        return self.value < _as_real(other).value

    def __le__(self, other) -> bool:
        return self.value <= _as_real(other).value

    def __hash__(self):
        return hash((self.value, self.exact))

    def to_str(self) -> str:
        v = self.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _as_real(v) -> Real:
    if isinstance(v, Real):
        return v
    return Real(Fraction(v))


def _isqrt_dyadic(radicand: int, bits: int) -> Fraction:
    # floor(sqrt(m) * 2^bits) / 2^bits, so the approximant errs by < 2^-bits
    return Fraction(math.isqrt(radicand << (2 * bits)), 1 << bits)


def parse_scalar(text: str, bits: int = DEFAULT_PRECISION_BITS) -> Real:
    """Parse a coefficient string.

    Grammar: optional sign, then a decimal literal, ``p/q``, or ``sqrt(m)/q``.
    Decimal and ``p/q`` forms are exact rationals; ``sqrt(m)/q`` is rounded
    to ``bits`` fractional bits with the rounding radius recorded (unless the
    radicand is a perfect square, which stays exact).
    """
    text = text.strip()
    m = _COEFF_RE.match(text)
    if m is None:
        raise ScalarParseError(f"bad coefficient string: {text!r}")
    sign = -1 if m.group("sign") == "-" else 1
    if m.group("dec") is not None:
        return Real(sign * Fraction(m.group("dec")), source=text)
    if m.group("num") is not None:
        den = int(m.group("den"))
        if den == 0:
            raise ScalarParseError(f"zero denominator in {text!r}")
        return Real(Fraction(sign * int(m.group("num")), den), source=text)
    rad = int(m.group("rad"))
    rden = int(m.group("rden") or 1)
    if rden == 0:
        raise ScalarParseError(f"zero denominator in {text!r}")
    root = math.isqrt(rad)
    if root * root == rad:
        return Real(Fraction(sign * root, rden), source=text)
    approx = _isqrt_dyadic(rad, bits)
    return Real(sign * approx / rden, exact=False,
                err=Fraction(1, (1 << bits) * rden), prec=bits, source=text)


def frac_dist(t) -> Fraction:
    """Distance from t to the nearest integer, as an exact Fraction in [0, 1/2]."""
    v = t.value if isinstance(t, Real) else Fraction(t)
    r = v - v.__floor__()
    return min(r, 1 - r)


@dataclass(frozen=True)
class Poly:
    """Polynomial sum_{j=1..d} coeffs[j-1] * X^j; the constant term is structurally 0."""

    coeffs: tuple
    # coeffs: tuple[Real, ...], length == degree bound d (trailing zeros allowed)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(_as_real(c) for c in self.coeffs))
        if len(self.coeffs) == 0:
            raise ValueError("polynomial needs a positive degree bound")

    @property
    def d(self) -> int:
        return len(self.coeffs)

    def eval(self, n: int) -> Fraction:
        # Horner on X * (c_1 + X * (c_2 + ...))
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * n + c.value
        return acc * n

    def eval_real(self, n: int) -> Real:
        acc = Real(Fraction(0))
        for c in reversed(self.coeffs):
            acc = acc * Real(Fraction(n)) + c
        return acc * Real(Fraction(n))

    @staticmethod
    def from_strings(strings: Sequence[str], bits: int = DEFAULT_PRECISION_BITS) -> "Poly":
        return Poly(tuple(parse_scalar(s, bits) for s in strings))


@dataclass(frozen=True)
class PolySystem:
    """k polynomials sharing one degree bound d."""

    polys: tuple

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        if len(self.polys) < 1:
            raise ValueError("need at least one polynomial")
        d = self.polys[0].d
        if any(p.d != d for p in self.polys):
            raise ValueError("all polynomials must share the degree bound")

    @property
    def k(self) -> int:
        return len(self.polys)

    @property
    def d(self) -> int:
        return self.polys[0].d

    def coeff(self, i: int, j: int) -> Real:
        """Coefficient of X^j in the i-th polynomial (both 1-indexed)."""
        return self.polys[i - 1].coeffs[j - 1]


@dataclass(frozen=True)
class Epsilons:
    """Per-polynomial tolerances in (0, 1/2]."""

    eps: tuple

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(_as_real(e) for e in self.eps))
        for e in self.eps:
            if not (0 < e.value <= Fraction(1, 2)):
                raise ValueError(f"epsilon {e.value} outside (0, 1/2]")

    @property
    def k(self) -> int:
        return len(self.eps)

    @property
    def delta_product(self) -> Fraction:
        prod = Fraction(1)
        for e in self.eps:
            prod *= e.value
        return prod

    @property
    def within_theorem_hypothesis(self) -> bool:
        """True when every tolerance is <= 1/100 (the range the guarantee covers)."""
        return all(e.value <= Fraction(1, 100) for e in self.eps)


@dataclass(frozen=True)
class SystemState:
    """A (k, system, tolerances, horizon) search problem."""

    system: PolySystem
    eps: Epsilons
    y: Real

    def __post_init__(self):
        if self.system.k != self.eps.k:
            raise ValueError("tolerance count must match polynomial count")
        if not self.y.value > 1:
            raise ValueError("horizon must exceed 1")

    @property
    def k(self) -> int:
        return self.system.k

    def to_dict(self) -> dict:
        return {
            "d": self.system.d,
            "polys": [[c.to_str() for c in p.coeffs] for p in self.system.polys],
            "polys_exact": [[c.exact for c in p.coeffs] for p in self.system.polys],
            "eps": [e.to_str() for e in self.eps.eps],
            "x": self.y.to_str(),
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Scan kernels.
#
# Every count below runs over integers n in a contiguous range, evaluating
# each polynomial's fractional part exactly.  All polynomials are lifted to
# one common denominator D; the integer numerators are advanced with a
# forward-difference table mod D, so one step costs d big-int additions per
# polynomial and every comparison is an integer comparison.  Ranges could be
# partitioned and merged (min with smallest-n tiebreak / sum); the sequential
# order here is the reference semantics.
# ---------------------------------------------------------------------------


def _common_denominator(system: PolySystem) -> int:
    D = 1
    for p in system.polys:
        for c in p.coeffs:
            D = D * c.value.denominator // math.gcd(D, c.value.denominator)
    return D


def _diff_state(nums: Sequence[int], D: int, start: int):
    """Forward differences of N(n) = sum nums[j-1] n^j at n = start, mod D."""

    def N(n: int) -> int:
        acc = 0
        for c in reversed(nums):
            acc = acc * n + c
        return (acc * n) % D

    d = len(nums)
    row = [N(start + i) for i in range(d + 1)]
    diffs = []
    for _ in range(d + 1):
        diffs.append(row[0])
        row = [(row[i + 1] - row[i]) % D for i in range(len(row) - 1)]
    return diffs  # diffs[i] = Delta^i N at n=start, all reduced mod D


def _scan_tables(system: PolySystem):
    """Common denominator D plus one difference table per polynomial at n=1."""
    D = _common_denominator(system)
    tables = []
    for p in system.polys:
        nums = [int(c.value * D) for c in p.coeffs]
        tables.append(_diff_state(nums, D, 1))
    return D, tables


def _check_cap(last: int, k: int, enum_cap: int):
    if last * k > enum_cap:
        raise HorizonCapError(
            f"scan of {last} points x {k} polys exceeds cap {enum_cap}")


def horizon_count(x) -> int:
    """Number of n in the strict horizon {1, ..., ceil(x)-1}."""
    v = x.value if isinstance(x, Real) else Fraction(x)
    return max(int(math.ceil(v)) - 1, 0)


def eval_system(system: PolySystem, n: int):
    """Fractional-part distances (frac_dist(f_1(n)), ..., frac_dist(f_k(n)))."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    return [frac_dist(p.eval(n)) for p in system.polys]


def brute_force_min(system: PolySystem, x, enum_cap: int = DEFAULT_ENUM_CAP):
    """Smallest n < x minimizing max_i frac_dist(f_i(n)), with that minimum.

    Ties break toward the smallest n.  Exact for rational coefficients.
    """
    last = horizon_count(x)
    if last < 1:
        raise ValueError("horizon must contain at least n=1")
    _check_cap(last, system.k, enum_cap)
    D, tables = _scan_tables(system)
    best_n = 1
    best = 0
    first = True
    for n in range(1, last + 1):
        worst = 0
        for diffs in tables:
            r = diffs[0]
            m = r if 2 * r <= D else D - r
            if m > worst:
                worst = m
        if first or worst < best:
            best, best_n, first = worst, n, False
            if best == 0:
                break
        for diffs in tables:
            for i in range(len(diffs) - 1):
                diffs[i] = (diffs[i] + diffs[i + 1]) % D
    return best_n, Fraction(best, D)


def _checkpointed_min(system: PolySystem, checkpoints: Sequence[int],
                      enum_cap: int = DEFAULT_ENUM_CAP):
    """Running (argmin, min) of max_i frac_dist(f_i(n)) at each horizon.

    Checkpoint c reports the scan over n in {1, ..., c-1}; one pass serves a
    whole ascending grid of horizons.  Returns a list of (n_star, Fraction).
    """
    cps = sorted(set(int(c) for c in checkpoints))
    last = cps[-1] - 1
    _check_cap(last, system.k, enum_cap)
    D, tables = _scan_tables(system)
    out = []
    best_n, best, first = 1, 0, True
    ci = 0
    for n in range(1, last + 1):
        while ci < len(cps) and n >= cps[ci]:
            out.append((best_n, Fraction(best, D)))
            ci += 1
        worst = 0
        for diffs in tables:
            r = diffs[0]
            m = r if 2 * r <= D else D - r
            if m > worst:
                worst = m
        if first or worst < best:
            best, best_n, first = worst, n, False
        for diffs in tables:
            for i in range(len(diffs) - 1):
                diffs[i] = (diffs[i] + diffs[i + 1]) % D
    while ci < len(cps):
        out.append((best_n, Fraction(best, D)))
        ci += 1
    return out


def _strict_thresholds(eps: Epsilons, D: int):
    # min(r, D-r) <= t  <=>  min(r, D-r)/D < eps, with t = (eps.num*D - 1) // eps.den
    return [(e.value.numerator * D - 1) // e.value.denominator for e in eps.eps]


def hit_count(system: PolySystem, eps: Epsilons, x, enum_cap: int = DEFAULT_ENUM_CAP) -> int:
    """#{n <= x : frac_dist(f_i(n)) < eps_i for all i} (strict inequalities)."""
    last = int((x.value if isinstance(x, Real) else Fraction(x)).__floor__())
    if last < 1:
        return 0
    _check_cap(last, system.k, enum_cap)
    D, tables = _scan_tables(system)
    thresholds = _strict_thresholds(eps, D)
    count = 0
    for _n in range(1, last + 1):
        ok = True
        for diffs, t in zip(tables, thresholds):
            r = diffs[0]
            if (r if 2 * r <= D else D - r) > t:
                ok = False
                break
        if ok:
            count += 1
        for diffs in tables:
            for i in range(len(diffs) - 1):
                diffs[i] = (diffs[i] + diffs[i + 1]) % D
    return count


def first_hit(system: PolySystem, eps: Epsilons, x,
              enum_cap: int = DEFAULT_ENUM_CAP) -> Optional[int]:
    """Smallest n < x with frac_dist(f_i(n)) < eps_i for all i, or None."""
    last = horizon_count(x)
    if last < 1:
        return None
    _check_cap(last, system.k, enum_cap)
    D, tables = _scan_tables(system)
    thresholds = _strict_thresholds(eps, D)
    for n in range(1, last + 1):
        ok = True
        for diffs, t in zip(tables, thresholds):
            r = diffs[0]
            if (r if 2 * r <= D else D - r) > t:
                ok = False
                break
        if ok:
            return n
        for diffs in tables:
            for i in range(len(diffs) - 1):
                diffs[i] = (diffs[i] + diffs[i + 1]) % D
    return None
