import math
import random
from fractions import Fraction

import pytest

from fracparts.core import (
    Epsilons,
    HorizonCapError,
    Poly,
    PolySystem,
    Real,
    ScalarParseError,
    SystemState,
    brute_force_min,
    eval_system,
    first_hit,
    frac_dist,
    hit_count,
    parse_scalar,
)


def sys1(*coeff_lists):
    return PolySystem(tuple(Poly.from_strings(list(c)) for c in coeff_lists))


class TestScalar:
    def test_exact_forms(self):
        assert parse_scalar("3/7").value == Fraction(3, 7)
        assert parse_scalar("-3/7").value == Fraction(-3, 7)
        assert parse_scalar("0.25").value == Fraction(1, 4)
        assert parse_scalar("2").value == 2
        assert parse_scalar("3/7").exact

    def test_sqrt_is_inexact_with_recorded_radius(self):
        r = parse_scalar("sqrt(2)/1")
        assert not r.exact
        assert abs(r.value * r.value - 2) < Fraction(1, 2 ** 180)
        assert r.err == Fraction(1, 2 ** 192)

    def test_sqrt_perfect_square_exact(self):
        r = parse_scalar("sqrt(9)/2")
        assert r.exact and r.value == Fraction(3, 2)

    def test_rejects_garbage(self):
        for bad in ["", "x", "1/0", "sqrt(2)/0", "1+2", "sqrt(-2)"]:
            with pytest.raises(ScalarParseError):
                parse_scalar(bad)

    def test_error_propagation_linear(self):
        a = parse_scalar("sqrt(2)")
        b = Real(Fraction(3))
        assert (a * b).err == 3 * a.err
        assert (a + a).err == 2 * a.err
        assert (a - a).err == 2 * a.err


class TestFracDist:
    def test_examples(self):
        assert frac_dist(Fraction(3, 10)) == Fraction(3, 10)
        assert frac_dist(Fraction(3, 4)) == Fraction(1, 4)
        assert frac_dist(2) == 0
        assert frac_dist(Fraction(-1, 10)) == Fraction(1, 10)

    def test_periodicity_symmetry_range(self):
        rng = random.Random(7)
        for _ in range(500):
            t = Fraction(rng.randint(-10 ** 6, 10 ** 6), rng.randint(1, 10 ** 4))
            d = frac_dist(t)
            assert d == frac_dist(t + 1) == frac_dist(-t)
            assert 0 <= d <= Fraction(1, 2)


class TestEvalSystem:
    def test_examples(self):
        assert eval_system(sys1(["1/3"]), 2) == [Fraction(1, 3)]
        assert eval_system(sys1(["0", "1/4"]), 3) == [Fraction(1, 4)]
        assert eval_system(sys1(["0", "0"]), 17) == [Fraction(0)]

    def test_rejects_nonpositive_n(self):
        with pytest.raises(ValueError):
            eval_system(sys1(["1/3"]), 0)


class TestBruteForceMin:
    def test_half_integer(self):
        assert brute_force_min(sys1(["1/2"]), 3) == (2, 0)

    def test_common_multiple(self):
        assert brute_force_min(sys1(["1/2"], ["1/3"]), 7) == (6, 0)

    def test_sqrt2_square_fixture(self):
        # frozen regression values from the exhaustive scan (the oracle is
        # the definition here)
        n, v = brute_force_min(sys1(["0", "sqrt(2)"]), 100)
        assert n == 13
        assert abs(float(v) - 0.0020920410530632476) < 1e-15

    def test_matches_randomized_order_second_scan(self):
        rng = random.Random(2024)
        for _ in range(20):
            k = rng.randint(1, 3)
            d = rng.randint(1, 3)
            polys = [[str(Fraction(rng.randint(-30, 30), rng.randint(1, 30)))
                      for _ in range(d)] for _ in range(k)]
            system = sys1(*polys)
            x = rng.randint(5, 120)
            n_star, v = brute_force_min(system, x)
            order = list(range(1, x))
            rng.shuffle(order)
            best = min(order, key=lambda n: (max(eval_system(system, n)), n))
            assert max(eval_system(system, best)) == v
            assert max(eval_system(system, n_star)) == v
            assert all(max(eval_system(system, n)) > v for n in range(1, n_star))

    def test_cap(self):
        with pytest.raises(HorizonCapError):
            brute_force_min(sys1(["1/2"]), 10 ** 7, enum_cap=10 ** 3)


class TestHitCount:
    def test_examples(self):
        assert hit_count(sys1(["1/2"]), Epsilons((Fraction(3, 10),)), 5) == 2
        assert hit_count(sys1(["0"]), Epsilons((Fraction(1, 10),)), 10) == 10

    def test_sqrt2_fixture(self):
        # frozen from the exhaustive scan
        s = sys1(["0", "sqrt(2)"])
        assert hit_count(s, Epsilons((Fraction(5, 100),)), 10 ** 4) == 968

    def test_monotone_in_eps_and_x(self):
        rng = random.Random(5)
        for _ in range(10):
            system = sys1([str(Fraction(rng.randint(1, 20), rng.randint(1, 20)))
                           for _ in range(2)])
            e1 = Fraction(rng.randint(1, 20), 100)
            e2 = e1 + Fraction(rng.randint(0, 10), 100)
            e2 = min(e2, Fraction(1, 2))
            x = rng.randint(5, 200)
            assert hit_count(system, Epsilons((e1,)), x) <= hit_count(system, Epsilons((e2,)), x)
            assert hit_count(system, Epsilons((e1,)), x) <= hit_count(system, Epsilons((e1,)), x + 37)

    def test_first_hit_agrees(self):
        s = sys1(["1/2"])
        eps = Epsilons((Fraction(3, 10),))
        assert first_hit(s, eps, 5) == 2
        assert first_hit(sys1(["1/3"]), Epsilons((Fraction(1, 10),)), 3) is None


class TestTypes:
    def test_epsilons_validation(self):
        with pytest.raises(ValueError):
            Epsilons((Fraction(0),))
        with pytest.raises(ValueError):
            Epsilons((Fraction(3, 4),))
        e = Epsilons((Fraction(1, 2), Fraction(1, 200)))
        assert e.delta_product == Fraction(1, 400)
        assert not e.within_theorem_hypothesis
        assert Epsilons((Fraction(1, 100),)).within_theorem_hypothesis

    def test_state_digest_stable(self):
        s = SystemState(sys1(["1/2"]), Epsilons((Fraction(1, 100),)), Real(Fraction(100)))
        assert s.digest() == s.digest()
        s2 = SystemState(sys1(["1/2"]), Epsilons((Fraction(1, 100),)), Real(Fraction(101)))
        assert s.digest() != s2.digest()

    def test_system_shape_checks(self):
        with pytest.raises(ValueError):
            PolySystem((Poly.from_strings(["1/2"]), Poly.from_strings(["0", "1/2"])))
        with pytest.raises(ValueError):
            SystemState(sys1(["1/2"]), Epsilons((Fraction(1, 10), Fraction(1, 10))),
                        Real(Fraction(10)))
