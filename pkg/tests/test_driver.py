import json
import math
from fractions import Fraction

import pytest

from fracparts.core import (
    Epsilons,
    Poly,
    PolySystem,
    Real,
    SystemState,
    brute_force_min,
    eval_system,
    hit_count,
)
from fracparts.driver import (
    STATUS_FOUND,
    STATUS_NOT_FOUND,
    SolverConfig,
    draw_system,
    measure_exponent,
    solve,
)
from fracparts.reduction import verify_certificate
from fracparts.serialize import (
    SystemFileError,
    certificate_bytes,
    emit_system,
    parse_system_file,
)


def sys1(*coeff_lists):
    return PolySystem(tuple(Poly.from_strings(list(c)) for c in coeff_lists))


def state_of(system, eps_list, x):
    return SystemState(system, Epsilons(tuple(eps_list)), Real(Fraction(x)))


FORCED = SolverConfig(c_hit=1e9, brute_force_threshold=32)


class TestSolve:
    def test_trivial_half(self):
        st = state_of(sys1(["1/2"]), [Fraction(1, 100)], 10)
        out = solve(st)
        assert out.status == STATUS_FOUND and out.n == 2

    def test_not_found_is_ground_truth(self):
        st = state_of(sys1(["1/3"]), [Fraction(1, 100)], 3)
        out = solve(st)
        assert out.status == STATUS_NOT_FOUND
        assert out.certificate.terminal["kind"] == "exhausted"

    def test_duplicates_found_and_oracle_consistent(self):
        s = sys1(["0", "sqrt(2)"], ["0", "sqrt(2)"])
        st = state_of(s, [Fraction(1, 20), Fraction(1, 20)], 10 ** 4)
        out = solve(st)
        assert out.status == STATUS_FOUND
        dists = eval_system(s, out.n)
        assert all(dv < Fraction(1, 20) for dv in dists)
        _n_star, v = brute_force_min(s, 10 ** 4)
        assert v < Fraction(1, 20)  # the oracle agrees a hit exists

    def test_duplicates_forced_through_reduction(self):
        s = sys1(["0", "sqrt(2)"], ["0", "sqrt(2)"])
        st = state_of(s, [Fraction(1, 20), Fraction(1, 20)], 10 ** 5)
        out = solve(st, FORCED)
        assert out.status == STATUS_FOUND
        assert out.stats.reductions >= 1
        assert len(out.certificate.chain) >= 1
        checks = verify_certificate(out.certificate)
        assert all(ok for _n, ok, _d in checks)

    def test_single_sqrt2_square(self):
        s = sys1(["0", "sqrt(2)"])
        st = state_of(s, [Fraction(1, 20)], 10 ** 4)
        out = solve(st)
        assert out.status == STATUS_FOUND
        assert max(eval_system(s, out.n)) < Fraction(1, 20)

    def test_determinism_byte_identical(self):
        s = sys1(["0", "sqrt(2)"], ["0", "sqrt(2)"])
        st = state_of(s, [Fraction(1, 20), Fraction(1, 20)], 10 ** 4)
        a = solve(st, FORCED)
        b = solve(st, FORCED)
        assert certificate_bytes(a.certificate) == certificate_bytes(b.certificate)

    def test_depth_bounded_by_k_minus_1(self):
        s = sys1(["0", "sqrt(2)"], ["0", "sqrt(2)"], ["0", "sqrt(3)"])
        st = state_of(s, [Fraction(1, 12)] * 3, 2 * 10 ** 4)
        out = solve(st, FORCED)
        assert out.status == STATUS_FOUND
        assert out.stats.max_depth_reached <= st.k - 1

    def test_large_delta_falls_back_to_scan(self):
        # Delta = 1/2 > 1/4 makes the dichotomy precondition fail; the solver
        # must still produce ground truth via the scan fallback
        st = state_of(sys1(["1/2"]), [Fraction(1, 2)], 1000)
        out = solve(st, SolverConfig(brute_force_threshold=8))
        assert out.status == STATUS_FOUND and out.n == 2  # ||1/2|| < 1/2 is strict
        assert any(f.startswith("fourier:") for f in out.stats.fallbacks)

    def test_inconclusive_when_over_cap(self):
        st = state_of(sys1(["0", "sqrt(2)"]), [Fraction(1, 1000)], 10 ** 7)
        out = solve(st, SolverConfig(enum_cap=10 ** 4, brute_force_threshold=8,
                                     max_box=50))
        assert out.status == "inconclusive"
        assert out.certificate.terminal["kind"] == "exhausted"

    def test_hypothesis_flag_recorded(self):
        st = state_of(sys1(["1/2"]), [Fraction(1, 5)], 50)
        out = solve(st)
        assert out.certificate.constants["within_theorem_hypothesis"] is False
        st2 = state_of(sys1(["1/2"]), [Fraction(1, 200)], 50)
        out2 = solve(st2)
        assert out2.certificate.constants["within_theorem_hypothesis"] is True

    def test_found_always_reverifies(self):
        # a batch of small random-rational systems: found => exact tolerance
        import random
        rng = random.Random(55)
        for _ in range(15):
            k = rng.randint(1, 2)
            s = sys1(*[[str(Fraction(rng.randint(0, 30), rng.randint(1, 30)))
                        for _ in range(2)] for _ in range(k)])
            eps = [Fraction(rng.randint(2, 10), 100)] * k
            st = state_of(s, eps, rng.randint(50, 400))
            out = solve(st)
            if out.status == STATUS_FOUND:
                dists = eval_system(s, out.n)
                assert all(dv < e for dv, e in zip(dists, eps))
            else:
                assert hit_count(s, Epsilons(tuple(eps)), st.y.value - 1) == 0


class TestMeasureExponent:
    def test_zero_generator_flagged(self):
        rows, summary = measure_exponent("zero", 1, 2, [100, 1000], trials=2)
        assert all(r.flagged for r in rows)
        assert all(r.min_max_dist == 0 for r in rows)
        assert math.isnan(summary["median_exponent"])

    def test_monomial_d1_near_one(self):
        # min ||alpha n|| over n < x behaves like 1/x for generic alpha
        rows, summary = measure_exponent("monomial", 1, 1, [10 ** 3, 10 ** 4, 10 ** 5],
                                         trials=9, config=SolverConfig(seed=3))
        assert summary["median_exponent"] > 0.6

    def test_rows_reproduce_oracle(self):
        rows, _summary = measure_exponent("full", 1, 2, [200, 400], trials=2,
                                          config=SolverConfig(seed=11))
        for row in rows:
            system = draw_system("full", row.k, row.d, row.seed, row.trial_id)
            _n, v = brute_force_min(system, row.x)
            assert v == row.min_max_dist

    def test_deterministic_under_seed(self):
        r1, s1 = measure_exponent("monomial", 2, 2, [100, 300], trials=3,
                                  config=SolverConfig(seed=5))
        r2, s2 = measure_exponent("monomial", 2, 2, [100, 300], trials=3,
                                  config=SolverConfig(seed=5))
        assert [r.csv_row() for r in r1] == [r.csv_row() for r in r2]
        assert s1 == s2

    def test_grid_must_ascend(self):
        with pytest.raises(ValueError):
            measure_exponent("monomial", 1, 1, [100, 100], trials=1)


class TestSystemFiles:
    def test_roundtrip_idempotent(self, tmp_path):
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        p1.write_text(json.dumps({"d": 2, "polys": [["1/2", "sqrt(2)/3"]],
                                  "eps": ["0.01"], "x": "100"}))
        st1 = parse_system_file(p1)
        emit_system(st1, p2)
        st2 = parse_system_file(p2)
        assert st1.to_dict() == st2.to_dict()
        assert st1.digest() == st2.digest()
        # second round trip is byte-stable
        p3 = tmp_path / "c.json"
        emit_system(st2, p3)
        assert p2.read_text() == p3.read_text()

    def test_minimal_valid(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text('{"d":1,"polys":[["1/2"]],"eps":["0.01"],"x":"100"}')
        st = parse_system_file(p)
        assert st.k == 1 and st.system.d == 1

    def test_rejections(self, tmp_path):
        cases = [
            {"d": 0, "polys": [[]], "eps": [], "x": "10"},           # constant smuggle
            {"d": 1, "polys": [["1/2", "1/3"]], "eps": ["0.01"], "x": "10"},
            {"d": 1, "polys": [["1/2"]], "eps": ["0.6"], "x": "10"},  # eps > 1/2
            {"d": 1, "polys": [["1/2"]], "eps": ["0"], "x": "10"},
            {"d": 1, "polys": [["1/2"]], "eps": ["0.01"], "x": "1"},
            {"d": 1, "polys": [["x+1"]], "eps": ["0.01"], "x": "10"},
            {"d": 1, "polys": [], "eps": [], "x": "10"},
        ]
        for i, case in enumerate(cases):
            p = tmp_path / f"bad{i}.json"
            p.write_text(json.dumps(case))
            with pytest.raises(SystemFileError):
                parse_system_file(p)

    def test_sqrt_grammar_inexact_flag(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{"d":1,"polys":[["sqrt(2)/1"]],"eps":["0.01"],"x":"50"}')
        st = parse_system_file(p)
        c = st.system.coeff(1, 1)
        assert not c.exact
        assert abs(c.value ** 2 - 2) < Fraction(1, 2 ** 180)
