import random
from fractions import Fraction

import pytest

from fracparts.core import Poly, PolySystem, parse_scalar
from fracparts.intlinalg import det_bareiss, mat_mul
from fracparts.latgeom import (
    DependenceError,
    GeneratorSet,
    LatticeBasis,
    NoShortVector,
    PrecisionError,
    SingularH1Error,
    _dot,
    _linf,
    build_relation_lattice,
    decisively_in_region,
    lambda2_residue_count,
    lambda3_residue_count,
    quasi_orthogonal_generators,
    reduce_basis,
    shortest_vector,
    solution_lattice_basis,
    sublattice_determinants,
    wedge_norm,
    wedge_norm_sq,
)


def sys1(*coeff_lists):
    return PolySystem(tuple(Poly.from_strings(list(c)) for c in coeff_lists))


def rand_basis(rng, n, lo=-9, hi=9):
    while True:
        M = [[Fraction(rng.randint(lo, hi)) for _ in range(n)] for _ in range(n)]
        if det_bareiss([[int(v) for v in row] for row in M]) != 0:
            return M


class TestWedge:
    def test_examples(self):
        assert wedge_norm([[1, 0], [0, 1]]) == 1
        assert wedge_norm([[3, 0], [0, 4]]) == 12
        assert wedge_norm([[1, 2], [2, 4]]) == 0

    def test_hadamard_exact(self):
        rng = random.Random(3)
        for _ in range(100):
            r, k = rng.randint(1, 3), rng.randint(3, 5)
            vecs = [[Fraction(rng.randint(-9, 9), rng.randint(1, 4))
                     for _ in range(k)] for _ in range(r)]
            wsq = wedge_norm_sq(vecs)
            prod = Fraction(1)
            for v in vecs:
                prod *= _dot(v, v)
            assert 0 <= wsq <= prod


class TestBuildLattice:
    def test_k1_d1_example(self):
        lat = build_relation_lattice(sys1(["1/2"]), [2], Fraction(1, 4))
        assert lat.vectors == [[Fraction(1, 2), Fraction(-2)],
                               [Fraction(0), Fraction(4)]]

    def test_rational_entries_exact(self):
        lat = build_relation_lattice(sys1(["1/3", "2/5"]), [3], Fraction(1, 10))
        assert lat.vectors[0] == [Fraction(1, 3), Fraction(-10, 3), Fraction(-40)]
        assert lat.vectors[1] == [Fraction(0), Fraction(10), Fraction(0)]
        assert lat.vectors[2] == [Fraction(0), Fraction(0), Fraction(100)]

    def test_unimodular_invariance_of_gram_det(self):
        rng = random.Random(5)
        lat = build_relation_lattice(sys1(["1/3", "2/5"]), [3], Fraction(1, 10))
        gram = wedge_norm_sq(lat.vectors)
        # apply a random unimodular transform (row ops)
        rows = [list(r) for r in lat.vectors]
        for _ in range(20):
            i, j = rng.sample(range(len(rows)), 2)
            c = rng.randint(-3, 3)
            rows[i] = [a + c * b for a, b in zip(rows[i], rows[j])]
        assert wedge_norm_sq(rows) == gram

    def test_precision_guard(self):
        coarse = Poly((parse_scalar("sqrt(2)", bits=8),))
        with pytest.raises(PrecisionError):
            build_relation_lattice(PolySystem((coarse,)), [2], Fraction(1, 100))

    def test_input_validation(self):
        with pytest.raises(ValueError):
            build_relation_lattice(sys1(["1/2"]), [Fraction(1, 2)], Fraction(1, 10))
        with pytest.raises(ValueError):
            build_relation_lattice(sys1(["1/2"]), [2], Fraction(1, 2))


class TestReduceBasis:
    def test_orthogonal_unchanged_up_to_order_sign(self):
        basis = LatticeBasis(vectors=[[Fraction(3), Fraction(0)],
                                      [Fraction(0), Fraction(2)]])
        red = reduce_basis(basis)
        got = sorted(tuple(abs(x) for x in row) for row in red.vectors)
        assert got == [(0, 2), (3, 0)]

    def test_skew_2d(self):
        red = reduce_basis(LatticeBasis(vectors=[[Fraction(1), Fraction(0)],
                                                 [Fraction(10 ** 6), Fraction(1)]]))
        rows = {tuple(abs(v) for v in row) for row in red.vectors}
        assert rows == {(1, 0), (0, 1)}

    def test_random_5d_det_preserved_hadamard_improves(self):
        rng = random.Random(7)
        for _ in range(10):
            M = rand_basis(rng, 5)
            det_before = abs(det_bareiss([[int(v) for v in row] for row in M]))
            red = reduce_basis(LatticeBasis(vectors=M))
            det_after = abs(det_bareiss([[int(v) for v in row] for row in red.vectors]))
            assert det_before == det_after
            prod_before = Fraction(1)
            prod_after = Fraction(1)
            for v, w in zip(M, red.vectors):
                prod_before *= _dot(v, v)
                prod_after *= _dot(w, w)
            assert prod_after <= prod_before  # orthogonality defect cannot worsen

    def test_transform_is_unimodular_and_maps(self):
        rng = random.Random(9)
        M = rand_basis(rng, 4)
        red = reduce_basis(LatticeBasis(vectors=M))
        U = red.transform
        assert abs(det_bareiss(U)) == 1
        assert mat_mul(U, M) == red.vectors

    def test_minima_estimates_sorted(self):
        rng = random.Random(11)
        M = rand_basis(rng, 4)
        red = reduce_basis(LatticeBasis(vectors=M))
        assert red.reduced_flag
        assert red.minima_estimates == sorted(red.minima_estimates)
        assert set(red.minima_estimates) == {_linf(v) for v in red.vectors}

    def test_dependence_rejected(self):
        with pytest.raises(DependenceError):
            reduce_basis(LatticeBasis(vectors=[[Fraction(1), Fraction(2)],
                                               [Fraction(2), Fraction(4)]]))

    def test_svp_validates_first_minimum(self):
        # ||b_1|| <= 2^((n-1)/2) lambda_1 for LLL at delta ~ 1; enumeration
        # provides the exact lambda_1
        rng = random.Random(13)
        for _ in range(8):
            n = rng.randint(2, 5)
            M = rand_basis(rng, n, -20, 20)
            red = reduce_basis(LatticeBasis(vectors=M))
            _vec, best_sq = shortest_vector(red)
            first_sq = _dot(red.vectors[0], red.vectors[0])
            assert best_sq <= first_sq <= Fraction(2) ** (n - 1) * best_sq


class TestQuasiOrthogonal:
    def test_k1_d1_example(self):
        g = quasi_orthogonal_generators(sys1(["1/2"]), [2], Fraction(1, 10),
                                        N_target=3, c_orth=0.05)
        assert isinstance(g, GeneratorSet)
        assert g.r == 1
        assert g.h_vecs == ((2,),) and g.a_vecs == ((1,),)

    def test_duplicate_cancellation_direction(self):
        s = sys1(["0", "sqrt(2)"], ["0", "sqrt(2)"])
        g = quasi_orthogonal_generators(s, [4, 4], Fraction(1, 200),
                                        N_target=9, c_orth=0.05)
        assert isinstance(g, GeneratorSet)
        assert g.r == 1
        (h,) = g.h_vecs
        assert sorted(h) == [-1, 1]
        assert g.a_vecs == ((0, 0),)
        assert 0 < g.orth_ratio_sq <= 1

    def test_membership_reverified_random_rational(self):
        rng = random.Random(17)
        hits = 0
        for _ in range(20):
            k = rng.randint(1, 2)
            s = sys1(*[[str(Fraction(rng.randint(0, 12), rng.randint(1, 12)))]
                       for _ in range(k)])
            B = [rng.randint(2, 8) for _ in range(k)]
            eta = Fraction(1, rng.randint(150, 400))
            g = quasi_orthogonal_generators(s, B, eta, N_target=5, c_orth=0.05)
            if isinstance(g, NoShortVector):
                continue
            hits += 1
            for h, a in zip(g.h_vecs, g.a_vecs):
                assert decisively_in_region(s, h, a, g.B, g.eta)
        assert hits > 0

    def test_no_short_vector_outcome(self):
        # badly approximable direction with a tight box: nothing fits
        g = quasi_orthogonal_generators(sys1(["sqrt(2)"]), [1], Fraction(1, 10 ** 6),
                                        N_target=2, c_orth=0.05)
        assert isinstance(g, NoShortVector)

    def test_orth_ratio_threshold_respected(self):
        s = sys1(["0", "sqrt(2)"], ["0", "sqrt(2)"])
        g = quasi_orthogonal_generators(s, [4, 4], Fraction(1, 200),
                                        N_target=9, c_orth=0.5)
        if isinstance(g, GeneratorSet):
            assert g.orth_ratio_sq >= Fraction(1, 4)


class TestSublattice:
    def test_examples(self):
        rep = sublattice_determinants([[2]], [[1]])
        assert (rep.det1, rep.det2, rep.det3) == (2, 1, 2)
        rep = sublattice_determinants([[2]], [[0]])
        assert (rep.det1, rep.det2, rep.det3) == (2, 2, 1)
        rep = sublattice_determinants([[1, 0], [0, 1]], [[7], [9]])
        assert (rep.det1, rep.det2, rep.det3) == (1, 1, 1)

    def test_singular_rejected(self):
        with pytest.raises(SingularH1Error):
            sublattice_determinants([[1, 1], [1, 1]], [[1], [1]])

    def test_identity_random_with_oracle(self):
        rng = random.Random(19)
        oracle_checked = 0
        for _ in range(120):
            r, ell = rng.randint(1, 3), rng.randint(1, 3)
            while True:
                H1 = [[rng.randint(-5, 5) for _ in range(r)] for _ in range(r)]
                if det_bareiss(H1) != 0:
                    break
            H2 = [[rng.randint(-5, 5) for _ in range(ell)] for _ in range(r)]
            rep = sublattice_determinants(H1, H2)
            assert rep.identity_holds
            assert rep.det1 % rep.det2 == 0  # D2 | D1
            if rep.det1 <= 30:
                c2 = lambda2_residue_count(H1, H2, rep.det1)
                c3 = lambda3_residue_count(H1, H2, rep.det1)
                assert rep.det1 ** r == rep.det2 * c2
                assert rep.det1 ** ell == rep.det3 * c3
                oracle_checked += 1
        assert oracle_checked > 20

    def test_solution_lattice_members_solve(self):
        rng = random.Random(23)
        for _ in range(40):
            r, ell = rng.randint(1, 3), rng.randint(1, 3)
            while True:
                H1 = [[rng.randint(-4, 4) for _ in range(r)] for _ in range(r)]
                if det_bareiss(H1) != 0:
                    break
            H2 = [[rng.randint(-4, 4) for _ in range(ell)] for _ in range(r)]
            Z = solution_lattice_basis(H1, H2)
            from fracparts.intlinalg import mat_vec, solve_integer
            for col in range(ell):
                y = [Z[i][col] for i in range(ell)]
                t = mat_vec(H2, y)
                assert solve_integer(H1, t) is not None
