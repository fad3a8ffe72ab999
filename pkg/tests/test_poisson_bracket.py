import numpy as np
import pytest

from src.core.connection import monodromy, random_connection
from src.core.exceptions import (CiliumInFaceError, ConnectionMismatchError, GluePreconditionError, NumericError,
                                 ObservableError, PathError)
from src.core.lie_core import Flavor, RMatrix, random_r, standard_r
from src.core.observables import ExactObservable, entry, trace, trace_word, var
from src.core.poisson_bracket import (FORMULA_CONFIGS, SKLYANIN_SIGN, WEDGE_NORMALIZATION, WRONG_SKLYANIN_SIGN,
                                      RMatrixAssignment, ResidualReport, bivector_bracket, check_glue_precondition,
                                      closed_formula_bracket, end_derivative, entry_triple, fixed_monodromy_leaf_check,
                                      formula_graph, is_gauge_invariant, jacobi_negative_control, jacobi_suite,
                                      move_is_poisson_residual, oracle_suite, pin_wedge_normalization,
                                      place_on_leaf, poisson_action_residual,
                                      ra_independence_residual, ra_independence_suite, sklyanin_bracket,
                                      sklyanin_tensor, split_form_bracket, structure_for, wilson_loops)
from src.core.ribbon_graph import MoveDescriptor, apply_move, disjoint_union, face_path, named_graph


class TestRMatrixAssignment:
    def test_polyuble_alternates(self, double, r2):
        R = RMatrixAssignment.polyuble(double, r2)
        assert R.skew_opposite(0, 1)
        assert not RMatrixAssignment.uniform(double, r2).skew_opposite(0, 1)

    def test_symmetric_part_enforced(self):
        with pytest.raises(NumericError):
            RMatrixAssignment((RMatrix(2, Flavor.SL, np.zeros((4, 4), dtype=complex)),))

    def test_groups_must_agree(self):
        with pytest.raises(ConnectionMismatchError):
            RMatrixAssignment((standard_r(2), standard_r(3)))

    def test_size_must_match_graph(self, double, r2):
        with pytest.raises(ConnectionMismatchError):
            RMatrixAssignment.uniform(named_graph("torus"), r2).check_matches(double)

    def test_induced_follows_vertex_origin(self, single_edge, r2):
        union, _ = disjoint_union(single_edge, single_edge)
        R = RMatrixAssignment.union(RMatrixAssignment.polyuble(single_edge, r2),
                                    RMatrixAssignment.polyuble(single_edge, r2))
        induced = R.induced(apply_move(union, MoveDescriptor.glue(1, 2)))
        assert len(induced) == 2
        np.testing.assert_array_equal(induced.for_vertex(0).tensor, r2.tensor)
        np.testing.assert_array_equal(induced.for_vertex(1).tensor, r2.flipped().tensor)


class TestBivector:
    def test_end_derivative_of_trace(self, torus_connection):
        X = np.array([[0.3, 1.0], [-0.5, -0.3]], dtype=complex)
        f = ExactObservable(trace(var("a")))
        expected = np.trace(torus_connection.value("a") @ X)
        assert end_derivative(f, torus_connection, "a", X) == pytest.approx(expected, abs=1e-12)

    def test_pairing_is_antisymmetric(self, torus, torus_assignment):
        pairing = structure_for(torus, torus_assignment).pairing
        np.testing.assert_allclose(pairing, -pairing.T, atol=1e-14)

    def test_bracket_is_antisymmetric(self, torus_connection, torus_assignment):
        f = ExactObservable(entry(var("a"), 0, 1))
        g = ExactObservable(trace_word(["b", "a"]))
        one = bivector_bracket(f, g, torus_connection, torus_assignment).value
        two = bivector_bracket(g, f, torus_connection, torus_assignment).value
        assert one == pytest.approx(-two, abs=1e-12)

    def test_diagnostics_per_vertex(self, double, r2):
        A = random_connection(double, 2, seed=3)
        result = bivector_bracket(ExactObservable(entry(var("a"), 0, 0)), ExactObservable(entry(var("b"), 1, 1)),
                                  A, RMatrixAssignment.polyuble(double, r2))
        assert sorted(result.diagnostics) == [0, 1]
        assert set(result.to_dict()) == {"value", "vertices"}

    def test_split_form_agrees(self, double, r2):
        A = random_connection(double, 2, seed=4)
        R = RMatrixAssignment.polyuble(double, r2)
        f = ExactObservable(entry(var("a") @ var("b_v"), 0, 1))
        g = ExactObservable(trace(var("b")))
        assert split_form_bracket(f, g, A, R) == pytest.approx(bivector_bracket(f, g, A, R).value, abs=1e-12)

    def test_connection_must_live_on_graph(self, torus_assignment, double):
        f = ExactObservable(trace(var("a")))
        with pytest.raises(ConnectionMismatchError):
            bivector_bracket(f, f, random_connection(double, 2), torus_assignment)


class TestClosedFormulas:
    def test_wedge_normalization(self):
        assert pin_wedge_normalization(k=2, samples=3) == WEDGE_NORMALIZATION

    @pytest.mark.parametrize("config", FORMULA_CONFIGS)
    @pytest.mark.parametrize("k", [2, 3])
    def test_oracle(self, config, k):
        report = oracle_suite(config, k, samples=3, seed=1)
        assert report.passed(1e-9)

    def test_oracle_with_independent_vertex_r(self):
        R = RMatrixAssignment((random_r(2, seed=5), random_r(2, seed=6)))
        assert oracle_suite("edge", 2, R=R, samples=3).passed(1e-9)

    def test_entry_form(self, r2):
        graph = formula_graph("double")
        A = random_connection(graph, 2, seed=2)
        R = RMatrixAssignment.uniform(graph, r2)
        structure = structure_for(graph, R)
        value = closed_formula_bracket("double", (0, 1), (1, 0), A, R)
        measured = structure.bracket_value(ExactObservable(entry(var("a"), 0, 1)),
                                           ExactObservable(entry(var("b"), 1, 0)), A)
        assert measured == pytest.approx(value, abs=1e-10)

    def test_unknown_configuration(self):
        with pytest.raises(ConnectionMismatchError):
            formula_graph("pentagon")


class TestSklyanin:
    def test_vanishes_at_identity(self, r2):
        np.testing.assert_array_equal(sklyanin_tensor(np.eye(2), r2), np.zeros((4, 4)))

    def test_antisymmetric_entries(self):
        r = standard_r(3)
        g = random_connection(named_graph("loop"), 3, seed=1).value("a")
        assert sklyanin_bracket((0, 1), (2, 0), g, r) == pytest.approx(-sklyanin_bracket((2, 0), (0, 1), g, r))

    def test_sign_flips_tensor(self, r2):
        g = random_connection(named_graph("loop"), 2, seed=1).value("a")
        np.testing.assert_allclose(sklyanin_tensor(g, r2, WRONG_SKLYANIN_SIGN),
                                   -sklyanin_tensor(g, r2, SKLYANIN_SIGN))


class TestSuites:
    def test_jacobi_torus(self, torus, torus_assignment):
        assert jacobi_suite(torus, torus_assignment, samples=2, seed=3).passed(1e-8)

    @pytest.mark.slow
    def test_jacobi_double_k3(self, double):
        R = RMatrixAssignment.uniform(double, standard_r(3))
        assert jacobi_suite(double, R, samples=2, seed=1).passed(1e-8)

    def test_jacobi_mixed_sampler(self, torus, torus_assignment):
        report = jacobi_suite(torus, torus_assignment, samples=3, seed=5, sampler="mixed")
        assert report.extra["sampler"] == "mixed"
        assert report.passed(1e-8)

    def test_jacobi_unknown_sampler(self, torus, torus_assignment):
        with pytest.raises(ValueError):
            jacobi_suite(torus, torus_assignment, samples=1, sampler="everything")

    def test_jacobi_entry_observables_hold_for_standard_r(self, double, r2):
        R = RMatrixAssignment.uniform(double, r2)
        assert jacobi_suite(double, R, samples=3, seed=2, observables=entry_triple(double)).passed(1e-8)

    def test_jacobi_negative_control(self, double):
        R = RMatrixAssignment.uniform(double, random_r(2, seed=3))
        report = jacobi_suite(double, R, samples=3, seed=2, observables=entry_triple(double))
        assert report.extra["sampler"] == "fixed"
        assert report.max_residual > 1e-3

    def test_trace_words_on_the_torus_cannot_see_the_skew_part(self, torus):
        R = RMatrixAssignment.uniform(torus, random_r(2, seed=3))
        assert jacobi_suite(torus, R, samples=3, seed=2).passed(1e-8)

    def test_jacobi_negative_control_helper(self, double):
        report = jacobi_negative_control(double, 2, samples=3, seed=0)
        assert report.extra["cybe_residual"] > 1e-3
        assert report.max_residual > 1e-3

    @pytest.mark.parametrize("name", ["torus", "double"])
    def test_gauge_action_is_poisson(self, name, r2):
        graph = named_graph(name)
        R = RMatrixAssignment.uniform(graph, r2)
        assert poisson_action_residual(graph, R, samples=3, seed=2).passed(1e-8)

    def test_wrong_sklyanin_sign_is_detected(self, double, r2):
        R = RMatrixAssignment.uniform(double, r2)
        observables = (ExactObservable(entry(var("a"), 0, 1)), ExactObservable(entry(var("b"), 1, 0)))
        report = poisson_action_residual(double, R, samples=2, seed=2, sign=WRONG_SKLYANIN_SIGN,
                                         observables=observables)
        assert report.max_residual > 1e-6

    def test_trivial_gauge_hides_the_sign(self, double, r2):
        R = RMatrixAssignment.uniform(double, r2)
        report = poisson_action_residual(double, R, samples=2, sign=WRONG_SKLYANIN_SIGN, trivial_gauge=True)
        assert report.passed(1e-10)

    def test_glue_is_poisson(self, single_edge, r2):
        union, _ = disjoint_union(single_edge, single_edge)
        R = RMatrixAssignment.polyuble(union, r2)
        report = move_is_poisson_residual(union, MoveDescriptor.glue(1, 2), R, samples=3, seed=1)
        assert report.passed(1e-9)

    @pytest.mark.parametrize("move", [MoveDescriptor.contract("a", 0), MoveDescriptor.erase("b")])
    def test_contract_and_erase_are_poisson(self, double, r2, move):
        R = RMatrixAssignment.polyuble(double, r2)
        assert move_is_poisson_residual(double, move, R, samples=3, seed=1).passed(1e-9)

    def test_glue_precondition(self, single_edge, r2):
        union, _ = disjoint_union(single_edge, single_edge)
        R = RMatrixAssignment.uniform(union, r2)
        with pytest.raises(GluePreconditionError) as info:
            check_glue_precondition(MoveDescriptor.glue(1, 2), R)
        assert info.value.to_dict()["error"] == "glue-precondition"

    def test_ra_independence(self, torus, torus_assignment):
        assert ra_independence_suite(torus, torus_assignment, samples=3, seed=4).passed(1e-9)

    def test_ra_independence_needs_invariant_observables(self, torus_connection, torus_assignment):
        f = ExactObservable(entry(var("a"), 0, 1))
        with pytest.raises(ObservableError):
            ra_independence_residual(f, f, torus_connection, torus_assignment, torus_assignment.flipped())

    def test_wilson_loops_are_gauge_invariant(self, double):
        A = random_connection(double, 2, seed=6)
        loops = wilson_loops(double)
        assert len(loops) == 2
        assert all(is_gauge_invariant(w, A) for w in loops)


class TestResidualReport:
    def test_worst_sample_includes_offset(self):
        report = ResidualReport("jacobi", 2, 0, 3, [1e-12, 5e-9, 1e-10], sample_offset=10)
        assert report.worst_sample == 11
        assert report.max_residual == 5e-9
        assert not report.passed(1e-9)
        assert report.to_dict()["worst_sample"] == 11

    def test_empty(self):
        report = ResidualReport("jacobi", 2, 0, 0, [])
        assert report.worst_sample is None
        assert report.passed(0.0)


class TestLeafSubmanifold:
    def test_cilium_free_loop_face(self, loop, r2):
        report = fixed_monodromy_leaf_check(loop, ("a_v",), RMatrixAssignment.uniform(loop, r2), samples=3)
        assert report.max_residual < 1e-8

    def test_double_face_with_fixed_monodromy(self, double, r2):
        h = np.diag([2.0, 0.5]).astype(complex)
        report = fixed_monodromy_leaf_check(double, ("b_v", "a"), RMatrixAssignment.uniform(double, r2),
                                            h=h, samples=3)
        assert report.face == ("a", "b_v")
        assert report.leaf_distance < 1e-10
        assert report.max_residual < 1e-8

    def test_torus_face_holds_the_cilium(self, torus, torus_assignment):
        with pytest.raises(CiliumInFaceError):
            fixed_monodromy_leaf_check(torus, ("a", "b", "a_v", "b_v"), torus_assignment, samples=1)

    def test_not_a_face(self, double, r2):
        with pytest.raises(PathError):
            fixed_monodromy_leaf_check(double, ("a",), RMatrixAssignment.uniform(double, r2), samples=1)

    def test_place_on_leaf(self, double):
        A = random_connection(double, 2, seed=1)
        path = face_path(double, ("a", "b_v"))
        h = np.array([[1, 1], [0, 1]], dtype=complex)
        np.testing.assert_allclose(monodromy(place_on_leaf(A, path, h), path), h, atol=1e-12)
