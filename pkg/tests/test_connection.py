import numpy as np
import pytest

from src.core.connection import (GraphConnection, characteristic_polynomial, evaluate_word, face_monodromy,
                                 gauge_act, identity_connection, identity_gauge, monodromy, move_map, move_words,
                                 random_connection, random_gauge, reverse_path, union_connection)
from src.core.exceptions import ConnectionMismatchError, PathError
from src.core.lie_core import Flavor
from src.core.ribbon_graph import MoveDescriptor, disjoint_union, faces, named_graph


class TestGraphConnection:
    def test_keyed_by_representatives(self, torus_connection):
        assert sorted(torus_connection.values) == ["a", "b"]

    def test_opposite_end_reads_the_inverse(self, torus_connection):
        np.testing.assert_allclose(torus_connection.value("a_v") @ torus_connection.value("a"), np.eye(2),
                                   atol=1e-12)

    def test_random_connection_is_special_linear(self, torus_connection):
        for matrix in torus_connection.values.values():
            assert abs(np.linalg.det(matrix) - 1) < 1e-12

    def test_seeded(self, torus):
        first = random_connection(torus, 3, seed=11)
        second = random_connection(torus, 3, seed=11)
        assert first.max_difference(second) == 0.0
        assert first.max_difference(random_connection(torus, 3, seed=12)) > 0

    def test_wrong_keys(self, torus):
        with pytest.raises(ConnectionMismatchError):
            GraphConnection(torus, 2, Flavor.SL, {"a": np.eye(2)})

    def test_determinant_checked_for_sl(self, loop):
        with pytest.raises(ConnectionMismatchError):
            GraphConnection(loop, 2, Flavor.SL, {"a": 2 * np.eye(2)})
        assert GraphConnection(loop, 2, Flavor.GL, {"a": 2 * np.eye(2)}).value("a_v")[0, 0] == pytest.approx(0.5)

    def test_with_values_accepts_either_end(self, torus_connection):
        M = np.array([[1, 1], [0, 1]], dtype=complex)
        updated = torus_connection.with_values({"a_v": M})
        np.testing.assert_allclose(updated.value("a"), np.linalg.inv(M))

    def test_perturbed(self, torus_connection):
        X = np.array([[0, 1], [0, 0]], dtype=complex)
        moved = torus_connection.perturbed("b", X, 0.5)
        np.testing.assert_allclose(moved.value("b"), torus_connection.value("b") @ np.array([[1, 0.5], [0, 1]]),
                                   atol=1e-13)

    def test_json_round_trip(self, torus_connection):
        restored = GraphConnection.from_json(torus_connection.to_json())
        assert restored.max_difference(torus_connection) < 1e-15


class TestGauge:
    def test_identity_gauge_acts_trivially(self, torus, torus_connection):
        moved = gauge_act(identity_gauge(torus, 2), torus_connection)
        assert moved.max_difference(torus_connection) < 1e-14

    def test_face_monodromy_is_conjugated(self, double):
        A = random_connection(double, 3, seed=5)
        g = random_gauge(double, 3, seed=6)
        for face in faces(double):
            before = face_monodromy(A, face)
            after = face_monodromy(gauge_act(g, A), face)
            np.testing.assert_allclose(characteristic_polynomial(after), characteristic_polynomial(before),
                                       atol=1e-10)

    def test_compose_is_an_action(self, double):
        A = random_connection(double, 2, seed=1)
        g, h = random_gauge(double, 2, seed=2), random_gauge(double, 2, seed=3)
        assert gauge_act(g.compose(h), A).max_difference(gauge_act(g, gauge_act(h, A))) < 1e-12

    def test_mismatched_gauge(self, torus, double):
        with pytest.raises(ConnectionMismatchError):
            gauge_act(identity_gauge(double, 2), random_connection(torus, 2))


class TestMonodromy:
    def test_empty_word_is_identity(self, torus_connection):
        np.testing.assert_array_equal(evaluate_word(torus_connection, ()), np.eye(2))

    def test_non_consecutive_path(self, double):
        with pytest.raises(PathError):
            monodromy(random_connection(double, 2), ("a", "a"))

    def test_unknown_end(self, double):
        with pytest.raises(PathError):
            monodromy(random_connection(double, 2), ("z",))

    def test_reverse_path_inverts(self, double):
        A = random_connection(double, 2, seed=4)
        path = ("a", "b_v")
        np.testing.assert_allclose(monodromy(A, path) @ monodromy(A, reverse_path(double, path)), np.eye(2),
                                   atol=1e-12)

    def test_flat_connection(self, torus):
        A = identity_connection(torus, 3)
        np.testing.assert_array_equal(face_monodromy(A, faces(torus)[0]), np.eye(3))


class TestMoves:
    def test_glue_multiplies_transports(self, single_edge):
        first, second = random_connection(single_edge, 2, seed=1), random_connection(single_edge, 2, seed=2)
        A, rename = union_connection(first, second)
        moved = move_map(MoveDescriptor.glue(1, 2), A)
        np.testing.assert_allclose(moved.value("a_v"), second.value("a_v") @ first.value("a_v"), atol=1e-12)

    def test_erase_keeps_remaining_transport(self, double):
        A = random_connection(double, 2, seed=9)
        moved = move_map(MoveDescriptor.erase("b"), A)
        np.testing.assert_array_equal(moved.value("a"), A.value("a"))

    def test_move_words_express_new_ends(self, double):
        words = move_words(double, MoveDescriptor.contract("a", 0))
        assert words == {"b": ("b", "a_v"), "b_v": ("a", "b_v")}
        A = random_connection(double, 2, seed=4)
        moved = move_map(MoveDescriptor.contract("a", 0), A)
        np.testing.assert_allclose(moved.value("b"), evaluate_word(A, words["b"]), atol=1e-12)

    def test_union_needs_same_group(self, loop):
        with pytest.raises(ConnectionMismatchError):
            union_connection(random_connection(loop, 2), random_connection(loop, 3))

    def test_union_graph_matches(self, loop):
        A, _ = union_connection(random_connection(loop, 2), random_connection(loop, 2))
        assert A.graph == disjoint_union(named_graph("loop"), named_graph("loop"))[0]
