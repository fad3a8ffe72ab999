import pytest
from hypothesis import given, strategies as st

from src.core.exceptions import GraphValidationError, MoveError
from src.core.ribbon_graph import (CiliatedFatGraph, MoveDescriptor, MoveKind, add_loop, apply_move, cilium_corner,
                                   connected_components, contract_edge, disjoint_union, erase_edge, face_has_cilium,
                                   face_path, faces, gallery, glue_vertices, isolated_vertex, named_graph, polygon,
                                   polyuble, surface, surface_components, validate)


def graph(vertices, pairs):
    involution = {}
    for x, y in pairs:
        involution[x], involution[y] = y, x
    return CiliatedFatGraph.from_vertices(vertices, involution)


class TestValidate:
    def test_named_graphs_are_valid(self):
        for name, g in gallery().items():
            assert validate(g).ok, name

    def test_fixed_point(self):
        g = CiliatedFatGraph(ends=("a",), involution={"a": "a"}, vertices=(("a",),))
        report = validate(g)
        assert not report.ok
        assert report.violation == "fixed point"
        assert report.end == "a"

    def test_involution_mentions_unknown_end(self):
        g = CiliatedFatGraph(ends=("a", "b"), involution={"a": "b", "b": "a", "z": "a"}, vertices=(("a", "b"),))
        report = validate(g)
        assert (report.violation, report.end) == ("unknown end", "z")

    def test_not_an_involution(self):
        g = CiliatedFatGraph(ends=("a", "b", "c"), involution={"a": "b", "b": "c", "c": "a"},
                             vertices=(("a", "b", "c"),))
        report = validate(g)
        assert (report.violation, report.end) == ("not an involution", "a")

    def test_end_in_no_vertex(self):
        g = CiliatedFatGraph(ends=("a", "a_v"), involution={"a": "a_v", "a_v": "a"}, vertices=(("a",),))
        report = validate(g)
        assert (report.violation, report.end) == ("partition", "a_v")

    def test_end_in_two_vertices(self):
        g = CiliatedFatGraph(ends=("a", "a_v"), involution={"a": "a_v", "a_v": "a"},
                             vertices=(("a", "a_v"), ("a",)))
        assert validate(g).violation == "partition"

    def test_report_never_raises(self):
        g = CiliatedFatGraph(ends=("a",), involution={}, vertices=())
        assert validate(g).to_dict()["ok"] is False

    def test_faces_refuse_invalid_graph(self):
        g = CiliatedFatGraph(ends=("a",), involution={"a": "a"}, vertices=(("a",),))
        with pytest.raises(GraphValidationError):
            faces(g)


class TestFaces:
    def test_torus_has_one_face_with_the_cilium(self, torus):
        assert faces(torus) == [("a", "b_v", "a_v", "b")]
        assert face_path(torus, faces(torus)[0]) == ("a", "b", "a_v", "b_v")
        assert cilium_corner(torus, faces(torus)[0]) == ("b_v", "a")

    def test_loop_faces(self, loop):
        assert faces(loop) == [("a",), ("a_v",)]
        assert face_has_cilium(loop, ("a",))
        assert not face_has_cilium(loop, ("a_v",))

    def test_double_faces(self, double):
        assert faces(double) == [("a", "b_v"), ("a_v", "b")]
        assert not face_has_cilium(double, ("a", "b_v"))
        assert face_has_cilium(double, ("a_v", "b"))

    def test_single_edge_is_one_face(self, single_edge):
        assert faces(single_edge) == [("a", "a_v")]

    @given(st.integers(1, 7), st.sampled_from(["polyuble", "polygon"]))
    def test_faces_partition_the_ends(self, m, kind):
        g = polyuble(m) if kind == "polyuble" else polygon(m)
        orbits = faces(g)
        assert sorted(end for face in orbits for end in face) == sorted(g.ends)


class TestSurface:
    @pytest.mark.parametrize("name, expected", [
        ("torus", {"V": 1, "E": 2, "b": 1, "chi": -1, "genus": 1}),
        ("single_edge", {"V": 2, "E": 1, "b": 1, "chi": 1, "genus": 0}),
        ("loop", {"V": 1, "E": 1, "b": 2, "chi": 0, "genus": 0}),
        ("double", {"V": 2, "E": 2, "b": 2, "chi": 0, "genus": 0}),
        ("polyuble(3)", {"V": 2, "E": 3, "b": 3, "chi": -1, "genus": 0}),
        ("polygon(3)", {"V": 3, "E": 3, "b": 2, "chi": 0, "genus": 0}),
    ])
    def test_named_surfaces(self, name, expected):
        assert surface(named_graph(name)).to_dict() == expected

    def test_isolated_vertex_is_a_disk(self):
        data = surface(isolated_vertex())
        assert (data.boundary_count, data.genus) == (1, 0)

    def test_disconnected_graph_refused(self, single_edge):
        union, _ = disjoint_union(single_edge, single_edge)
        with pytest.raises(GraphValidationError) as info:
            surface(union)
        assert info.value.report.violation == "disconnected"
        assert len(surface_components(union)) == 2
        assert connected_components(union) == [[0, 1], [2, 3]]


class TestMoves:
    def test_erase_double_edge_gives_single_edge(self, double, single_edge):
        outcome = apply_move(double, MoveDescriptor.erase("b"))
        assert outcome.graph == single_edge
        assert outcome.vertex_origin == (0, 1)

    def test_contract_double_edge_gives_loop(self, double):
        outcome = apply_move(double, MoveDescriptor.contract("a", 0))
        assert outcome.graph.vertices == (("b", "b_v"),)
        assert outcome.vertex_origin == (0,)
        assert outcome.words == {"b": ("b", "a_v"), "b_v": ("a", "b_v")}
        assert surface(outcome.graph).boundary_count == 2

    def test_contract_loop_refused(self, loop):
        with pytest.raises(MoveError):
            apply_move(loop, MoveDescriptor.contract("a", 0))

    def test_contract_toward_non_endpoint_refused(self):
        with pytest.raises(MoveError):
            apply_move(polygon(3), MoveDescriptor.contract("a", 2))

    def test_glue_two_single_edges(self, single_edge):
        union, rename = disjoint_union(single_edge, single_edge)
        assert rename == {"a": "1.a", "a_v": "1.a_v"}
        outcome = apply_move(union, MoveDescriptor.glue(1, 2))
        assert outcome.graph.vertices == (("a_v",), ("1.a",))
        assert outcome.vertex_origin == (0, 3)
        assert outcome.words["a_v"] == ("1.a_v", "a_v")
        assert outcome.words["1.a"] == ("a", "1.a")
        assert surface(outcome.graph).to_dict()["genus"] == 0

    def test_plain_move_functions_match_apply_move(self, double, single_edge):
        assert erase_edge(double, "b") == apply_move(double, MoveDescriptor.erase("b")).graph
        assert contract_edge(double, "a", 1) == apply_move(double, MoveDescriptor.contract("a", 1)).graph
        union, _ = disjoint_union(single_edge, single_edge)
        assert glue_vertices(union, 1, 2) == apply_move(union, MoveDescriptor.glue(1, 2)).graph

    def test_glue_mismatched_valence_refused(self, single_edge, double):
        union, _ = disjoint_union(single_edge, double)
        with pytest.raises(MoveError):
            apply_move(union, MoveDescriptor.glue(1, 2))

    def test_glue_vertex_to_itself_refused(self, double):
        with pytest.raises(MoveError):
            apply_move(double, MoveDescriptor.glue(0, 0))

    def test_add_loop_uses_fresh_names(self):
        g = add_loop(isolated_vertex(), 0)
        assert g.vertices == (("l1", "l1_v"),)
        again = add_loop(g, 0, 2)
        assert again.vertices == (("l1", "l1_v", "l2", "l2_v"),)

    def test_add_loop_bad_position(self, loop):
        with pytest.raises(MoveError):
            apply_move(loop, MoveDescriptor.add_loop(0, 5))

    def test_move_json_round_trip(self):
        move = MoveDescriptor.contract("a", 1)
        assert MoveDescriptor.from_json(move.to_json()) == move
        assert MoveDescriptor.from_json({"op": "glue", "n1": 1, "n2": 2}).kind is MoveKind.GLUE

    def test_unknown_move(self):
        with pytest.raises(MoveError):
            MoveDescriptor.from_json({"op": "twist"})

    def test_missing_move_field(self, double):
        with pytest.raises(MoveError):
            apply_move(double, MoveDescriptor(MoveKind.ERASE))


class TestNamedGraphs:
    def test_aliases_and_parameters(self):
        assert named_graph("torus") == named_graph("torus_one_hole")
        assert named_graph("polyuble:4") == named_graph("polyuble", 4) == polyuble(4)

    def test_unknown_name(self):
        with pytest.raises(MoveError):
            named_graph("klein_bottle")

    def test_gallery_labels(self):
        assert set(gallery()) == {"single_edge", "double", "loop", "torus_one_hole", "polyuble(3)", "polygon(3)"}

    def test_json_round_trip(self, torus):
        assert CiliatedFatGraph.from_json(torus.to_json()) == torus

    def test_malformed_json(self):
        with pytest.raises(ValueError):
            CiliatedFatGraph.from_json({"ends": ["a"]})

    def test_representatives(self, double):
        assert double.representatives == ("a", "b")
        assert double.representative("b_v") == "b"
