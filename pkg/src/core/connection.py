"""
Graph connections and the lattice gauge group.

A connection stores one invertible matrix per edge, keyed by the E1
representative (the lexicographically smaller end). value(end) is the
transport arriving at `end`; the opposite end reads the inverse.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ConnectionMismatchError, PathError
from .lie_core import Flavor, build_basis, group_exp
from .ribbon_graph import (CiliatedFatGraph, MoveDescriptor, MoveOutcome, apply_move, disjoint_union,
                           ensure_valid, face_path)
from ..utils.random_streams import derive_rng
from ..utils.serialization import matrix_from_json, matrix_to_json

logger = logging.getLogger(__name__)

DET_TOLERANCE = 1e-10


def _check_group_element(matrix: np.ndarray, k: int, flavor: Flavor, label: str) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (k, k):
        raise ConnectionMismatchError(f"{label}: expected {k}x{k} matrix, got shape {matrix.shape}", label=label)
    det = np.linalg.det(matrix)
    if not np.isfinite(det) or abs(det) < 1e-14:
        raise ConnectionMismatchError(f"{label}: matrix is not invertible", label=label)
    if flavor is Flavor.SL and abs(det - 1) > DET_TOLERANCE:
        raise ConnectionMismatchError(f"{label}: |det - 1| = {abs(det - 1):.3e} for SL", label=label)
    return matrix


@dataclass(frozen=True, eq=False)
class GraphConnection:
    graph: CiliatedFatGraph
    k: int
    flavor: Flavor
    values: Mapping[str, np.ndarray]
    _inverses: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        expected = set(self.graph.representatives)
        if set(self.values) != expected:
            raise ConnectionMismatchError(
                f"values must be keyed by {sorted(expected)}, got {sorted(self.values)}")
        checked = {}
        for end in sorted(self.values):
            checked[end] = _check_group_element(self.values[end], self.k, self.flavor, f"edge {end!r}")
            self._inverses[end] = np.linalg.inv(checked[end])
        object.__setattr__(self, "values", checked)

    @property
    def basis(self):
        return build_basis(self.k, self.flavor)

    def value(self, end: str) -> np.ndarray:
        """Transport arriving at `end`"""
        if end in self.values:
            return self.values[end]
        partner = self.graph.involution.get(end)
        if partner is None:
            raise ConnectionMismatchError(f"unknown end {end!r}", end=end)
        return self._inverses[partner]

    def with_values(self, updates: Mapping[str, np.ndarray]) -> "GraphConnection":
        """Copy with some transports replaced; keys may be either end of an edge"""
        values = dict(self.values)
        for end, matrix in updates.items():
            if end in values:
                values[end] = np.asarray(matrix, dtype=complex)
            else:
                values[self.graph.partner(end)] = np.linalg.inv(matrix)
        return GraphConnection(self.graph, self.k, self.flavor, values)

    def perturbed(self, end: str, X: np.ndarray, s: float = 1.0) -> "GraphConnection":
        """A_end -> A_end exp(sX), equivalently A_end_v -> exp(-sX) A_end_v"""
        return self.with_values({end: self.value(end) @ group_exp(s * np.asarray(X))})

    def max_difference(self, other: "GraphConnection") -> float:
        return max((float(np.max(np.abs(self.values[e] - other.values[e]))) for e in self.values), default=0.0)

    def to_json(self) -> Dict[str, Any]:
        return {
            "graph": self.graph.to_json(),
            "k": self.k,
            "flavor": self.flavor.value,
            "values": {end: matrix_to_json(self.values[end]) for end in sorted(self.values)},
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "GraphConnection":
        graph = CiliatedFatGraph.from_json(data["graph"])
        ensure_valid(graph)
        values = {end: matrix_from_json(rows) for end, rows in data["values"].items()}
        return cls(graph, int(data["k"]), Flavor.parse(data["flavor"]), values)


@dataclass(frozen=True, eq=False)
class GaugeElement:
    """One group element per vertex"""

    k: int
    flavor: Flavor
    elements: Tuple[np.ndarray, ...]

    def __post_init__(self):
        checked = tuple(_check_group_element(g, self.k, self.flavor, f"vertex {n}")
                        for n, g in enumerate(self.elements))
        object.__setattr__(self, "elements", checked)

    def compose(self, other: "GaugeElement") -> "GaugeElement":
        """Element acting as `self` after `other`: compose(other).act(A) == self.act(other.act(A))"""
        if len(other.elements) != len(self.elements):
            raise ConnectionMismatchError("gauge elements live on different vertex sets")
        return GaugeElement(self.k, self.flavor, tuple(h @ g for g, h in zip(self.elements, other.elements)))

    def restricted(self, vertices: Sequence[int]) -> "GaugeElement":
        return GaugeElement(self.k, self.flavor, tuple(self.elements[v] for v in vertices))


def identity_gauge(graph: CiliatedFatGraph, k: int, flavor: Union[str, Flavor] = Flavor.SL) -> GaugeElement:
    return GaugeElement(k, Flavor.parse(flavor), tuple(np.eye(k, dtype=complex) for _ in graph.vertices))


def random_algebra_element(rng: np.random.Generator, k: int, flavor: Flavor, scale: float = 1.0) -> np.ndarray:
    """Random algebra element with entries bounded by `scale` in modulus"""
    z = rng.uniform(-1.0, 1.0, size=(k, k)) + 1j * rng.uniform(-1.0, 1.0, size=(k, k))
    return scale * build_basis(k, flavor).project(0.35 * z)


def random_connection(graph: CiliatedFatGraph, k: int, flavor: Union[str, Flavor] = Flavor.SL,
                      seed: int = 0, scale: float = 1.0) -> GraphConnection:
    """Seeded connection with transports exp(X), X random in the algebra"""
    ensure_valid(graph)
    flavor = Flavor.parse(flavor)
    rng = derive_rng(seed, "connection", k, flavor.value)
    values = {end: group_exp(random_algebra_element(rng, k, flavor, scale)) for end in graph.representatives}
    return GraphConnection(graph, k, flavor, values)


def identity_connection(graph: CiliatedFatGraph, k: int, flavor: Union[str, Flavor] = Flavor.SL) -> GraphConnection:
    ensure_valid(graph)
    return GraphConnection(graph, k, Flavor.parse(flavor),
                           {end: np.eye(k, dtype=complex) for end in graph.representatives})


def random_gauge(graph: CiliatedFatGraph, k: int, flavor: Union[str, Flavor] = Flavor.SL,
                 seed: int = 0, scale: float = 1.0) -> GaugeElement:
    flavor = Flavor.parse(flavor)
    rng = derive_rng(seed, "gauge", k, flavor.value)
    return GaugeElement(k, flavor, tuple(group_exp(random_algebra_element(rng, k, flavor, scale))
                                         for _ in graph.vertices))


def gauge_act(g: GaugeElement, A: GraphConnection) -> GraphConnection:
    """A_alpha -> g_[alpha_v]^-1 A_alpha g_[alpha]"""
    if g.k != A.k or len(g.elements) != A.graph.vertex_count:
        raise ConnectionMismatchError("gauge element does not match the connection",
                                      k=g.k, vertices=len(g.elements))
    graph = A.graph
    inverses = [np.linalg.inv(x) for x in g.elements]
    values = {}
    for end, matrix in A.values.items():
        values[end] = inverses[graph.vertex_of[graph.involution[end]]] @ matrix @ g.elements[graph.vertex_of[end]]
    return GraphConnection(graph, A.k, A.flavor, values)


def monodromy(A: GraphConnection, path: Sequence[str]) -> np.ndarray:
    """
    Ordered product of transports along an edge-consecutive path.

    Step i arrives at [path[i]]; the next step must depart from there,
    i.e. [path[i+1]_v] == [path[i]].
    """
    graph = A.graph
    for end in path:
        if end not in graph.involution:
            raise PathError(f"unknown end {end!r} in path", end=end)
    for current, following in zip(path, path[1:]):
        if graph.vertex_of[graph.involution[following]] != graph.vertex_of[current]:
            raise PathError(f"path is not consecutive between {current!r} and {following!r}",
                            end=following)
    return evaluate_word(A, path)


def evaluate_word(A: GraphConnection, word: Sequence[str]) -> np.ndarray:
    """Product of transports, no consecutiveness requirement; empty word is Id"""
    result = np.eye(A.k, dtype=complex)
    for end in word:
        result = result @ A.value(end)
    return result


def reverse_path(graph: CiliatedFatGraph, path: Sequence[str]) -> Tuple[str, ...]:
    return tuple(graph.involution[end] for end in reversed(path))


def face_monodromy(A: GraphConnection, face: Sequence[str]) -> np.ndarray:
    return monodromy(A, face_path(A.graph, face))


def characteristic_polynomial(matrix: np.ndarray) -> np.ndarray:
    return np.poly(matrix)


def connection_from_outcome(outcome: MoveOutcome, A: GraphConnection) -> GraphConnection:
    values = {end: evaluate_word(A, outcome.words[end]) for end in outcome.graph.representatives}
    return GraphConnection(outcome.graph, A.k, A.flavor, values)


def move_words(graph: CiliatedFatGraph, move: MoveDescriptor) -> Dict[str, Tuple[str, ...]]:
    """Every end of the moved graph as a word in the source ends"""
    return dict(apply_move(graph, move).words)


def move_map(move: MoveDescriptor, A: GraphConnection, outcome: Optional[MoveOutcome] = None) -> GraphConnection:
    """Connection on the moved graph induced by `move`"""
    outcome = outcome or apply_move(A.graph, move)
    return connection_from_outcome(outcome, A)


def union_connection(first: GraphConnection, second: GraphConnection) -> Tuple[GraphConnection, Dict[str, str]]:
    """Connection on the disjoint union of the two graphs (see ribbon_graph.disjoint_union)"""
    if first.k != second.k or first.flavor is not second.flavor:
        raise ConnectionMismatchError("cannot join connections of different groups")
    graph, rename = disjoint_union(first.graph, second.graph)
    values = dict(first.values)
    values.update({rename[end]: matrix for end, matrix in second.values.items()})
    return GraphConnection(graph, first.k, first.flavor, values), rename
