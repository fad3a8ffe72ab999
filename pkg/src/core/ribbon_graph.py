"""
Ciliated fat graphs.

A graph is a set of end identifiers, a fixed-point-free involution on it
(the two ends of an edge) and an ordered partition into vertices. The list
order at a vertex is its linear order: the first end sits right after the
cilium, and closing the list up gives the cyclic order of the fat structure.

Moves return a `MoveOutcome` carrying the new graph, the source vertex each
target vertex came from, and for every target end the word of source ends
whose transports multiply to the new transport arriving at that end.
"""

import logging
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .exceptions import GraphValidationError, MoveError, NumericError

logger = logging.getLogger(__name__)

Word = Tuple[str, ...]

VIOLATIONS = ("unknown end", "fixed point", "not an involution", "partition", "odd count")


@dataclass(frozen=True, eq=False)
class CiliatedFatGraph:
    ends: Tuple[str, ...]
    involution: Dict[str, str]
    vertices: Tuple[Tuple[str, ...], ...]

    @classmethod
    def from_vertices(cls, vertices: Sequence[Sequence[str]], involution: Dict[str, str]) -> "CiliatedFatGraph":
        """Build a graph whose end set is read off the vertex lists"""
        ends = tuple(sorted(end for vertex in vertices for end in vertex))
        return cls(ends=ends, involution=dict(involution),
                   vertices=tuple(tuple(vertex) for vertex in vertices))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CiliatedFatGraph):
            return NotImplemented
        return (self.ends == other.ends and self.involution == other.involution
                and self.vertices == other.vertices)

    def __hash__(self) -> int:
        return hash((self.ends, self.vertices, tuple(sorted(self.involution.items()))))

    def __repr__(self) -> str:
        return f"CiliatedFatGraph(vertices={list(map(list, self.vertices))})"

    @cached_property
    def vertex_of(self) -> Dict[str, int]:
        return {end: index for index, vertex in enumerate(self.vertices) for end in vertex}

    @cached_property
    def position_of(self) -> Dict[str, int]:
        return {end: pos for vertex in self.vertices for pos, end in enumerate(vertex)}

    @cached_property
    def end_index(self) -> Dict[str, int]:
        """Index of every end in the sorted end tuple (direction ordering)"""
        return {end: i for i, end in enumerate(self.ends)}

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.ends) // 2

    def partner(self, end: str) -> str:
        try:
            return self.involution[end]
        except KeyError:
            raise MoveError(f"unknown end {end!r}", end=end)

    def representative(self, end: str) -> str:
        """E1 representative of the edge through `end`: the smaller identifier"""
        return min(end, self.partner(end))

    @property
    def representatives(self) -> Tuple[str, ...]:
        return tuple(end for end in self.ends if end < self.involution[end])

    def is_loop(self, end: str) -> bool:
        return self.vertex_of[end] == self.vertex_of[self.partner(end)]

    def valence(self, vertex: int) -> int:
        return len(self.vertices[vertex])

    def next_cyclic(self, end: str) -> str:
        vertex = self.vertices[self.vertex_of[end]]
        return vertex[(self.position_of[end] + 1) % len(vertex)]

    def to_json(self) -> Dict[str, Any]:
        return {
            "ends": list(self.ends),
            "involution": {end: self.involution[end] for end in sorted(self.involution)},
            "vertices": [list(vertex) for vertex in self.vertices],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CiliatedFatGraph":
        try:
            ends = tuple(str(end) for end in data["ends"])
            involution = {str(k): str(v) for k, v in dict(data["involution"]).items()}
            vertices = tuple(tuple(str(end) for end in vertex) for vertex in data["vertices"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"malformed graph JSON: {e}")
        return cls(ends=ends, involution=involution, vertices=vertices)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violation: Optional[str] = None
    end: Optional[str] = None
    message: str = "ok"

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "violation": self.violation, "end": self.end, "message": self.message}


def _violation(kind: str, end: Optional[str], message: str) -> ValidationReport:
    return ValidationReport(ok=False, violation=kind, end=end, message=message)


def validate(graph: CiliatedFatGraph) -> ValidationReport:
    """Check the graph invariants; report the first violation, never raise"""
    end_set = set(graph.ends)
    if len(end_set) != len(graph.ends):
        duplicate = sorted(e for e in end_set if graph.ends.count(e) > 1)[0]
        return _violation("partition", duplicate, f"end {duplicate!r} listed twice")

    for key in sorted(graph.involution):
        if key not in end_set:
            return _violation("unknown end", key, f"involution mentions unknown end {key!r}")

    for end in sorted(end_set):
        if end not in graph.involution:
            return _violation("not an involution", end, f"end {end!r} has no partner")
        partner = graph.involution[end]
        if partner not in end_set:
            return _violation("unknown end", partner, f"partner {partner!r} of {end!r} is not an end")
        if partner == end:
            return _violation("fixed point", end, f"end {end!r} is its own partner")
        if graph.involution.get(partner) != end:
            return _violation("not an involution", end, f"partner of partner of {end!r} is not {end!r}")

    seen = set()
    for vertex in graph.vertices:
        for end in vertex:
            if end not in end_set:
                return _violation("unknown end", end, f"vertex lists unknown end {end!r}")
            if end in seen:
                return _violation("partition", end, f"end {end!r} appears in two places")
            seen.add(end)
    missing = sorted(end_set - seen)
    if missing:
        return _violation("partition", missing[0], f"end {missing[0]!r} belongs to no vertex")

    if len(graph.ends) % 2:
        return _violation("odd count", None, "odd number of ends")
    return ValidationReport(ok=True)


def ensure_valid(graph: CiliatedFatGraph) -> None:
    report = validate(graph)
    if not report.ok:
        raise GraphValidationError(report)


def faces(graph: CiliatedFatGraph) -> List[Tuple[str, ...]]:
    """Orbits of alpha -> next_cyclic(alpha_v), each starting at its smallest end"""
    ensure_valid(graph)
    visited = set()
    orbits = []
    for start in graph.ends:
        if start in visited:
            continue
        orbit = []
        end = start
        while end not in visited:
            visited.add(end)
            orbit.append(end)
            end = graph.next_cyclic(graph.involution[end])
        orbits.append(tuple(orbit))
    return orbits


def face_path(graph: CiliatedFatGraph, face: Sequence[str]) -> Tuple[str, ...]:
    """
    Consecutive path around a face.

    The orbit is read backwards so that each step arrives where the next
    departs; the result starts at the smallest end of the face.
    """
    reversed_face = list(reversed(face))
    start = reversed_face.index(min(reversed_face))
    return tuple(reversed_face[start:] + reversed_face[:start])


def cilium_corner(graph: CiliatedFatGraph, face: Sequence[str]) -> Optional[Tuple[str, str]]:
    """The corner of `face` that crosses a cilium, if any"""
    for end in face:
        corner_start = graph.involution[end]
        if graph.position_of[corner_start] == graph.valence(graph.vertex_of[corner_start]) - 1:
            return corner_start, graph.next_cyclic(corner_start)
    return None


def face_has_cilium(graph: CiliatedFatGraph, face: Sequence[str]) -> bool:
    return cilium_corner(graph, face) is not None


def connected_components(graph: CiliatedFatGraph) -> List[List[int]]:
    """Vertex index lists of the connected components, ordered by smallest vertex"""
    parent = list(range(graph.vertex_count))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for end in graph.ends:
        a, b = find(graph.vertex_of[end]), find(graph.vertex_of[graph.involution[end]])
        if a != b:
            parent[max(a, b)] = min(a, b)

    groups: Dict[int, List[int]] = {}
    for v in range(graph.vertex_count):
        groups.setdefault(find(v), []).append(v)
    return [groups[root] for root in sorted(groups)]


@dataclass(frozen=True)
class SurfaceData:
    vertex_count: int
    edge_count: int
    boundary_count: int
    euler_characteristic: int
    genus: int

    def to_dict(self) -> Dict[str, int]:
        return {"V": self.vertex_count, "E": self.edge_count, "b": self.boundary_count,
                "chi": self.euler_characteristic, "genus": self.genus}


def _surface_of(vertex_count: int, edge_count: int, boundary_count: int) -> SurfaceData:
    chi = vertex_count - edge_count
    twice_genus = 2 - boundary_count - chi
    if twice_genus % 2 or twice_genus < 0:
        raise NumericError(f"inconsistent surface data V={vertex_count} E={edge_count} b={boundary_count}")
    return SurfaceData(vertex_count, edge_count, boundary_count, chi, twice_genus // 2)


def surface_components(graph: CiliatedFatGraph) -> List[SurfaceData]:
    """SurfaceData for every connected component; an isolated vertex is a disk"""
    face_list = faces(graph)
    result = []
    for component in connected_components(graph):
        members = set(component)
        ends = [e for e in graph.ends if graph.vertex_of[e] in members]
        boundary = sum(1 for face in face_list if graph.vertex_of[face[0]] in members)
        result.append(_surface_of(len(component), len(ends) // 2, max(boundary, 1)))
    return result


def surface(graph: CiliatedFatGraph) -> SurfaceData:
    ensure_valid(graph)
    components = connected_components(graph)
    if len(components) != 1:
        raise GraphValidationError(ValidationReport(
            ok=False, violation="disconnected", end=None,
            message=f"surface() needs a connected graph, found {len(components)} components"))
    return surface_components(graph)[0]


class MoveKind(str, Enum):
    ERASE = "erase"
    CONTRACT = "contract"
    GLUE = "glue"
    ADD_LOOP = "add-loop"


@dataclass(frozen=True)
class MoveDescriptor:
    kind: MoveKind
    edge: Optional[str] = None
    toward: Optional[int] = None
    n1: Optional[int] = None
    n2: Optional[int] = None
    vertex: Optional[int] = None
    position: int = 0

    @classmethod
    def erase(cls, edge: str) -> "MoveDescriptor":
        return cls(MoveKind.ERASE, edge=edge)

    @classmethod
    def contract(cls, edge: str, toward: int) -> "MoveDescriptor":
        return cls(MoveKind.CONTRACT, edge=edge, toward=toward)

    @classmethod
    def glue(cls, n1: int, n2: int) -> "MoveDescriptor":
        return cls(MoveKind.GLUE, n1=n1, n2=n2)

    @classmethod
    def add_loop(cls, vertex: int, position: int = 0) -> "MoveDescriptor":
        return cls(MoveKind.ADD_LOOP, vertex=vertex, position=position)

    def to_json(self) -> Dict[str, Any]:
        data = {"op": self.kind.value}
        for name in ("edge", "toward", "n1", "n2", "vertex"):
            value = getattr(self, name)
            if value is not None:
                data[name] = value
        if self.kind is MoveKind.ADD_LOOP:
            data["position"] = self.position
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "MoveDescriptor":
        try:
            kind = MoveKind(data["op"])
        except (KeyError, ValueError):
            raise MoveError(f"unknown move {data.get('op')!r}")
        return cls(kind, edge=data.get("edge"), toward=data.get("toward"), n1=data.get("n1"),
                   n2=data.get("n2"), vertex=data.get("vertex"), position=int(data.get("position", 0)))


@dataclass(frozen=True)
class MoveOutcome:
    graph: CiliatedFatGraph
    vertex_origin: Tuple[int, ...]
    words: Dict[str, Word] = field(default_factory=dict)


def _edge_ends(graph: CiliatedFatGraph, edge: str) -> Tuple[str, str]:
    if edge not in graph.involution:
        raise MoveError(f"unknown edge {edge!r}", edge=edge)
    return edge, graph.involution[edge]


def _rebuild(graph: CiliatedFatGraph, vertices: List[List[str]], involution: Dict[str, str]) -> CiliatedFatGraph:
    return CiliatedFatGraph.from_vertices(vertices, involution)


def _erase(graph: CiliatedFatGraph, edge: str) -> MoveOutcome:
    ensure_valid(graph)
    removed = set(_edge_ends(graph, edge))
    vertices, origin = [], []
    for index, vertex in enumerate(graph.vertices):
        kept = [end for end in vertex if end not in removed]
        if kept or not any(end in removed for end in vertex):
            vertices.append(kept)
            origin.append(index)
    involution = {e: p for e, p in graph.involution.items() if e not in removed}
    words = {e: (e,) for e in involution}
    return MoveOutcome(_rebuild(graph, vertices, involution), tuple(origin), words)


def _contract(graph: CiliatedFatGraph, edge: str, toward: int) -> MoveOutcome:
    ensure_valid(graph)
    e, f = _edge_ends(graph, edge)
    if not 0 <= toward < graph.vertex_count:
        raise MoveError(f"unknown vertex {toward}", vertex=toward)
    if graph.vertex_of[e] == graph.vertex_of[f]:
        raise MoveError(f"cannot contract loop edge {edge!r}", edge=edge)
    if toward not in (graph.vertex_of[e], graph.vertex_of[f]):
        raise MoveError(f"vertex {toward} is not an endpoint of edge {edge!r}", edge=edge, vertex=toward)

    alpha = e if graph.vertex_of[e] == toward else f
    alpha_v = graph.involution[alpha]
    removed = graph.vertex_of[alpha_v]
    other = list(graph.vertices[removed])
    cut = graph.position_of[alpha_v]
    inserted = other[cut + 1:] + other[:cut]

    survivor = list(graph.vertices[toward])
    at = graph.position_of[alpha]
    merged = survivor[:at] + inserted + survivor[at + 1:]

    vertices, origin = [], []
    for index, vertex in enumerate(graph.vertices):
        if index == removed:
            continue
        vertices.append(merged if index == toward else list(vertex))
        origin.append(index)
    involution = {x: p for x, p in graph.involution.items() if x not in (alpha, alpha_v)}

    words = {}
    for gamma in involution:
        word: Tuple[str, ...] = (gamma,)
        if graph.vertex_of[graph.involution[gamma]] == removed:
            word = (alpha_v,) + word
        if graph.vertex_of[gamma] == removed:
            word = word + (alpha,)
        words[gamma] = word
    return MoveOutcome(_rebuild(graph, vertices, involution), tuple(origin), words)


def _glue(graph: CiliatedFatGraph, n1: int, n2: int) -> MoveOutcome:
    ensure_valid(graph)
    for n in (n1, n2):
        if not 0 <= n < graph.vertex_count:
            raise MoveError(f"unknown vertex {n}", vertex=n)
    if n1 == n2:
        raise MoveError("cannot glue a vertex to itself", vertex=n1)
    first, second = graph.vertices[n1], graph.vertices[n2]
    if len(first) != len(second):
        raise MoveError(f"mismatched valence {len(first)} != {len(second)}", n1=n1, n2=n2)

    count = len(first)
    junction = {}
    for k in range(count):
        x, y = first[k], second[count - 1 - k]
        junction[x], junction[y] = y, x
    liberated = set(junction)

    involution = {e: p for e, p in graph.involution.items() if e not in liberated}
    words = {e: (e,) for e in involution}
    visited = set()
    for e in sorted(involution):
        p = graph.involution[e]
        if p not in liberated or e in visited:
            continue
        word = [p]
        current = p
        while True:
            if current in visited:
                raise MoveError("gluing closes an edge into a circle", end=e)
            visited.add(current)
            nxt = graph.involution[junction[current]]
            visited.add(junction[current])
            if nxt not in liberated:
                break
            word.append(nxt)
            current = nxt
        if nxt == e:
            raise MoveError("gluing joins an edge to itself", end=e)
        word.append(nxt)
        involution[e], involution[nxt] = nxt, e
        words[nxt] = tuple(word)
        words[e] = tuple(graph.involution[w] for w in reversed(word))
        visited.add(e)
        visited.add(nxt)
    if liberated - visited:
        stray = sorted(liberated - visited)[0]
        raise MoveError("gluing closes an edge into a circle", end=stray)

    vertices, origin = [], []
    for index, vertex in enumerate(graph.vertices):
        if index not in (n1, n2):
            vertices.append(list(vertex))
            origin.append(index)
    return MoveOutcome(_rebuild(graph, vertices, involution), tuple(origin), words)


def fresh_edge_name(graph: CiliatedFatGraph, stem: str = "l") -> Tuple[str, str]:
    """Deterministic unused pair (name, name_v)"""
    counter = 1
    while f"{stem}{counter}" in graph.involution or f"{stem}{counter}_v" in graph.involution:
        counter += 1
    return f"{stem}{counter}", f"{stem}{counter}_v"


def _add_loop(graph: CiliatedFatGraph, vertex: int, position: int) -> MoveOutcome:
    ensure_valid(graph)
    if not 0 <= vertex < graph.vertex_count:
        raise MoveError(f"unknown vertex {vertex}", vertex=vertex)
    if not 0 <= position <= graph.valence(vertex):
        raise MoveError(f"bad position {position} for vertex of valence {graph.valence(vertex)}",
                        vertex=vertex, position=position)
    alpha, alpha_v = fresh_edge_name(graph)
    vertices = [list(v) for v in graph.vertices]
    vertices[vertex][position:position] = [alpha, alpha_v]
    involution = dict(graph.involution)
    involution[alpha], involution[alpha_v] = alpha_v, alpha
    words = {e: (e,) for e in graph.involution}
    words[alpha] = ()
    words[alpha_v] = ()
    return MoveOutcome(_rebuild(graph, vertices, involution), tuple(range(graph.vertex_count)), words)


def apply_move(graph: CiliatedFatGraph, move: MoveDescriptor) -> MoveOutcome:
    if move.kind is MoveKind.ERASE:
        return _erase(graph, _required(move.edge, "edge"))
    if move.kind is MoveKind.CONTRACT:
        return _contract(graph, _required(move.edge, "edge"), _required(move.toward, "toward"))
    if move.kind is MoveKind.GLUE:
        return _glue(graph, _required(move.n1, "n1"), _required(move.n2, "n2"))
    return _add_loop(graph, _required(move.vertex, "vertex"), move.position)


def _required(value: Any, name: str) -> Any:
    if value is None:
        raise MoveError(f"move is missing {name!r}")
    return value


def erase_edge(graph: CiliatedFatGraph, edge: str) -> CiliatedFatGraph:
    return _erase(graph, edge).graph


def contract_edge(graph: CiliatedFatGraph, edge: str, toward: int) -> CiliatedFatGraph:
    return _contract(graph, edge, toward).graph


def glue_vertices(graph: CiliatedFatGraph, n1: int, n2: int) -> CiliatedFatGraph:
    return _glue(graph, n1, n2).graph


def add_loop(graph: CiliatedFatGraph, vertex: int, position: int = 0) -> CiliatedFatGraph:
    return _add_loop(graph, vertex, position).graph


def disjoint_union(first: CiliatedFatGraph, second: CiliatedFatGraph) -> Tuple[CiliatedFatGraph, Dict[str, str]]:
    """
    Place two graphs side by side.

    If identifiers clash, every end of `second` gets the prefix "<n>." with
    the smallest n avoiding clashes; partners keep their relative order so
    E1 representatives are preserved. Returns the union and the renaming.
    """
    rename = {e: e for e in second.ends}
    if set(first.ends) & set(second.ends):
        tag = 1
        while any(f"{tag}.{e}" in first.involution for e in second.ends):
            tag += 1
        rename = {e: f"{tag}.{e}" for e in second.ends}
    involution = dict(first.involution)
    involution.update({rename[e]: rename[p] for e, p in second.involution.items()})
    vertices = [list(v) for v in first.vertices] + [[rename[e] for e in v] for v in second.vertices]
    return CiliatedFatGraph.from_vertices(vertices, involution), rename


def isolated_vertex() -> CiliatedFatGraph:
    return CiliatedFatGraph(ends=(), involution={}, vertices=((),))


def edge_names(m: int) -> List[str]:
    if m <= len(string.ascii_lowercase):
        return list(string.ascii_lowercase[:m])
    return [f"e{i}" for i in range(m)]


def _pairs(names: Sequence[str]) -> Dict[str, str]:
    involution = {}
    for name in names:
        involution[name], involution[f"{name}_v"] = f"{name}_v", name
    return involution


def polyuble(m: int) -> CiliatedFatGraph:
    """Two vertices joined by m edges: departures in order, arrivals reversed"""
    names = edge_names(m)
    vertices = [[f"{n}_v" for n in names], list(reversed(names))]
    return CiliatedFatGraph.from_vertices(vertices, _pairs(names))


def polygon(m: int) -> CiliatedFatGraph:
    """An m-cycle; vertex i holds the arrival of edge i-1 then the departure of edge i"""
    names = edge_names(m)
    vertices = [[names[i - 1], f"{names[i]}_v"] for i in range(m)]
    return CiliatedFatGraph.from_vertices(vertices, _pairs(names))


NAMED_GRAPHS = ("single_edge", "double", "loop", "torus_one_hole", "polyuble", "polygon")
GALLERY_SIZE = 3

_NAME_PATTERN = re.compile(r"^\s*([a-z_]+)\s*(?:[(:]\s*(\d+)\s*\)?)?\s*$")


def named_graph(name: str, m: Optional[int] = None) -> CiliatedFatGraph:
    """
    Named example graphs.

    Accepts "polyuble(3)" or "polyuble:3" as well as an explicit `m`;
    "torus" is an alias of torus_one_hole.
    """
    match = _NAME_PATTERN.match(name)
    if not match:
        raise MoveError(f"unknown graph name {name!r}")
    base, size = match.group(1), match.group(2)
    if size is not None:
        m = int(size)
    if base == "torus":
        base = "torus_one_hole"
    if base == "single_edge":
        return polyuble(1)
    if base == "double":
        return polyuble(2)
    if base == "loop":
        return polygon(1)
    if base == "torus_one_hole":
        return CiliatedFatGraph.from_vertices([["a", "b", "a_v", "b_v"]], _pairs(["a", "b"]))
    if base in ("polyuble", "polygon"):
        m = GALLERY_SIZE if m is None else m
        if m < 1:
            raise MoveError(f"{base} needs m >= 1, got {m}")
        return polyuble(m) if base == "polyuble" else polygon(m)
    raise MoveError(f"unknown graph name {name!r}")


def gallery() -> Dict[str, CiliatedFatGraph]:
    """Every named graph, parametric ones at m = GALLERY_SIZE"""
    labels = {"polyuble": f"polyuble({GALLERY_SIZE})", "polygon": f"polygon({GALLERY_SIZE})"}
    return {labels.get(name, name): named_graph(name) for name in NAMED_GRAPHS}
