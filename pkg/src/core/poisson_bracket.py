"""
r-matrix Poisson structure on the space of graph connections.

For ends a, b at a common vertex n the bivector pairs X^a f with X^b g
through r(n) when a comes before b in the linear order, through -r21(n)
when b comes first and through the skew part r_a(n) when a == b. All
of it is collected once per (graph, assignment) in a dense pairing
matrix over the basis directions, so a bracket is df . Pi . dg.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .connection import (GraphConnection, evaluate_word, gauge_act, identity_gauge, monodromy, move_map,
                         random_connection, random_gauge)
from .exceptions import (CiliumInFaceError, ConnectionMismatchError, GluePreconditionError, NumericError,
                         ObservableError, PathError)
from .lie_core import (AlgebraBasis, Flavor, RMatrix, build_basis, casimir, cybe_residual, random_r, standard_r,
                       tensor_coefficients)
from .observables import (BracketObservable, ExactObservable, Expression, JetContext, MatPower,
                          Observable, basis_directions, entry, pullback_observable, random_observable,
                          random_trace_word, trace, var, word)
from .ribbon_graph import (CiliatedFatGraph, MoveDescriptor, MoveKind, MoveOutcome, apply_move,
                           cilium_corner, ensure_valid, face_path, faces, named_graph, polygon, polyuble)
from ..utils.random_streams import derive_rng, stream_seed

logger = logging.getLogger(__name__)

SYMMETRIC_TOLERANCE = 1e-12
SKEW_OPPOSITE_TOLERANCE = 1e-12

# (w1, w2): weights of the cross-end and same-end terms of the bivector
WEDGE_NORMALIZATION = (1.0, 1.0)
WEDGE_CANDIDATES = ((1.0, 1.0), (0.5, 0.5))

# {g (x) g} = SKLYANIN_SIGN * (r_a (g (x) g) - (g (x) g) r_a) on each gauge copy
SKLYANIN_SIGN = -1
WRONG_SKLYANIN_SIGN = +1

FORMULA_CONFIGS = ("edge", "loop", "twoedges", "double", "torus")


@dataclass(frozen=True, eq=False)
class RMatrixAssignment:
    """One r-matrix per vertex, all sharing the same symmetric part t"""

    r_matrices: Tuple[RMatrix, ...]

    def __post_init__(self):
        matrices = tuple(self.r_matrices)
        if not matrices:
            raise ConnectionMismatchError("an assignment needs at least one r-matrix")
        k, flavor = matrices[0].k, matrices[0].flavor
        for n, r in enumerate(matrices):
            if r.k != k or r.flavor is not flavor:
                raise ConnectionMismatchError(f"vertex {n} carries an r-matrix for {r.flavor.value}({r.k}), "
                                              f"expected {flavor.value}({k})", vertex=n)
            residual = r.symmetric_residual()
            if residual > SYMMETRIC_TOLERANCE:
                raise NumericError(f"symmetric part of r at vertex {n} differs from t by {residual:.3e}",
                                   vertex=n, residual=residual)
        object.__setattr__(self, "r_matrices", matrices)

    @property
    def k(self) -> int:
        return self.r_matrices[0].k

    @property
    def flavor(self) -> Flavor:
        return self.r_matrices[0].flavor

    @property
    def casimir(self):
        return casimir(self.k, self.flavor)

    def __len__(self) -> int:
        return len(self.r_matrices)

    def for_vertex(self, n: int) -> RMatrix:
        if not 0 <= n < len(self.r_matrices):
            raise ConnectionMismatchError(f"no r-matrix for vertex {n}", vertex=n)
        return self.r_matrices[n]

    @classmethod
    def uniform(cls, graph: CiliatedFatGraph, r: RMatrix) -> "RMatrixAssignment":
        return cls(tuple(r for _ in graph.vertices))

    @classmethod
    def polyuble(cls, graph: CiliatedFatGraph, r: RMatrix) -> "RMatrixAssignment":
        """r on even vertices, r21 on odd ones: the Poisson-Lie group on every two-vertex component"""
        flipped = r.flipped()
        return cls(tuple(r if n % 2 == 0 else flipped for n in range(graph.vertex_count)))

    @classmethod
    def from_list(cls, matrices: Sequence[RMatrix]) -> "RMatrixAssignment":
        return cls(tuple(matrices))

    @classmethod
    def union(cls, first: "RMatrixAssignment", second: "RMatrixAssignment") -> "RMatrixAssignment":
        return cls(first.r_matrices + second.r_matrices)

    def induced(self, outcome: MoveOutcome) -> "RMatrixAssignment":
        """Assignment on a moved graph: every surviving vertex keeps its r"""
        return RMatrixAssignment(tuple(self.for_vertex(n) for n in outcome.vertex_origin))

    def flipped(self) -> "RMatrixAssignment":
        return RMatrixAssignment(tuple(r.flipped() for r in self.r_matrices))

    def skew_opposite(self, n1: int, n2: int) -> bool:
        gap = self.for_vertex(n1).skew_part + self.for_vertex(n2).skew_part
        return float(np.max(np.abs(gap))) <= SKEW_OPPOSITE_TOLERANCE

    def check_matches(self, graph: CiliatedFatGraph) -> None:
        if len(self.r_matrices) != graph.vertex_count:
            raise ConnectionMismatchError(f"assignment has {len(self.r_matrices)} r-matrices for "
                                          f"{graph.vertex_count} vertices")


@dataclass
class BracketResult:
    value: complex
    diagnostics: Dict[int, complex] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "vertices": {str(n): v for n, v in sorted(self.diagnostics.items())}}


class PoissonStructure:
    """Bivector of one graph with one r-matrix assignment"""

    def __init__(self, graph: CiliatedFatGraph, assignment: RMatrixAssignment,
                 wedge: Tuple[float, float] = WEDGE_NORMALIZATION):
        ensure_valid(graph)
        assignment.check_matches(graph)
        self.graph = graph
        self.assignment = assignment
        self.wedge = wedge
        self.basis: AlgebraBasis = build_basis(assignment.k, assignment.flavor)
        self.vertex_slices = self._vertex_slices()
        self.pairing = self._build_pairing()

    @property
    def k(self) -> int:
        return self.assignment.k

    def _vertex_slices(self) -> List[np.ndarray]:
        d = self.basis.dim
        slices = []
        for vertex in self.graph.vertices:
            rows = [np.arange(self.graph.end_index[end] * d, (self.graph.end_index[end] + 1) * d)
                    for end in vertex]
            slices.append(np.concatenate(rows) if rows else np.zeros(0, dtype=int))
        return slices

    def _build_pairing(self) -> np.ndarray:
        d = self.basis.dim
        w1, w2 = self.wedge
        size = len(self.graph.ends) * d
        pairing = np.zeros((size, size), dtype=complex)
        for n, vertex in enumerate(self.graph.vertices):
            C = self.assignment.for_vertex(n).coefficients()
            skew = 0.5 * (C - C.T)
            for p, alpha in enumerate(vertex):
                a = self.graph.end_index[alpha] * d
                for q, beta in enumerate(vertex):
                    b = self.graph.end_index[beta] * d
                    if p < q:
                        block = w1 * C
                    elif p > q:
                        block = -w1 * C.T
                    else:
                        block = w2 * skew
                    pairing[a:a + d, b:b + d] = block
        return pairing

    def _check(self, A: GraphConnection) -> None:
        if A.graph != self.graph or A.k != self.k or A.flavor is not self.assignment.flavor:
            raise ConnectionMismatchError("connection does not live on this Poisson structure's graph",
                                          k=A.k, flavor=A.flavor.value)

    def pair(self, df: np.ndarray, dg: np.ndarray) -> complex:
        return complex(df @ self.pairing @ dg)

    def bracket(self, f: Observable, g: Observable, A: GraphConnection) -> BracketResult:
        self._check(A)
        df, dg = f.gradient(A), g.gradient(A)
        diagnostics = {}
        for n, idx in enumerate(self.vertex_slices):
            diagnostics[n] = complex(df[idx] @ self.pairing[np.ix_(idx, idx)] @ dg[idx])
        value = self.pair(df, dg)
        if not np.isfinite(value):
            raise NumericError("bracket evaluated to a non-finite value")
        return BracketResult(value, diagnostics)

    def bracket_value(self, f: Observable, g: Observable, A: GraphConnection) -> complex:
        self._check(A)
        return self.pair(f.gradient(A), g.gradient(A))

    def matrix_bracket(self, X: Expression, Y: Expression, A: GraphConnection) -> np.ndarray:
        """{X (x) Y} as a k^2 x k^2 tensor: entry ((i, k), (j, l)) is {X_ij, Y_kl}"""
        self._check(A)
        if not (X.is_matrix and Y.is_matrix):
            raise ObservableError("matrix_bracket needs matrix-valued expressions")
        dirs = basis_directions(A.graph, self.basis)
        dX = X.jet(JetContext(A, dirs, 1)).d1
        dY = Y.jet(JetContext(A, dirs, 1)).d1
        k = self.k
        return np.einsum("uij,uv,vkl->ikjl", dX, self.pairing, dY).reshape(k * k, k * k)

    def observable_matrix_bracket(self, f: Observable, Y: Expression, A: GraphConnection) -> np.ndarray:
        """k x k matrix of {f, Y_kl}"""
        self._check(A)
        dirs = basis_directions(A.graph, self.basis)
        dY = Y.jet(JetContext(A, dirs, 1)).d1
        return np.einsum("u,uv,vkl->kl", f.gradient(A), self.pairing, dY)


@lru_cache(maxsize=128)
def structure_for(graph: CiliatedFatGraph, assignment: RMatrixAssignment,
                  wedge: Tuple[float, float] = WEDGE_NORMALIZATION) -> PoissonStructure:
    return PoissonStructure(graph, assignment, wedge)


@dataclass
class ResidualReport:
    """Outcome of a sampled property check"""

    suite: str
    k: int
    seed: int
    samples: int
    residuals: List[float]
    sample_offset: int = 0
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def worst_sample(self) -> Optional[int]:
        if not self.residuals:
            return None
        return self.sample_offset + int(np.argmax(self.residuals))

    def passed(self, tolerance: float) -> bool:
        return self.max_residual <= tolerance

    def to_dict(self) -> Dict[str, Any]:
        data = {"suite": self.suite, "k": self.k, "seed": self.seed, "samples": self.samples,
                "max_residual": self.max_residual, "worst_sample": self.worst_sample}
        data.update(self.extra)
        return data


def end_derivative(f: Observable, A: GraphConnection, end: str, X: np.ndarray) -> complex:
    value = f.derivative(A, end, X)
    if not np.isfinite(value):
        raise NumericError(f"derivative along {end!r} is not finite", end=end)
    return value


def bivector_bracket(f: Observable, g: Observable, A: GraphConnection, R: RMatrixAssignment) -> BracketResult:
    return structure_for(A.graph, R).bracket(f, g, A)


def split_form_bracket(f: Observable, g: Observable, A: GraphConnection, R: RMatrixAssignment) -> complex:
    """
    Same bracket written as r_a(n) on the vertex-diagonal fields plus the
    Casimir paired with the sign of the end order.
    """
    graph = A.graph
    R.check_matches(graph)
    basis = A.basis
    d = basis.dim
    df = f.gradient(A).reshape(len(graph.ends), d)
    dg = g.gradient(A).reshape(len(graph.ends), d)
    T = tensor_coefficients(casimir(A.k, A.flavor).tensor, basis)
    total = 0j
    for n, vertex in enumerate(graph.vertices):
        if not vertex:
            continue
        C = R.for_vertex(n).coefficients()
        skew = 0.5 * (C - C.T)
        rows = [graph.end_index[e] for e in vertex]
        total += df[rows].sum(axis=0) @ skew @ dg[rows].sum(axis=0)
        for p, a in enumerate(rows):
            for q, b in enumerate(rows):
                if p != q:
                    total += np.sign(q - p) * (df[a] @ T @ dg[b])
    return complex(total)


def _pairs(names: Sequence[str]) -> Dict[str, str]:
    involution = {}
    for name in names:
        involution[name], involution[f"{name}_v"] = f"{name}_v", name
    return involution


def formula_graph(config: str) -> CiliatedFatGraph:
    """Smallest graph realizing one of the closed-formula configurations"""
    if config == "edge":
        return polyuble(1)
    if config == "loop":
        return polygon(1)
    if config == "twoedges":
        return CiliatedFatGraph.from_vertices([["a_v", "b_v"], ["a"], ["b"]], _pairs(["a", "b"]))
    if config == "double":
        return CiliatedFatGraph.from_vertices([["a_v", "b_v"], ["a", "b"]], _pairs(["a", "b"]))
    if config == "torus":
        return named_graph("torus")
    raise ConnectionMismatchError(f"unknown closed-formula configuration {config!r}",
                                  choices=list(FORMULA_CONFIGS))


def closed_formula_tensor(config: str, A: GraphConnection, R: RMatrixAssignment) -> np.ndarray:
    """{A (x) B} from the closed formula of a configuration; B is A for edge and loop"""
    graph = formula_graph(config)
    if A.graph != graph:
        raise ConnectionMismatchError(f"connection does not realize the {config!r} configuration")
    R.check_matches(graph)
    one = np.eye(A.k)
    a = A.value("a")
    if config == "edge":
        aa = np.kron(a, a)
        return R.for_vertex(0).skew_part @ aa + aa @ R.for_vertex(1).skew_part
    if config == "loop":
        r = R.for_vertex(0)
        aa = np.kron(a, a)
        return (r.skew_part @ aa + aa @ r.skew_part
                + np.kron(one, a) @ r.flipped_tensor @ np.kron(a, one)
                - np.kron(a, one) @ r.tensor @ np.kron(one, a))
    b = A.value("b")
    ab = np.kron(a, b)
    if config == "twoedges":
        return R.for_vertex(0).tensor @ ab
    if config == "double":
        return R.for_vertex(0).tensor @ ab + ab @ R.for_vertex(1).tensor
    r = R.for_vertex(0)
    return (r.tensor @ ab + ab @ r.tensor
            + np.kron(one, b) @ r.flipped_tensor @ np.kron(a, one)
            - np.kron(a, one) @ r.tensor @ np.kron(one, b))


def closed_formula_bracket(config: str, first: Tuple[int, int], second: Tuple[int, int],
                           A: GraphConnection, R: RMatrixAssignment) -> complex:
    """{A_ij, B_kl} from the closed formula"""
    (i, j), (k, l) = first, second
    K = A.k
    return complex(closed_formula_tensor(config, A, R)[i * K + k, j * K + l])


def bivector_formula_tensor(config: str, A: GraphConnection, R: RMatrixAssignment,
                            wedge: Tuple[float, float] = WEDGE_NORMALIZATION) -> np.ndarray:
    second = "a" if config in ("edge", "loop") else "b"
    return structure_for(A.graph, R, wedge).matrix_bracket(var("a"), var(second), A)


def oracle_residual(config: str, A: GraphConnection, R: RMatrixAssignment,
                    wedge: Tuple[float, float] = WEDGE_NORMALIZATION) -> float:
    gap = bivector_formula_tensor(config, A, R, wedge) - closed_formula_tensor(config, A, R)
    return float(np.max(np.abs(gap)))


def pin_wedge_normalization(k: int = 2, samples: int = 10, seed: int = 0, r: Optional[RMatrix] = None,
                            tolerance: float = 1e-9) -> Tuple[float, float]:
    """Pick the wedge weights reproducing the edge formula at random points"""
    graph = formula_graph("edge")
    # independent r at the two vertices so the same-end weight is visible
    first = r if r is not None else random_r(k, seed=seed)
    R = RMatrixAssignment((first, random_r(k, seed=seed + 1)))
    for candidate in WEDGE_CANDIDATES:
        worst = max(oracle_residual("edge", random_connection(graph, k, seed=stream_seed(seed, "wedge", i)),
                                    R, candidate) for i in range(samples))
        logger.debug(f"wedge candidate {candidate}: residual {worst:.3e}")
        if worst <= tolerance:
            return candidate
    raise NumericError("no wedge normalization reproduces the edge formula")


def oracle_suite(config: str, k: int, R: Optional[RMatrixAssignment] = None, samples: int = 100,
                 seed: int = 0, sample_offset: int = 0) -> ResidualReport:
    graph = formula_graph(config)
    if R is None:
        R = RMatrixAssignment.uniform(graph, standard_r(k))
    residuals = []
    for index in range(sample_offset, sample_offset + samples):
        A = random_connection(graph, k, R.flavor, seed=stream_seed(seed, "bivector-oracle", config, index))
        residuals.append(oracle_residual(config, A, R))
    return ResidualReport("bivector-oracle", k, seed, samples, residuals, sample_offset, {"config": config})


def jacobi_residual(f: Observable, g: Observable, h: Observable, A: GraphConnection,
                    R: RMatrixAssignment) -> float:
    """|{f,{g,h}} + {g,{h,f}} + {h,{f,g}}| with the inner brackets as observables"""
    structure = structure_for(A.graph, R)
    total = 0j
    for x, y, z in ((f, g, h), (g, h, f), (h, f, g)):
        inner = BracketObservable(y, z, structure)
        total += structure.pair(x.gradient(A), inner.gradient(A))
    return float(abs(total))


JACOBI_SAMPLERS = ("trace-words", "mixed")


def jacobi_suite(graph: CiliatedFatGraph, R: RMatrixAssignment, samples: int = 50, seed: int = 0,
                 sample_offset: int = 0, sampler: str = "trace-words",
                 observables: Optional[Tuple[Observable, Observable, Observable]] = None) -> ResidualReport:
    """
    Jacobi residual over random connections.

    "trace-words" draws three trace words per sample; "mixed" draws from
    random_observable (entries, traces and products), which also sees the
    non-invariant part of the bracket. A fixed `observables` triple
    overrides the sampler.
    """
    if sampler not in JACOBI_SAMPLERS:
        raise ValueError(f"unknown jacobi sampler {sampler!r}; choose from {', '.join(JACOBI_SAMPLERS)}")
    residuals = []
    for index in range(sample_offset, sample_offset + samples):
        rng = derive_rng(seed, "jacobi", index)
        A = random_connection(graph, R.k, R.flavor, seed=stream_seed(seed, "jacobi", "connection", index))
        if observables is not None:
            f, g, h = observables
        elif sampler == "mixed":
            f, g, h = (random_observable(graph, rng, R.k) for _ in range(3))
        else:
            f, g, h = (random_trace_word(graph, rng) for _ in range(3))
        residuals.append(jacobi_residual(f, g, h, A, R))
        logger.debug(f"jacobi sample {index}: {residuals[-1]:.3e}")
    return ResidualReport("jacobi", R.k, seed, samples, residuals, sample_offset,
                          {"sampler": "fixed" if observables is not None else sampler})


def entry_triple(graph: CiliatedFatGraph) -> Tuple[ExactObservable, ExactObservable, ExactObservable]:
    """Three matrix-entry observables on the first two edges (one edge used twice if that is all there is)"""
    reps = graph.representatives
    if not reps:
        raise ObservableError("entry observables need at least one edge")
    first, second = reps[0], reps[min(1, len(reps) - 1)]
    return (ExactObservable(entry(var(first), 0, 1)),
            ExactObservable(entry(var(second), 1, 0)),
            ExactObservable(entry(var(first) @ var(second), 0, 0)))


def jacobi_negative_control(graph: CiliatedFatGraph, k: int, flavor: Flavor = Flavor.SL, samples: int = 5,
                            seed: int = 0, sample_offset: int = 0) -> ResidualReport:
    """Jacobi residual of entry observables under a non-CYBE tensor; a working check reports it large"""
    r = random_r(k, flavor, seed=stream_seed(seed, "jacobi", "control"))
    R = RMatrixAssignment.uniform(graph, r)
    report = jacobi_suite(graph, R, samples=samples, seed=seed, sample_offset=sample_offset,
                          observables=entry_triple(graph))
    report.extra["cybe_residual"] = cybe_residual(r)
    return report


def sklyanin_tensor(g: np.ndarray, r: RMatrix, sign: int = SKLYANIN_SIGN) -> np.ndarray:
    gg = np.kron(g, g)
    return sign * (r.skew_part @ gg - gg @ r.skew_part)


def sklyanin_bracket(first: Tuple[int, int], second: Tuple[int, int], g: np.ndarray, r: RMatrix,
                     sign: int = SKLYANIN_SIGN) -> complex:
    """{g_ij, g_kl} for the Sklyanin structure"""
    (i, j), (k, l) = first, second
    K = r.k
    return complex(sklyanin_tensor(np.asarray(g, dtype=complex), r, sign)[i * K + k, j * K + l])


def adjoint_matrix(g: np.ndarray, basis: AlgebraBasis) -> np.ndarray:
    """Adm[i, j] = tr(g^-1 e_i g e_j)"""
    inverse = np.linalg.inv(g)
    conjugated = inverse[None] @ basis.elements @ g[None]
    return np.einsum("iab,jba->ij", conjugated, basis.elements)


def product_bracket(f: Observable, g: Observable, gauge, A: GraphConnection, R: RMatrixAssignment,
                    sign: int = SKLYANIN_SIGN) -> complex:
    """
    Bracket of f and g pulled back along the gauge action, on the product of
    the gauge group (Sklyanin on every vertex copy) with connection space.
    """
    structure = structure_for(A.graph, R)
    graph = A.graph
    basis = structure.basis
    d = basis.dim
    if not graph.ends:
        return 0j
    moved = gauge_act(gauge, A)
    df = f.gradient(moved).reshape(len(graph.ends), d)
    dg = g.gradient(moved).reshape(len(graph.ends), d)
    adm = [adjoint_matrix(x, basis) for x in gauge.elements]

    # X^alpha (f o act) = Ad(g_[alpha]^-1) applied to the direction
    per_end = np.array([adm[graph.vertex_of[e]] for e in graph.ends])
    pulled_f = np.einsum("eij,ej->ei", per_end, df).ravel()
    pulled_g = np.einsum("eij,ej->ei", per_end, dg).ravel()
    total = structure.pair(pulled_f, pulled_g)

    for n, vertex in enumerate(graph.vertices):
        if not vertex:
            continue
        rows = [graph.end_index[e] for e in vertex]
        f_delta = df[rows].sum(axis=0)
        g_delta = dg[rows].sum(axis=0)
        C = R.for_vertex(n).coefficients()
        skew = 0.5 * (C - C.T)
        total += sign * (f_delta @ (adm[n].T @ skew @ adm[n] - skew) @ g_delta)
    return complex(total)


def poisson_action_residual(graph: CiliatedFatGraph, R: RMatrixAssignment, samples: int = 50, seed: int = 0,
                            sign: int = SKLYANIN_SIGN, trivial_gauge: bool = False,
                            observables: Optional[Tuple[Observable, Observable]] = None,
                            sample_offset: int = 0) -> ResidualReport:
    """max over samples of |{f o act, g o act}_product - {f, g} o act|"""
    structure = structure_for(graph, R)
    residuals = []
    for index in range(sample_offset, sample_offset + samples):
        rng = derive_rng(seed, "poisson-action", index)
        A = random_connection(graph, R.k, R.flavor, seed=stream_seed(seed, "poisson-action", "connection", index))
        if trivial_gauge:
            gauge = identity_gauge(graph, R.k, R.flavor)
        else:
            gauge = random_gauge(graph, R.k, R.flavor, seed=stream_seed(seed, "poisson-action", "gauge", index))
        f, g = observables or (random_observable(graph, rng, R.k), random_observable(graph, rng, R.k))
        lhs = product_bracket(f, g, gauge, A, R, sign)
        rhs = structure.bracket_value(f, g, gauge_act(gauge, A))
        residuals.append(float(abs(lhs - rhs)))
        logger.debug(f"poisson-action sample {index}: {residuals[-1]:.3e}")
    return ResidualReport("poisson-action", R.k, seed, samples, residuals, sample_offset, {"sign": sign})


def check_glue_precondition(move: MoveDescriptor, R: RMatrixAssignment) -> None:
    if move.kind is MoveKind.GLUE and not R.skew_opposite(move.n1, move.n2):
        gap = float(np.max(np.abs(R.for_vertex(move.n1).skew_part + R.for_vertex(move.n2).skew_part)))
        raise GluePreconditionError(f"glue needs vertices whose r_a-matrices are opposite; vertices {move.n1} and "
                                    f"{move.n2} differ (gap {gap:.3e})", n1=move.n1, n2=move.n2, gap=gap)


def move_is_poisson_residual(graph: CiliatedFatGraph, move: MoveDescriptor, R: RMatrixAssignment,
                             samples: int = 100, seed: int = 0,
                             observables: Optional[Tuple[Observable, Observable]] = None,
                             sample_offset: int = 0) -> ResidualReport:
    """max over samples of |{f o phi, g o phi}_source - {f, g}_target o phi|"""
    R.check_matches(graph)
    check_glue_precondition(move, R)
    outcome = apply_move(graph, move)
    target_R = R.induced(outcome)
    source = structure_for(graph, R)
    target = structure_for(outcome.graph, target_R)
    residuals = []
    for index in range(sample_offset, sample_offset + samples):
        rng = derive_rng(seed, "move-poisson", index)
        A = random_connection(graph, R.k, R.flavor, seed=stream_seed(seed, "move-poisson", "connection", index))
        if observables is None:
            f, g = random_observable(outcome.graph, rng, R.k), random_observable(outcome.graph, rng, R.k)
        else:
            f, g = observables
        lhs = source.bracket_value(pullback_observable(f, outcome, R.k), pullback_observable(g, outcome, R.k), A)
        rhs = target.bracket_value(f, g, move_map(move, A, outcome))
        residuals.append(float(abs(lhs - rhs)))
        logger.debug(f"move-poisson sample {index}: {residuals[-1]:.3e}")
    return ResidualReport("move-poisson", R.k, seed, samples, residuals, sample_offset, {"move": move.to_json()})


def is_gauge_invariant(f: Observable, A: GraphConnection, seed: int = 0, trials: int = 3,
                       tolerance: float = 1e-9) -> bool:
    base = f.value(A)
    scale = max(1.0, abs(base))
    for trial in range(trials):
        gauge = random_gauge(A.graph, A.k, A.flavor, seed=stream_seed(seed, "invariance", trial))
        if abs(f.value(gauge_act(gauge, A)) - base) > tolerance * scale:
            return False
    return True


def ra_independence_residual(f: Observable, g: Observable, A: GraphConnection, first: RMatrixAssignment,
                             second: RMatrixAssignment, seed: int = 0, check_invariance: bool = True) -> float:
    """|{f,g}_R1 - {f,g}_R2| for gauge-invariant f, g and assignments sharing t"""
    if first.k != second.k or first.flavor is not second.flavor:
        raise ConnectionMismatchError("assignments must share the Casimir t")
    if check_invariance:
        for label, obs in (("f", f), ("g", g)):
            if not is_gauge_invariant(obs, A, seed):
                raise ObservableError(f"observable {label} is not gauge invariant", observable=label)
    one = structure_for(A.graph, first).bracket_value(f, g, A)
    two = structure_for(A.graph, second).bracket_value(f, g, A)
    return float(abs(one - two))


def wilson_loops(graph: CiliatedFatGraph) -> List[ExactObservable]:
    """Traces of the face monodromies"""
    return [ExactObservable(trace(word(face_path(graph, face))), label=f"W{face_path(graph, face)}")
            for face in faces(graph)]


def ra_independence_suite(graph: CiliatedFatGraph, R: RMatrixAssignment, samples: int = 50, seed: int = 0,
                          sample_offset: int = 0) -> ResidualReport:
    """Wilson loops and traces of cycle words under R and its flip"""
    loops = wilson_loops(graph)
    cycles = [ExactObservable(trace(var(e))) for e in graph.representatives if graph.is_loop(e)]
    candidates = loops + cycles
    residuals = []
    flipped = R.flipped()
    for index in range(sample_offset, sample_offset + samples):
        A = random_connection(graph, R.k, R.flavor, seed=stream_seed(seed, "ra-independence", index))
        rng = derive_rng(seed, "ra-independence", index)
        if not candidates:
            residuals.append(0.0)
            continue
        f = candidates[int(rng.integers(len(candidates)))]
        g = candidates[int(rng.integers(len(candidates)))]
        residuals.append(ra_independence_residual(f, g, A, R, flipped, seed=index, check_invariance=False))
    return ResidualReport("ra-independence", R.k, seed, samples, residuals, sample_offset)


@dataclass
class LeafCheckReport:
    face: Tuple[str, ...]
    path: Tuple[str, ...]
    samples: int
    residuals: List[float]
    leaf_distance: float = 0.0
    sample_offset: int = 0

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def worst_sample(self) -> Optional[int]:
        if not self.residuals:
            return None
        return self.sample_offset + int(np.argmax(self.residuals))

    def to_dict(self) -> Dict[str, Any]:
        return {"suite": "leaf-submanifold", "face": list(self.face), "path": list(self.path),
                "samples": self.samples, "max_residual": self.max_residual,
                "worst_sample": self.worst_sample, "leaf_distance": self.leaf_distance}


def _match_face(graph: CiliatedFatGraph, face: Sequence[str]) -> Tuple[str, ...]:
    wanted = set(face)
    for candidate in faces(graph):
        if set(candidate) == wanted:
            return candidate
    raise PathError(f"{list(face)} is not a face of the graph", face=list(face))


def place_on_leaf(A: GraphConnection, path: Sequence[str], h: np.ndarray) -> GraphConnection:
    """Solve for the transport of an edge met once on `path` so that the monodromy equals h"""
    graph = A.graph
    edges = [graph.representative(e) for e in path]
    for position, end in enumerate(path):
        if edges.count(edges[position]) != 1:
            continue
        left = evaluate_word(A, path[:position])
        right = evaluate_word(A, path[position + 1:])
        solved = np.linalg.inv(left) @ np.asarray(h, dtype=complex) @ np.linalg.inv(right)
        return A.with_values({end: solved})
    raise PathError("no edge occurs exactly once on the face path", path=list(path))


def fixed_monodromy_leaf_check(graph: CiliatedFatGraph, face: Sequence[str], R: RMatrixAssignment,
                               h: Optional[np.ndarray] = None, samples: int = 20,
                               seed: int = 0, sample_offset: int = 0) -> LeafCheckReport:
    """
    Brackets of the face-monodromy invariants with random observables.

    A face with no cilium inside gives a Poisson submanifold, so every
    tr(M^m) must Poisson-commute with everything.
    """
    ensure_valid(graph)
    face = _match_face(graph, face)
    corner = cilium_corner(graph, face)
    if corner is not None:
        raise CiliumInFaceError(f"face {list(face)} contains the cilium at corner {list(corner)}",
                                corner=list(corner), face=list(face))
    path = face_path(graph, face)
    structure = structure_for(graph, R)
    top = R.k if R.flavor is Flavor.GL else R.k - 1
    invariants = [ExactObservable(trace(MatPower(word(path), m)), label=f"tr M^{m}") for m in range(1, top + 1)]
    residuals = []
    distance = 0.0
    for index in range(sample_offset, sample_offset + samples):
        rng = derive_rng(seed, "leaf-submanifold", index)
        A = random_connection(graph, R.k, R.flavor, seed=stream_seed(seed, "leaf-submanifold", "connection", index))
        if h is not None:
            A = place_on_leaf(A, path, h)
            distance = max(distance, float(np.max(np.abs(monodromy(A, path) - h))))
        g = random_observable(graph, rng, R.k)
        dg = g.gradient(A)
        residuals.append(max(abs(structure.pair(c.gradient(A), dg)) for c in invariants))
    return LeafCheckReport(tuple(face), tuple(path), samples, residuals, distance, sample_offset)
