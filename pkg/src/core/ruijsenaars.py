"""
The one-holed torus: G x G with the standard r-matrix.

Points are pairs (A, B) = (transport on edge a, transport on edge b) of
the torus graph. The module covers the bracket relations among traces,
the commuting flows generated by tr B^n, the minimal symplectic leaves
(where A B A^-1 B^-1 = x Id + rank one), their eigen-coordinates
(lambda, q, s) and the Ruijsenaars Hamiltonian tr(B + B^-1).
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

from .connection import GraphConnection, random_connection
from .exceptions import BranchError, LeafPreconditionError, NumericError
from .lie_core import Flavor, group_exp, standard_r, traceless_part
from .observables import (ExactObservable, FiniteDifferenceObservable, Observable, MatPower, trace, var)
from .poisson_bracket import (PoissonStructure, RMatrixAssignment, closed_formula_tensor, structure_for)
from .ribbon_graph import CiliatedFatGraph, named_graph
from ..utils.random_streams import derive_rng
from ..utils.serialization import matrix_from_json, matrix_to_json, pair_to_complex, vector_to_json

logger = logging.getLogger(__name__)

SPECTRUM_TOLERANCE = 1e-8
SEPARATION_THRESHOLD = 1e-4
ARGUMENT_QUANTUM = 1e-8
POLE_TOLERANCE = 1e-12


def torus_graph() -> CiliatedFatGraph:
    return named_graph("torus")


@dataclass(frozen=True, eq=False)
class TorusPoint:
    A: np.ndarray
    B: np.ndarray
    flavor: Flavor = Flavor.SL

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=complex))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=complex))
        # validates shapes, invertibility and det = 1 for SL
        self.to_connection()

    @property
    def k(self) -> int:
        return self.A.shape[0]

    def to_connection(self) -> GraphConnection:
        return GraphConnection(torus_graph(), self.A.shape[0], self.flavor, {"a": self.A, "b": self.B})

    @classmethod
    def from_connection(cls, A: GraphConnection) -> "TorusPoint":
        return cls(A.value("a"), A.value("b"), A.flavor)

    def max_difference(self, other: "TorusPoint") -> float:
        return float(max(np.max(np.abs(self.A - other.A)), np.max(np.abs(self.B - other.B))))

    def to_json(self) -> Dict[str, Any]:
        return {"k": self.k, "flavor": self.flavor.value, "A": matrix_to_json(self.A), "B": matrix_to_json(self.B)}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "TorusPoint":
        return cls(matrix_from_json(data["A"]), matrix_from_json(data["B"]), Flavor.parse(data.get("flavor", "SL")))


@dataclass(frozen=True)
class FlowTimes:
    """t_1 .. t_{k-1}: coefficients of tr B^n in the flow generator"""

    values: Tuple[complex, ...]

    def __post_init__(self):
        values = tuple(complex(t) for t in self.values)
        if not all(np.isfinite(t) for t in values):
            raise NumericError("flow times must be finite", times=[str(t) for t in values])
        object.__setattr__(self, "values", values)

    def scaled(self, factor: complex) -> "FlowTimes":
        return FlowTimes(tuple(factor * t for t in self.values))

    def __add__(self, other: "FlowTimes") -> "FlowTimes":
        size = max(len(self.values), len(other.values))
        first = self.values + (0j,) * (size - len(self.values))
        second = other.values + (0j,) * (size - len(other.values))
        return FlowTimes(tuple(a + b for a, b in zip(first, second)))

    def is_real(self) -> bool:
        return all(t.imag == 0 for t in self.values)


def random_torus_point(k: int, seed: int = 0, flavor: Union[str, Flavor] = Flavor.SL) -> TorusPoint:
    return TorusPoint.from_connection(random_connection(torus_graph(), k, flavor, seed=seed))


@lru_cache(maxsize=None)
def torus_structure(k: int, flavor: Flavor = Flavor.SL) -> PoissonStructure:
    graph = torus_graph()
    return structure_for(graph, RMatrixAssignment.uniform(graph, standard_r(k, flavor)))


def torus_bracket(f: Observable, g: Observable, p: TorusPoint) -> complex:
    return torus_structure(p.k, p.flavor).bracket_value(f, g, p.to_connection())


def torus_closed_forms(p: TorusPoint) -> Dict[str, np.ndarray]:
    """{A (x) A}, {B (x) B} and {A (x) B} from the closed formulas"""
    r = standard_r(p.k, p.flavor)
    loop = named_graph("loop")
    loop_R = RMatrixAssignment.uniform(loop, r)

    def same_edge(M: np.ndarray) -> np.ndarray:
        return closed_formula_tensor("loop", GraphConnection(loop, p.k, p.flavor, {"a": M}), loop_R)

    torus_R = RMatrixAssignment.uniform(torus_graph(), r)
    return {
        "AA": same_edge(p.A),
        "BB": same_edge(p.B),
        "AB": closed_formula_tensor("torus", p.to_connection(), torus_R),
    }


def torus_tensor_residuals(p: TorusPoint) -> Dict[str, float]:
    """Entrywise gaps between the bivector and the three closed forms"""
    structure = torus_structure(p.k, p.flavor)
    A = p.to_connection()
    forms = torus_closed_forms(p)
    pairs = {"AA": ("a", "a"), "BB": ("b", "b"), "AB": ("a", "b")}
    return {name: float(np.max(np.abs(structure.matrix_bracket(var(x), var(y), A) - forms[name])))
            for name, (x, y) in pairs.items()}


def trace_power(end: str, n: int) -> ExactObservable:
    return ExactObservable(trace(MatPower(var(end), n)), label=f"tr {end.upper()}^{n}")


def _fit(lhs: np.ndarray, form: np.ndarray) -> Tuple[complex, float]:
    """Least-squares constant c with lhs ~ c * form, and the residual of the fit"""
    norm = np.vdot(form, form)
    if abs(norm) == 0:
        return 0j, float(np.max(np.abs(lhs)))
    c = np.vdot(form, lhs) / norm
    return complex(c), float(np.max(np.abs(lhs - c * form)))


def derived_relations_check(p: TorusPoint, n: int) -> Dict[str, Any]:
    """
    Bracket relations of tr A^n and tr B^n with the edge matrices.

    {tr A^n, A} and {tr B^n, B} vanish; {tr A^n, B} and {tr B^n, A} are
    fitted to c B (A^n)_0 and c (B^n)_0 A, expected c = 2n and -2n.
    """
    k = p.k
    if not 1 <= n <= k - 1:
        raise NumericError(f"relation order must be in 1..{k - 1}, got {n}", n=n)
    structure = torus_structure(k, p.flavor)
    A = p.to_connection()
    trA, trB = trace_power("a", n), trace_power("b", n)
    An, Bn = np.linalg.matrix_power(p.A, n), np.linalg.matrix_power(p.B, n)

    c_ab, fit_ab = _fit(structure.observable_matrix_bracket(trA, var("b"), A), p.B @ traceless_part(An))
    c_ba, fit_ba = _fit(structure.observable_matrix_bracket(trB, var("a"), A), traceless_part(Bn) @ p.A)

    trace_pairs = []
    for m in range(1, k):
        trace_pairs.append(abs(structure.bracket_value(trA, trace_power("a", m), A)))
        trace_pairs.append(abs(structure.bracket_value(trB, trace_power("b", m), A)))
    return {
        "n": n,
        "trAn_A": float(np.max(np.abs(structure.observable_matrix_bracket(trA, var("a"), A)))),
        "trBn_B": float(np.max(np.abs(structure.observable_matrix_bracket(trB, var("b"), A)))),
        "trAn_B": {"form": "c * B (A^n)_0", "constant": c_ab, "expected": 2 * n, "fit_residual": fit_ab},
        "trBn_A": {"form": "c * (B^n)_0 A", "constant": c_ba, "expected": -2 * n, "fit_residual": fit_ba},
        "trace_pairs": float(max(trace_pairs)),
    }


def relations_residual(report: Dict[str, Any]) -> float:
    n = report["n"]
    return max(report["trAn_A"], report["trBn_B"], report["trace_pairs"],
               report["trAn_B"]["fit_residual"], report["trBn_A"]["fit_residual"],
               abs(report["trAn_B"]["constant"] - 2 * n), abs(report["trBn_A"]["constant"] + 2 * n))


def _generator(B: np.ndarray, times: FlowTimes, weighted: bool) -> np.ndarray:
    total = np.zeros_like(B)
    power = np.eye(B.shape[0], dtype=complex)
    for n, t in enumerate(times.values, start=1):
        power = power @ B
        total = total + (2 * n * t if weighted else t) * power
    return traceless_part(total)


def flow(p: TorusPoint, times: FlowTimes) -> TorusPoint:
    """B fixed, A -> A exp((sum t_n B^n)_0)"""
    return TorusPoint(p.A @ group_exp(_generator(p.B, times, weighted=False)), p.B, p.flavor)


def hamiltonian_flow(p: TorusPoint, times: FlowTimes) -> TorusPoint:
    """Time-one Hamiltonian flow of sum t_n tr B^n: A -> exp(2 sum n t_n (B^n)_0) A"""
    return TorusPoint(group_exp(_generator(p.B, times, weighted=True)) @ p.A, p.B, p.flavor)


def flows_commute_check(p: TorusPoint, t: FlowTimes, t_prime: FlowTimes) -> float:
    one = flow(flow(p, t), t_prime)
    two = flow(flow(p, t_prime), t)
    return one.max_difference(two)


def momentum_map(p: TorusPoint) -> np.ndarray:
    """A B A^-1 B^-1"""
    return p.A @ p.B @ np.linalg.inv(p.A) @ np.linalg.inv(p.B)


def ordered_eigen_indices(values: Sequence[complex]) -> List[int]:
    """Argument (quantized, -pi read as pi) first, then modulus"""
    def key(i: int) -> Tuple[float, float]:
        z = complex(values[i])
        angle = np.round(np.angle(z) / ARGUMENT_QUANTUM) * ARGUMENT_QUANTUM
        if angle <= -np.pi + ARGUMENT_QUANTUM / 2:
            angle = np.pi
        return float(angle), float(abs(z))
    return sorted(range(len(values)), key=key)


def ordered_spectrum(M: np.ndarray) -> np.ndarray:
    values = np.linalg.eigvals(M)
    return values[ordered_eigen_indices(values)]


def match_to_reference(values: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Permutation of `values` pairing each with the nearest reference entry"""
    cost = np.abs(np.asarray(reference)[:, None] - np.asarray(values)[None, :])
    _, cols = linear_sum_assignment(cost)
    return cols


def spectrum_distance(values: np.ndarray, expected: np.ndarray) -> float:
    cols = match_to_reference(values, expected)
    return float(np.max(np.abs(np.asarray(values)[cols] - np.asarray(expected))))


def _check_leaf_data(lam: np.ndarray, q: np.ndarray, x: complex, require_unit_product: bool,
                     allow_zero_q: bool = False) -> None:
    k = len(lam)
    if k < 2 or len(q) != k:
        raise LeafPreconditionError(f"need k >= 2 eigenvalues and as many q values, got {len(lam)} and {len(q)}")
    if x == 0 or not np.isfinite(x):
        raise LeafPreconditionError("leaf parameter x must be finite and nonzero", x=str(x))
    if abs(x - 1) < POLE_TOLERANCE:
        raise LeafPreconditionError("leaf parameter x = 1 degenerates the leaf", x=str(x))
    for i in range(k):
        if lam[i] == 0:
            raise LeafPreconditionError(f"eigenvalue {i} vanishes", pair=(i, i))
        if not allow_zero_q and q[i] == 0:
            raise LeafPreconditionError(f"q_{i} vanishes", pair=(i, i))
        for j in range(k):
            if i == j:
                continue
            if abs(lam[i] - lam[j]) < POLE_TOLERANCE * max(1.0, abs(lam[i])):
                raise LeafPreconditionError(f"eigenvalues {i} and {j} coincide", pair=(i, j))
            if abs(lam[i] / lam[j] - x) < POLE_TOLERANCE * max(1.0, abs(x)):
                raise LeafPreconditionError(f"lambda_{i}/lambda_{j} equals x: pole of the leaf matrix",
                                            pair=(i, j))
    if require_unit_product and abs(np.prod(lam) - 1) > 1e-10:
        raise LeafPreconditionError(f"product of eigenvalues is {np.prod(lam)}, not 1")


def leaf_matrix(lam: Sequence[complex], q: Sequence[complex], x: complex, check: bool = True) -> np.ndarray:
    """B_ij = sqrt(q_i) sqrt(q_j) (1 - x) / (lambda_i/lambda_j - x); the diagonal is q"""
    lam = np.asarray(lam, dtype=complex)
    q = np.asarray(q, dtype=complex)
    x = complex(x)
    if check:
        _check_leaf_data(lam, q, x, require_unit_product=False)
    roots = np.sqrt(q)
    ratio = lam[:, None] / lam[None, :]
    return roots[:, None] * roots[None, :] * (1 - x) / (ratio - x)


def momentum_factors(lam: Sequence[complex], x: complex) -> np.ndarray:
    """G_i = prod_{m != i} (l_m - l_i)(l_i - l_m) / ((l_m - x l_i)(l_i - x l_m))"""
    lam = np.asarray(lam, dtype=complex)
    k = len(lam)
    factors = np.ones(k, dtype=complex)
    for i in range(k):
        for m in range(k):
            if m == i:
                continue
            numerator = (lam[m] - lam[i]) * (lam[i] - lam[m])
            denominator = (lam[m] - x * lam[i]) * (lam[i] - x * lam[m])
            if numerator == 0 or denominator == 0:
                raise BranchError(f"vanishing factor in the momentum root for indices ({i}, {m})", pair=[i, m])
            factors[i] *= numerator / denominator
    return factors


def momentum_weights(lam: Sequence[complex], x: complex) -> np.ndarray:
    """w_i = x^((k-1)/2) G_i^(1/2), principal roots"""
    k = len(lam)
    return np.sqrt(complex(x)) ** (k - 1) * np.sqrt(momentum_factors(lam, x))


@dataclass(frozen=True, eq=False)
class LeafPoint:
    k: int
    x: complex
    lam: Tuple[complex, ...]
    q: Tuple[complex, ...]
    q_raw: Tuple[complex, ...]
    s: Tuple[complex, ...]
    w: Tuple[complex, ...]
    point: TorusPoint

    @property
    def flavor(self) -> Flavor:
        return self.point.flavor

    def to_json(self) -> Dict[str, Any]:
        return {"k": self.k, "x": [self.x.real, self.x.imag], "flavor": self.flavor.value,
                "lambda": vector_to_json(self.lam), "q": vector_to_json(self.q),
                "q_raw": vector_to_json(self.q_raw), "s": vector_to_json(self.s),
                "point": self.point.to_json()}


def build_leaf_point(lam: Sequence[complex], q: Sequence[complex], x: complex,
                     flavor: Union[str, Flavor] = Flavor.SL) -> LeafPoint:
    """
    Point of the minimal leaf with A = diag(lambda) and B from (lambda, q, x).

    For SL the matrix B is rescaled by det(B)^(-1/k) and q with it.
    """
    flavor = Flavor.parse(flavor)
    lam_arr = np.asarray(lam, dtype=complex)
    q_raw = np.asarray(q, dtype=complex)
    x = complex(x)
    _check_leaf_data(lam_arr, q_raw, x, require_unit_product=flavor is Flavor.SL)
    k = len(lam_arr)
    B = leaf_matrix(lam_arr, q_raw, x, check=False)
    scale = 1.0 + 0j
    if flavor is Flavor.SL:
        det = np.linalg.det(B)
        if abs(det) < 1e-300:
            raise LeafPreconditionError("leaf matrix is singular")
        scale = det ** (-1.0 / k)
        B = scale * B
    q_scaled = scale * q_raw
    point = TorusPoint(np.diag(lam_arr), B, flavor)
    w = momentum_weights(lam_arr, x)
    return LeafPoint(k=k, x=x, lam=tuple(lam_arr), q=tuple(q_scaled), q_raw=tuple(q_raw),
                     s=tuple(q_scaled * w), w=tuple(w), point=point)


def leaf_from_json(data: Dict[str, Any], flavor: Union[str, Flavor] = Flavor.SL) -> LeafPoint:
    """Parse a leaf spec {k, x, lambda: [...], q: [...]}"""
    lam = [pair_to_complex(v) for v in data["lambda"]]
    q = [pair_to_complex(v) for v in data["q"]]
    if "k" in data and int(data["k"]) != len(lam):
        raise LeafPreconditionError(f"leaf spec says k = {data['k']} but lists {len(lam)} eigenvalues")
    return build_leaf_point(lam, q, pair_to_complex(data["x"]), data.get("flavor", flavor))


def leaf_report(leaf: LeafPoint) -> Dict[str, Any]:
    """Spectrum and rank checks of the momentum map on the leaf"""
    mu = momentum_map(leaf.point)
    k, x = leaf.k, leaf.x
    expected = np.array([x] * (k - 1) + [x ** (1 - k)])
    spectrum = ordered_spectrum(mu)
    singular = np.linalg.svd(mu - x * np.eye(k), compute_uv=False)
    rank_ratio = float(singular[1] / singular[0]) if singular[0] > 0 else 0.0
    return {
        "k": k,
        "x": x,
        "spectrum": list(spectrum),
        "expected_spectrum": list(expected),
        "spectrum_residual": spectrum_distance(spectrum, expected),
        "rank_ratio": rank_ratio,
        "det_A": complex(np.linalg.det(leaf.point.A)),
        "det_B": complex(np.linalg.det(leaf.point.B)),
    }


def canonical_s(leaf: LeafPoint) -> Tuple[complex, ...]:
    """s_i = q_i x^((k-1)/2) G_i^(1/2)"""
    return tuple(np.asarray(leaf.q) * momentum_weights(leaf.lam, leaf.x))


@dataclass
class LeafCoordinates:
    lam: np.ndarray
    q: np.ndarray
    s: np.ndarray


def _off_diagonal_gaps(lam: np.ndarray) -> np.ndarray:
    gaps = np.abs(lam[:, None] - lam[None, :])
    return np.where(np.eye(len(lam), dtype=bool), np.inf, gaps)


def _eigen_ordered(A: np.ndarray, reference: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    values, vectors = np.linalg.eig(A)
    order = ordered_eigen_indices(values) if reference is None else match_to_reference(values, reference)
    return values[order], vectors[:, order]


def extract_leaf_coordinates(p: TorusPoint, x: complex, base: Optional[LeafPoint] = None) -> LeafCoordinates:
    """
    (lambda, q, s) of a point near the leaf.

    Eigenvalues are ordered by the fixed rule, or matched to `base` when
    given; q_j = (V^-1 B V)_jj is independent of eigenvector scaling; w is
    continued from the base by w(p) = w(base) sqrt(G(p)/G(base)).
    """
    reference = None if base is None else np.asarray(base.lam)
    lam, V = _eigen_ordered(p.A, reference)
    if np.min(_off_diagonal_gaps(lam)) <= 0:
        raise LeafPreconditionError("repeated eigenvalue of A")
    q = np.diag(np.linalg.solve(V, p.B @ V))
    if base is None:
        w = momentum_weights(lam, x)
    else:
        ratio = momentum_factors(lam, x) / momentum_factors(base.lam, x)
        w = np.asarray(base.w) * np.sqrt(ratio)
    return LeafCoordinates(lam=lam, q=q, s=q * w)


def det_b_formula(lam: Sequence[complex], q: Sequence[complex], x: complex) -> complex:
    """x^(k(k-1)/2) prod q_i prod_{i != j} (l_i - l_j)/(x l_i - l_j)"""
    lam = np.asarray(lam, dtype=complex)
    k = len(lam)
    value = complex(x) ** (k * (k - 1) // 2) * np.prod(np.asarray(q, dtype=complex))
    for i in range(k):
        for j in range(k):
            if i != j:
                value *= (lam[i] - lam[j]) / (x * lam[i] - lam[j])
    return complex(value)


def det_b_check(lam: Sequence[complex], q: Sequence[complex], x: complex) -> Dict[str, Any]:
    """Direct determinant of the raw leaf matrix against the product formula"""
    lam_arr = np.asarray(lam, dtype=complex)
    q_arr = np.asarray(q, dtype=complex)
    _check_leaf_data(lam_arr, q_arr, complex(x), require_unit_product=False, allow_zero_q=True)
    direct = complex(np.linalg.det(leaf_matrix(lam_arr, q_arr, x, check=False)))
    formula = det_b_formula(lam_arr, q_arr, x)
    scale = max(abs(direct), abs(formula))
    relative = 0.0 if scale == 0 else abs(direct - formula) / scale
    return {"direct": direct, "formula": formula, "relative_error": float(relative)}


def leaf_det_b_check(leaf: LeafPoint) -> Dict[str, Any]:
    return det_b_check(leaf.lam, leaf.q_raw, leaf.x)


@dataclass
class HamiltonianReport:
    formula: complex
    trace: complex

    @property
    def residual(self) -> float:
        return float(abs(self.formula - self.trace))

    def to_dict(self) -> Dict[str, Any]:
        return {"formula": self.formula, "trace": self.trace, "residual": self.residual}


def ruijsenaars_hamiltonian(leaf: LeafPoint) -> HamiltonianReport:
    """sum_i (s_i + 1/s_i) / w_i next to tr(B + B^-1) of the realized point"""
    s = np.asarray(leaf.s)
    w = np.asarray(leaf.w)
    if np.any(s == 0):
        raise BranchError("a canonical momentum vanishes")
    formula = complex(np.sum((s + 1 / s) / w))
    B = leaf.point.B
    return HamiltonianReport(formula=formula, trace=complex(np.trace(B + np.linalg.inv(B))))


def random_leaf(k: int, seed: int = 0, flavor: Union[str, Flavor] = Flavor.SL) -> LeafPoint:
    """Admissible leaf with real, well separated spectrum"""
    rng = derive_rng(seed, "leaf", k)
    while True:
        logs = np.sort(rng.uniform(-1.0, 1.0, size=k))
        logs -= logs.mean()
        lam = np.exp(logs)
        x = complex(rng.uniform(1.5, 3.0))
        q = rng.uniform(0.5, 1.5, size=k) + 0.1j * rng.uniform(-1.0, 1.0, size=k)
        gaps = np.diff(logs)
        ratios = lam[:, None] / lam[None, :]
        if np.min(gaps) > 0.2 and np.min(np.abs(ratios - x)) > 0.2:
            return build_leaf_point(lam, q, x, flavor)


@dataclass
class CoordinateBracketReport:
    residuals: Dict[str, float]
    brackets: Dict[str, np.ndarray] = field(default_factory=dict)

    def passed(self, tolerance: float, qq_tolerance: float) -> bool:
        return all(value <= (qq_tolerance if name == "q-q" else tolerance)
                   for name, value in self.residuals.items())

    def to_dict(self) -> Dict[str, Any]:
        return {"residuals": dict(self.residuals),
                "brackets": {name: matrix_to_json(value) for name, value in self.brackets.items()}}


def leaf_coordinate_observables(leaf: LeafPoint, richardson: bool = False) -> Dict[str, List[Observable]]:
    """lambda_i, q_i and s_i as finite-difference observables on torus connections"""
    k = leaf.k

    def coordinates(A: GraphConnection) -> LeafCoordinates:
        return extract_leaf_coordinates(TorusPoint.from_connection(A), leaf.x, base=leaf)

    def pick(name: str, i: int):
        return lambda A: complex(getattr(coordinates(A), name)[i])

    return {name: [FiniteDifferenceObservable(pick(name, i), label=f"{name}_{i}", richardson=richardson)
                   for i in range(k)]
            for name in ("lam", "q", "s")}


def expected_coordinate_brackets(lam: np.ndarray, q: np.ndarray, s: np.ndarray, x: complex) -> Dict[str, np.ndarray]:
    k = len(lam)
    qq = np.zeros((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            if i != j:
                qq[i, j] = (2 * (1 - x) ** 2 * q[i] * q[j] * (lam[i] + lam[j])
                            / ((lam[i] / lam[j] - x) * (lam[j] / lam[i] - x) * (lam[i] - lam[j])))
    return {
        "lambda-lambda": np.zeros((k, k), dtype=complex),
        "lambda-q": np.diag(2 * lam * q),
        "q-q": qq,
        "lambda-s": np.diag(2 * lam * s),
        "s-s": np.zeros((k, k), dtype=complex),
    }


def coordinate_brackets_check(leaf: LeafPoint, tolerance: float = 1e-5, qq_tolerance: float = 1e-4) -> CoordinateBracketReport:
    """
    Brackets of (lambda, q, s) on GL(k) at A = diag(lambda), compared to
    {l_i, q_j} = 2 l_i q_j d_ij, the rational {q_i, q_j}, {l_i, s_j} = 2 l_i s_j d_ij
    and {s_i, s_j} = 0. Retries with Richardson extrapolation when needed.
    """
    lam = np.asarray(leaf.lam)
    gaps = _off_diagonal_gaps(lam)
    if np.min(gaps) <= SEPARATION_THRESHOLD:
        i, j = np.unravel_index(np.argmin(gaps), gaps.shape)
        raise LeafPreconditionError("spectrum of A is too close to degenerate", pair=(int(i), int(j)))
    gl_leaf = build_leaf_point(leaf.lam, leaf.q, leaf.x, Flavor.GL)
    report = _coordinate_brackets(gl_leaf, richardson=False)
    if not report.passed(tolerance, qq_tolerance):
        logger.info("coordinate brackets above tolerance; retrying with Richardson extrapolation")
        report = _coordinate_brackets(gl_leaf, richardson=True)
    return report


def _coordinate_brackets(leaf: LeafPoint, richardson: bool) -> CoordinateBracketReport:
    structure = torus_structure(leaf.k, Flavor.GL)
    A = leaf.point.to_connection()
    observables = leaf_coordinate_observables(leaf, richardson)
    gradients = {name: np.array([obs.gradient(A) for obs in group]) for name, group in observables.items()}

    def table(left: str, right: str) -> np.ndarray:
        return gradients[left] @ structure.pairing @ gradients[right].T

    measured = {
        "lambda-lambda": table("lam", "lam"),
        "lambda-q": table("lam", "q"),
        "q-q": table("q", "q"),
        "lambda-s": table("lam", "s"),
        "s-s": table("s", "s"),
    }
    expected = expected_coordinate_brackets(np.asarray(leaf.lam), np.asarray(leaf.q), np.asarray(leaf.s), leaf.x)
    residuals = {name: float(np.max(np.abs(measured[name] - expected[name]))) for name in measured}
    return CoordinateBracketReport(residuals, measured)


def trajectory(p: TorusPoint, times: FlowTimes, steps: int, hamiltonian: bool = False) -> pd.DataFrame:
    """Sampled flow: rows step = 0..steps at times step * t"""
    if steps < 0:
        raise NumericError("steps must be non-negative", steps=steps)
    move = hamiltonian_flow if hamiltonian else flow
    k = p.k
    det_start = np.linalg.det(p.A)
    rows = []
    for step in range(steps + 1):
        current = move(p, times.scaled(step))
        row: Dict[str, Any] = {"step": step}
        for n, t in enumerate(times.scaled(step).values, start=1):
            row[f"t{n}"] = t.real
            if not times.is_real():
                row[f"t{n}_imag"] = t.imag
        for n in range(1, k):
            trA = np.trace(np.linalg.matrix_power(current.A, n))
            trB = np.trace(np.linalg.matrix_power(current.B, n))
            row[f"Re_trA{n}"], row[f"Im_trA{n}"] = trA.real, trA.imag
            row[f"Re_trB{n}"], row[f"Im_trB{n}"] = trB.real, trB.imag
        for i, z in enumerate(ordered_spectrum(momentum_map(current)), start=1):
            row[f"Re_mu{i}"], row[f"Im_mu{i}"] = z.real, z.imag
        row["det_A_drift"] = float(abs(np.linalg.det(current.A) - det_start))
        rows.append(row)
    return pd.DataFrame(rows)


def flow_invariants_residual(frame: pd.DataFrame) -> Dict[str, float]:
    """Largest drift of tr B^n, the mu spectrum and det A along a trajectory"""
    drift = {}
    trB = [c for c in frame.columns if c.startswith(("Re_trB", "Im_trB"))]
    mu = [c for c in frame.columns if c.startswith(("Re_mu", "Im_mu"))]
    drift["trB"] = float((frame[trB] - frame[trB].iloc[0]).abs().to_numpy().max()) if trB else 0.0
    drift["mu"] = float((frame[mu] - frame[mu].iloc[0]).abs().to_numpy().max()) if mu else 0.0
    drift["det_A"] = float(frame["det_A_drift"].max())
    return drift
