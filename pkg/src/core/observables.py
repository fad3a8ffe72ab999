"""
Observables on graph-connection space.

Two backends:

* exact-tree: expressions over edge variables built from inverses,
  products, powers, traces and entries, differentiated in forward mode.
  Each node carries its value, first derivatives along every direction
  and (when asked) second derivatives d2[u, s] = X_u(X_s f).
* finite-difference: arbitrary functions of the connection, central
  differences in the exponential chart.

A direction is a pair (end alpha, algebra element X) acting by
A_alpha -> A_alpha exp(sX). Basis directions run over the sorted ends
of the graph, and for each end over the algebra basis.
"""

import logging
from abc import ABC, abstractmethod
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from numbers import Number
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .connection import GraphConnection, connection_from_outcome, evaluate_word
from .exceptions import NumericError, ObservableError
from .lie_core import AlgebraBasis, build_basis
from .ribbon_graph import CiliatedFatGraph, MoveOutcome
from ..utils.serialization import complex_to_pair, matrix_from_json, matrix_to_json, pair_to_complex

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
NESTED_FD_STEP = 1e-4


@dataclass(frozen=True)
class StepSizes:
    """Finite-difference steps, taken from the numerics configuration"""

    fd_step: float = FD_STEP
    nested_fd_step: float = NESTED_FD_STEP

    @classmethod
    def from_numerics(cls, numerics: Mapping[str, Any]) -> "StepSizes":
        return cls(float(numerics.get("fd_step", FD_STEP)), float(numerics.get("nested_fd_step", NESTED_FD_STEP)))


DEFAULT_STEPS = StepSizes()
_ACTIVE_STEPS: ContextVar[StepSizes] = ContextVar("step_sizes", default=DEFAULT_STEPS)


def current_steps() -> StepSizes:
    return _ACTIVE_STEPS.get()


@contextmanager
def step_sizes(steps: StepSizes) -> Iterator[StepSizes]:
    """Default steps for observables built inside the block"""
    token = _ACTIVE_STEPS.set(steps)
    try:
        yield steps
    finally:
        _ACTIVE_STEPS.reset(token)


@dataclass(frozen=True, eq=False)
class Directions:
    """Ordered derivative directions: end indices (N,) and algebra matrices (N, k, k)"""

    graph: CiliatedFatGraph
    end_indices: np.ndarray
    matrices: np.ndarray

    @property
    def count(self) -> int:
        return len(self.end_indices)

    @classmethod
    def single(cls, graph: CiliatedFatGraph, end: str, X: np.ndarray) -> "Directions":
        if end not in graph.end_index:
            raise ObservableError(f"unknown end {end!r}", end=end)
        return cls(graph, np.array([graph.end_index[end]]), np.asarray(X, dtype=complex)[None])


@lru_cache(maxsize=64)
def basis_directions(graph: CiliatedFatGraph, basis: AlgebraBasis) -> Directions:
    ends = len(graph.ends)
    indices = np.repeat(np.arange(ends), basis.dim)
    matrices = np.tile(basis.elements, (ends, 1, 1)) if ends else np.zeros((0, basis.k, basis.k), complex)
    return Directions(graph, indices, matrices)


@dataclass
class Jet:
    value: Any
    d1: np.ndarray
    d2: Optional[np.ndarray] = None


@dataclass
class JetContext:
    connection: GraphConnection
    directions: Directions
    order: int
    cache: Dict[int, Jet] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.connection.k


def _matrix_product(a: Jet, b: Jet, order: int) -> Jet:
    value = a.value @ b.value
    d1 = a.d1 @ b.value + a.value @ b.d1
    d2 = None
    if order > 1:
        d2 = (a.d2 @ b.value + a.value @ b.d2
              + a.d1[None, :] @ b.d1[:, None]
              + a.d1[:, None] @ b.d1[None, :])
    return Jet(value, d1, d2)


def _scalar_product(a: Jet, b: Jet, order: int) -> Jet:
    d2 = None
    if order > 1:
        d2 = a.d2 * b.value + a.value * b.d2 + np.outer(a.d1, b.d1) + np.outer(b.d1, a.d1)
    return Jet(a.value * b.value, a.d1 * b.value + a.value * b.d1, d2)


class Expression(ABC):
    """Node of the exact observable grammar"""

    is_matrix = False

    def jet(self, ctx: JetContext) -> Jet:
        key = id(self)
        if key not in ctx.cache:
            ctx.cache[key] = self._jet(ctx)
        return ctx.cache[key]

    @abstractmethod
    def _jet(self, ctx: JetContext) -> Jet:
        ...

    @abstractmethod
    def evaluate(self, A: GraphConnection) -> Any:
        ...

    @abstractmethod
    def substitute(self, mapping: Mapping[str, "Expression"]) -> "Expression":
        ...

    @abstractmethod
    def to_json(self) -> Dict[str, Any]:
        ...

    def _autoconv(self, other: Any) -> "Expression":
        if isinstance(other, Expression):
            return other
        if isinstance(other, Number):
            return Scalar(complex(other))
        raise ObservableError(f"cannot combine an expression with {type(other).__name__}")

    def __matmul__(self, other: "Expression") -> "Expression":
        return MatMul([self, other])

    def __add__(self, other: Any) -> "Expression":
        return Sum([self, self._autoconv(other)])

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Expression":
        return Sum([self, Product([Scalar(-1.0), self._autoconv(other)])])

    def __neg__(self) -> "Expression":
        return Product([Scalar(-1.0), self])

    def __mul__(self, other: Any) -> "Expression":
        return Product([self, self._autoconv(other)])

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "Expression":
        if self.is_matrix:
            return MatPower(self, power)
        return Power(self, power)


class EdgeVar(Expression):
    """Transport arriving at an end"""

    is_matrix = True

    def __init__(self, end: str):
        self.end = end

    def evaluate(self, A: GraphConnection) -> np.ndarray:
        return A.value(self.end)

    def _jet(self, ctx: JetContext) -> Jet:
        graph = ctx.connection.graph
        if self.end not in graph.end_index:
            raise ObservableError(f"expression uses unknown end {self.end!r}", end=self.end)
        M = ctx.connection.value(self.end)
        dirs = ctx.directions
        own = dirs.end_indices == graph.end_index[self.end]
        opposite = dirs.end_indices == graph.end_index[graph.involution[self.end]]
        X = dirs.matrices
        MX = M @ X
        XM = X @ M
        d1 = own[:, None, None] * MX - opposite[:, None, None] * XM
        d2 = None
        if ctx.order > 1:
            def mask(u: np.ndarray, s: np.ndarray) -> np.ndarray:
                return (u[:, None] & s[None, :])[..., None, None]

            d2 = (mask(own, own) * (MX[:, None] @ X[None, :])
                  - mask(own, opposite) * (XM[None, :] @ X[:, None])
                  - mask(opposite, own) * (XM[:, None] @ X[None, :])
                  + mask(opposite, opposite) * (X[None, :] @ XM[:, None]))
        return Jet(M, d1, d2)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        if self.end not in mapping:
            raise ObservableError(f"no substitution for end {self.end!r}", end=self.end)
        return mapping[self.end]

    def to_json(self) -> Dict[str, Any]:
        return {"var": self.end}


class ConstMatrix(Expression):
    is_matrix = True

    def __init__(self, matrix: np.ndarray):
        self.matrix = np.asarray(matrix, dtype=complex)

    def evaluate(self, A: GraphConnection) -> np.ndarray:
        return self.matrix

    def _jet(self, ctx: JetContext) -> Jet:
        n = ctx.directions.count
        d2 = np.zeros((n, n) + self.matrix.shape, complex) if ctx.order > 1 else None
        return Jet(self.matrix, np.zeros((n,) + self.matrix.shape, complex), d2)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return self

    def to_json(self) -> Dict[str, Any]:
        return {"const": matrix_to_json(self.matrix)}


class MatMul(Expression):
    is_matrix = True

    def __init__(self, factors: Sequence[Expression]):
        if not factors:
            raise ObservableError("empty matrix product")
        self.factors = list(factors)

    def evaluate(self, A: GraphConnection) -> np.ndarray:
        result = self.factors[0].evaluate(A)
        for factor in self.factors[1:]:
            result = result @ factor.evaluate(A)
        return result

    def _jet(self, ctx: JetContext) -> Jet:
        result = self.factors[0].jet(ctx)
        for factor in self.factors[1:]:
            result = _matrix_product(result, factor.jet(ctx), ctx.order)
        return result

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return MatMul([f.substitute(mapping) for f in self.factors])

    def to_json(self) -> Dict[str, Any]:
        return {"op": "matmul", "args": [f.to_json() for f in self.factors]}


class Inverse(Expression):
    is_matrix = True

    def __init__(self, arg: Expression):
        self.arg = arg

    def evaluate(self, A: GraphConnection) -> np.ndarray:
        return np.linalg.inv(self.arg.evaluate(A))

    def _jet(self, ctx: JetContext) -> Jet:
        a = self.arg.jet(ctx)
        v = np.linalg.inv(a.value)
        P = v @ a.d1
        d1 = -(P @ v)
        d2 = None
        if ctx.order > 1:
            d2 = (P[:, None] @ P[None, :] + P[None, :] @ P[:, None]) @ v - v @ a.d2 @ v
        return Jet(v, d1, d2)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return Inverse(self.arg.substitute(mapping))

    def to_json(self) -> Dict[str, Any]:
        return {"op": "inverse", "arg": self.arg.to_json()}


class MatPower(Expression):
    is_matrix = True

    def __init__(self, arg: Expression, n: int):
        self.arg = arg
        self.n = int(n)
        base = arg if n >= 0 else Inverse(arg)
        self._expanded = MatMul([base] * abs(self.n)) if n else None

    def evaluate(self, A: GraphConnection) -> np.ndarray:
        if self._expanded is None:
            return np.eye(A.k, dtype=complex)
        return self._expanded.evaluate(A)

    def _jet(self, ctx: JetContext) -> Jet:
        if self._expanded is None:
            return ConstMatrix(np.eye(ctx.k))._jet(ctx)
        return self._expanded.jet(ctx)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return MatPower(self.arg.substitute(mapping), self.n)

    def to_json(self) -> Dict[str, Any]:
        return {"op": "power", "arg": self.arg.to_json(), "n": self.n}


class Trace(Expression):
    def __init__(self, arg: Expression):
        self.arg = arg

    def evaluate(self, A: GraphConnection) -> complex:
        return complex(np.trace(self.arg.evaluate(A)))

    def _jet(self, ctx: JetContext) -> Jet:
        a = self.arg.jet(ctx)
        d2 = np.trace(a.d2, axis1=-2, axis2=-1) if ctx.order > 1 else None
        return Jet(complex(np.trace(a.value)), np.trace(a.d1, axis1=-2, axis2=-1), d2)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return Trace(self.arg.substitute(mapping))

    def to_json(self) -> Dict[str, Any]:
        return {"op": "trace", "arg": self.arg.to_json()}


class Entry(Expression):
    def __init__(self, arg: Expression, i: int, j: int):
        self.arg = arg
        self.i, self.j = int(i), int(j)

    def evaluate(self, A: GraphConnection) -> complex:
        return complex(self.arg.evaluate(A)[self.i, self.j])

    def _jet(self, ctx: JetContext) -> Jet:
        a = self.arg.jet(ctx)
        d2 = a.d2[..., self.i, self.j] if ctx.order > 1 else None
        return Jet(complex(a.value[self.i, self.j]), a.d1[:, self.i, self.j], d2)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return Entry(self.arg.substitute(mapping), self.i, self.j)

    def to_json(self) -> Dict[str, Any]:
        return {"op": "entry", "arg": self.arg.to_json(), "i": self.i, "j": self.j}


class Scalar(Expression):
    def __init__(self, value: complex):
        self.value = complex(value)

    def evaluate(self, A: GraphConnection) -> complex:
        return self.value

    def _jet(self, ctx: JetContext) -> Jet:
        n = ctx.directions.count
        return Jet(self.value, np.zeros(n, complex), np.zeros((n, n), complex) if ctx.order > 1 else None)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return self

    def to_json(self) -> Dict[str, Any]:
        return {"scalar": complex_to_pair(self.value)}


class Sum(Expression):
    def __init__(self, terms: Sequence[Expression]):
        self.terms = list(terms)

    def evaluate(self, A: GraphConnection) -> complex:
        return sum((t.evaluate(A) for t in self.terms), 0j)

    def _jet(self, ctx: JetContext) -> Jet:
        jets = [t.jet(ctx) for t in self.terms]
        d2 = sum(j.d2 for j in jets) if ctx.order > 1 else None
        return Jet(sum(j.value for j in jets), sum(j.d1 for j in jets), d2)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return Sum([t.substitute(mapping) for t in self.terms])

    def to_json(self) -> Dict[str, Any]:
        return {"op": "add", "args": [t.to_json() for t in self.terms]}


class Product(Expression):
    def __init__(self, factors: Sequence[Expression]):
        self.factors = list(factors)

    def evaluate(self, A: GraphConnection) -> complex:
        result = 1 + 0j
        for factor in self.factors:
            result *= factor.evaluate(A)
        return result

    def _jet(self, ctx: JetContext) -> Jet:
        result = self.factors[0].jet(ctx)
        for factor in self.factors[1:]:
            result = _scalar_product(result, factor.jet(ctx), ctx.order)
        return result

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return Product([f.substitute(mapping) for f in self.factors])

    def to_json(self) -> Dict[str, Any]:
        return {"op": "mul", "args": [f.to_json() for f in self.factors]}


class Power(Expression):
    """Scalar power with an integer exponent"""

    def __init__(self, arg: Expression, p: int):
        self.arg = arg
        self.p = int(p)

    def evaluate(self, A: GraphConnection) -> complex:
        return self.arg.evaluate(A) ** self.p

    def _jet(self, ctx: JetContext) -> Jet:
        a = self.arg.jet(ctx)
        p, v = self.p, a.value
        if p == 0:
            return Scalar(1.0)._jet(ctx)
        if p < 0 and v == 0:
            raise NumericError("negative power of a vanishing observable")
        d1 = p * v ** (p - 1) * a.d1
        d2 = None
        if ctx.order > 1:
            d2 = p * (p - 1) * v ** (p - 2) * np.outer(a.d1, a.d1) + p * v ** (p - 1) * a.d2
        return Jet(v ** p, d1, d2)

    def substitute(self, mapping: Mapping[str, Expression]) -> Expression:
        return Power(self.arg.substitute(mapping), self.p)

    def to_json(self) -> Dict[str, Any]:
        return {"op": "pow", "arg": self.arg.to_json(), "p": self.p}


def var(end: str) -> EdgeVar:
    return EdgeVar(end)


def word(ends: Sequence[str], k: Optional[int] = None) -> Expression:
    """Product of transports; an empty word needs `k` and is the identity"""
    if not ends:
        if k is None:
            raise ObservableError("empty word needs the matrix size")
        return ConstMatrix(np.eye(k))
    if len(ends) == 1:
        return EdgeVar(ends[0])
    return MatMul([EdgeVar(e) for e in ends])


def trace(expr: Expression) -> Trace:
    return Trace(expr)


def trace_word(ends: Sequence[str]) -> Trace:
    return Trace(word(ends))


def entry(expr: Expression, i: int, j: int) -> Entry:
    return Entry(expr, i, j)


def expression_from_json(data: Any) -> Expression:
    """Parse the small expression-tree JSON used on the command line"""
    if isinstance(data, str):
        return EdgeVar(data)
    if not isinstance(data, dict):
        raise ObservableError(f"cannot parse expression {data!r}")
    if "var" in data:
        return EdgeVar(str(data["var"]))
    if "const" in data:
        return ConstMatrix(matrix_from_json(data["const"]))
    if "scalar" in data:
        return Scalar(pair_to_complex(data["scalar"]))
    op = data.get("op")
    if op in ("matmul", "add", "mul"):
        args = [expression_from_json(a) for a in data.get("args", [])]
        if not args:
            raise ObservableError(f"{op} needs arguments")
        return {"matmul": MatMul, "add": Sum, "mul": Product}[op](args)
    if op in ("inverse", "trace"):
        arg = expression_from_json(data["arg"])
        return Inverse(arg) if op == "inverse" else Trace(arg)
    if op == "power":
        return MatPower(expression_from_json(data["arg"]), int(data["n"]))
    if op == "pow":
        return Power(expression_from_json(data["arg"]), int(data["p"]))
    if op == "entry":
        return Entry(expression_from_json(data["arg"]), int(data["i"]), int(data["j"]))
    raise ObservableError(f"unknown expression op {op!r}")


class Observable(ABC):
    """Complex function on connections with directional derivatives"""

    backend = "abstract"
    supports_exact_hessian = False

    @abstractmethod
    def value(self, A: GraphConnection) -> complex:
        ...

    @abstractmethod
    def gradient(self, A: GraphConnection) -> np.ndarray:
        """X_i^alpha f for every basis direction, shape (N,)"""

    def hessian(self, A: GraphConnection) -> np.ndarray:
        """d2[u, s] = X_u(X_s f), by nested central differences"""
        basis = A.basis
        dirs = basis_directions(A.graph, basis)
        h = current_steps().nested_fd_step
        rows = []
        for u in range(dirs.count):
            end = A.graph.ends[dirs.end_indices[u]]
            forward = self.gradient(A.perturbed(end, dirs.matrices[u], h))
            backward = self.gradient(A.perturbed(end, dirs.matrices[u], -h))
            rows.append((forward - backward) / (2 * h))
        return np.array(rows).reshape(dirs.count, dirs.count)

    def derivative(self, A: GraphConnection, end: str, X: np.ndarray) -> complex:
        """D_end(f; X) through the basis expansion of X"""
        grad = self.gradient(A).reshape(len(A.graph.ends), A.basis.dim)
        if end not in A.graph.end_index:
            raise ObservableError(f"unknown end {end!r}", end=end)
        return complex(grad[A.graph.end_index[end]] @ A.basis.coefficients(np.asarray(X)))


class ExactObservable(Observable):
    backend = "exact-tree"
    supports_exact_hessian = True

    def __init__(self, expression: Expression, label: Optional[str] = None):
        if expression.is_matrix:
            raise ObservableError("an observable must be scalar valued; wrap it in trace() or entry()")
        self.expression = expression
        self.label = label

    def _jet(self, A: GraphConnection, order: int, directions: Optional[Directions] = None) -> Jet:
        directions = directions or basis_directions(A.graph, A.basis)
        jet = self.expression.jet(JetContext(A, directions, order))
        if not np.isfinite(jet.value) or not np.all(np.isfinite(jet.d1)):
            raise NumericError("observable produced non-finite values", label=self.label)
        return jet

    def value(self, A: GraphConnection) -> complex:
        return complex(self.expression.evaluate(A))

    def gradient(self, A: GraphConnection) -> np.ndarray:
        return self._jet(A, 1).d1

    def hessian(self, A: GraphConnection) -> np.ndarray:
        return self._jet(A, 2).d2

    def jet(self, A: GraphConnection, order: int = 2) -> Jet:
        return self._jet(A, order)

    def derivative(self, A: GraphConnection, end: str, X: np.ndarray) -> complex:
        return complex(self._jet(A, 1, Directions.single(A.graph, end, X)).d1[0])

    def pullback(self, outcome: MoveOutcome, k: int) -> "ExactObservable":
        """Observable on the source graph of a move: f composed with the move map"""
        mapping = {end: word(w, k) for end, w in outcome.words.items()}
        return ExactObservable(self.expression.substitute(mapping), self.label)

    def to_json(self) -> Dict[str, Any]:
        return self.expression.to_json()

    def __mul__(self, other: "ExactObservable") -> "ExactObservable":
        return ExactObservable(Product([self.expression, other.expression]))

    def __add__(self, other: "ExactObservable") -> "ExactObservable":
        return ExactObservable(Sum([self.expression, other.expression]))

    def __repr__(self) -> str:
        return f"ExactObservable({self.label or self.expression.to_json()})"


class FiniteDifferenceObservable(Observable):
    """Arbitrary function of the connection differentiated numerically"""

    backend = "finite-difference"

    def __init__(self, function: Callable[[GraphConnection], complex], step: Optional[float] = None,
                 label: Optional[str] = None, richardson: bool = False):
        self.function = function
        self.step = current_steps().fd_step if step is None else step
        self.label = label
        self.richardson = richardson

    def value(self, A: GraphConnection) -> complex:
        result = complex(self.function(A))
        if not np.isfinite(result):
            raise NumericError("finite-difference observable returned a non-finite value", label=self.label)
        return result

    def _central(self, A: GraphConnection, end: str, X: np.ndarray, h: float) -> complex:
        return (self.value(A.perturbed(end, X, h)) - self.value(A.perturbed(end, X, -h))) / (2 * h)

    def _difference(self, A: GraphConnection, end: str, X: np.ndarray) -> complex:
        coarse = self._central(A, end, X, self.step)
        if not self.richardson:
            return coarse
        fine = self._central(A, end, X, self.step / 2)
        return (4 * fine - coarse) / 3

    def refined(self) -> "FiniteDifferenceObservable":
        """Same function differentiated with Richardson extrapolation"""
        return FiniteDifferenceObservable(self.function, self.step, self.label, richardson=True)

    def gradient(self, A: GraphConnection) -> np.ndarray:
        dirs = basis_directions(A.graph, A.basis)
        return np.array([self._difference(A, A.graph.ends[dirs.end_indices[u]], dirs.matrices[u])
                         for u in range(dirs.count)], dtype=complex)

    def derivative(self, A: GraphConnection, end: str, X: np.ndarray) -> complex:
        if end not in A.graph.end_index:
            raise ObservableError(f"unknown end {end!r}", end=end)
        return self._difference(A, end, np.asarray(X, dtype=complex))

    def __repr__(self) -> str:
        return f"FiniteDifferenceObservable({self.label or self.function!r})"


class BracketObservable(Observable):
    """{f, g} as an observable in its own right (used for nested brackets)"""

    def __init__(self, f: Observable, g: Observable, structure: Any):
        self.f, self.g = f, g
        self.structure = structure
        self.nested_step = current_steps().nested_fd_step
        exact = f.supports_exact_hessian and g.supports_exact_hessian
        self.backend = "exact-tree" if exact else "finite-difference"

    def value(self, A: GraphConnection) -> complex:
        return self.structure.pair(self.f.gradient(A), self.g.gradient(A))

    def gradient(self, A: GraphConnection) -> np.ndarray:
        pairing = self.structure.pairing
        if self.backend == "exact-tree":
            jf = self.f.jet(A, 2)
            jg = self.g.jet(A, 2)
            return jf.d2 @ (pairing @ jg.d1) + jg.d2 @ (pairing.T @ jf.d1)
        return FiniteDifferenceObservable(self.value, step=self.nested_step).gradient(A)


def pullback_observable(f: Observable, outcome: MoveOutcome, k: int) -> Observable:
    """f composed with the connection map of a move, as an observable on the source graph"""
    if isinstance(f, ExactObservable):
        return f.pullback(outcome, k)
    return FiniteDifferenceObservable(lambda A: f.value(connection_from_outcome(outcome, A)),
                                      label=f"pullback({f!r})")


def random_observable(graph: CiliatedFatGraph, rng: np.random.Generator, k: int, max_length: int = 3) -> ExactObservable:
    """Random trace word, matrix entry of a word, or product of two trace words"""
    ends = list(graph.ends)

    def random_word() -> Expression:
        length = int(rng.integers(1, max_length + 1))
        factors: List[Expression] = []
        for _ in range(length):
            end = ends[int(rng.integers(len(ends)))]
            factors.append(Inverse(EdgeVar(end)) if rng.random() < 0.25 else EdgeVar(end))
        return factors[0] if len(factors) == 1 else MatMul(factors)

    kind = int(rng.integers(3))
    if kind == 0:
        return ExactObservable(Trace(random_word()))
    if kind == 1:
        return ExactObservable(Entry(random_word(), int(rng.integers(k)), int(rng.integers(k))))
    return ExactObservable(Product([Trace(random_word()), Trace(random_word())]))


def random_trace_word(graph: CiliatedFatGraph, rng: np.random.Generator, max_length: int = 3) -> ExactObservable:
    ends = list(graph.ends)
    length = int(rng.integers(1, max_length + 1))
    return ExactObservable(trace_word([ends[int(rng.integers(len(ends)))] for _ in range(length)]))


FUNDAMENTAL = "fundamental"
DUAL = "dual"


def identity_intertwiner(k: int) -> np.ndarray:
    """Invariant pairing of a fundamental slot with a dual slot"""
    return np.eye(k, dtype=complex)


def epsilon_intertwiner(k: int) -> np.ndarray:
    """Levi-Civita tensor: invariant on k slots of the same type for SL(k)"""
    eps = np.zeros((k,) * k, dtype=complex)
    for perm in permutations(range(k)):
        inversions = sum(1 for a in range(k) for b in range(a + 1, k) if perm[a] > perm[b])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


def spin_network(graph: CiliatedFatGraph, reps: Mapping[str, str], intertwiners: Sequence[np.ndarray],
                 representatives: Optional[Sequence[str]] = None) -> FiniteDifferenceObservable:
    """
    Contraction of vertex intertwiners with edge representation matrices.

    The slot of end b at its vertex transforms as reps[b]. For each edge one
    chosen end rho contributes pi_rho(A_rho) with its row index on the slot of
    rho_v and its column index on the slot of rho; the dual representation
    matrix is A^-T.
    """
    for end in graph.ends:
        rep = reps.get(end)
        if rep not in (FUNDAMENTAL, DUAL):
            raise ObservableError(f"end {end!r} needs a fundamental or dual representation", end=end)
        if reps.get(graph.involution[end]) == rep:
            raise ObservableError(f"ends {end!r} and {graph.involution[end]!r} must carry dual representations",
                                  end=end)
    if len(intertwiners) != graph.vertex_count:
        raise ObservableError(f"expected {graph.vertex_count} intertwiners, got {len(intertwiners)}")
    tensors = [np.asarray(c, dtype=complex) for c in intertwiners]
    sizes = {dim for c in tensors for dim in c.shape}
    if len(sizes) > 1:
        raise ObservableError(f"intertwiner slots have mixed sizes {sorted(sizes)}")
    for index, (vertex, tensor) in enumerate(zip(graph.vertices, tensors)):
        if tensor.ndim != len(vertex):
            raise ObservableError(f"vertex {index} has {len(vertex)} ends but its intertwiner has "
                                  f"{tensor.ndim} slots", vertex=index)

    if representatives is None:
        chosen = list(graph.representatives)
    else:
        chosen = list(representatives)
        edges = {min(e, graph.involution[e]) for e in chosen}
        if len(chosen) != graph.edge_count or edges != set(graph.representatives):
            raise ObservableError("representatives must pick exactly one end of every edge")

    slot = {end: i for i, end in enumerate(graph.ends)}

    def contract(A: GraphConnection) -> complex:
        operands: List[Any] = []
        for vertex, tensor in zip(graph.vertices, tensors):
            operands.extend([tensor, [slot[e] for e in vertex]])
        for rho in sorted(chosen, key=lambda e: min(e, graph.involution[e])):
            matrix = A.value(rho)
            if reps[rho] == DUAL:
                matrix = np.linalg.inv(matrix).T
            operands.extend([matrix, [slot[graph.involution[rho]], slot[rho]]])
        operands.append([])
        return complex(np.einsum(*operands))

    return FiniteDifferenceObservable(contract, label="spin-network")
