"""
Matrix Lie algebra numerics for gl(k) and sl(k).

Bases are orthonormal under the bilinear trace form tr(XY). Tensors on
C^k (x) C^k are dense k^2 x k^2 matrices built with np.kron, so entry
((a, c), (b, d)) of X (x) Y is X[a, b] * Y[c, d].
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, Union

import numpy as np
import scipy.linalg

from .exceptions import InvalidDimensionError, NumericError
from ..utils.random_streams import derive_rng
from ..utils.serialization import flat_from_json, flat_to_json

logger = logging.getLogger(__name__)


class Flavor(str, Enum):
    GL = "GL"
    SL = "SL"

    @classmethod
    def parse(cls, value: Union[str, "Flavor"]) -> "Flavor":
        if isinstance(value, Flavor):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise InvalidDimensionError(f"unknown flavor {value!r}", flavor=str(value))


@dataclass(frozen=True, eq=False)
class AlgebraBasis:
    """Orthonormal basis e_i of gl(k) or sl(k) under tr(XY)"""

    k: int
    flavor: Flavor
    elements: np.ndarray

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    def coefficients(self, X: np.ndarray) -> np.ndarray:
        """tr(X e_i) for every basis element"""
        return np.einsum("ab,iba->i", X, self.elements)

    def reconstruct(self, coefficients: np.ndarray) -> np.ndarray:
        return np.einsum("i,iab->ab", coefficients, self.elements)

    def project(self, X: np.ndarray) -> np.ndarray:
        """Orthogonal projection of a k x k matrix onto the algebra"""
        if self.flavor is Flavor.SL:
            return X - np.trace(X) / self.k * np.eye(self.k)
        return np.array(X, dtype=complex)


def _check_dimension(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise InvalidDimensionError(f"matrix dimension must be an integer >= 2, got {k!r}", k=k)


def unit_matrix(k: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((k, k), dtype=complex)
    m[i, j] = 1.0
    return m


def cartan_elements(k: int, flavor: Flavor) -> np.ndarray:
    """Orthonormal Cartan set: E_ii for GL, normalized H_m for SL"""
    if flavor is Flavor.GL:
        return np.array([unit_matrix(k, i, i) for i in range(k)])
    elements = []
    for m in range(1, k):
        diag = np.zeros(k, dtype=complex)
        diag[:m] = 1.0
        diag[m] = -m
        elements.append(np.diag(diag) / np.sqrt(m * (m + 1)))
    return np.array(elements)


@lru_cache(maxsize=None)
def build_basis(k: int, flavor: Union[str, Flavor] = Flavor.SL) -> AlgebraBasis:
    """
    Deterministic orthonormal basis.

    Off-diagonal pairs i < j in lexicographic order contribute
    (E_ij + E_ji)/sqrt(2) and i(E_ij - E_ji)/sqrt(2); the Cartan set is last.
    """
    _check_dimension(k)
    flavor = Flavor.parse(flavor)
    elements = []
    for i in range(k):
        for j in range(i + 1, k):
            elements.append((unit_matrix(k, i, j) + unit_matrix(k, j, i)) / np.sqrt(2))
            elements.append(1j * (unit_matrix(k, i, j) - unit_matrix(k, j, i)) / np.sqrt(2))
    stacked = np.concatenate([np.array(elements).reshape(-1, k, k), cartan_elements(k, flavor)])
    stacked.flags.writeable = False
    return AlgebraBasis(k=k, flavor=flavor, elements=stacked)


@lru_cache(maxsize=None)
def flip_operator(k: int) -> np.ndarray:
    """P(u (x) v) = v (x) u on C^k (x) C^k"""
    p = np.zeros((k * k, k * k), dtype=complex)
    for a in range(k):
        for c in range(k):
            p[a * k + c, c * k + a] = 1.0
    p.flags.writeable = False
    return p


def flip_tensor(tensor: np.ndarray, k: int) -> np.ndarray:
    """Swap the two tensor factors: r -> r21"""
    p = flip_operator(k)
    return p @ tensor @ p


def tensor_from_coefficients(coefficients: np.ndarray, basis: AlgebraBasis) -> np.ndarray:
    """Sum c^{ij} e_i (x) e_j"""
    k = basis.k
    blocks = np.einsum("ij,iab,jcd->acbd", coefficients, basis.elements, basis.elements)
    return blocks.reshape(k * k, k * k)


def tensor_coefficients(tensor: np.ndarray, basis: AlgebraBasis) -> np.ndarray:
    """c^{ij} = tr((e_i (x) e_j) . tensor); exact for tensors in g (x) g"""
    k = basis.k
    r4 = np.asarray(tensor).reshape(k, k, k, k)
    E = basis.elements
    return np.einsum("ips,jqu,supq->ij", E, E, r4)


@dataclass(frozen=True, eq=False)
class CasimirTensor:
    k: int
    flavor: Flavor
    tensor: np.ndarray


@lru_cache(maxsize=None)
def casimir(k: int, flavor: Union[str, Flavor] = Flavor.SL) -> CasimirTensor:
    """t = sum_i e_i (x) e_i over the orthonormal basis"""
    basis = build_basis(k, flavor)
    tensor = sum(np.kron(e, e) for e in basis.elements)
    tensor.flags.writeable = False
    return CasimirTensor(k=k, flavor=basis.flavor, tensor=tensor)


@dataclass(frozen=True, eq=False)
class RMatrix:
    """An element of g (x) g whose symmetric part is meant to be the Casimir t"""

    k: int
    flavor: Flavor
    tensor: np.ndarray

    @property
    def basis(self) -> AlgebraBasis:
        return build_basis(self.k, self.flavor)

    @property
    def flipped_tensor(self) -> np.ndarray:
        return flip_tensor(self.tensor, self.k)

    @property
    def skew_part(self) -> np.ndarray:
        return 0.5 * (self.tensor - self.flipped_tensor)

    @property
    def symmetric_part(self) -> np.ndarray:
        return 0.5 * (self.tensor + self.flipped_tensor)

    def coefficients(self) -> np.ndarray:
        """r^{ij} in the e_i (x) e_j basis"""
        return tensor_coefficients(self.tensor, self.basis)

    def flipped(self) -> "RMatrix":
        return RMatrix(self.k, self.flavor, self.flipped_tensor)

    def symmetric_residual(self) -> float:
        """max |1/2 (r + r21) - t|"""
        return float(np.max(np.abs(self.symmetric_part - casimir(self.k, self.flavor).tensor)))

    def to_json(self) -> Dict[str, Any]:
        return {"k": self.k, "flavor": self.flavor.value, "tensor": flat_to_json(self.tensor)}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "RMatrix":
        k = int(data["k"])
        _check_dimension(k)
        return cls(k=k, flavor=Flavor.parse(data["flavor"]), tensor=flat_from_json(data["tensor"], k * k))


def standard_r(k: int, flavor: Union[str, Flavor] = Flavor.SL) -> RMatrix:
    """
    Standard r-matrix with symmetric part t.

    r = 2 sum_{i<j} E_ij (x) E_ji + sum_m H_m (x) H_m, i.e. twice
    sum_{alpha>0} E_alpha (x) E_-alpha + 1/2 sum H (x) H, so that 1/2 (r + r21) = t.
    """
    _check_dimension(k)
    flavor = Flavor.parse(flavor)
    tensor = np.zeros((k * k, k * k), dtype=complex)
    for i in range(k):
        for j in range(i + 1, k):
            tensor += 2.0 * np.kron(unit_matrix(k, i, j), unit_matrix(k, j, i))
    for h in cartan_elements(k, flavor):
        tensor += np.kron(h, h)
    return RMatrix(k=k, flavor=flavor, tensor=tensor)


def random_r(k: int, flavor: Union[str, Flavor] = Flavor.SL, seed: int = 0, scale: float = 1.0) -> RMatrix:
    """t plus a random skew tensor: correct symmetric part, generically not a CYBE solution"""
    basis = build_basis(k, flavor)
    rng = derive_rng(seed, "random_r", k, basis.flavor.value)
    m = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(size=(basis.dim, basis.dim))
    skew = tensor_from_coefficients(scale * (m - m.T) / 2, basis)
    return RMatrix(k=k, flavor=basis.flavor, tensor=casimir(k, basis.flavor).tensor + skew)


def cybe_residual(r: RMatrix) -> float:
    """max-norm of [r12, r13] + [r12, r23] + [r13, r23] on C^k (x) C^k (x) C^k"""
    k = r.k
    eye = np.eye(k)
    r12 = np.kron(r.tensor, eye)
    r23 = np.kron(eye, r.tensor)
    p23 = np.kron(eye, flip_operator(k))
    r13 = p23 @ r12 @ p23

    def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return x @ y - y @ x

    total = bracket(r12, r13) + bracket(r12, r23) + bracket(r13, r23)
    return float(np.max(np.abs(total)))


def group_exp(X: np.ndarray) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade); exp(0) is exactly Id"""
    X = np.asarray(X, dtype=complex)
    if not np.all(np.isfinite(X)):
        raise NumericError("group_exp received non-finite entries")
    if not np.any(X):
        return np.eye(X.shape[0], dtype=complex)
    result = scipy.linalg.expm(X)
    if not np.all(np.isfinite(result)):
        raise NumericError("group_exp overflowed", norm=float(np.max(np.abs(X))))
    return result


def traceless_part(X: np.ndarray) -> np.ndarray:
    """(X)_0 = X - tr(X)/k Id"""
    k = X.shape[0]
    return X - np.trace(X) / k * np.eye(k)
