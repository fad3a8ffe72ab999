"""JSON helpers for complex scalars and matrices ([re, im] pairs)"""

from typing import Any, List, Sequence

import numpy as np


def complex_to_pair(z: complex) -> List[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def pair_to_complex(pair: Any) -> complex:
    if isinstance(pair, (int, float)):
        return complex(pair)
    if len(pair) != 2:
        raise ValueError(f"expected [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def matrix_to_json(matrix: np.ndarray) -> List[List[List[float]]]:
    """Row-major nested list of [re, im] pairs"""
    return [[complex_to_pair(z) for z in row] for row in np.asarray(matrix)]


def matrix_from_json(rows: Sequence[Sequence[Any]]) -> np.ndarray:
    return np.array([[pair_to_complex(p) for p in row] for row in rows], dtype=complex)


def flat_to_json(matrix: np.ndarray) -> List[List[float]]:
    """Flat row-major list of [re, im] pairs"""
    return [complex_to_pair(z) for z in np.asarray(matrix).ravel()]


def flat_from_json(values: Sequence[Any], size: int) -> np.ndarray:
    if len(values) != size * size:
        raise ValueError(f"expected {size * size} entries, got {len(values)}")
    return np.array([pair_to_complex(p) for p in values], dtype=complex).reshape(size, size)


def vector_to_json(values: Sequence[complex]) -> List[List[float]]:
    return [complex_to_pair(z) for z in values]


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy/complex values into plain JSON types"""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return to_jsonable(obj.tolist())
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_pair(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
