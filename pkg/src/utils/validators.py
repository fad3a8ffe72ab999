import re
from typing import Any, Dict, List, Optional, Sequence, Tuple

MAX_SEED = 2 ** 64 - 1
MAX_K = 8

_RANGE_PATTERN = re.compile(r"^\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*$")


class ConfigValidator:
    """Configuration validation utilities"""

    @staticmethod
    def validate_seed(seed: Any) -> Tuple[bool, str]:
        if isinstance(seed, bool) or not isinstance(seed, int):
            return False, "Seed must be an integer"
        if seed < 0 or seed > MAX_SEED:
            return False, "Seed must fit in an unsigned 64-bit integer"
        return True, f"Valid seed: {seed}"

    @staticmethod
    def validate_samples(samples: Any) -> Tuple[bool, str]:
        if isinstance(samples, bool) or not isinstance(samples, int):
            return False, "Sample count must be an integer"
        if samples < 1:
            return False, "Sample count must be at least 1"
        return True, f"Valid sample count: {samples}"

    @staticmethod
    def validate_tolerance(name: str, tolerance: Any) -> Tuple[bool, str]:
        if isinstance(tolerance, bool) or not isinstance(tolerance, (int, float)):
            return False, f"Tolerance {name!r} must be a number"
        if not tolerance > 0:
            return False, f"Tolerance {name!r} must be positive"
        return True, f"Valid tolerance {name!r}: {tolerance}"

    @staticmethod
    def validate_dimension(k: Any) -> Tuple[bool, str]:
        if isinstance(k, bool) or not isinstance(k, int):
            return False, "k must be an integer"
        if k < 2:
            return False, "k must be at least 2"
        if k > MAX_K:
            return False, f"k above {MAX_K} is not supported"
        return True, f"Valid k: {k}"

    @staticmethod
    def validate_log_level(level: Any) -> Tuple[bool, str]:
        if not isinstance(level, str) or level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            return False, f"Unknown log level {level!r}"
        return True, f"Valid log level: {level}"


class LeafValidator:
    """Shape checks on leaf specifications before any numerics run"""

    @staticmethod
    def validate_leaf_spec(lam: Sequence[complex], q: Sequence[complex], x: Optional[complex]) -> Tuple[bool, str]:
        if len(lam) < 2:
            return False, "A leaf needs at least two eigenvalues"
        if len(q) != len(lam):
            return False, f"Expected {len(lam)} q values, got {len(q)}"
        if x is None:
            return False, "x is required"
        return True, f"Leaf spec with k = {len(lam)}"


def parse_k_range(text: str) -> List[int]:
    """'3' -> [3], '2..4' -> [2, 3, 4]"""
    match = _RANGE_PATTERN.match(str(text))
    if not match:
        raise ValueError(f"expected k or k1..k2, got {text!r}")
    low = int(match.group(1))
    high = int(match.group(2)) if match.group(2) else low
    if high < low:
        raise ValueError(f"empty range {text!r}")
    for k in (low, high):
        ok, message = ConfigValidator.validate_dimension(k)
        if not ok:
            raise ValueError(message)
    return list(range(low, high + 1))


def parse_complex(text: str) -> complex:
    """Accepts Python complex literals such as 2, 0.5, 1+2j, -1j"""
    cleaned = text.strip().replace(" ", "").replace("i", "j")
    if not cleaned:
        raise ValueError("empty number")
    return complex(cleaned)


def parse_complex_list(text: str) -> List[complex]:
    """Comma separated complex numbers"""
    return [parse_complex(part) for part in str(text).split(",") if part.strip()]


def validate_run(seed: int, samples: Optional[int], tolerances: Dict[str, float]) -> List[str]:
    errors = []
    ok, message = ConfigValidator.validate_seed(seed)
    if not ok:
        errors.append(message)
    if samples is not None:
        ok, message = ConfigValidator.validate_samples(samples)
        if not ok:
            errors.append(message)
    for name in sorted(tolerances):
        ok, message = ConfigValidator.validate_tolerance(name, tolerances[name])
        if not ok:
            errors.append(message)
    return errors


def validate_config(config: Dict[str, Any]) -> List[str]:
    """Validate a merged configuration dictionary"""
    run = config.get('run', {})
    errors = validate_run(run.get('seed', 0), None, config.get('tolerances', {}))

    ok, message = ConfigValidator.validate_dimension(run.get('k', 2))
    if not ok:
        errors.append(message)

    for suite, count in sorted(run.get('samples', {}).items()):
        ok, message = ConfigValidator.validate_samples(count)
        if not ok:
            errors.append(f"{suite}: {message}")

    for name, step in sorted(config.get('numerics', {}).items()):
        ok, message = ConfigValidator.validate_tolerance(name, step)
        if not ok:
            errors.append(message)

    ok, message = ConfigValidator.validate_log_level(config.get('logging', {}).get('level', 'WARNING'))
    if not ok:
        errors.append(message)

    return errors
