import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .lie_core import Flavor
from .observables import DEFAULT_STEPS, StepSizes
from ..utils.validators import validate_config, validate_run

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "RP_DEFAULT_SEED"

SUITES = ("bivector-oracle", "jacobi", "poisson-action", "move-poisson", "ra-independence", "leaf-submanifold")
COMMANDS = ("axioms", "verify", "ruijsenaars", "graph")
# --tol on a grouped action overrides every member
TOLERANCE_GROUPS = {"flow": ("flow-commute", "flow-group", "det-A-drift", "mu-drift")}


class ConfigManager:
    """Configuration manager for the verification runs"""

    def __init__(self, config_file: str = "config/default_config.json"):
        self.config_file = config_file
        self.default_config = {
            "run": {
                "seed": 0,
                "k": 2,
                "flavor": "sl",
                "samples": {
                    "axioms": 1,
                    "bivector-oracle": 100,
                    "jacobi": 50,
                    "poisson-action": 50,
                    "move-poisson": 100,
                    "ra-independence": 50,
                    "leaf-submanifold": 20,
                    "leaf": 20,
                    "brackets": 1,
                    "hamiltonian": 20,
                    "detb": 20,
                    "relations": 5,
                },
            },
            "tolerances": {
                "axioms": 1e-12,
                "bivector-oracle": 1e-9,
                "jacobi": 1e-8,
                "jacobi-control": 1e-3,
                "poisson-action": 1e-8,
                "move-poisson": 1e-9,
                "ra-independence": 1e-9,
                "leaf-submanifold": 1e-8,
                "leaf": 1e-8,
                "brackets": 1e-5,
                "q-q": 1e-4,
                "hamiltonian": 1e-8,
                "flow-commute": 1e-10,
                "flow-group": 1e-10,
                "det-A-drift": 1e-10,
                "mu-drift": 1e-8,
                "detb": 1e-10,
                "relations": 1e-8,
            },
            "numerics": {
                "fd_step": 1e-5,
                "nested_fd_step": 1e-4,
            },
            "output": {
                "directory": None,
                "indent": 2,
            },
            "logging": {
                "level": "WARNING",
                "log_dir": None,
            },
        }
        self.config = self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """Load configuration from file, merged over the defaults"""
        if not self.config_file or not os.path.exists(self.config_file):
            return self._merge_config(self.default_config, {})
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                config = json.load(f)
            return self._merge_config(self.default_config, config)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"Error loading config {self.config_file}: {e}")
            return self._merge_config(self.default_config, {})

    def save_config(self) -> bool:
        """Save configuration to file"""
        try:
            directory = os.path.dirname(self.config_file)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(self.config_file, 'w', encoding='utf-8') as f:
                json.dump(self.config, f, indent=2, ensure_ascii=False, sort_keys=True)
            return True
        except OSError as e:
            logger.error(f"Error saving config: {e}")
            return False

    def get_config(self) -> Dict[str, Any]:
        """Get current configuration"""
        return self._merge_config(self.config, {})

    def update_config(self, updates: Dict[str, Any], persist: bool = False) -> bool:
        """Update configuration with new values"""
        self.config = self._merge_config(self.config, updates)
        return self.save_config() if persist else True

    def get_tolerance(self, suite: str) -> float:
        tolerances = self.config.get('tolerances', {})
        if suite not in tolerances:
            raise KeyError(f"no tolerance configured for suite {suite!r}")
        return float(tolerances[suite])

    def get_samples(self, suite: str) -> int:
        return int(self.config.get('run', {}).get('samples', {}).get(suite, 1))

    def get_seed(self) -> int:
        """Seed from RP_DEFAULT_SEED when set, else the configured one"""
        env = os.environ.get(SEED_ENV_VAR)
        if env not in (None, ""):
            try:
                return int(env, 0)
            except ValueError:
                logger.warning(f"ignoring non-integer {SEED_ENV_VAR}={env!r}")
        return int(self.config.get('run', {}).get('seed', 0))

    def get_numerics(self) -> Dict[str, float]:
        return dict(self.config.get('numerics', {}))

    def get_logging_config(self) -> Dict[str, Any]:
        return dict(self.config.get('logging', {}))

    def get_output_config(self) -> Dict[str, Any]:
        return dict(self.config.get('output', {}))

    def validate_config(self) -> List[str]:
        """Validate configuration values"""
        return validate_config(self.config)

    def reset_to_defaults(self) -> None:
        self.config = self._merge_config(self.default_config, {})

    def _merge_config(self, base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
        """Deep merge configuration dictionaries"""
        result = {key: (self._merge_config(value, {}) if isinstance(value, dict) else value)
                  for key, value in base.items()}
        for key, value in updates.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_config(result[key], value)
            else:
                result[key] = value
        return result


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation with every default resolved"""

    command: str
    k: int = 2
    flavor: Flavor = Flavor.SL
    graph: Optional[str] = None
    suite: Optional[str] = None
    seed: int = 0
    samples: Optional[int] = None
    sample_counts: Dict[str, int] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None
    options: Dict[str, Any] = field(default_factory=dict)
    steps: StepSizes = DEFAULT_STEPS

    def tolerance(self, suite: str) -> float:
        return self.tolerances[suite]

    def samples_for(self, suite: str) -> int:
        if self.samples is not None:
            return self.samples
        return self.sample_counts.get(suite, 1)

    def option(self, name: str, default: Any = None) -> Any:
        return self.options.get(name, default)

    def validate(self) -> List[str]:
        return validate_run(self.seed, self.samples, self.tolerances)

    @classmethod
    def build(cls, command: str, manager: ConfigManager, k: Optional[int] = None,
              flavor: Optional[str] = None, graph: Optional[str] = None, seed: Optional[int] = None,
              samples: Optional[int] = None, tolerance: Optional[float] = None,
              suite: Optional[str] = None, output: Optional[str] = None,
              **options: Any) -> "RunConfig":
        """
        Resolve a run from CLI values over the configuration.

        An explicit --tol overrides the tolerance of the selected suite (every
        member of a grouped action such as flow, or every suite when no suite
        applies).
        """
        run = manager.get_config().get('run', {})
        tolerances = {name: float(value) for name, value in manager.get_config().get('tolerances', {}).items()}
        if tolerance is not None:
            targets: Tuple[str, ...] = TOLERANCE_GROUPS.get(suite, (suite,)) if suite else tuple(tolerances)
            for name in targets:
                tolerances[name] = float(tolerance)
        return cls(
            command=command,
            k=int(k if k is not None else run.get('k', 2)),
            flavor=Flavor.parse(flavor if flavor is not None else run.get('flavor', 'sl')),
            graph=graph,
            suite=suite,
            seed=int(seed) if seed is not None else manager.get_seed(),
            samples=samples,
            sample_counts={name: int(value) for name, value in run.get("samples", {}).items()},
            tolerances=tolerances,
            output=output,
            options={key: value for key, value in options.items() if value is not None},
            steps=StepSizes.from_numerics(manager.get_numerics()),
        )
