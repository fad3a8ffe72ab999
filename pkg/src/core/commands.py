"""
Command implementations behind the ribbon-poisson CLI.

Each cmd_* takes a resolved RunConfig and returns a CommandResult; the
exit-code contract is 0 for pass, 1 for a failed numerical check and 2
for usage, precondition or I/O errors.
"""

import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config_manager import RunConfig, SUITES
from .connection import random_algebra_element
from .exceptions import MoveError, RibbonPoissonError
from .lie_core import Flavor, build_basis, casimir, cybe_residual, flip_operator, group_exp, standard_r
from .observables import step_sizes
from .poisson_bracket import (FORMULA_CONFIGS, RMatrixAssignment, ResidualReport, fixed_monodromy_leaf_check,
                              jacobi_negative_control, jacobi_suite, move_is_poisson_residual, oracle_suite,
                              poisson_action_residual, ra_independence_suite)
from .report_writer import check_entry, control_entry
from .ribbon_graph import (CiliatedFatGraph, MoveDescriptor, apply_move, cilium_corner,
                           disjoint_union, ensure_valid, face_path, faces, gallery, named_graph, surface,
                           surface_components, validate)
from .ruijsenaars import (FlowTimes, LeafPoint, build_leaf_point, coordinate_brackets_check,
                          derived_relations_check, flow, flow_invariants_residual, flows_commute_check,
                          leaf_det_b_check, leaf_from_json, leaf_report, random_leaf, random_torus_point,
                          relations_residual, ruijsenaars_hamiltonian, trajectory)
from ..utils.random_streams import derive_rng, stream_seed
from ..utils.validators import LeafValidator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

GRAPH_ACTIONS = ("validate", "surface", "faces", "move", "gallery")
RUIJSENAARS_ACTIONS = ("leaf", "brackets", "hamiltonian", "flow", "detb", "relations")

FORMULA_FOR_GRAPH = {
    "edge": "edge", "single_edge": "edge", "loop": "loop", "twoedges": "twoedges",
    "double": "double", "torus": "torus", "torus_one_hole": "torus",
}
POISSON_ACTION_GRAPHS = ("torus", "double")
RA_INDEPENDENCE_GRAPHS = ("torus", "double", "loop")
LEAF_SUBMANIFOLD_GRAPHS = ("loop", "double")
JACOBI_CONTROL_GRAPH = "double"
DEFAULT_FLOW_STEPS = 50
DEFAULT_FLOW_TIME = 0.1


@dataclass
class CommandResult:
    exit_code: int
    report: Dict[str, Any]
    table: Optional[pd.DataFrame] = None


def error_result(error: Exception) -> CommandResult:
    if isinstance(error, RibbonPoissonError):
        return CommandResult(EXIT_USAGE, error.to_dict())
    kind = "io" if isinstance(error, OSError) else "usage"
    return CommandResult(EXIT_USAGE, {"error": kind, "message": str(error)})


def _finish(command: str, config: RunConfig, checks: List[Dict[str, Any]], **extra: Any) -> CommandResult:
    passed = all(entry["passed"] for entry in checks)
    report = {"command": command, "k": config.k, "flavor": config.flavor.value, "seed": config.seed,
              "passed": passed, "checks": checks}
    report.update(extra)
    if not passed:
        failing = [entry for entry in checks if not entry["passed"]]
        worst = max(failing, key=lambda entry: entry["residual"])
        if worst.get("worst_sample") is not None:
            report["replay"] = {"seed": config.seed, "check": worst["name"], "sample_index": worst["worst_sample"]}
        logger.warning(f"{command}: {len(failing)} check(s) above tolerance, worst {worst['name']}")
    else:
        logger.info(f"{command}: {len(checks)} check(s) passed")
    return CommandResult(EXIT_OK if passed else EXIT_FAILED, report)


def load_graph(source: Optional[str], default: str = "torus", check: bool = True) -> CiliatedFatGraph:
    """A named graph ("torus", "polyuble(3)", ...) or a path to a graph JSON file"""
    source = source or default
    if os.path.exists(source):
        with open(source, 'r', encoding='utf-8') as f:
            data = json.load(f)
        graph = CiliatedFatGraph.from_json(data.get("graph", data))
    else:
        graph = named_graph(source)
    if check:
        ensure_valid(graph)
    return graph


def parse_move(text: str) -> MoveDescriptor:
    """
    A move as JSON ({"op": "glue", "n1": 1, "n2": 2}) or shorthand:
    erase:a, contract:a:0, glue:1,2, add-loop:0:1.
    """
    text = text.strip()
    if text.startswith("{"):
        return MoveDescriptor.from_json(json.loads(text))
    op, _, rest = text.partition(":")
    args = [part for part in rest.replace(",", ":").split(":") if part]
    try:
        if op == "erase" and len(args) == 1:
            return MoveDescriptor.erase(args[0])
        if op == "contract" and len(args) == 2:
            return MoveDescriptor.contract(args[0], int(args[1]))
        if op == "glue" and len(args) == 2:
            return MoveDescriptor.glue(int(args[0]), int(args[1]))
        if op == "add-loop" and len(args) in (1, 2):
            return MoveDescriptor.add_loop(int(args[0]), int(args[1]) if len(args) == 2 else 0)
    except ValueError:
        pass
    raise MoveError(f"cannot parse move {text!r}", move=text)


def standard_move_scenarios() -> List[Tuple[str, CiliatedFatGraph, MoveDescriptor]]:
    """Group multiplication, multiplication on the double, contraction to the dual group, erasure"""
    single = named_graph("single_edge")
    double = named_graph("double")
    two_singles, _ = disjoint_union(single, single)
    two_doubles, _ = disjoint_union(double, double)
    return [
        ("glue G x G -> G", two_singles, MoveDescriptor.glue(1, 2)),
        ("glue D x D -> D", two_doubles, MoveDescriptor.glue(1, 2)),
        ("contract D -> G*", double, MoveDescriptor.contract("a", 0)),
        ("erase", double, MoveDescriptor.erase("b")),
    ]


def _assignment(graph: CiliatedFatGraph, config: RunConfig) -> RMatrixAssignment:
    r = standard_r(config.k, config.flavor)
    if config.option("assignment", "polyuble") == "uniform":
        return RMatrixAssignment.uniform(graph, r)
    return RMatrixAssignment.polyuble(graph, r)


def _sample_window(config: RunConfig, suite: str) -> Tuple[int, int]:
    """(samples, offset); --sample-index replays a single sample"""
    index = config.option("sample_index")
    if index is not None:
        return 1, int(index)
    return config.samples_for(suite), 0


def _suite_check(name: str, report: ResidualReport, tolerance: float) -> Dict[str, Any]:
    details = report.to_dict()
    details.pop("max_residual")
    return check_entry(name, report.max_residual, tolerance, **details)


def cmd_axioms(config: RunConfig) -> CommandResult:
    """CYBE, symmetric part and Casimir completeness for every requested k"""
    tolerance = config.tolerance("axioms")
    checks = []
    for k in config.option("k_range", [config.k]):
        r = standard_r(k, config.flavor)
        basis = build_basis(k, config.flavor)
        gram = np.einsum("iab,jba->ij", basis.elements, basis.elements)
        expected_t = flip_operator(k) - (np.eye(k * k) / k if config.flavor is Flavor.SL else 0)
        checks.append(check_entry(f"k={k} cybe", cybe_residual(r), tolerance, k=k))
        checks.append(check_entry(f"k={k} symmetric-part", r.symmetric_residual(), tolerance, k=k))
        checks.append(check_entry(f"k={k} orthonormal-basis",
                                  float(np.max(np.abs(gram - np.eye(basis.dim)))), tolerance, k=k))
        checks.append(check_entry(f"k={k} casimir-completeness",
                                  float(np.max(np.abs(casimir(k, config.flavor).tensor - expected_t))),
                                  tolerance, k=k))
        checks.append(check_entry(f"k={k} exp-zero",
                                  float(np.max(np.abs(group_exp(np.zeros((k, k))) - np.eye(k)))), tolerance, k=k))
    return _finish("axioms", config, checks)


def _verify_oracle(config: RunConfig) -> List[Dict[str, Any]]:
    if config.graph:
        if config.graph not in FORMULA_FOR_GRAPH:
            raise MoveError(f"no closed formula for graph {config.graph!r}",
                            choices=sorted(FORMULA_FOR_GRAPH))
        configs: Sequence[str] = (FORMULA_FOR_GRAPH[config.graph],)
    else:
        configs = FORMULA_CONFIGS
    samples, offset = _sample_window(config, "bivector-oracle")
    return [_suite_check(f"bivector-oracle {name}",
                         oracle_suite(name, config.k, samples=samples, seed=config.seed, sample_offset=offset),
                         config.tolerance("bivector-oracle"))
            for name in configs]


def _verify_jacobi(config: RunConfig) -> List[Dict[str, Any]]:
    graphs = {config.graph: load_graph(config.graph)} if config.graph else gallery()
    samples, offset = _sample_window(config, "jacobi")
    checks = []
    for name, graph in graphs.items():
        R = RMatrixAssignment.uniform(graph, standard_r(config.k, config.flavor))
        report = jacobi_suite(graph, R, samples=samples, seed=config.seed, sample_offset=offset)
        checks.append(_suite_check(f"jacobi {name}", report, config.tolerance("jacobi")))
    control_name = config.graph or JACOBI_CONTROL_GRAPH
    control_graph = load_graph(control_name)
    if control_graph.representatives:
        control = jacobi_negative_control(control_graph, config.k, config.flavor, samples=samples, seed=config.seed,
                                          sample_offset=offset)
        details = control.to_dict()
        details.pop("max_residual")
        checks.append(control_entry(f"jacobi negative-control {control_name}", control.max_residual,
                                    config.tolerance("jacobi-control"), **details))
    return checks


def _verify_poisson_action(config: RunConfig) -> List[Dict[str, Any]]:
    names = (config.graph,) if config.graph else POISSON_ACTION_GRAPHS
    samples, offset = _sample_window(config, "poisson-action")
    checks = []
    for name in names:
        graph = load_graph(name)
        R = RMatrixAssignment.uniform(graph, standard_r(config.k, config.flavor))
        report = poisson_action_residual(graph, R, samples=samples, seed=config.seed, sample_offset=offset)
        checks.append(_suite_check(f"poisson-action {name}", report, config.tolerance("poisson-action")))
    return checks


def _verify_move_poisson(config: RunConfig) -> List[Dict[str, Any]]:
    move_text = config.option("move")
    if move_text:
        graph = load_graph(config.graph, default="double")
        scenarios = [(move_text, graph, parse_move(move_text))]
    else:
        scenarios = standard_move_scenarios()
    samples, offset = _sample_window(config, "move-poisson")
    checks = []
    for label, graph, move in scenarios:
        report = move_is_poisson_residual(graph, move, _assignment(graph, config), samples=samples,
                                          seed=config.seed, sample_offset=offset)
        checks.append(_suite_check(f"move-poisson {label}", report, config.tolerance("move-poisson")))
    return checks


def _verify_ra_independence(config: RunConfig) -> List[Dict[str, Any]]:
    names = (config.graph,) if config.graph else RA_INDEPENDENCE_GRAPHS
    samples, offset = _sample_window(config, "ra-independence")
    checks = []
    for name in names:
        graph = load_graph(name)
        R = RMatrixAssignment.uniform(graph, standard_r(config.k, config.flavor))
        report = ra_independence_suite(graph, R, samples=samples, seed=config.seed, sample_offset=offset)
        checks.append(_suite_check(f"ra-independence {name}", report, config.tolerance("ra-independence")))
    return checks


def _verify_leaf_submanifold(config: RunConfig) -> List[Dict[str, Any]]:
    names = (config.graph,) if config.graph else LEAF_SUBMANIFOLD_GRAPHS
    tolerance = config.tolerance("leaf-submanifold")
    samples, offset = _sample_window(config, "leaf-submanifold")
    checks = []
    for name in names:
        graph = load_graph(name)
        R = RMatrixAssignment.uniform(graph, standard_r(config.k, config.flavor))
        requested = config.option("face")
        if requested:
            targets = [tuple(part.strip() for part in requested.split(",") if part.strip())]
        else:
            targets = [face for face in faces(graph) if cilium_corner(graph, face) is None] or faces(graph)[:1]
        rng = derive_rng(config.seed, "leaf-submanifold", "h", name)
        h = group_exp(random_algebra_element(rng, config.k, config.flavor))
        for face in targets:
            report = fixed_monodromy_leaf_check(graph, face, R, h=h, samples=samples, seed=config.seed,
                                                sample_offset=offset)
            residual = max(report.max_residual, report.leaf_distance)
            details = report.to_dict()
            details.pop("max_residual")
            checks.append(check_entry(f"leaf-submanifold {name} {list(report.face)}", residual, tolerance,
                                      **details))
    return checks


SUITE_RUNNERS = {
    "bivector-oracle": _verify_oracle,
    "jacobi": _verify_jacobi,
    "poisson-action": _verify_poisson_action,
    "move-poisson": _verify_move_poisson,
    "ra-independence": _verify_ra_independence,
    "leaf-submanifold": _verify_leaf_submanifold,
}


def cmd_verify(config: RunConfig) -> CommandResult:
    suites = SUITES if config.suite in (None, "all") else (config.suite,)
    unknown = [s for s in suites if s not in SUITE_RUNNERS]
    if unknown:
        raise ValueError(f"unknown suite {unknown[0]!r}; choose from {', '.join(SUITES)}")
    checks = []
    for suite in suites:
        logger.info(f"running suite {suite} (k={config.k}, seed={config.seed})")
        checks.extend(SUITE_RUNNERS[suite](config))
    return _finish("verify", config, checks, suites=list(suites))


def leaf_points(config: RunConfig, suite: str) -> List[LeafPoint]:
    """The leaf named on the command line, or seeded random admissible leaves"""
    leaf_file = config.option("leaf")
    if leaf_file:
        with open(leaf_file, 'r', encoding='utf-8') as f:
            return [leaf_from_json(json.load(f), config.flavor)]
    lam = config.option("lam")
    if lam is not None:
        q = config.option("q") or [1.0] * len(lam)
        x = config.option("x")
        ok, message = LeafValidator.validate_leaf_spec(lam, q, x)
        if not ok:
            raise ValueError(message)
        return [build_leaf_point(lam, q, x, config.flavor)]
    samples, offset = _sample_window(config, suite)
    return [random_leaf(config.k, seed=stream_seed(config.seed, "leaf", index), flavor=config.flavor)
            for index in range(offset, offset + samples)]


def _flow_times(config: RunConfig, k: int) -> FlowTimes:
    times = config.option("times")
    if times is None:
        times = [DEFAULT_FLOW_TIME] * (k - 1)
    return FlowTimes(tuple(times))


def _ruijsenaars_flow(config: RunConfig) -> CommandResult:
    if config.option("lam") is not None or config.option("leaf"):
        point = leaf_points(config, "flow")[0].point
    else:
        point = random_torus_point(config.k, seed=config.seed, flavor=config.flavor)
    times = _flow_times(config, point.k)
    steps = int(config.option("steps", DEFAULT_FLOW_STEPS))
    frame = trajectory(point, times, steps, hamiltonian=bool(config.option("hamiltonian", False)))
    drift = flow_invariants_residual(frame)

    rng = derive_rng(config.seed, "flow", "second-time")
    other = FlowTimes(tuple(rng.uniform(-0.2, 0.2, size=point.k - 1)))
    additivity = flow(point, times + other).max_difference(flow(flow(point, times), other))
    checks = [
        # the flow leaves B fixed; tr B^n has to be bit-identical along the trajectory
        check_entry("trB-constant", drift["trB"], 0.0),
        check_entry("mu-spectrum-drift", drift["mu"], config.tolerance("mu-drift")),
        check_entry("det-A-drift", drift["det_A"], config.tolerance("det-A-drift")),
        check_entry("flows-commute", flows_commute_check(point, times, other), config.tolerance("flow-commute")),
        check_entry("one-parameter-group", additivity, config.tolerance("flow-group")),
    ]
    result = _finish("ruijsenaars flow", config, checks, steps=steps, times=list(times.values))
    result.table = frame
    return result


def cmd_ruijsenaars(config: RunConfig) -> CommandResult:
    action = config.option("action", "leaf")
    if action not in RUIJSENAARS_ACTIONS:
        raise ValueError(f"unknown ruijsenaars action {action!r}; choose from {', '.join(RUIJSENAARS_ACTIONS)}")
    if action == "flow":
        return _ruijsenaars_flow(config)

    checks: List[Dict[str, Any]] = []
    details: List[Dict[str, Any]] = []
    if action == "relations":
        tolerance = config.tolerance("relations")
        samples, offset = _sample_window(config, "relations")
        for index in range(offset, offset + samples):
            point = random_torus_point(config.k, seed=stream_seed(config.seed, "relations", index),
                                       flavor=config.flavor)
            for n in range(1, config.k):
                report = derived_relations_check(point, n)
                checks.append(check_entry(f"relations n={n} sample {index}", relations_residual(report),
                                          tolerance, worst_sample=index))
                details.append(report)
        return _finish("ruijsenaars relations", config, checks, relations=details)

    for index, leaf in enumerate(leaf_points(config, action)):
        label = f"leaf {index}"
        if action == "leaf":
            report = leaf_report(leaf)
            checks.append(check_entry(f"{label} spectrum", report["spectrum_residual"],
                                      config.tolerance("leaf"), worst_sample=index))
            details.append({"leaf": leaf.to_json(), "report": report})
        elif action == "brackets":
            report = coordinate_brackets_check(leaf, config.tolerance("brackets"), config.tolerance("q-q"))
            for name, residual in sorted(report.residuals.items()):
                tolerance = config.tolerance("q-q" if name == "q-q" else "brackets")
                checks.append(check_entry(f"{label} {name}", residual, tolerance, worst_sample=index))
            details.append({"leaf": leaf.to_json(), "report": report.to_dict()})
        elif action == "hamiltonian":
            report = ruijsenaars_hamiltonian(leaf)
            checks.append(check_entry(f"{label} hamiltonian", report.residual,
                                      config.tolerance("hamiltonian"), worst_sample=index))
            details.append({"leaf": leaf.to_json(), "report": report.to_dict()})
        elif action == "detb":
            report = leaf_det_b_check(leaf)
            checks.append(check_entry(f"{label} det B", report["relative_error"],
                                      config.tolerance("detb"), worst_sample=index))
            details.append({"leaf": leaf.to_json(), "report": report})
    return _finish(f"ruijsenaars {action}", config, checks, leaves=details)


def cmd_graph(config: RunConfig) -> CommandResult:
    action = config.option("action", "validate")
    if action not in GRAPH_ACTIONS:
        raise ValueError(f"unknown graph action {action!r}; choose from {', '.join(GRAPH_ACTIONS)}")
    if action == "gallery":
        entries = {}
        for name, graph in gallery().items():
            entries[name] = {"graph": graph.to_json(), "valid": validate(graph).ok,
                             "surface": surface(graph).to_dict()}
        ok = all(entry["valid"] for entry in entries.values())
        return CommandResult(EXIT_OK if ok else EXIT_FAILED,
                             {"command": "graph gallery", "count": len(entries), "graphs": entries})

    source = config.option("name") or config.graph
    if action == "validate":
        graph = load_graph(source, check=False)
        report = validate(graph)
        return CommandResult(EXIT_OK if report.ok else EXIT_FAILED,
                             {"command": "graph validate", "graph": graph.to_json(), **report.to_dict()})

    graph = load_graph(source)
    if action == "surface":
        components = surface_components(graph)
        report = components[0].to_dict() if len(components) == 1 else {
            "components": [c.to_dict() for c in components]}
        return CommandResult(EXIT_OK, {"command": "graph surface", **report})
    if action == "faces":
        listing = []
        for face in faces(graph):
            corner = cilium_corner(graph, face)
            listing.append({"face": list(face), "path": list(face_path(graph, face)),
                            "has_cilium": corner is not None,
                            "cilium_corner": list(corner) if corner else None})
        return CommandResult(EXIT_OK, {"command": "graph faces", "faces": listing})

    move_text = config.option("move")
    if not move_text:
        raise ValueError("graph move needs --move")
    move = parse_move(move_text)
    outcome = apply_move(graph, move)
    return CommandResult(EXIT_OK, {
        "command": "graph move",
        "move": move.to_json(),
        "graph": outcome.graph.to_json(),
        "vertex_origin": list(outcome.vertex_origin),
        "words": {end: list(w) for end, w in sorted(outcome.words.items())},
        "surface": [c.to_dict() for c in surface_components(outcome.graph)],
    })


COMMANDS = {
    "axioms": cmd_axioms,
    "verify": cmd_verify,
    "ruijsenaars": cmd_ruijsenaars,
    "graph": cmd_graph,
}


def run_command(config: RunConfig) -> CommandResult:
    """Dispatch with the error-to-exit-code mapping"""
    errors = config.validate()
    if errors:
        return CommandResult(EXIT_USAGE, {"error": "usage", "message": "; ".join(errors)})
    try:
        with step_sizes(config.steps):
            return COMMANDS[config.command](config)
    except (RibbonPoissonError, ValueError, OSError, KeyError) as e:
        logger.error(f"{config.command} failed: {e}")
        return error_result(e)
