import json

import pytest

from src.core.commands import (EXIT_FAILED, EXIT_OK, EXIT_USAGE, cmd_axioms, load_graph, parse_move, run_command,
                               standard_move_scenarios)
from src.core.config_manager import SEED_ENV_VAR, ConfigManager, RunConfig
from src.core.exceptions import MoveError
from src.core.ribbon_graph import MoveDescriptor, MoveKind, named_graph


@pytest.fixture
def manager(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)
    return ConfigManager(config_file=None)


def build(manager, command, **kwargs):
    return RunConfig.build(command, manager, **kwargs)


class TestParseMove:
    @pytest.mark.parametrize("text, expected", [
        ("erase:a", MoveDescriptor.erase("a")),
        ("contract:a:0", MoveDescriptor.contract("a", 0)),
        ("glue:1,2", MoveDescriptor.glue(1, 2)),
        ("add-loop:0", MoveDescriptor.add_loop(0)),
        ("add-loop:0:1", MoveDescriptor.add_loop(0, 1)),
        ('{"op": "glue", "n1": 1, "n2": 2}', MoveDescriptor.glue(1, 2)),
    ])
    def test_forms(self, text, expected):
        assert parse_move(text) == expected

    @pytest.mark.parametrize("text", ["twist:a", "glue:1", "contract:a:x"])
    def test_rejects(self, text):
        with pytest.raises(MoveError):
            parse_move(text)


class TestLoadGraph:
    def test_named(self):
        assert load_graph("double") == named_graph("double")
        assert load_graph(None) == named_graph("torus")

    def test_file(self, tmp_path):
        path = tmp_path / "graph.json"
        path.write_text(json.dumps({"graph": named_graph("loop").to_json()}))
        assert load_graph(str(path)) == named_graph("loop")

    def test_scenarios(self):
        scenarios = standard_move_scenarios()
        assert [move.kind for _, _, move in scenarios] == [MoveKind.GLUE, MoveKind.GLUE, MoveKind.CONTRACT,
                                                           MoveKind.ERASE]


class TestCommands:
    def test_axioms_range(self, manager):
        result = cmd_axioms(build(manager, "axioms", suite="axioms", k_range=[2, 3]))
        assert result.exit_code == EXIT_OK
        assert len(result.report["checks"]) == 10

    def test_oracle(self, manager):
        config = build(manager, "verify", suite="bivector-oracle", graph="double", samples=2)
        result = run_command(config)
        assert result.exit_code == EXIT_OK
        assert result.report["suites"] == ["bivector-oracle"]

    def test_no_closed_formula(self, manager):
        result = run_command(build(manager, "verify", suite="bivector-oracle", graph="polygon(3)", samples=1))
        assert result.exit_code == EXIT_USAGE
        assert result.report["error"] == "move"

    def test_move_poisson_single_move(self, manager):
        config = build(manager, "verify", suite="move-poisson", graph="double", samples=2, move="erase:b")
        assert run_command(config).exit_code == EXIT_OK

    def test_uniform_assignment_cannot_glue(self, manager):
        config = build(manager, "verify", suite="move-poisson", samples=1, assignment="uniform")
        result = run_command(config)
        assert result.exit_code == EXIT_USAGE
        assert result.report["error"] == "glue-precondition"

    def test_failure_carries_replay(self, manager):
        config = build(manager, "verify", suite="poisson-action", graph="torus", samples=2, tolerance=1e-300)
        result = run_command(config)
        assert result.exit_code == EXIT_FAILED
        replay = result.report["replay"]
        assert replay["check"] == "poisson-action torus"
        assert replay["sample_index"] in (0, 1)

    def test_sample_index_replays_one_sample(self, manager):
        config = build(manager, "verify", suite="poisson-action", graph="torus", sample_index=1)
        check = run_command(config).report["checks"][0]
        assert check["samples"] == 1
        assert check["worst_sample"] == 1

    def test_leaf_submanifold(self, manager):
        result = run_command(build(manager, "verify", suite="leaf-submanifold", graph="loop", samples=2))
        assert result.exit_code == EXIT_OK

    def test_leaf_submanifold_replays_one_sample(self, manager):
        config = build(manager, "verify", suite="leaf-submanifold", graph="loop", sample_index=3)
        check = run_command(config).report["checks"][0]
        assert check["samples"] == 1
        assert check["worst_sample"] == 3

    def test_jacobi_reports_negative_control(self, manager):
        result = run_command(build(manager, "verify", suite="jacobi", graph="double", samples=3))
        assert result.exit_code == EXIT_OK
        control = next(check for check in result.report["checks"] if check.get("control"))
        assert control["name"] == "jacobi negative-control double"
        assert control["tolerance"] == 1e-3
        assert control["residual"] > 1e-3
        assert control["passed"] is True

    def test_leaf_submanifold_refuses_torus(self, manager):
        result = run_command(build(manager, "verify", suite="leaf-submanifold", graph="torus", samples=1))
        assert result.report["error"] == "cilium-in-face"

    def test_invalid_run_config(self, manager):
        result = run_command(build(manager, "verify", samples=0))
        assert result.exit_code == EXIT_USAGE

    def test_relations(self, manager):
        result = run_command(build(manager, "ruijsenaars", suite="relations", action="relations", samples=1))
        assert result.exit_code == EXIT_OK

    def test_flow_table(self, manager):
        result = run_command(build(manager, "ruijsenaars", suite="flow", action="flow", steps=3))
        assert result.exit_code == EXIT_OK
        assert len(result.table) == 4

    def test_flow_checks_use_their_own_tolerances(self, manager):
        result = run_command(build(manager, "ruijsenaars", suite="flow", action="flow", steps=50, k=3))
        tolerances = {check["name"]: check["tolerance"] for check in result.report["checks"]}
        assert tolerances == {
            "trB-constant": 0.0,
            "mu-spectrum-drift": 1e-8,
            "det-A-drift": 1e-10,
            "flows-commute": 1e-10,
            "one-parameter-group": 1e-10,
        }

    def test_flow_tol_overrides_every_flow_check(self, manager):
        config = build(manager, "ruijsenaars", suite="flow", action="flow", steps=2, tolerance=1e-6)
        for name in ("flow-commute", "flow-group", "det-A-drift", "mu-drift"):
            assert config.tolerance(name) == 1e-6
        assert config.tolerance("jacobi") == 1e-8

    def test_detb_and_hamiltonian(self, manager):
        for action in ("detb", "hamiltonian"):
            result = run_command(build(manager, "ruijsenaars", suite=action, action=action, samples=2))
            assert result.exit_code == EXIT_OK, action

    def test_graph_move(self, manager):
        result = run_command(build(manager, "graph", action="move", name="double", move="contract:a:0"))
        assert result.report["vertex_origin"] == [0]
        assert result.report["surface"] == [{"V": 1, "E": 1, "b": 2, "chi": 0, "genus": 0}]

    def test_graph_move_needs_move(self, manager):
        assert run_command(build(manager, "graph", action="move", name="double")).exit_code == EXIT_USAGE
