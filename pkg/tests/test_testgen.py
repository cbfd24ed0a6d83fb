"""
Scheduling graph, guard solver, suite generation and suite file tests
"""
import json
import logging

import pytest
from hypothesis import given, settings, strategies as st

from config import GENERATION_SOFT_BOUND_S
from engine.evaluator import eval_expr
from language.parser import parse_expression
from models.specification import TypeExpr
from models.test_suite import TestCase, TestStep, TestSuite
from models.values import EnumLit
from testgen.generator import GenerationBudget, check_build_time, generate, measure_builds, spec_hash
from testgen.scheduling import (
    VIRTUAL_ROOT, SchedNode, SchedulingError, SchedulingGraph, build_scheduling_graph, enumerate_paths,
)
from testgen.solver import UNSAT, Domain, SolverEffortExceeded, UnsupportedTerm, domain_for, solve_guard
from testgen.suite_io import load_suite, read_suite, serialize_suite, write_suite
from tests.conftest import load_spec


def stimuli(case: TestCase):
    return [step.stimulation for step in case.steps]


class TestScheduling:
    """Scheduling graph construction"""

    def test_rover_graph(self, rover_spec, rover_consts):
        graph = build_scheduling_graph(rover_spec, rover_consts)
        assert graph.root == VIRTUAL_ROOT
        assert len(graph.instances) == 18
        assert graph.successors(VIRTUAL_ROOT) == [
            "Approach1", "Approach2", "Approach3",
            "ApproachHandler1", "ApproachHandler2", "ApproachHandler3",
            "MishapHandler1", "MishapHandler2", "MishapHandler3",
            "PickupHandler", "ReturnHandler", "EmergentPropertyChecker",
        ]
        assert graph.successors("Approach2") == ["Pickup2"]
        assert graph.successors("Pickup2") == ["Return2"]
        assert "Return2" in graph.sinks
        assert graph.validate() == (True, "")

    def test_rover_paths(self, rover_spec, rover_consts):
        paths = enumerate_paths(build_scheduling_graph(rover_spec, rover_consts))
        assert len(paths) == 12
        assert paths[0] == ["Approach1", "Pickup1", "Return1"]
        assert ["EmergentPropertyChecker"] in paths
        assert all(VIRTUAL_ROOT not in p for p in paths)

    def test_path_bound(self, rover_spec, rover_consts):
        graph = build_scheduling_graph(rover_spec, rover_consts)
        assert len(enumerate_paths(graph, 5)) == 5

    def test_replication_follows_constants(self, rover_spec, rover_consts):
        consts = dict(rover_consts, n=2)
        graph = build_scheduling_graph(rover_spec, consts)
        assert len(graph.instances) == 13
        assert "Approach3" not in graph.nodes

    def test_single_declared_instance_is_the_root(self, figure_spec):
        graph = build_scheduling_graph(figure_spec, {})
        assert graph.root == "figure"
        assert enumerate_paths(graph) == [["figure"]]

    def test_cycle_is_reported(self):
        graph = SchedulingGraph()
        for name in ("a", "b"):
            graph.add_node(SchedNode(name, "S"))
        graph.add_edge("a", "b")
        graph.add_edge("b", "a")
        graph.root = "a"
        assert graph.validate() == (False, "cycle through 'a'")
        with pytest.raises(SchedulingError):
            enumerate_paths(graph)

    def test_unknown_edge_endpoint(self):
        graph = SchedulingGraph()
        graph.add_node(SchedNode("a", "S"))
        with pytest.raises(SchedulingError):
            graph.add_edge("a", "missing")

    def test_to_dict(self, figure_spec):
        assert build_scheduling_graph(figure_spec, {}).to_dict() == {
            'root': 'figure', 'nodes': ['figure'], 'edges': [], 'sinks': ['figure']}


def graph_of(count: int, edges) -> SchedulingGraph:
    graph = SchedulingGraph()
    for k in range(count):
        graph.add_node(SchedNode(f"sc{k}", "S"))
    for src, dst in edges:
        graph.add_edge(f"sc{src}", f"sc{dst}")
    graph.root = "sc0"
    return graph


@st.composite
def rooted_dags(draw):
    """Graphs over sc0..sc{n-1} with forward edges only, every node reachable from sc0"""
    count = draw(st.integers(min_value=1, max_value=12))
    pairs = [(i, j) for j in range(1, count) for i in range(j)]
    chosen = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [pair for pair, keep in zip(pairs, chosen) if keep]
    fed = {j for _, j in edges}
    edges += [(0, j) for j in range(1, count) if j not in fed]
    return count, edges


def brute_force_paths(count: int, edges) -> set:
    """Root-to-sink paths as increasing index sequences starting at 0"""
    successors = {k: {j for i, j in edges if i == k} for k in range(count)}
    found = set()
    for mask in range(1 << (count - 1)):
        path = [0] + [k for k in range(1, count) if mask >> (k - 1) & 1]
        linked = all(b in successors[a] for a, b in zip(path, path[1:]))
        if linked and not successors[path[-1]]:
            found.add(tuple(f"sc{k}" for k in path))
    return found


class TestPathEnumeration:
    """Root-to-sink paths"""

    def test_branching_graph(self):
        graph = graph_of(6, [(0, 1), (0, 2), (0, 3), (1, 4), (1, 2), (2, 4), (3, 5)])
        assert graph.validate() == (True, "")
        assert graph.sinks == ["sc4", "sc5"]
        assert enumerate_paths(graph) == [
            ["sc0", "sc1", "sc4"],
            ["sc0", "sc1", "sc2", "sc4"],
            ["sc0", "sc2", "sc4"],
            ["sc0", "sc3", "sc5"],
        ]

    def test_chain(self):
        assert enumerate_paths(graph_of(3, [(0, 1), (1, 2)])) == [["sc0", "sc1", "sc2"]]

    @settings(max_examples=150, deadline=None)
    @given(rooted_dags())
    def test_matches_brute_force(self, dag):
        count, edges = dag
        paths = enumerate_paths(graph_of(count, edges))
        assert len(paths) == len({tuple(p) for p in paths})
        assert {tuple(p) for p in paths} == brute_force_paths(count, edges)


class TestSolver:
    """Least witnesses of guards"""

    def test_bounds(self):
        assert solve_guard(parse_expression("x > 3 && x < 6"), {"x": Domain("int")}) == {"x": 4}

    def test_empty_interval_is_unsat(self):
        assert solve_guard(parse_expression("x > 3 && x < 3"), {"x": Domain("int")}) is UNSAT
        assert not UNSAT

    def test_equality_propagates(self):
        result = solve_guard(parse_expression("z = 0 && x = p0"), {"z": Domain("int"), "x": Domain("int")},
                             fixed={"p0": 42})
        assert result == {"z": 0, "x": 42}

    def test_enum_membership(self, rover_spec):
        domains = {"s": domain_for(TypeExpr.named("Status"), rover_spec)}
        result = solve_guard(parse_expression("s in {atDst, stuck}"), domains, spec=rover_spec)
        assert result == {"s": EnumLit("Status", "stuck", 2)}

    def test_nat_domain_starts_at_zero(self):
        assert solve_guard(parse_expression("x < 2"), {"x": Domain("nat", lo=0)}) == {"x": 0}

    def test_temporal_operator_is_unsupported(self):
        with pytest.raises(UnsupportedTerm):
            solve_guard(parse_expression("X x = 1"), {"x": Domain("int")})

    def test_unknown_symbol_is_unsupported(self):
        with pytest.raises(UnsupportedTerm):
            solve_guard(parse_expression("x = w"), {"x": Domain("int")})

    def test_effort_bound(self):
        with pytest.raises(SolverEffortExceeded):
            solve_guard(parse_expression("x * x = 50"), {"x": Domain("int")}, effort=10)


class TestGenerator:
    """Suite generation"""

    def test_figure_cases(self, figure_spec):
        suite = generate(figure_spec, {})
        assert suite.name == "suite"
        assert [c.name for c in suite.cases] == ["suite-1", "suite-2"]
        assert sorted((stimuli(c) for c in suite.cases), key=len) == [
            [{"z": 1, "x": 17, "p0": 42}],
            [{"z": 0, "x": 42, "p0": 42}, {"z": 42, "x": 1, "p0": 42}],
        ]
        assert not suite.incomplete
        assert suite.unsat == []

    def test_step_provenance(self, figure_spec):
        suite = generate(figure_spec, {}, embed_conditions=True)
        longest = max(suite.cases, key=len)
        assert [s.name for s in longest.steps] == ["figure-1", "figure-2"]
        assert all(s.instance == "figure" for s in longest.steps)
        assert all(s.guard for s in longest.steps)
        assert longest.steps[0].condition
        assert longest.path == ["figure"]

    def test_generation_is_deterministic(self, figure_spec):
        assert generate(figure_spec, {}, seed=3) == generate(figure_spec, {}, seed=3)

    def test_case_budget_marks_the_suite_incomplete(self, figure_spec):
        suite = generate(figure_spec, {}, GenerationBudget(max_cases=1))
        assert len(suite.cases) == 1
        assert suite.incomplete

    def test_rover_has_no_stimulus_instances(self, rover_spec, rover_consts):
        suite = generate(rover_spec, rover_consts)
        assert suite.name == "RoverSalvage"
        assert suite.cases == []

    def test_spec_hash(self, figure_spec, rover_spec):
        assert len(spec_hash(figure_spec)) == 16
        assert spec_hash(figure_spec) != spec_hash(rover_spec)
        assert generate(figure_spec, {}).spec_hash == spec_hash(figure_spec)

    def test_contradictory_guard_is_reported(self):
        spec = load_spec("elementary scenario S(x : int)\n  spec x > 0 && x < 0;\nend scenario\n"
                         "instance s of scenario S();\n")
        suite = generate(spec, {})
        assert suite.cases == []
        assert [(u['instance'], u['transition'], u['reason']) for u in suite.unsat] == [
            ("s", "s0 -> accept", "UNSAT")]

    def test_precondition_opens_every_case(self):
        spec = load_spec("elementary scenario S(x : int, y : int)\n  precondition x = 3;\n"
                         "  spec y > x;\nend scenario\ninstance s of scenario S();\n")
        suite = generate(spec, {})
        assert suite.cases
        assert all(case.steps[0].stimulation["x"] == 3 for case in suite.cases)
        assert all(len(case.steps) >= 2 for case in suite.cases)

    @pytest.mark.parametrize("source", [
        None,
        "elementary scenario S(x : int, y : int)\n  precondition x = 3;\n"
        "  spec y > x && X(y < x || x = 0);\nend scenario\ninstance s of scenario S();\n",
        "elementary scenario S(x : int, b : bool)\n"
        "  spec (b && x >= 5) || (!b && X(x = -2));\nend scenario\ninstance s of scenario S();\n",
    ])
    def test_witnesses_satisfy_their_guards(self, source, figure_spec):
        spec = figure_spec if source is None else load_spec(source)
        suite = generate(spec, {})
        assert suite.cases
        for case in suite.cases:
            for step in case.steps:
                guard = parse_expression(step.guard)
                assert eval_expr(guard, {}, {}, dict(step.stimulation), spec) is True, step.guard


class TestBuildTimings:
    """Automaton build time per scheduled instance"""

    def test_one_entry_per_instance(self, figure_spec):
        timings = measure_builds(figure_spec, {})
        assert list(timings) == ["figure"]
        assert timings["figure"] >= 0.0

    def test_soft_bound_warning(self, figure_spec, caplog):
        with caplog.at_level(logging.WARNING, logger="testgen.generator"):
            measure_builds(figure_spec, {}, soft_bound=0.0)
        assert any("figure: automaton construction took" in r.getMessage() for r in caplog.records)
        assert check_build_time("figure", 0.5, soft_bound=1.0)
        assert not check_build_time("figure", 1.5, soft_bound=1.0)

    @pytest.mark.slow
    def test_rover_builds_stay_within_the_soft_bound(self, rover_spec, rover_consts):
        timings = measure_builds(rover_spec, rover_consts)
        assert len(timings) == 18
        assert "ReturnHandler" in timings
        slow = {name: seconds for name, seconds in timings.items() if seconds > GENERATION_SOFT_BOUND_S}
        assert slow == {}


class TestSuiteFiles:
    """Reading and writing suite documents"""

    def test_init_suite(self, init_suite):
        assert init_suite.name == "RoverInit"
        assert [c.name for c in init_suite.cases] == ["RoverInit-1"]
        steps = init_suite.cases[0].steps
        assert len(steps) == 3
        assert steps[2].stimulation == {"stim.simulation_start": True}
        assert steps[0].expected_observations == {"condition": "items placed"}

    def test_missing_case_name(self):
        result = load_suite(json.dumps({"name": "s", "cases": [{"steps": []}]}))
        assert [d.message for d in result] == ["$.cases[0].name: missing or not a string"]

    def test_bad_step(self):
        doc = {"cases": [{"name": "c", "steps": [{"name": "s", "stimulation": [1]}]}]}
        result = load_suite(json.dumps(doc))
        assert [d.message for d in result] == ["$.cases[0].steps[0].stimulation: must be an object"]

    def test_invalid_json(self):
        result = load_suite("{", "broken.json")
        assert len(result) == 1
        assert result[0].message.startswith("$: invalid JSON: ")
        assert result[0].span.file == "broken.json"

    def test_step_list_becomes_one_case(self):
        suite = load_suite(json.dumps([{"name": "a", "stimulation": {"x": 1}}]), "steps.json")
        assert suite.name == "steps"
        assert suite.cases[0].name == "steps"
        assert suite.cases[0].steps == [TestStep("a", {"x": 1})]

    def test_single_step_is_wrapped(self):
        suite = load_suite(json.dumps({"name": "only", "stimulation": {}}))
        assert [c.name for c in suite.cases] == ["only"]
        assert len(suite.cases[0]) == 1

    def test_write_and_read(self, tmp_path, figure_spec):
        suite = generate(figure_spec, {}, seed=7)
        path = tmp_path / "out" / "suite.json"
        assert write_suite(suite, str(path))
        loaded, diagnostics = read_suite(str(path))
        assert diagnostics == []
        assert loaded == suite
        assert loaded.seed == 7
        assert path.read_text(encoding="utf-8") == serialize_suite(suite)

    def test_missing_file(self, tmp_path):
        suite, diagnostics = read_suite(str(tmp_path / "absent.json"))
        assert suite is None
        assert len(diagnostics) == 1

    def test_metadata_round_trip(self):
        suite = TestSuite("s", [TestCase("c", [TestStep("a")])], spec_hash="ab", incomplete=True,
                          unsat=[{"instance": "x"}])
        assert TestSuite.from_dict(suite.to_dict()) == suite
