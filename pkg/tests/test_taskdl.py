#!/usr/bin/env python3
"""
Tests for the taskdl language: expressions, parsing, diagnostics and
canonical serialization
"""
import math

import pytest

from taskenv.errors import EvaluationError, TaskDLError
from taskenv.seeding import NoiseStreams
from taskenv.taskdl import (
    check,
    evaluate,
    format_number,
    parse,
    parse_clauses,
    parse_expression,
    parse_goal,
    parse_rule,
    serialize,
)
from taskenv.tasks import (
    FAILURE,
    Communication,
    Conjunction,
    Disjunction,
    Negation,
    SerialProblem,
)
from taskenv.world import INF, Interval

LAB_WORLD = """\
world lab
  var time = 0 unit s
  var energy = 10 in [0, 10] unit J
  var x = 0 in [-10, 10] unit m
  var v = 0 unit "m/s"
  var u = 0 in [-1, 1]
  dyn time <- time + delta
  dyn energy <- energy - delta * abs(u)
  dyn x <- x + delta * v
  dyn v <- v + delta * u
  rel energy >= 0

sim delta 0.1 seed 3

body robot
  sensor x noise 0.1 resolution 0.5
  sensor v latency 2
  actuator u
"""

TASK_HEAD = """
task t
  body robot
  deadline 20
  energy energy > 0
"""

# Task and variant bodies appended to the lab world for round-trip checks
ROUND_TRIP_SNIPPETS = [
    "  goal x > 5\n",
    "  goal x >= 5, v < 0.5\n",
    "  goal x in [4, 6) hold 1\n",
    "  goal x ~ 5 +- 0.25 window 2 8\n",
    "  goal x > 5\n  fail energy < 1\n",
    "  fail x < -5 window 0 10\n",
    "  mode reinforcement\n  goal x > 1\n",
    '  mode hints\n  hint "drive \\"forward\\""\n  goal x > 1\n',
    "  start x = -2\n  require x < 0\n  goal x > 1\n",
    "  sensor x noise 0.3\n  actuator u resolution 0.25 latency 1\n  goal x > 1\n",
    "  after v <- v * (1 - delta * 0.5)\n  goal x > 1\n",
    '  tag level = 2\n  tag kind = "easy"\n  goal x > 1\n',
    "  all\n    atom\n      goal x > 1\n    end\n"
    "    atom\n      goal v > 0.1\n    end\n  end\n",
    "  any\n    atom\n      goal x > 8\n    end\n"
    "    atom\n      goal x < -8\n    end\n  end\n",
    "  not\n    atom\n      goal x > 1\n      fail v > 3\n    end\n  end\n",
    "  then\n    stage 5\n      goal x > 1\n    end\n"
    "    stage 5\n      require x > 1\n      goal x > 2 hold 0.5\n    end\n  end\n",
    "  not\n    then\n      stage 3\n        goal x > 1\n      end\n    end\n  end\n",
    "  all\n    any\n      atom\n        goal x > 1\n      end\n"
    "      atom\n        goal v > 1\n      end\n    end\n"
    "    not\n      atom\n        goal energy < 2\n      end\n    end\n  end\n",
    "  goal x > 1\n\nvariant wobble\n  base t\n  count 4\n  seed 9\n"
    "  param k = gauss(1, 0.1)\n  after v <- v * (1 - delta * k)\n",
    "  goal x > 1\n\nvariant shifted\n  base t\n  start x + uniform(-1, 1)\n"
    "  deadline * uniform(0.5, 1.5)\n  energy * 0.5\n",
    "  goal x > 1\n\nvariant blurred\n  base t\n  sensor x noise 0.2 latency 3\n"
    "  goal v < 0.1\n  fail energy < 1\n",
    "  goal x > 1e-3, energy > 0.125\n",
]


def lab(snippet: str) -> str:
    return LAB_WORLD + TASK_HEAD + snippet


class TestExpressions:
    """Test cases for expression parsing and evaluation"""

    @pytest.mark.parametrize(
        "text,state,expected",
        [
            ("1 + 2 * 3", {}, 7.0),
            ("(1 + 2) * 3", {}, 9.0),
            ("2 ^ 3 ^ 2", {}, 512.0),
            ("-x ^ 2", {"x": 3}, -9.0),
            ("x / 4 - 1", {"x": 8}, 1.0),
            ("max(0, x, 2)", {"x": 1}, 2.0),
            ("min(x, 2)", {"x": 1}, 1.0),
            ("sqrt(x) + abs(-3)", {"x": 16}, 7.0),
            ("if(x > 0, 1, -1)", {"x": -2}, -1.0),
            ("delta * 10", {}, 0.5),
            ("exp(0) + log(1) + sin(0) + cos(0)", {}, 2.0),
        ],
    )
    def test_evaluate(self, text, state, expected):
        """Test arithmetic, precedence and functions"""
        assert evaluate(parse_expression(text), state, 0.05) == pytest.approx(expected)

    @pytest.mark.parametrize(
        "text,state,expected",
        [
            ("x > 1 and x < 3", {"x": 2}, True),
            ("x > 1 and x < 3", {"x": 3}, False),
            ("not x > 1 or x == 5", {"x": 5}, True),
            ("x != 2", {"x": 2}, False),
        ],
    )
    def test_boolean(self, text, state, expected):
        """Test comparisons and logical operators"""
        assert parse_expression(text).evaluate(state, 0.1, None) is expected

    @pytest.mark.parametrize(
        "text,state",
        [
            ("1 / x", {"x": 0}),
            ("sqrt(x)", {"x": -1}),
            ("log(x)", {"x": 0}),
            ("x ^ 0.5", {"x": -4}),
            ("exp(x)", {"x": 1e6}),
            ("y + 1", {"x": 0}),
        ],
    )
    def test_evaluation_errors(self, text, state):
        """Test that invalid arithmetic raises EvaluationError"""
        with pytest.raises(EvaluationError):
            evaluate(parse_expression(text), state, 0.1)

    @pytest.mark.parametrize(
        "text",
        [
            "a + b * c",
            "(a + b) * c",
            "a - (b - c)",
            "a / (b * c)",
            "-(a + b)",
            "(a ^ b) ^ c",
            "a ^ -b",
            "-a ^ b",
            "not (a > b and b > c)",
            "a > b or b > c and c > a",
            "if(a > 0, max(a, b, c), -(3))",
            "gauss(0.1) + uniform(-1, 1)",
        ],
    )
    def test_render_parses_back(self, text):
        """Test that rendering keeps the tree"""
        expr = parse_expression(text)
        assert parse_expression(str(expr)) == expr

    def test_unicode_aliases(self):
        """Test that typographic operators are accepted"""
        assert parse_expression("x × δ − 1") == parse_expression("x * delta - 1")
        assert parse_expression("x ≤ 2") == parse_expression("x <= 2")

    def test_variables_and_flags(self):
        """Test the structural queries on expression trees"""
        expr = parse_expression("x + delta * max(y, 0) + gauss(0.1)")
        assert expr.variables() == frozenset({"x", "y"})
        assert expr.uses_delta()
        assert expr.has_noise()
        assert not expr.is_smooth()
        assert parse_expression("x * sin(y)").is_smooth()

    def test_noise_needs_streams(self):
        """Test that noise terms draw from the stream of their channel"""
        rule = parse_rule("x <- x + gauss(1)")
        with pytest.raises(EvaluationError):
            evaluate(rule.expression, {"x": 0}, 0.1)
        first = evaluate(rule.expression, {"x": 0}, 0.1, NoiseStreams(5))
        second = evaluate(rule.expression, {"x": 0}, 0.1, NoiseStreams(5))
        assert first == second
        assert first != evaluate(rule.expression, {"x": 0}, 0.1, NoiseStreams(6))

    def test_substitute(self):
        """Test replacing parameters by literals"""
        expr = parse_expression("v * (1 - delta * k)").substitute({"k": 0.5})
        assert str(expr) == "v * (1 - delta * 0.5)"

    @pytest.mark.parametrize(
        "value,text",
        [
            (2.0, "2"),
            (0.1, "0.1"),
            (-3.0, "-3"),
            (INF, "inf"),
            (1e-20, "1e-20"),
            (1e20, "1e+20"),
        ],
    )
    def test_format_number(self, value, text):
        """Test the shortest exact number rendering"""
        assert format_number(value) == text


class TestParse:
    """Test cases for document parsing"""

    def test_driving_sample(self, driving_doc):
        """Test the shipped driving document"""
        assert driving_doc.world.name == "driving"
        assert driving_doc.world.names == (
            "energy",
            "mass",
            "position",
            "power",
            "time",
            "velocity",
        )
        assert driving_doc.world.variable("velocity").unit == "m/s"
        assert driving_doc.sim.delta == 0.01
        assert driving_doc.task_names == ("drive", "drive_by_5")
        assert [v.name for v in driving_doc.variants] == [
            "friction",
            "laggy",
            "noisy",
            "scattered",
            "stop",
        ]
        drive = driving_doc.task("drive")
        assert drive.deadline == 20
        assert drive.energy.variable == "energy"
        assert drive.hints == ("pass position 10 before the energy runs out",)
        goal = drive.problem.goals[0]
        assert goal.target.bounds["position"] == Interval(10, INF, lower_closed=False)

    def test_goal_options(self):
        """Test hold, window and polarity on goal lines"""
        goal = parse_goal("goal x in [1, 2) hold 0.5 window 1 4")
        assert goal.target.bounds["x"] == Interval(1, 2, upper_closed=False)
        assert goal.hold == 0.5
        assert goal.window == (1.0, 4.0)
        assert parse_goal("fail x > 3").polarity == FAILURE

    def test_tolerance_clause(self):
        """Test the centre plus-minus tolerance form"""
        target = parse_clauses("x ~ 5 +- 0.5, y < 1")
        assert target.bounds["x"] == Interval.closed(4.5, 5.5)
        assert target.bounds["y"] == Interval(-INF, 1, upper_closed=False)

    def test_compound_problem(self):
        """Test nested problem blocks"""
        doc = parse(lab(ROUND_TRIP_SNIPPETS[17]))
        problem = doc.task("t").problem
        assert isinstance(problem, Conjunction)
        assert isinstance(problem.children[0], Disjunction)
        assert isinstance(problem.children[1], Negation)

    def test_serial_problem(self):
        """Test stages with their deadlines and requirements"""
        problem = parse(lab(ROUND_TRIP_SNIPPETS[15])).task("t").problem
        assert isinstance(problem, SerialProblem)
        assert [s.deadline for s in problem.stages] == [5.0, 5.0]
        bound = problem.stages[1].initial.bounds["x"]
        assert bound == Interval(1, INF, lower_closed=False)

    def test_modes_and_hints(self):
        """Test communication modes"""
        doc = parse(lab(ROUND_TRIP_SNIPPETS[7]))
        task = doc.task("t")
        assert task.communication == Communication.HINTS
        assert task.hints == ('drive "forward"',)
        plain = parse(lab(ROUND_TRIP_SNIPPETS[0])).task("t")
        assert plain.communication == Communication.FULL

    def test_variant_spec(self):
        """Test variant blocks"""
        doc = parse(lab(ROUND_TRIP_SNIPPETS[19]))
        spec = doc.variant("shifted")
        assert spec.base == "t"
        assert spec.start["x"].mode == "offset"
        assert spec.start["x"].value.kind == "uniform"
        assert spec.deadline_scale.params == (0.5, 1.5)
        assert spec.energy_scale.params == (0.5,)

    def test_bytes_and_bom(self):
        """Test UTF-8 input with a byte-order mark"""
        text = ("\ufeff" + lab(ROUND_TRIP_SNIPPETS[0])).encode("utf-8")
        assert parse(text).task_names == ("t",)


class TestDiagnostics:
    """Test cases for parse errors"""

    def test_unknown_variable_position(self):
        """Test that diagnostics carry line and column"""
        text = lab("  goal y > 1\n")
        diagnostics = check(text)
        line = text.splitlines().index("  goal y > 1") + 1
        assert len(diagnostics) == 1
        assert (diagnostics[0].line, diagnostics[0].column) == (line, 8)
        assert "unknown variable 'y'" in diagnostics[0].message

    def test_all_errors_reported(self):
        """Test that parsing continues after an error"""
        text = lab("  goal x > 1\n  wiggle 3\n  goal q > 1\n  deadline 5\n")
        messages = [d.message for d in check(text)]
        assert len(messages) == 3
        assert any("unknown task line 'wiggle'" in m for m in messages)
        assert any("unknown variable 'q'" in m for m in messages)
        assert any("duplicate 'deadline'" in m for m in messages)

    def test_error_carries_source(self):
        """Test that TaskDLError prefixes the source name"""
        with pytest.raises(TaskDLError) as info:
            parse("world w\n  var x = 0\n  dyn x <- x +\n", source="bad.taskdl")
        assert str(info.value).startswith("bad.taskdl:3:")
        assert info.value.source == "bad.taskdl"

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("", "no world block"),
            ("planet p\n", "expected 'world'"),
            ("world w\n  var x = 0\n  var x = 1\n", "duplicate variable 'x'"),
            ("world w\n  var x = 5 in [0, 1]\n", "outside its domain"),
            ("world w\n  var delta = 0\n", "reserved"),
            ('world w\n  var x = 0 unit "m\n', "unterminated string"),
            ("world w\n  var x = 0 $\n", "unexpected character"),
            ("world w\n  var x = 0\n  dyn x <- x > 1\n", ""),
            ("world w\n  var x = 0\nsim delta 0\n", "delta must be a positive"),
            ("world w\n  var x = 0\nbody b\n  actuator x\n", "bounded domain"),
            (lab("  goal x > 1 hold 2 window 0 1\n"), "Hold duration"),
            (lab("  goal x in [3, 1]\n"), "exceeds"),
            (lab("  all\n    atom\n      goal x > 1\n    end\n"), "not closed"),
            (lab("  goal x > 1\n  end\n"), "'end' without an open block"),
            (
                LAB_WORLD + "\ntask t\n  body robot\n  goal x > 1\n",
                "no 'deadline' line",
            ),
            (lab("  goal x > 1\n\nvariant w\n  base nope\n"), "unknown base task"),
            (lab("  goal x > 1\n\nvariant w\n  base t\n  param x = 1\n"), "shadows"),
        ],
    )
    def test_invalid_documents(self, text, fragment):
        """Test assorted invalid documents"""
        diagnostics = check(text)
        assert diagnostics
        assert any(fragment in d.message for d in diagnostics)

    def test_invalid_utf8(self):
        """Test that undecodable input is a diagnostic, not an exception"""
        diagnostics = check(b"world w\n  var x = 0 unit \xff\n")
        assert "not valid UTF-8" in diagnostics[0].message


class TestSerialize:
    """Test cases for canonical serialization"""

    @pytest.mark.parametrize("snippet", ROUND_TRIP_SNIPPETS)
    def test_round_trip(self, snippet):
        """Test that serialized documents parse back to equal documents"""
        doc = parse(lab(snippet))
        text = serialize(doc)
        again = parse(text)
        assert again == doc
        assert serialize(again) == text

    def test_driving_round_trip(self, driving_doc):
        """Test the sample document survives serialization"""
        assert parse(serialize(driving_doc)) == driving_doc

    def test_canonical_layout(self):
        """Test block order and header comment"""
        text = serialize(parse(lab(ROUND_TRIP_SNIPPETS[0])), header="generated")
        lines = text.splitlines()
        assert lines[0] == "# generated"
        assert lines[2] == "world lab"
        assert "sim delta 0.1 seed 3" in lines
        assert lines.index("body robot") < lines.index("task t")
        assert text.endswith("\n")

    def test_declaration_order_does_not_matter(self):
        """Test that reordered declarations serialize identically"""
        reordered = LAB_WORLD.replace(
            "  var time = 0 unit s\n  var energy = 10 in [0, 10] unit J\n",
            "  var energy = 10 in [0, 10] unit J\n  var time = 0 unit s\n",
        )
        a = serialize(parse(lab(ROUND_TRIP_SNIPPETS[1])))
        b = serialize(parse(reordered + TASK_HEAD + ROUND_TRIP_SNIPPETS[1]))
        assert a == b

    def test_numbers_are_exact(self):
        """Test that awkward floats survive"""
        doc = parse(lab("  goal x > 0.1, v < 0.30000000000000004\n"))
        bounds = parse(serialize(doc)).task("t").problem.goals[0].target.bounds
        assert bounds["v"].upper == 0.30000000000000004
        assert math.isclose(bounds["x"].lower, 0.1)


if __name__ == "__main__":
    pytest.main([__file__])
