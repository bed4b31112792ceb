
import pytest

from docdialog.errors import (
    MissingSlotError,
    MissingTemplateError,
    UnknownLocaleError,
    UnsupportedFamilyError,
)
from docdialog.graph import NodeRef, build_graph
from docdialog.ingest import DocumentIR, IRNode
from docdialog.prompts import (
    ALL_PATTERNS,
    CONDITION_PATTERNS,
    PATTERN_FAMILY,
    gen_prompt,
    render_template,
    select_pattern,
)
from docdialog.rng import SplitMix64


def ref(doc, node):
    return NodeRef(doc, node)


@pytest.fixture()
def valueless_table_graph():
    doc = DocumentIR("d", "T", IRNode("root", "section", "T", children=[
        IRNode("t", "table", "fees", children=[
            IRNode("o", "object", "permit", children=[
                IRNode("a", "attribute", "amount"),
            ]),
        ]),
    ]))
    graph = build_graph([doc], {"d": "dom"})
    graph.mark_super_leaves()
    return graph


def test_ordinary_always_span(demo_graph):
    goal = ref("permit-guide", "N1a")
    for seed in range(200):
        assert select_pattern(demo_graph, goal, SplitMix64(seed)) == "SPAN"


def test_valueless_table_never_value_lookup(valueless_table_graph):
    goal = ref("d", "t")
    seen = set()
    for seed in range(10_000):
        seen.add(select_pattern(valueless_table_graph, goal, SplitMix64(seed)))
    assert seen == {"TABLE_GENERAL", "OBJECT_GENERAL"}


def test_condition_group_draws_all_four(demo_graph):
    goal = ref("permit-guide", "N2")
    seen = {select_pattern(demo_graph, goal, SplitMix64(seed)) for seed in range(500)}
    assert seen == set(CONDITION_PATTERNS)


def test_section_goal_unsupported(demo_graph):
    with pytest.raises(UnsupportedFamilyError):
        select_pattern(demo_graph, ref("permit-guide", "N1"), SplitMix64(0))


def test_value_lookup_exact_guideline(demo_graph):
    goal = ref("permit-guide", "N4")
    for seed in range(2000):
        rng = SplitMix64(seed)
        prompt = gen_prompt(demo_graph, goal, rng)
        if prompt.pattern == "VALUE_LOOKUP" and prompt.slots["value"].text == "A4":
            assert prompt.guideline_text == (
                "write a number of question-answer turns so that the system final "
                "answer is A4 - the paper size of the application form")
            return
    pytest.fail("VALUE_LOOKUP on the A4 value never sampled")


def test_seq_general_template_expansion(demo_graph):
    goal = ref("permit-guide", "N3")
    for seed in range(500):
        prompt = gen_prompt(demo_graph, goal, SplitMix64(seed))
        if prompt.pattern == "SEQ_GENERAL":
            # hand-expanded from the template file with the fixture's title
            expected = 'write a number of question-answer turns where the user asks ' \
                       'how to carry out "Filing an application" and the system ' \
                       'summarizes the whole procedure'
            assert prompt.guideline_text == expected
            assert prompt.slots["sequence"].node == goal
            return
    pytest.fail("SEQ_GENERAL never sampled")


def test_span_guideline_quotes_passage(demo_graph):
    goal = ref("permit-guide", "N6a")
    prompt = gen_prompt(demo_graph, goal, SplitMix64(1))
    assert prompt.pattern == "SPAN"
    node_text = demo_graph.node(goal).text
    assert prompt.guideline_text.endswith(f'a contiguous span of the passage: "{node_text}"')
    assert prompt.slots["passage"].text == node_text


def test_yes_no_carry_verdict_slot(demo_graph):
    goal = ref("permit-guide", "N2")
    seen = {}
    for seed in range(300):
        prompt = gen_prompt(demo_graph, goal, SplitMix64(seed))
        seen[prompt.pattern] = prompt
    for verdict in ("YES", "NO"):
        prompt = seen[verdict]
        assert prompt.slots["verdict"].text == verdict
        assert prompt.slots["verdict"].node is None
        assert f"must be {verdict} after checking" in prompt.guideline_text
    solution_prompt = seen["SOLUTION"]
    assert solution_prompt.slots["solution"].text.startswith("You may apply")
    assert solution_prompt.slots["condition"].node in (
        ref("permit-guide", "N2c1"), ref("permit-guide", "N2c2"))


def test_family_match_and_slot_provenance(demo_graph):
    goals = [r for r, n in demo_graph.nodes.items() if n.is_super_leaf]
    for seed in range(10_000):
        rng = SplitMix64(seed)
        goal = rng.choice(goals)
        prompt = gen_prompt(demo_graph, goal, rng)
        assert PATTERN_FAMILY[prompt.pattern] == demo_graph.node(goal).family
        for slot in prompt.slots.values():
            if slot.node is not None:
                path = demo_graph.get_path(goal, slot.node)
                assert path[0] == goal and path[-1] == slot.node


def test_gen_prompt_deterministic(demo_graph):
    goal = ref("permit-guide", "N4")
    first = gen_prompt(demo_graph, goal, SplitMix64(99))
    second = gen_prompt(demo_graph, goal, SplitMix64(99))
    assert first == second


def test_pattern_coverage_over_corpus(demo_graph):
    goals = [r for r, n in demo_graph.nodes.items() if n.is_super_leaf]
    seen = set()
    for seed in range(1000):
        rng = SplitMix64(seed)
        goal = rng.choice(goals)
        seen.add(gen_prompt(demo_graph, goal, rng).pattern)
    assert seen == set(ALL_PATTERNS)


# -- render_template ---------------------------------------------------------------


def test_zero_slot_template_verbatim(tmp_path):
    (tmp_path / "en.json").write_text('{"PLAIN": "no placeholders here"}', encoding="utf-8")
    assert render_template("PLAIN", {}, template_dir=tmp_path) == "no placeholders here"


def test_missing_slot_raises():
    with pytest.raises(MissingSlotError):
        render_template("VALUE_LOOKUP", {"object": "form", "value": "A4"})


def test_render_is_pure():
    slots = {"object": "form", "attribute": "size", "value": "A4"}
    assert render_template("VALUE_LOOKUP", slots) == render_template("VALUE_LOOKUP", slots)


def test_unknown_locale():
    with pytest.raises(UnknownLocaleError):
        render_template("SPAN", {"passage": "x"}, locale="xx")


def test_chinese_placeholder_file_is_empty():
    with pytest.raises(MissingTemplateError):
        render_template("SPAN", {"passage": "x"}, locale="zh")


def test_braces_in_slot_text_are_literal(tmp_path):
    (tmp_path / "en.json").write_text('{"P": "text: {slot}"}', encoding="utf-8")
    assert render_template("P", {"slot": "{weird} {braces}"}, template_dir=tmp_path) == \
        "text: {weird} {braces}"
