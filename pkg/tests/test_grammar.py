import itertools

import pytest

from fetchbot.grammar import (
    DEFAULT_GRAMMAR,
    Alt,
    GrammarError,
    IntentAction,
    Opt,
    Ref,
    Seq,
    Tagged,
    Tok,
    compile_grammar,
    parse_command,
)


@pytest.fixture(scope="module")
def default_grammar():
    return compile_grammar(DEFAULT_GRAMMAR)


class TestCompile:
    def test_two_rule_grammar(self):
        g = compile_grammar("public <cmd> = (bring|fetch|get) [me] [the] <obj>;"
                            "<obj> = medicine|water|cup;")
        assert g.root == "cmd"
        assert set(g.rules) == {"cmd", "obj"}

    def test_header_and_declaration_ignored(self):
        g = compile_grammar("#JSGF V1.0;\ngrammar test;\npublic <a> = hi;")
        assert g.root == "a"

    def test_unresolved_reference(self):
        with pytest.raises(GrammarError, match="undefined <objj>"):
            compile_grammar("public <cmd> = fetch <objj>; <obj> = water;")

    def test_direct_left_recursion(self):
        with pytest.raises(GrammarError, match="left recursion"):
            compile_grammar("public <a> = <a> x;")

    def test_indirect_left_recursion(self):
        with pytest.raises(GrammarError, match="left recursion"):
            compile_grammar("public <a> = <b> x; <b> = [y] <a>;")

    def test_optional_prefix_left_recursion(self):
        # <a> = [x] <a>: the reference is leftmost when the optional is skipped
        with pytest.raises(GrammarError, match="left recursion"):
            compile_grammar("public <a> = [x] <a> z;")

    def test_right_recursion_allowed(self):
        g = compile_grammar("public <a> = x <a> | x;")
        assert parse_command(g, "x x x") is None  # no intent tags, but parses structurally

    def test_needs_exactly_one_public(self):
        with pytest.raises(GrammarError, match="exactly one public"):
            compile_grammar("<a> = x;")
        with pytest.raises(GrammarError, match="exactly one public"):
            compile_grammar("public <a> = x; public <b> = y;")

    def test_syntax_error_carries_location(self):
        with pytest.raises(GrammarError) as err:
            compile_grammar("public <a> = (x;")
        assert err.value.line is not None

    def test_duplicate_rule(self):
        with pytest.raises(GrammarError, match="duplicate"):
            compile_grammar("public <a> = x; <a> = y;")


class TestParse:
    def test_fetch_water(self, default_grammar):
        intent = parse_command(default_grammar, "fetch the water")
        assert intent.action is IntentAction.FETCH
        assert intent.object == "water"

    def test_case_and_optionals(self, default_grammar):
        intent = parse_command(default_grammar, "BRING ME MEDICINE")
        assert intent.action is IntentAction.FETCH
        assert intent.object == "medicine"

    def test_no_parse(self, default_grammar):
        assert parse_command(default_grammar, "dance for me") is None

    def test_partial_sentence_rejected(self, default_grammar):
        assert parse_command(default_grammar, "fetch the water now") is None
        assert parse_command(default_grammar, "fetch the") is None

    def test_stop_and_hello(self, default_grammar):
        assert parse_command(default_grammar, "stop").action is IntentAction.STOP
        assert parse_command(default_grammar, "hello robot").action is IntentAction.HELLO
        assert parse_command(default_grammar, "hello").object is None

    def test_empty_utterance(self, default_grammar):
        assert parse_command(default_grammar, "   ") is None

    def test_longest_match_preferred(self):
        # both alternatives match a prefix; the longer one must win
        g = compile_grammar("public <c> = go {action=hello} | go home {action=stop};")
        assert parse_command(g, "go home").action is IntentAction.STOP
        assert parse_command(g, "go").action is IntentAction.HELLO

    def test_captured_text_value(self):
        g = compile_grammar("public <c> = fetch {action} <obj> {object}; <obj> = the red cup;")
        intent = parse_command(g, "fetch the red cup")
        assert intent.object == "the red cup"


def enumerate_language(grammar, max_tokens):
    """Brute-force expansion oracle over the rule graph."""

    def expand(node, depth=0):
        if depth > max_tokens + 2:
            return set()
        if isinstance(node, Tok):
            return {(node.text,)}
        if isinstance(node, Ref):
            return expand(grammar.rules[node.name], depth + 1)
        if isinstance(node, Tagged):
            return expand(node.inner, depth)
        if isinstance(node, Opt):
            return {()} | expand(node.inner, depth)
        if isinstance(node, Alt):
            out = set()
            for b in node.branches:
                out |= expand(b, depth)
            return out
        if isinstance(node, Seq):
            fronts = {()}
            for item in node.items:
                pieces = expand(item, depth)
                fronts = {f + p for f in fronts for p in pieces if len(f + p) <= max_tokens}
            return fronts
        raise TypeError(node)

    return {s for s in expand(grammar.rules[grammar.root]) if 0 < len(s) <= max_tokens}


def test_parser_accepts_exactly_the_grammar_language(default_grammar):
    """Exhaustive agreement with the expansion oracle over all sentences of
    up to 5 tokens drawn from the grammar's vocabulary."""
    language = enumerate_language(default_grammar, 5)
    assert ("fetch", "the", "water") in language

    vocab = sorted({tok for s in language for tok in s})
    assert len(vocab) <= 12
    checked = 0
    for length in range(1, 6):
        for sentence in itertools.product(vocab, repeat=length):
            expected = sentence in language
            got = parse_command(default_grammar, " ".join(sentence)) is not None
            assert got == expected, sentence
            checked += 1
    assert checked == sum(len(vocab) ** k for k in range(1, 6))
