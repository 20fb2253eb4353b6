"""Rule-grammar command parsing.

Commands arrive as text and must match a compiled rule grammar (the
speech front end is out of scope; text stands in for it). The grammar
syntax is a JSGF-style subset:

    #JSGF V1.0;                          header, ignored
    grammar assist;                      declaration, ignored
    public <command> = <hello> | <fetch>;
    <fetch> = (bring | fetch | get) {action=fetch} [me] [the] <object> {object};
    <object> = medicine | water | cup;

`|` separates alternatives, `[...]` is optional, `(...)` groups, `<name>`
references another rule, and `{role}` / `{role=value}` tags the preceding
element with a semantic role. Matching is case-insensitive over
whitespace-separated tokens, prefers longer matches, and breaks ties in
declaration order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class GrammarError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = f" (line {line}, col {col})" if line is not None else ""
        super().__init__(message + loc)
        self.line = line
        self.col = col


class IntentAction(enum.Enum):
    FETCH = "fetch"
    STOP = "stop"
    HELLO = "hello"


@dataclass(frozen=True)
class Intent:
    action: IntentAction
    object: str | None = None


_ACTION_ALIASES = {
    "fetch": IntentAction.FETCH,
    "bring": IntentAction.FETCH,
    "get": IntentAction.FETCH,
    "stop": IntentAction.STOP,
    "halt": IntentAction.STOP,
    "hello": IntentAction.HELLO,
    "hi": IntentAction.HELLO,
}


# --- AST ---

class Tok:
    __slots__ = ("text",)

    def __init__(self, text):
        self.text = text


class Ref:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name


class Seq:
    __slots__ = ("items",)

    def __init__(self, items):
        self.items = items


class Alt:
    __slots__ = ("branches",)

    def __init__(self, branches):
        self.branches = branches


class Opt:
    __slots__ = ("inner",)

    def __init__(self, inner):
        self.inner = inner


class Tagged:
    __slots__ = ("inner", "role", "value")

    def __init__(self, inner, role, value):
        self.inner = inner
        self.role = role
        self.value = value


@dataclass(frozen=True)
class CommandGrammar:
    root: str
    rules: dict


# --- tokenizer ---

_PUNCT = set("=;|()[]<>{}")


def _lex(source: str):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "#":  # header line such as "#JSGF V1.0;"
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch == "<":
            j = source.find(">", i)
            if j < 0:
                raise GrammarError("unterminated rule reference", line, col)
            name = source[i + 1:j].strip()
            if not name:
                raise GrammarError("empty rule reference", line, col)
            tokens.append(("ref", name, line, col))
            col += j - i + 1
            i = j + 1
            continue
        if ch == "{":
            j = source.find("}", i)
            if j < 0:
                raise GrammarError("unterminated tag", line, col)
            tokens.append(("tag", source[i + 1:j].strip(), line, col))
            col += j - i + 1
            i = j + 1
            continue
        if ch in _PUNCT:
            tokens.append((ch, ch, line, col))
            i += 1
            col += 1
            continue
        j = i
        while j < n and not source[j].isspace() and source[j] not in _PUNCT and source[j] != "#":
            j += 1
        tokens.append(("word", source[i:j], line, col))
        col += j - i
        i = j
    return tokens


# --- rule parser ---

class _RuleParser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None, -1, -1)

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise GrammarError(f"expected {kind!r}, found {tok[1]!r}", tok[2], tok[3])
        return tok

    def parse_alternation(self):
        branches = [self.parse_sequence()]
        while self.peek()[0] == "|":
            self.next()
            branches.append(self.parse_sequence())
        return branches[0] if len(branches) == 1 else Alt(branches)

    def parse_sequence(self):
        items = []
        while True:
            kind, value, line, col = self.peek()
            if kind in (None, ";", "|", ")", "]"):
                break
            items.append(self.parse_term())
        if not items:
            kind, value, line, col = self.peek()
            raise GrammarError("empty expansion", line, col)
        return items[0] if len(items) == 1 else Seq(items)

    def parse_term(self):
        kind, value, line, col = self.next()
        if kind == "word":
            node = Tok(value.lower())
        elif kind == "ref":
            node = Ref(value)
        elif kind == "(":
            node = self.parse_alternation()
            self.expect(")")
        elif kind == "[":
            node = Opt(self.parse_alternation())
            self.expect("]")
        else:
            raise GrammarError(f"unexpected {value!r}", line, col)
        while self.peek()[0] == "tag":
            _, tag, tl, tc = self.next()
            if "=" in tag:
                role, _, tagval = tag.partition("=")
                node = Tagged(node, role.strip(), tagval.strip())
            else:
                node = Tagged(node, tag.strip(), None)
        return node


def compile_grammar(source: str) -> CommandGrammar:
    """Compile grammar source: parses rules and validates references,
    the single public root, and the absence of left recursion."""
    tokens = _lex(source)
    parser = _RuleParser(tokens)
    rules: dict[str, object] = {}
    public: list[str] = []

    while parser.peek()[0] is not None:
        kind, value, line, col = parser.peek()
        if kind == "word" and value == "grammar":  # "grammar name;" declaration
            parser.next()
            parser.next()
            parser.expect(";")
            continue
        is_public = False
        if kind == "word" and value == "public":
            is_public = True
            parser.next()
        tok = parser.next()
        if tok[0] != "ref":
            raise GrammarError(f"expected a <rule> name, found {tok[1]!r}", tok[2], tok[3])
        name = tok[1]
        if name in rules:
            raise GrammarError(f"duplicate rule <{name}>", tok[2], tok[3])
        parser.expect("=")
        body = parser.parse_alternation()
        parser.expect(";")
        rules[name] = body
        if is_public:
            public.append(name)

    if len(public) != 1:
        raise GrammarError(f"grammar must declare exactly one public rule, found {len(public)}")
    _validate_refs(rules)
    _reject_left_recursion(rules)
    return CommandGrammar(public[0], rules)


def _iter_refs(node):
    if isinstance(node, Ref):
        yield node.name
    elif isinstance(node, Seq):
        for item in node.items:
            yield from _iter_refs(item)
    elif isinstance(node, Alt):
        for b in node.branches:
            yield from _iter_refs(b)
    elif isinstance(node, (Opt, Tagged)):
        yield from _iter_refs(node.inner)


def _validate_refs(rules):
    for name, body in rules.items():
        for ref in _iter_refs(body):
            if ref not in rules:
                raise GrammarError(f"rule <{name}> references undefined <{ref}>")


def _nullable_map(rules):
    nullable = {name: False for name in rules}

    def node_nullable(node):
        if isinstance(node, Tok):
            return False
        if isinstance(node, Opt):
            return True
        if isinstance(node, Tagged):
            return node_nullable(node.inner)
        if isinstance(node, Ref):
            return nullable[node.name]
        if isinstance(node, Seq):
            return all(node_nullable(i) for i in node.items)
        if isinstance(node, Alt):
            return any(node_nullable(b) for b in node.branches)
        raise TypeError(node)

    changed = True
    while changed:
        changed = False
        for name, body in rules.items():
            val = node_nullable(body)
            if val and not nullable[name]:
                nullable[name] = True
                changed = True
    return nullable


def _reject_left_recursion(rules):
    nullable = _nullable_map(rules)

    def leftmost(node, acc):
        if isinstance(node, Ref):
            acc.add(node.name)
        elif isinstance(node, Tok):
            pass
        elif isinstance(node, (Opt,)):
            leftmost(node.inner, acc)
        elif isinstance(node, Tagged):
            leftmost(node.inner, acc)
        elif isinstance(node, Alt):
            for b in node.branches:
                leftmost(b, acc)
        elif isinstance(node, Seq):
            def node_nullable(x):
                if isinstance(x, Tok):
                    return False
                if isinstance(x, Opt):
                    return True
                if isinstance(x, Tagged):
                    return node_nullable(x.inner)
                if isinstance(x, Ref):
                    return nullable[x.name]
                if isinstance(x, Seq):
                    return all(node_nullable(i) for i in x.items)
                if isinstance(x, Alt):
                    return any(node_nullable(b) for b in x.branches)
                raise TypeError(x)

            for item in node.items:
                leftmost(item, acc)
                if not node_nullable(item):
                    break
        return acc

    graph = {name: leftmost(body, set()) for name, body in rules.items()}
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {name: WHITE for name in rules}

    def dfs(name):
        color[name] = GRAY
        for nxt in graph[name]:
            if color[nxt] == GRAY:
                raise GrammarError(f"left recursion involving <{nxt}>")
            if color[nxt] == WHITE:
                dfs(nxt)
        color[name] = BLACK

    for name in rules:
        if color[name] == WHITE:
            dfs(name)


# --- matching ---

def _ends(grammar, node, pos, tokens, memo):
    """Reachable end positions; fast accept/reject pass."""
    key = (id(node), pos)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if isinstance(node, Tok):
        out = (pos + 1,) if pos < len(tokens) and tokens[pos] == node.text else ()
    elif isinstance(node, Ref):
        out = _ends(grammar, grammar.rules[node.name], pos, tokens, memo)
    elif isinstance(node, Tagged):
        out = _ends(grammar, node.inner, pos, tokens, memo)
    elif isinstance(node, Opt):
        inner = _ends(grammar, node.inner, pos, tokens, memo)
        out = inner if pos in inner else inner + (pos,)
    elif isinstance(node, Alt):
        seen = []
        for b in node.branches:
            for e in _ends(grammar, b, pos, tokens, memo):
                if e not in seen:
                    seen.append(e)
        out = tuple(seen)
    elif isinstance(node, Seq):
        fronts = (pos,)
        for item in node.items:
            nxt = []
            for p in fronts:
                for e in _ends(grammar, item, p, tokens, memo):
                    if e not in nxt:
                        nxt.append(e)
            if not nxt:
                fronts = ()
                break
            fronts = tuple(nxt)
        out = fronts
    else:
        raise TypeError(node)
    memo[key] = out
    return out


def _matches(grammar, node, pos, tokens):
    """(end, captures) pairs ordered by preference: longest first, then
    declaration order."""
    if isinstance(node, Tok):
        if pos < len(tokens) and tokens[pos] == node.text:
            return [(pos + 1, {})]
        return []
    if isinstance(node, Ref):
        return _matches(grammar, grammar.rules[node.name], pos, tokens)
    if isinstance(node, Tagged):
        out = []
        for end, caps in _matches(grammar, node.inner, pos, tokens):
            value = node.value if node.value is not None else " ".join(tokens[pos:end])
            merged = dict(caps)
            merged[node.role] = value
            out.append((end, merged))
        return out
    if isinstance(node, Opt):
        results = _matches(grammar, node.inner, pos, tokens) + [(pos, {})]
        results.sort(key=lambda t: -t[0])
        return _dedupe(results)
    if isinstance(node, Alt):
        results = []
        for b in node.branches:
            results.extend(_matches(grammar, b, pos, tokens))
        results.sort(key=lambda t: -t[0])
        return _dedupe(results)
    if isinstance(node, Seq):
        fronts = [(pos, {})]
        for item in node.items:
            nxt = []
            for p, caps in fronts:
                for end, more in _matches(grammar, item, p, tokens):
                    merged = dict(caps)
                    merged.update(more)
                    nxt.append((end, merged))
            if not nxt:
                return []
            fronts = _dedupe(nxt)
        return fronts
    raise TypeError(node)


def _dedupe(results):
    seen = set()
    out = []
    for end, caps in results:
        key = (end, tuple(sorted(caps.items())))
        if key not in seen:
            seen.add(key)
            out.append((end, caps))
    return out


def parse_command(grammar: CommandGrammar, utterance: str) -> Intent | None:
    """Match an utterance against the grammar root; None when it does not
    parse or the tagged slots do not form a valid intent."""
    tokens = utterance.lower().split()
    if not tokens:
        return None
    root = grammar.rules[grammar.root]
    memo: dict = {}
    if len(tokens) not in _ends(grammar, root, 0, tokens, memo):
        return None
    for end, caps in _matches(grammar, root, 0, tokens):
        if end != len(tokens):
            continue
        action = _ACTION_ALIASES.get(str(caps.get("action", "")).lower())
        if action is None:
            continue
        obj = caps.get("object")
        if action is IntentAction.FETCH and obj is None:
            continue
        return Intent(action, obj)
    return None


DEFAULT_GRAMMAR = """\
#JSGF V1.0;
grammar assist;
public <command> = <hello> | <stop> | <fetch>;
<hello> = hello [robot] {action=hello};
<stop> = stop {action=stop};
<fetch> = (bring | fetch | get) {action=fetch} [me] [the] <object> {object};
<object> = medicine | water | cup;
"""
