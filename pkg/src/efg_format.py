"""
EFG Format - Line-oriented text documents for games, policies and rated populations

Game documents:
    game "<name>" players <n>
    node <id> player <p> infoset <iset>
    chance <id> <a>:<prob> ...
    leaf <id> <r1> ... <rn>
    edge <parent> <action> <child>
    root <id>

Policy documents start with `policy player <i>` followed by
`infoset <iset> <a>:<prob> ...` lines. Population documents start with
`population` followed by `member <name> rating <real>` lines, each optionally
followed by infoset lines for that member.
"""
import logging
import math
import re
from typing import Dict, Iterator, List, Optional, Tuple, Type

from src.errors import (GameFormatError, InputError, LocatedError, PolicyFormatError,
                        PopulationFormatError)
from src.game_tree import (CHANCE, PROBABILITY_TOLERANCE, RENORMALIZE_THRESHOLD, GameBuilder, GameTree,
                           normalize_chance, validate_game)
from src.policies import BehavioralPolicy, RatedMember, RatedPopulation

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r'"[^"]*"|[^\s"]+|"')
_IDENTIFIER = re.compile(r'^[^\s:=#"]+$')
_HEADER_NAME = re.compile(r'^"([^"\n]*)"$')

Token = Tuple[str, int]


def format_real(value: float) -> str:
    """Shortest-safe text for a float: 17 significant digits"""
    return format(value, ".17g")


def _strip_comment(line: str) -> str:
    in_quote = False
    for index, char in enumerate(line):
        if char == '"':
            in_quote = not in_quote
        elif char == "#" and not in_quote:
            return line[:index]
    return line


def _statements(text: str) -> Iterator[Tuple[int, List[Token]]]:
    """(line number, [(token, column), ...]) for every non-blank line"""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw)
        tokens = [(m.group(0), m.start() + 1) for m in _TOKEN.finditer(body)]
        if tokens:
            yield lineno, tokens


def _identifier(token: Token, lineno: int, what: str, error: Type[LocatedError]) -> str:
    text, column = token
    if not _IDENTIFIER.match(text):
        raise error(f"invalid {what} '{text}'", lineno, column)
    return text


def _real(token: Token, lineno: int, what: str, error: Type[LocatedError]) -> float:
    text, column = token
    try:
        value = float(text)
    except ValueError:
        raise error(f"invalid {what} '{text}'", lineno, column)
    if not math.isfinite(value):
        raise error(f"{what} must be finite, got '{text}'", lineno, column)
    return value


def _arity(tokens: List[Token], count: int, lineno: int, usage: str, error: Type[LocatedError]):
    if len(tokens) != count:
        column = tokens[count][1] if len(tokens) > count else tokens[-1][1]
        raise error(f"expected '{usage}'", lineno, column)


def _distribution(tokens: List[Token], lineno: int, error: Type[LocatedError]) -> List[Tuple[str, float]]:
    """Parse `a:p` pairs; rejects negative and non-normalized distributions"""
    pairs: List[Tuple[str, float]] = []
    seen = set()
    for text, column in tokens:
        label, sep, prob = text.rpartition(":")
        if not sep or not label:
            raise error(f"expected '<action>:<probability>', got '{text}'", lineno, column)
        label = _identifier((label, column), lineno, "action label", error)
        if label in seen:
            raise error(f"duplicate action '{label}'", lineno, column)
        seen.add(label)
        value = _real((prob, column + len(label) + 1), lineno, "probability", error)
        if value < 0.0:
            raise error(f"negative probability for action '{label}'", lineno, column)
        pairs.append((label, value))
    total = math.fsum(p for _, p in pairs)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise error(f"probabilities sum to {total!r}, not 1 (normalization)", lineno, tokens[0][1])
    return pairs


def _line_of(diag_ids, declared: Dict[str, int], tree: GameTree, default: int) -> int:
    for identifier in diag_ids:
        if identifier in declared:
            return declared[identifier]
        u = tree.info_states.get(identifier)
        if u is not None and u.members and u.members[0] in declared:
            return declared[u.members[0]]
    return default


def parse_game(text: str, validate: bool = True) -> GameTree:
    """
    Parse and validate a game document

    Args:
        text: Document text
        validate: when False, return the tree after the syntax pass without
            structural validation (used by the validate command)

    Returns:
        Validated GameTree (chance distributions renormalized)

    Raises:
        GameFormatError: syntax or semantic error, always with a line number
    """
    builder: Optional[GameBuilder] = None
    declared: Dict[str, int] = {}
    edges: List[Tuple[int, List[Token]]] = []
    root: Optional[Tuple[str, int]] = None
    last_line = 0

    for lineno, tokens in _statements(text):
        last_line = lineno
        keyword, column = tokens[0]
        if builder is None:
            if keyword != "game":
                raise GameFormatError("missing header: document must start with 'game \"<name>\" players <n>'",
                                      lineno, column)
            builder = _parse_header(tokens, lineno)
            continue
        if keyword == "game":
            raise GameFormatError("duplicate header", lineno, column)
        if keyword == "edge":
            _arity(tokens, 4, lineno, "edge <parent> <action> <child>", GameFormatError)
            edges.append((lineno, tokens))
            continue
        if keyword == "root":
            _arity(tokens, 2, lineno, "root <id>", GameFormatError)
            if root is not None:
                raise GameFormatError("duplicate root line", lineno, column)
            root = (_identifier(tokens[1], lineno, "node id", GameFormatError), lineno)
            continue
        if keyword not in ("node", "chance", "leaf"):
            raise GameFormatError(f"unknown statement '{keyword}'", lineno, column)
        if len(tokens) < 2:
            raise GameFormatError(f"'{keyword}' needs a node id", lineno, column)
        node_id = _identifier(tokens[1], lineno, "node id", GameFormatError)
        if node_id in declared:
            raise GameFormatError(f"duplicate node id '{node_id}' (first declared on line {declared[node_id]})",
                                  lineno, tokens[1][1], ids=(node_id,))
        declared[node_id] = lineno
        if keyword == "node":
            _parse_decision(builder, tokens, lineno, node_id)
        elif keyword == "chance":
            if len(tokens) < 3:
                raise GameFormatError(f"chance node '{node_id}' needs at least one action", lineno, column)
            try:
                builder.chance(node_id, _distribution(tokens[2:], lineno, GameFormatError))
            except GameFormatError as e:
                raise GameFormatError(f"chance node '{node_id}': {e.message}", lineno, e.column, ids=(node_id,))
        else:
            if len(tokens) - 2 != builder.player_count:
                raise GameFormatError(f"leaf '{node_id}' has {len(tokens) - 2} rewards, expected "
                                      f"{builder.player_count} (reward arity)", lineno, column, ids=(node_id,))
            builder.leaf(node_id, [_real(t, lineno, "reward", GameFormatError) for t in tokens[2:]])

    if builder is None:
        raise GameFormatError("missing header: empty document", max(last_line, 1))

    for lineno, tokens in edges:
        parent = _identifier(tokens[1], lineno, "node id", GameFormatError)
        action = _identifier(tokens[2], lineno, "action label", GameFormatError)
        child = _identifier(tokens[3], lineno, "node id", GameFormatError)
        if parent not in declared:
            raise GameFormatError(f"dangling edge: unknown parent node '{parent}'", lineno, tokens[1][1],
                                  ids=(parent,))
        if child not in declared:
            raise GameFormatError(f"dangling edge: unknown child node '{child}'", lineno, tokens[3][1],
                                  ids=(child,))
        try:
            builder.edge(parent, action, child)
        except GameFormatError as e:
            raise GameFormatError(e.message, lineno, tokens[2][1], ids=e.ids)

    if root is None:
        raise GameFormatError("missing root", max(last_line, 1))
    root_id, root_line = root
    if root_id not in declared:
        raise GameFormatError(f"root '{root_id}' is not a declared node", root_line, ids=(root_id,))
    builder.set_root(root_id)

    tree = builder.build(validate=False)
    if not validate:
        return tree
    diagnostics = validate_game(tree)
    if diagnostics:
        first = diagnostics[0]
        lineno = _line_of(first.ids, declared, tree, root_line)
        raise GameFormatError(str(first), lineno, ids=first.ids)
    tree = normalize_chance(tree)
    logger.debug(f"Parsed game '{tree.name}' with {len(tree.nodes)} nodes")
    return tree


def _parse_header(tokens: List[Token], lineno: int) -> GameBuilder:
    _arity(tokens, 4, lineno, 'game "<name>" players <n>', GameFormatError)
    name_match = _HEADER_NAME.match(tokens[1][0])
    if not name_match:
        raise GameFormatError("game name must be a double-quoted string", lineno, tokens[1][1])
    if tokens[2][0] != "players":
        raise GameFormatError("expected 'players'", lineno, tokens[2][1])
    try:
        count = int(tokens[3][0])
    except ValueError:
        raise GameFormatError(f"invalid player count '{tokens[3][0]}'", lineno, tokens[3][1])
    if count < 1:
        raise GameFormatError(f"player count must be >= 1, got {count}", lineno, tokens[3][1])
    return GameBuilder(name_match.group(1), count)


def _parse_decision(builder: GameBuilder, tokens: List[Token], lineno: int, node_id: str):
    _arity(tokens, 6, lineno, "node <id> player <p> infoset <iset>", GameFormatError)
    if tokens[2][0] != "player":
        raise GameFormatError("expected 'player'", lineno, tokens[2][1])
    if tokens[4][0] != "infoset":
        raise GameFormatError("expected 'infoset'", lineno, tokens[4][1])
    try:
        player = int(tokens[3][0])
    except ValueError:
        raise GameFormatError(f"invalid player '{tokens[3][0]}'", lineno, tokens[3][1])
    if not 0 <= player < builder.player_count:
        raise GameFormatError(f"unknown player {player} for node '{node_id}'", lineno, tokens[3][1],
                              ids=(node_id,))
    builder.decision(node_id, player, _identifier(tokens[5], lineno, "info state id", GameFormatError))


def serialize_game(tree: GameTree) -> str:
    """Canonical document: nodes in id order, each followed by its edges, root last"""
    lines = [f'game "{tree.name}" players {tree.player_count}']
    for node_id, node in tree.nodes.items():
        if node.is_decision:
            lines.append(f"node {node_id} player {node.player} infoset {node.info_state}")
        elif node.is_chance:
            pairs = " ".join(f"{a}:{format_real(p)}" for a, p in zip(node.actions, node.probs))
            lines.append(f"chance {node_id} {pairs}")
        else:
            lines.append(f"leaf {node_id} " + " ".join(format_real(r) for r in node.rewards))
        for action, child in zip(node.actions, node.children):
            lines.append(f"edge {node_id} {action} {child}")
    lines.append(f"root {tree.root_id}")
    return "\n".join(lines) + "\n"


def _policy_line(tokens: List[Token], lineno: int, tree: GameTree, owners, error: Type[LocatedError]):
    """Parse `infoset <iset> a:p ...` into (iset, full distribution)"""
    if len(tokens) < 3:
        raise error("expected 'infoset <iset> <action>:<prob> ...'", lineno, tokens[0][1])
    iset_id = _identifier(tokens[1], lineno, "info state id", error)
    u = tree.info_states.get(iset_id)
    if u is None or u.owner == CHANCE:
        raise error(f"unknown info state '{iset_id}'", lineno, tokens[1][1], ids=(iset_id,))
    if u.owner not in owners:
        raise error(f"info state '{iset_id}' belongs to player {u.owner}, not player "
                    f"{'/'.join(str(o) for o in owners)} (player mismatch)", lineno, tokens[1][1], ids=(iset_id,))
    pairs = _distribution(tokens[2:], lineno, error)
    for (label, _), (_, column) in zip(pairs, tokens[2:]):
        if label not in u.actions:
            raise error(f"info state '{iset_id}' has no action '{label}'", lineno, column, ids=(iset_id, label))
    given = dict(pairs)
    total = math.fsum(given.values())
    if abs(total - 1.0) > RENORMALIZE_THRESHOLD:
        given = {a: p / total for a, p in given.items()}
    return u, {a: given.get(a, 0.0) for a in u.actions}


def _uniform(u) -> Dict[str, float]:
    return {a: 1.0 / len(u.actions) for a in u.actions}


def parse_policy(text: str, tree: GameTree) -> BehavioralPolicy:
    """
    Parse a policy document against a game

    Args:
        text: Policy document
        tree: Validated game

    Returns:
        BehavioralPolicy covering every info state of the header's player;
        unlisted info states are uniform
    """
    owner: Optional[int] = None
    listed: Dict[str, Dict[str, float]] = {}
    for lineno, tokens in _statements(text):
        keyword, column = tokens[0]
        if owner is None:
            if keyword != "policy":
                raise PolicyFormatError("missing header: expected 'policy player <i>'", lineno, column)
            _arity(tokens, 3, lineno, "policy player <i>", PolicyFormatError)
            if tokens[1][0] != "player":
                raise PolicyFormatError("expected 'player'", lineno, tokens[1][1])
            try:
                owner = int(tokens[2][0])
            except ValueError:
                raise PolicyFormatError(f"invalid player '{tokens[2][0]}'", lineno, tokens[2][1])
            if not 0 <= owner < tree.player_count:
                raise PolicyFormatError(f"unknown player {owner}", lineno, tokens[2][1])
            continue
        if keyword != "infoset":
            raise PolicyFormatError(f"unknown statement '{keyword}'", lineno, column)
        u, dist = _policy_line(tokens, lineno, tree, (owner,), PolicyFormatError)
        if u.info_state_id in listed:
            raise PolicyFormatError(f"info state '{u.info_state_id}' listed twice", lineno, tokens[1][1])
        listed[u.info_state_id] = dist
    if owner is None:
        raise PolicyFormatError("missing header: empty policy document", 1)
    probs = {u.info_state_id: listed.get(u.info_state_id) or _uniform(u) for u in tree.player_info_states(owner)}
    return BehavioralPolicy(owner, probs)


def serialize_policy(policy: BehavioralPolicy, tree: GameTree) -> str:
    if policy.owner == CHANCE:
        raise InputError("chance distributions live in the game document, not in a policy")
    lines = [f"policy player {policy.owner}"]
    for u in tree.player_info_states(policy.owner):
        dist = policy.distribution(u.info_state_id)
        pairs = " ".join(f"{a}:{format_real(dist.get(a, 0.0))}" for a in u.actions)
        lines.append(f"infoset {u.info_state_id} {pairs}")
    return "\n".join(lines) + "\n"


def parse_population(text: str, tree: GameTree) -> RatedPopulation:
    """
    Parse a rated population; every member gets a policy for every seat,
    uniform wherever its infoset lines are silent
    """
    seats = tuple(range(tree.player_count))
    members: List[Tuple[str, float, Dict[str, Dict[str, float]]]] = []
    names = set()
    seen_header = False
    for lineno, tokens in _statements(text):
        keyword, column = tokens[0]
        if not seen_header:
            if keyword != "population" or len(tokens) != 1:
                raise PopulationFormatError("missing header: expected 'population'", lineno, column)
            seen_header = True
            continue
        if keyword == "member":
            _arity(tokens, 4, lineno, "member <name> rating <real>", PopulationFormatError)
            name = _identifier(tokens[1], lineno, "member name", PopulationFormatError)
            if name in names:
                raise PopulationFormatError(f"duplicate member '{name}'", lineno, tokens[1][1])
            if tokens[2][0] != "rating":
                raise PopulationFormatError("expected 'rating'", lineno, tokens[2][1])
            names.add(name)
            members.append((name, _real(tokens[3], lineno, "rating", PopulationFormatError), {}))
        elif keyword == "infoset":
            if not members:
                raise PopulationFormatError("infoset line before any member", lineno, column)
            u, dist = _policy_line(tokens, lineno, tree, seats, PopulationFormatError)
            listed = members[-1][2]
            if u.info_state_id in listed:
                raise PopulationFormatError(f"info state '{u.info_state_id}' listed twice for member "
                                            f"'{members[-1][0]}'", lineno, tokens[1][1])
            listed[u.info_state_id] = dist
        else:
            raise PopulationFormatError(f"unknown statement '{keyword}'", lineno, column)
    if not seen_header:
        raise PopulationFormatError("missing header: empty population document", 1)
    if not members:
        raise PopulationFormatError("population has no members", 1)

    rated = []
    for name, rating, listed in members:
        seat_policies = {}
        for seat in seats:
            probs = {u.info_state_id: listed.get(u.info_state_id) or _uniform(u)
                     for u in tree.player_info_states(seat)}
            seat_policies[seat] = BehavioralPolicy(seat, probs)
        rated.append(RatedMember(name, rating, seat_policies))
    return RatedPopulation(tuple(rated))
