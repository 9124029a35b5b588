"""
Game Tree - Finite extensive-form games with chance nodes, information states,
structural validation (including perfect recall) and owner-visible histories
"""
import logging
import math
import re
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from src.errors import GameFormatError, GameValidationError, InputError, UnknownPlayer

logger = logging.getLogger(__name__)

# Player references are plain ints; chance uses the conventional -1
PlayerRef = int
CHANCE: PlayerRef = -1

DECISION = "decision"
CHANCE_NODE = "chance"
TERMINAL = "terminal"

PROBABILITY_TOLERANCE = 1e-12
# Sums closer to 1 than this are left untouched so canonical documents re-parse bit-exactly
RENORMALIZE_THRESHOLD = 1e-14

_DIGITS = re.compile(r"(\d+)")


def natural_key(text: str) -> Tuple:
    """Sort key where digit runs compare numerically ('n2' < 'n10')"""
    parts = []
    for chunk in _DIGITS.split(text):
        if not chunk:
            continue
        if chunk.isdigit():
            parts.append((0, int(chunk), chunk))
        else:
            parts.append((1, 0, chunk))
    return tuple(parts)


def parse_player_ref(text: str) -> PlayerRef:
    """Parse 'chance' or a non-negative integer player index"""
    token = str(text).strip().lower()
    if token in ("chance", "c", "-1"):
        return CHANCE
    try:
        value = int(token)
    except ValueError:
        raise UnknownPlayer(f"unknown player '{text}'")
    if value < 0:
        raise UnknownPlayer(f"unknown player '{text}'")
    return value


def player_label(player: PlayerRef) -> str:
    return "chance" if player == CHANCE else str(player)


@dataclass(frozen=True)
class Node:
    """One game state. Decision nodes carry an owner and info state, chance nodes
    a distribution aligned with `actions`, terminal nodes a reward per player."""

    node_id: str
    kind: str
    player: Optional[PlayerRef] = None
    info_state: Optional[str] = None
    actions: Tuple[str, ...] = ()
    children: Tuple[Optional[str], ...] = ()
    probs: Tuple[float, ...] = ()
    rewards: Tuple[float, ...] = ()

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL

    @property
    def is_chance(self) -> bool:
        return self.kind == CHANCE_NODE

    @property
    def is_decision(self) -> bool:
        return self.kind == DECISION

    def child(self, action: str) -> str:
        try:
            return self.children[self.actions.index(action)]
        except ValueError:
            raise InputError(f"node '{self.node_id}' has no action '{action}'")


@dataclass(frozen=True)
class InfoState:
    """Indistinguishable decision nodes of one owner sharing one action list"""

    info_state_id: str
    owner: PlayerRef
    members: Tuple[str, ...]
    actions: Tuple[str, ...]


@dataclass(frozen=True)
class Diagnostic:
    """A violated structural invariant and the offending ids"""

    code: str
    message: str
    ids: Tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


@dataclass(frozen=True)
class GameTree:
    """Arena of nodes keyed by id (canonical natural order) plus the info-state partition"""

    name: str
    player_count: int
    nodes: Dict[str, Node]
    root_id: str
    info_states: Dict[str, InfoState]

    @cached_property
    def parents(self) -> Dict[str, Tuple[str, str]]:
        """child id -> (parent id, action) for a structurally valid tree"""
        parents: Dict[str, Tuple[str, str]] = {}
        for node in self.nodes.values():
            for action, child in zip(node.actions, node.children):
                if child is not None and child not in parents:
                    parents[child] = (node.node_id, action)
        return parents

    @cached_property
    def preorder(self) -> Tuple[str, ...]:
        """Node ids reachable from the root, parents before children, edge order"""
        order: List[str] = []
        if self.root_id not in self.nodes:
            return ()
        seen = set()
        stack = [self.root_id]
        while stack:
            node_id = stack.pop()
            if node_id in seen or node_id not in self.nodes:
                continue
            seen.add(node_id)
            order.append(node_id)
            node = self.nodes[node_id]
            for child in reversed(node.children):
                if child is not None:
                    stack.append(child)
        return tuple(order)

    @cached_property
    def height(self) -> int:
        """Maximum number of edges on a root-to-leaf path"""
        depth = {self.root_id: 0}
        best = 0
        for node_id in self.preorder:
            node = self.nodes[node_id]
            for child in node.children:
                if child is not None and child in self.nodes:
                    depth[child] = depth[node_id] + 1
                    best = max(best, depth[child])
        return best

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise InputError(f"unknown node id '{node_id}'")

    @property
    def root(self) -> Node:
        return self.node(self.root_id)

    def info_state_id(self, node: Node) -> Optional[str]:
        """Info state a non-terminal node belongs to (chance nodes are their own)"""
        if node.is_decision:
            return node.info_state
        if node.is_chance:
            return node.node_id
        return None

    def player_info_states(self, player: PlayerRef) -> List[InfoState]:
        """Info states owned by `player` in canonical order"""
        owned = [u for u in self.info_states.values() if u.owner == player]
        return sorted(owned, key=lambda u: natural_key(u.info_state_id))

    def check_player(self, player: PlayerRef, allow_chance: bool = True) -> PlayerRef:
        if player == CHANCE and allow_chance:
            return player
        if not isinstance(player, int) or not 0 <= player < self.player_count:
            raise UnknownPlayer(f"unknown player {player_label(player)} "
                                f"(game '{self.name}' has {self.player_count} players)")
        return player

    def root_path(self, node_id: str) -> List[Tuple[str, str]]:
        """(node id, action) pairs taken from the root down to `node_id`"""
        self.node(node_id)
        path: List[Tuple[str, str]] = []
        current = node_id
        parents = self.parents
        while current != self.root_id:
            parent, action = parents[current]
            path.append((parent, action))
            current = parent
        path.reverse()
        return path

    def leaves(self) -> List[Node]:
        return [self.nodes[n] for n in self.preorder if self.nodes[n].is_terminal]

    def with_rewards(self, transform: Callable[[float], float]) -> "GameTree":
        """Copy of the tree with every terminal reward passed through `transform`"""
        nodes = {}
        for node_id, node in self.nodes.items():
            if node.is_terminal:
                node = replace(node, rewards=tuple(float(transform(r)) for r in node.rewards))
            nodes[node_id] = node
        return replace(self, nodes=nodes)


def owner_history(tree: GameTree, node_id: str) -> Dict[PlayerRef, List[Tuple[str, str]]]:
    """
    Owner-visible history of every player along the root path to a node

    Returns:
        Mapping from each PlayerRef (chance and 0..n-1) to the ordered
        (info state id, action) pairs that player produced on the way to `node_id`
    """
    histories: Dict[PlayerRef, List[Tuple[str, str]]] = {CHANCE: []}
    for player in range(tree.player_count):
        histories[player] = []
    for parent_id, action in tree.root_path(node_id):
        parent = tree.nodes[parent_id]
        owner = CHANCE if parent.is_chance else parent.player
        histories.setdefault(owner, []).append((tree.info_state_id(parent), action))
    return histories


def pin_actions(tree: GameTree, choices: Dict[str, str]) -> GameTree:
    """Copy of the tree whose listed chance nodes always take the chosen action"""
    nodes = dict(tree.nodes)
    for node_id, action in choices.items():
        node = tree.node(node_id)
        if not node.is_chance:
            raise InputError(f"'{node_id}' is not a chance node")
        if action not in node.actions:
            raise InputError(f"chance node '{node_id}' has no action '{action}'")
        probs = tuple(1.0 if a == action else 0.0 for a in node.actions)
        nodes[node_id] = replace(node, probs=probs)
    return replace(tree, nodes=nodes)


def validate_game(tree: GameTree) -> List[Diagnostic]:
    """
    Check every GameTree / Node / InfoState invariant

    Returns:
        Empty list iff the tree is valid; otherwise one Diagnostic per violation
    """
    diagnostics = _structural_diagnostics(tree)
    if diagnostics:
        return diagnostics
    return _info_state_diagnostics(tree)


def _structural_diagnostics(tree: GameTree) -> List[Diagnostic]:
    diags: List[Diagnostic] = []
    if tree.player_count < 1:
        diags.append(Diagnostic("player-count", f"player count must be >= 1, got {tree.player_count}"))
    if tree.root_id not in tree.nodes:
        diags.append(Diagnostic("missing-root", f"missing root (root id '{tree.root_id}' is not a node)",
                                (tree.root_id,)))

    incoming: Dict[str, List[str]] = {}
    for node_id, node in tree.nodes.items():
        if len(node.actions) != len(node.children):
            diags.append(Diagnostic("edge-arity", f"node '{node_id}' has mismatched actions and children",
                                    (node_id,)))
        for child in node.children:
            if child is None:
                continue
            incoming.setdefault(child, []).append(node_id)

        if node.is_terminal:
            if node.actions:
                diags.append(Diagnostic("terminal-with-edges", f"terminal node '{node_id}' has edges", (node_id,)))
            if len(node.rewards) != tree.player_count:
                diags.append(Diagnostic(
                    "reward-arity",
                    f"leaf '{node_id}' has {len(node.rewards)} rewards, expected {tree.player_count}",
                    (node_id,)))
            if not all(math.isfinite(r) for r in node.rewards):
                diags.append(Diagnostic("non-finite-reward", f"leaf '{node_id}' has a non-finite reward",
                                        (node_id,)))
            continue

        if node.kind not in (DECISION, CHANCE_NODE):
            diags.append(Diagnostic("unknown-kind", f"node '{node_id}' has unknown kind '{node.kind}'", (node_id,)))
            continue
        if not node.actions:
            diags.append(Diagnostic("no-edges", f"non-terminal node '{node_id}' has no edges", (node_id,)))
        if len(set(node.actions)) != len(node.actions):
            diags.append(Diagnostic("duplicate-action", f"node '{node_id}' repeats an action label", (node_id,)))
        for action, child in zip(node.actions, node.children):
            if child is None:
                diags.append(Diagnostic("missing-edge", f"action '{action}' of node '{node_id}' has no edge",
                                        (node_id, action)))
            elif child not in tree.nodes:
                diags.append(Diagnostic("dangling-edge", f"edge '{node_id}' --{action}--> unknown node '{child}'",
                                        (node_id, child)))

        if node.is_decision:
            if not isinstance(node.player, int) or not 0 <= node.player < max(tree.player_count, 0):
                diags.append(Diagnostic("unknown-player", f"decision node '{node_id}' has unknown player "
                                                          f"{node.player}", (node_id,)))
            if not node.info_state:
                diags.append(Diagnostic("missing-infoset", f"decision node '{node_id}' has no info state",
                                        (node_id,)))
        else:
            diags.extend(_chance_diagnostics(node))

    for child, parents in incoming.items():
        if child == tree.root_id:
            diags.append(Diagnostic("root-has-parent", f"root '{child}' has a parent", (child, *parents)))
        elif len(parents) > 1:
            diags.append(Diagnostic("multiple-parents", f"node '{child}' has {len(parents)} parents",
                                    (child, *parents)))

    if tree.root_id in tree.nodes:
        reachable = set(tree.preorder)
        for node_id in tree.nodes:
            if node_id in reachable:
                continue
            if _on_cycle(tree, node_id, incoming):
                diags.append(Diagnostic("cycle", f"node '{node_id}' lies on a cycle", (node_id,)))
            else:
                diags.append(Diagnostic("unreachable-node", f"node '{node_id}' is not reachable from the root",
                                        (node_id,)))
    return diags


def _chance_diagnostics(node: Node) -> List[Diagnostic]:
    if len(node.probs) != len(node.actions):
        return [Diagnostic("chance-arity", f"chance node '{node.node_id}' probabilities do not match its actions",
                           (node.node_id,))]
    if not all(math.isfinite(p) and p >= 0.0 for p in node.probs):
        return [Diagnostic("chance-negative", f"chance node '{node.node_id}' has a negative or non-finite "
                                              f"probability", (node.node_id,))]
    total = math.fsum(node.probs)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        return [Diagnostic("chance-normalization",
                           f"chance node '{node.node_id}' probabilities sum to {total!r}, not 1",
                           (node.node_id,))]
    return []


def _on_cycle(tree: GameTree, node_id: str, incoming: Dict[str, List[str]]) -> bool:
    seen = set()
    current = node_id
    while current in incoming:
        if current in seen:
            return True
        seen.add(current)
        current = incoming[current][0]
    return False


def _info_state_diagnostics(tree: GameTree) -> List[Diagnostic]:
    diags: List[Diagnostic] = []
    for node_id, node in tree.nodes.items():
        if node.is_chance:
            entry = tree.info_states.get(node_id)
            if entry is None or entry.owner != CHANCE:
                diags.append(Diagnostic("infoset-id-collision",
                                        f"info state id '{node_id}' is used by a chance node and a decision node",
                                        (node_id,)))
        elif node.is_decision:
            entry = tree.info_states.get(node.info_state)
            if entry is None or node_id not in entry.members:
                diags.append(Diagnostic("infoset-membership",
                                        f"decision node '{node_id}' is not listed in info state '{node.info_state}'",
                                        (node_id, str(node.info_state))))

    for u in tree.info_states.values():
        if u.owner == CHANCE:
            continue
        if not u.members:
            diags.append(Diagnostic("infoset-empty", f"info state '{u.info_state_id}' has no members",
                                    (u.info_state_id,)))
            continue
        members = [tree.nodes.get(m) for m in u.members]
        if any(m is None or not m.is_decision or m.info_state != u.info_state_id for m in members):
            diags.append(Diagnostic("infoset-membership",
                                    f"info state '{u.info_state_id}' lists a node that is not one of its "
                                    f"decision nodes", (u.info_state_id,)))
            continue
        if any(m.player != u.owner for m in members):
            diags.append(Diagnostic("infoset-owner-mismatch",
                                    f"info state '{u.info_state_id}' mixes owners",
                                    (u.info_state_id, *u.members)))
            continue
        expected = set(u.actions)
        odd = [m.node_id for m in members if set(m.actions) != expected or len(m.actions) != len(u.actions)]
        if odd:
            diags.append(Diagnostic("infoset-action-mismatch",
                                    f"info state '{u.info_state_id}' members {odd} do not share its action set "
                                    f"{list(u.actions)}", (u.info_state_id, *odd)))
            continue
        reference = owner_history(tree, u.members[0])[u.owner]
        for member in u.members[1:]:
            if owner_history(tree, member)[u.owner] != reference:
                diags.append(Diagnostic("perfect-recall",
                                        f"info state '{u.info_state_id}' violates perfect recall: nodes "
                                        f"'{u.members[0]}' and '{member}' have different histories for player "
                                        f"{u.owner}", (u.info_state_id, u.members[0], member)))
                break
    return diags


class GameBuilder:
    """
    Incremental constructor for GameTree

    Nodes may be declared in any order; edges need their parent declared first.
    Children may be declared later and are checked by `validate_game` on build.
    """

    def __init__(self, name: str, player_count: int):
        self.name = name
        self.player_count = player_count
        self._kinds: Dict[str, str] = {}
        self._players: Dict[str, PlayerRef] = {}
        self._info_states: Dict[str, str] = {}
        self._chance: Dict[str, List[Tuple[str, float]]] = {}
        self._rewards: Dict[str, Tuple[float, ...]] = {}
        self._edges: Dict[str, List[Tuple[str, Optional[str]]]] = {}
        self.root_id: Optional[str] = None

    def _declare(self, node_id: str, kind: str):
        if node_id in self._kinds:
            raise GameFormatError(f"duplicate node id '{node_id}'", ids=(node_id,))
        self._kinds[node_id] = kind

    def decision(self, node_id: str, player: PlayerRef, info_state: str) -> "GameBuilder":
        self._declare(node_id, DECISION)
        self._players[node_id] = player
        self._info_states[node_id] = info_state
        self._edges[node_id] = []
        return self

    def chance(self, node_id: str, distribution: Sequence[Tuple[str, float]]) -> "GameBuilder":
        self._declare(node_id, CHANCE_NODE)
        self._chance[node_id] = [(str(a), float(p)) for a, p in distribution]
        # chance actions come from the declaration; edges only fill in children
        self._edges[node_id] = [(a, None) for a, _ in self._chance[node_id]]
        return self

    def leaf(self, node_id: str, rewards: Sequence[float]) -> "GameBuilder":
        self._declare(node_id, TERMINAL)
        self._rewards[node_id] = tuple(float(r) for r in rewards)
        self._edges[node_id] = []
        return self

    def edge(self, parent: str, action: str, child: str) -> "GameBuilder":
        if parent not in self._kinds:
            raise GameFormatError(f"dangling edge: unknown parent node '{parent}'", ids=(parent,))
        edges = self._edges[parent]
        if self._kinds[parent] == CHANCE_NODE:
            for index, (label, existing) in enumerate(edges):
                if label == action:
                    if existing is not None:
                        raise GameFormatError(f"duplicate edge '{parent}' --{action}-->", ids=(parent, action))
                    edges[index] = (label, child)
                    return self
            raise GameFormatError(f"chance node '{parent}' has no action '{action}'", ids=(parent, action))
        edges.append((action, child))
        return self

    def set_root(self, node_id: str) -> "GameBuilder":
        self.root_id = node_id
        return self

    def build(self, validate: bool = True) -> GameTree:
        """
        Assemble the tree

        Args:
            validate: raise GameValidationError on any diagnostic and renormalize
                chance distributions afterwards

        Returns:
            GameTree with nodes and info states in canonical order
        """
        nodes: Dict[str, Node] = {}
        for node_id in sorted(self._kinds, key=natural_key):
            kind = self._kinds[node_id]
            edges = self._edges[node_id]
            actions = tuple(a for a, _ in edges)
            children = tuple(c for _, c in edges)
            if kind == DECISION:
                nodes[node_id] = Node(node_id, DECISION, player=self._players[node_id],
                                      info_state=self._info_states[node_id], actions=actions, children=children)
            elif kind == CHANCE_NODE:
                nodes[node_id] = Node(node_id, CHANCE_NODE, player=CHANCE, actions=actions, children=children,
                                      probs=tuple(p for _, p in self._chance[node_id]))
            else:
                nodes[node_id] = Node(node_id, TERMINAL, actions=actions, children=children,
                                      rewards=self._rewards[node_id])

        tree = GameTree(self.name, self.player_count, nodes, self.root_id or "", _collect_info_states(nodes))
        if not validate:
            return tree
        diagnostics = validate_game(tree)
        if diagnostics:
            raise GameValidationError(diagnostics)
        return normalize_chance(tree)


def _collect_info_states(nodes: Dict[str, Node]) -> Dict[str, InfoState]:
    grouped: Dict[str, List[Node]] = {}
    for node in nodes.values():
        if node.is_decision and node.info_state:
            grouped.setdefault(node.info_state, []).append(node)
    info_states: Dict[str, InfoState] = {}
    for node in nodes.values():
        if node.is_chance:
            info_states[node.node_id] = InfoState(node.node_id, CHANCE, (node.node_id,), node.actions)
    for iset_id, members in grouped.items():
        # lowest-id member fixes owner and action order
        first = members[0]
        info_states[iset_id] = InfoState(iset_id, first.player, tuple(m.node_id for m in members), first.actions)
    return {k: info_states[k] for k in sorted(info_states, key=natural_key)}


def normalize_chance(tree: GameTree) -> GameTree:
    nodes = dict(tree.nodes)
    changed = False
    for node_id, node in tree.nodes.items():
        if not node.is_chance:
            continue
        total = math.fsum(node.probs)
        if abs(total - 1.0) > RENORMALIZE_THRESHOLD:
            nodes[node_id] = replace(node, probs=tuple(p / total for p in node.probs))
            changed = True
    if not changed:
        return tree
    logger.debug(f"Renormalized chance distributions of game '{tree.name}'")
    return replace(tree, nodes=nodes)
