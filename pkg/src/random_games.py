"""
Random Games - Seeded generator of small perfect-recall games for differential testing
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import InvalidParameters
from src.game_tree import GameBuilder, GameTree

logger = logging.getLogger(__name__)

TERMINATE_PROBABILITY = 0.25


@dataclass
class _Planned:
    node_id: str
    depth: int
    parent: Optional[str] = None
    action: Optional[str] = None
    kind: str = "leaf"
    player: int = -1
    branch: int = 0
    info_state: Optional[str] = None
    children: List[str] = field(default_factory=list)


def random_game(seed: int, max_depth: int = 4, max_branch: int = 3, player_count: int = 2,
                chance_density: float = 0.3, max_nodes: int = 40) -> GameTree:
    """
    Build a random game with at most `max_nodes` nodes

    Decision nodes of the same player, depth, own-visible history and action
    count are merged into shared info states at random, which keeps perfect
    recall by construction. The result is validated before it is returned.
    """
    if max_depth < 0 or max_branch < 1 or player_count < 1 or not 0.0 <= chance_density <= 1.0 or max_nodes < 1:
        raise InvalidParameters("random_game parameters out of range")
    rng = np.random.default_rng(seed)

    plan: Dict[str, _Planned] = {"n0": _Planned("n0", 0)}
    queue = ["n0"]
    count = 1
    while queue:
        node = plan[queue.pop(0)]
        branch = int(rng.integers(1, max_branch + 1))
        stop = node.depth >= max_depth or count + branch > max_nodes
        if stop or (node.depth > 0 and rng.random() < TERMINATE_PROBABILITY):
            continue
        if rng.random() < chance_density:
            node.kind = "chance"
        else:
            node.kind = "decision"
            node.player = int(rng.integers(player_count))
        node.branch = branch
        for index in range(branch):
            child_id = f"n{count}"
            count += 1
            plan[child_id] = _Planned(child_id, node.depth + 1, node.node_id, f"a{index}")
            node.children.append(child_id)
            queue.append(child_id)

    _assign_info_states(plan, rng)

    builder = GameBuilder(f"random-{seed}", player_count)
    for node in plan.values():
        if node.kind == "chance":
            weights = rng.dirichlet(np.ones(node.branch))
            builder.chance(node.node_id, [(f"a{i}", float(w)) for i, w in enumerate(weights)])
        elif node.kind == "decision":
            builder.decision(node.node_id, node.player, node.info_state)
        else:
            rewards = rng.integers(-3, 4, size=player_count)
            builder.leaf(node.node_id, [float(r) for r in rewards])
    for node in plan.values():
        for index, child in enumerate(node.children):
            builder.edge(node.node_id, f"a{index}", child)
    tree = builder.set_root("n0").build()
    logger.debug(f"Generated random game seed={seed} with {len(tree.nodes)} nodes")
    return tree


def _assign_info_states(plan: Dict[str, _Planned], rng: np.random.Generator):
    """Group decision nodes in breadth-first order; ancestors are always labelled first"""
    groups: Dict[Tuple, List[str]] = {}
    counter = 0
    for node in plan.values():
        if node.kind != "decision":
            continue
        key = (node.player, node.depth, node.branch, _own_history(plan, node))
        candidates = groups.setdefault(key, [])
        if candidates and rng.random() < 0.5:
            node.info_state = candidates[int(rng.integers(len(candidates)))]
        else:
            node.info_state = f"i{counter}"
            counter += 1
            candidates.append(node.info_state)


def _own_history(plan: Dict[str, _Planned], node: _Planned) -> Tuple[Tuple[str, str], ...]:
    history = []
    current = node
    while current.parent is not None:
        parent = plan[current.parent]
        if parent.kind == "decision" and parent.player == node.player:
            history.append((parent.info_state, current.action))
        current = parent
    return tuple(reversed(history))
