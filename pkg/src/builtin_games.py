"""
Builtin Games - Constructors for the reference games used throughout the toolkit
"""
import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

from src.errors import InvalidParameters
from src.game_tree import GameBuilder, GameTree
from src.policies import BehavioralPolicy, RatedMember, RatedPopulation

logger = logging.getLogger(__name__)

RPS_MOVES = ("R", "P", "S")
_BEATS = {("R", "S"), ("P", "R"), ("S", "P")}


def rps_payoff(first: str, second: str) -> int:
    """+1 if `first` beats `second`, -1 if it loses, 0 on a tie"""
    if first == second:
        return 0
    return 1 if (first, second) in _BEATS else -1


def _zero_sum(reward: float) -> Tuple[float, float]:
    # 0.0 - r keeps ties at +0.0
    return float(reward), 0.0 - float(reward)


def build_figure1() -> GameTree:
    """
    Small two-player game with two chance nodes

    Only Player 1's rewards are given by the game's definition; Player 2
    receives their negation, which makes the game zero-sum.
    """
    b = GameBuilder("figure1", 2)
    b.chance("c1", [("left", 0.5), ("right", 0.5)])
    b.decision("s1", 0, "u1")
    b.decision("s2", 1, "u2")
    b.decision("s3", 1, "u2")
    b.chance("c2", [("left", 0.5), ("right", 0.5)])
    for leaf_id, reward in zip(("z1", "z2", "z3", "z4", "z5", "z6"), (0, -1, 1, 0, 1, -1)):
        b.leaf(leaf_id, _zero_sum(reward))
    b.edge("c1", "left", "s1").edge("c1", "right", "c2")
    b.edge("s1", "left", "s2").edge("s1", "right", "s3")
    b.edge("s2", "left", "z1").edge("s2", "right", "z2")
    b.edge("s3", "left", "z3").edge("s3", "right", "z4")
    b.edge("c2", "left", "z5").edge("c2", "right", "z6")
    return b.set_root("c1").build()


def build_rps() -> GameTree:
    """Rock-paper-scissors, Player 2 moves without seeing Player 1's choice"""
    b = GameBuilder("rps", 2)
    b.decision("s1", 0, "p1")
    leaf = 0
    for index, first in enumerate(RPS_MOVES, start=2):
        node_id = f"s{index}"
        b.decision(node_id, 1, "p2")
        b.edge("s1", first, node_id)
        for second in RPS_MOVES:
            leaf += 1
            b.leaf(f"z{leaf}", _zero_sum(rps_payoff(first, second)))
            b.edge(node_id, second, f"z{leaf}")
    return b.set_root("s1").build()


def build_chance_rps(distribution: Optional[Sequence[float]] = None) -> GameTree:
    """
    One-player rock-paper-scissors against chance

    Chance moves first and Player 1 cannot see its move.

    Args:
        distribution: Chance probabilities of R, P, S (default uniform)
    """
    probs = tuple(float(p) for p in distribution) if distribution is not None else (1 / 3, 1 / 3, 1 / 3)
    if len(probs) != 3:
        raise InvalidParameters("chance-rps distribution needs three probabilities (R, P, S)")
    b = GameBuilder("chance-rps", 1)
    b.chance("c1", list(zip(RPS_MOVES, probs)))
    leaf = 0
    for index, chance_move in enumerate(RPS_MOVES, start=1):
        node_id = f"s{index}"
        b.decision(node_id, 0, "p1")
        b.edge("c1", chance_move, node_id)
        for move in RPS_MOVES:
            leaf += 1
            b.leaf(f"z{leaf}", (float(rps_payoff(move, chance_move)),))
            b.edge(node_id, move, f"z{leaf}")
    try:
        return b.set_root("c1").build()
    except ValueError as e:
        raise InvalidParameters(f"invalid chance-rps distribution: {e}")


def skill_rps_actions(n: int) -> Tuple[str, ...]:
    return tuple(f"{number}{move}" for number in range(1, n + 1) for move in RPS_MOVES)


def _sign(value: int) -> int:
    return (value > 0) - (value < 0)


def check_skill_rps_params(n, c, alpha) -> Tuple[int, int, float]:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InvalidParameters(f"SkillRPS needs an integer n >= 1, got {n!r}")
    if isinstance(c, bool) or not isinstance(c, int) or c < 0:
        raise InvalidParameters(f"SkillRPS needs an integer c >= 0, got {c!r}")
    try:
        alpha = float(alpha)
    except (TypeError, ValueError):
        raise InvalidParameters(f"SkillRPS needs a real alpha, got {alpha!r}")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameters(f"SkillRPS needs alpha in [0, 1], got {alpha!r}")
    return n, c, alpha


def build_skill_rps(n: int, c: int, alpha: float) -> GameTree:
    """
    SkillRPS(n, c, alpha)

    Chance node W picks the coin-flip branch with probability alpha; there
    chance node Z decides the winner. Otherwise both players secretly choose
    a number in 1..n and an RPS move (one info state of 3n actions each) and
    Player 1 receives sign(N1 - N2 + c * RPS(A1, A2)).
    """
    n, c, alpha = check_skill_rps_params(n, c, alpha)
    actions = skill_rps_actions(n)
    b = GameBuilder("skill-rps", 2)
    b.chance("w", [("0", 1.0 - alpha), ("1", alpha)])
    b.chance("z", [("0", 0.5), ("1", 0.5)])
    b.leaf("h0", _zero_sum(-1)).leaf("h1", _zero_sum(1))
    b.edge("w", "1", "z").edge("z", "0", "h0").edge("z", "1", "h1")

    b.decision("s1", 0, "pick1")
    b.edge("w", "0", "s1")
    leaf = 0
    for index, first in enumerate(actions, start=1):
        node_id = f"t{index}"
        b.decision(node_id, 1, "pick2")
        b.edge("s1", first, node_id)
        for second in actions:
            leaf += 1
            score = int(first[:-1]) - int(second[:-1]) + c * rps_payoff(first[-1], second[-1])
            b.leaf(f"x{leaf}", _zero_sum(_sign(score)))
            b.edge(node_id, second, f"x{leaf}")
    return b.set_root("w").build()


KUHN_CARDS = ("J", "Q", "K")


def build_kuhn_poker() -> GameTree:
    """
    Three-card Kuhn poker with ante 1 and bet 1

    Actions are `p` (check or fold) and `b` (bet or call). Node ids spell the
    deal followed by the betting history; info state ids spell the acting
    player's card followed by the betting history.
    """
    b = GameBuilder("kuhn", 2)
    deals = [(x, y) for x in KUHN_CARDS for y in KUHN_CARDS if x != y]
    b.chance("d", [(x + y, 1.0 / len(deals)) for x, y in deals])
    for first, second in deals:
        deal = first + second
        win = 1 if KUHN_CARDS.index(first) > KUHN_CARDS.index(second) else -1
        b.edge("d", deal, deal)
        b.decision(deal, 0, first)
        b.decision(deal + "p", 1, second + "p")
        b.decision(deal + "b", 1, second + "b")
        b.decision(deal + "pb", 0, first + "pb")
        b.leaf(deal + "pp", _zero_sum(win))
        b.leaf(deal + "pbp", _zero_sum(-1))
        b.leaf(deal + "pbb", _zero_sum(2 * win))
        b.leaf(deal + "bp", _zero_sum(1))
        b.leaf(deal + "bb", _zero_sum(2 * win))
        b.edge(deal, "p", deal + "p").edge(deal, "b", deal + "b")
        b.edge(deal + "p", "p", deal + "pp").edge(deal + "p", "b", deal + "pb")
        b.edge(deal + "pb", "p", deal + "pbp").edge(deal + "pb", "b", deal + "pbb")
        b.edge(deal + "b", "p", deal + "bp").edge(deal + "b", "b", deal + "bb")
    return b.set_root("d").build()


def canonical_skill_rps_population(tree: GameTree, n: int) -> RatedPopulation:
    """One member per number N: always picks N, uniform RPS move, rating N"""
    actions = skill_rps_actions(n)
    members = []
    for number in range(1, n + 1):
        chosen = {f"{number}{move}" for move in RPS_MOVES}
        dist = {a: (1.0 / 3.0 if a in chosen else 0.0) for a in actions}
        seats = {0: BehavioralPolicy(0, {"pick1": dict(dist)}),
                 1: BehavioralPolicy(1, {"pick2": dict(dist)})}
        members.append(RatedMember(f"n{number}", float(number), seats))
    return RatedPopulation(tuple(members))


BUILTIN_GAMES: Dict[str, Callable[..., GameTree]] = {
    "figure1": build_figure1,
    "rps": build_rps,
    "chance-rps": build_chance_rps,
    "skill-rps": build_skill_rps,
    "kuhn": build_kuhn_poker,
}


def build_builtin(name: str, **params) -> GameTree:
    try:
        constructor = BUILTIN_GAMES[name]
    except KeyError:
        raise InvalidParameters(f"unknown built-in game '{name}' (known: {', '.join(BUILTIN_GAMES)})")
    return constructor(**params)


def parse_builtin_ref(ref: str) -> Tuple[str, dict]:
    """
    Split `builtin:<name>[:<args>]` into a name and constructor keyword arguments

    Only skill-rps takes arguments (`n,c,alpha`).
    """
    parts = ref.split(":")
    if parts[0] != "builtin" or len(parts) not in (2, 3) or not parts[1]:
        raise InvalidParameters(f"malformed built-in reference '{ref}'")
    name = parts[1]
    if len(parts) == 2:
        if name == "skill-rps":
            raise InvalidParameters("skill-rps needs parameters: builtin:skill-rps:n,c,alpha")
        return name, {}
    if name != "skill-rps":
        raise InvalidParameters(f"built-in '{name}' takes no parameters")
    return name, dict(zip(("n", "c", "alpha"), parse_skill_rps_args(parts[2])))


def parse_skill_rps_args(text: str) -> Tuple[int, int, float]:
    pieces = text.split(",")
    if len(pieces) != 3:
        raise InvalidParameters(f"expected 'n,c,alpha', got '{text}'")
    try:
        n, c, alpha = int(pieces[0]), int(pieces[1]), float(pieces[2])
    except ValueError:
        raise InvalidParameters(f"expected 'n,c,alpha', got '{text}'")
    return check_skill_rps_params(n, c, alpha)
