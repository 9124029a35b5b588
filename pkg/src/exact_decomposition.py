"""
Exact Decomposition - Closed-form variance components over the full game tree

The explained part of V(Y) for a conditioning player is the sum, over that
player's reachable info states u, of

    (sum_a q(u,a)^2 pi(a|u) - v(u)^2) * eta_others(u) * eta(u)

with q and v taken on the target player's reward.
"""
import logging
import math
from collections import defaultdict
from typing import Dict, List, Tuple

from src.errors import AsymmetricGame, ChanceEnumerationTooLarge
from src.game_tree import CHANCE, GameTree, PlayerRef, player_label
from src.oracle import assignment_count, enumerate_assignments
from src.policies import PolicyProfile, RatedPopulation, chance_policy, point_mass, policy_for
from src.reports import DecompositionReport, InfoStateContribution, ThreeWayReport
from src.traversal import InfoStateValues, enumerate_terminal_histories, evaluate_moments, reach_and_values

logger = logging.getLogger(__name__)

DEFAULT_CHANCE_CAP = 100_000
NEGATIVE_TOLERANCE = 1e-12
ZERO_SUM_TOLERANCE = 1e-12
_SEAT_SYMMETRIC_BUILTINS = {"rps", "skill-rps"}


def _clamped(value: float, what: str, scale: float = 1.0) -> float:
    if value >= 0.0:
        return value
    if value < -NEGATIVE_TOLERANCE * max(1.0, scale):
        logger.warning(f"⚠️ {what} is {value!r}, below tolerance; clamping to 0")
    return 0.0


def value_spread(values: InfoStateValues, dist: Dict[str, float]) -> float:
    """Policy-weighted variance of q around v at one reachable info state"""
    second = sum(values.q[a] ** 2 * dist.get(a, 0.0) for a in values.q if dist.get(a, 0.0) > 0.0)
    return second - values.value ** 2


def total_variance(tree: GameTree, profile: PolicyProfile, target: int) -> float:
    """V(Y) of the target reward by terminal-history enumeration"""
    tree.check_player(target, allow_chance=False)
    histories = enumerate_terminal_histories(tree, profile, CHANCE)
    if not histories:
        return 0.0
    # shifted by the first reward so a constant game is exactly 0
    shift = histories[0].playthrough.rewards[target]
    deviations = [(h.eta, h.playthrough.rewards[target] - shift) for h in histories]
    mean = math.fsum(eta * d for eta, d in deviations)
    return math.fsum(eta * (d - mean) ** 2 for eta, d in deviations)


def explained_variance(tree: GameTree, profile: PolicyProfile, target: int,
                       conditioning: PlayerRef) -> DecompositionReport:
    """
    Decompose V(Y) with respect to one player's actions

    Args:
        tree: Valid game
        profile: Policies of the non-chance players
        target: Player whose reward is Y
        conditioning: Player (or CHANCE) whose actions explain part of V(Y)

    Returns:
        DecompositionReport with per-info-state contributions in canonical order
    """
    tree.check_player(target, allow_chance=False)
    tree.check_player(conditioning)
    table = reach_and_values(tree, profile, conditioning, target)
    policy = policy_for(tree, profile, conditioning)

    contributions: List[InfoStateContribution] = []
    for iset_id, values in table.items():
        if not values.reachable:
            contributions.append(InfoStateContribution(info_state=iset_id, contribution=0.0, reach=0.0))
            continue
        spread = value_spread(values, policy.distribution(iset_id))
        contribution = _clamped(spread * values.eta_others * values.eta, f"contribution of '{iset_id}'")
        contributions.append(InfoStateContribution(info_state=iset_id, contribution=contribution, reach=values.eta))

    total = total_variance(tree, profile, target)
    explained = math.fsum(c.contribution for c in contributions)
    residual = _clamped(total - explained, "residual variance", total)
    ratio = min(1.0, explained / total) if total > 0.0 else 0.0
    logger.info(f"Computed explained variance {explained:.6g} of {total:.6g} for target {target} "
                f"conditioning on {player_label(conditioning)}")
    return DecompositionReport(target_player=target, conditioning_player=conditioning, total_variance=total,
                               explained=explained, residual=residual, explained_ratio=ratio,
                               per_info_state=contributions)


def decompose_all(tree: GameTree, profile: PolicyProfile, target: int) -> List[DecompositionReport]:
    """One report per conditioning player: chance first, then every seat"""
    players = [CHANCE] + list(range(tree.player_count))
    return [explained_variance(tree, profile, target, p) for p in players]


def check_zero_sum(tree: GameTree) -> None:
    if tree.player_count != 2:
        raise AsymmetricGame(f"three-way decomposition needs a two-player game, '{tree.name}' has "
                             f"{tree.player_count}")
    for leaf in tree.leaves():
        if abs(leaf.rewards[0] + leaf.rewards[1]) > ZERO_SUM_TOLERANCE:
            raise AsymmetricGame(f"leaf '{leaf.node_id}' rewards {leaf.rewards} do not negate (not zero-sum)")
    if tree.name not in _SEAT_SYMMETRIC_BUILTINS:
        logger.warning(f"⚠️ Seat symmetry of game '{tree.name}' is not verified")


def threeway_decompose(tree: GameTree, population: RatedPopulation, target_seat: int = 0,
                       chance_cap: int = DEFAULT_CHANCE_CAP) -> ThreeWayReport:
    """
    Skill / chance / remaining split of V(Y) for a rated population

    Both seats are filled uniformly with replacement from the population.
    Every ordered member pair is evaluated exactly under every joint chance
    assignment; skill is the variance of the rating-pair mean, chance the
    expected variance over chance assignments of the rating-pair conditional
    mean, and remaining what is left of the total.

    Raises:
        AsymmetricGame: not a two-player zero-sum game
        ChanceEnumerationTooLarge: more joint chance assignments than `chance_cap`
    """
    check_zero_sum(tree)
    if target_seat not in (0, 1):
        raise AsymmetricGame(f"target seat must be 0 or 1, got {target_seat}")
    required = assignment_count(tree, CHANCE)
    if required > chance_cap:
        raise ChanceEnumerationTooLarge(required, chance_cap)
    assignments = list(enumerate_assignments(tree, chance_policy(tree), cap=chance_cap))
    overrides = [{iset: point_mass(tree.info_states[iset].actions, action)
                  for iset, action in a.choice.items()} for a in assignments]
    probs = [a.probability for a in assignments]
    opponent_seat = 1 - target_seat

    # rating pair -> summed per-assignment means, pair count
    mean_sums: Dict[Tuple[float, float], List[float]] = defaultdict(lambda: [0.0] * len(assignments))
    pair_counts: Dict[Tuple[float, float], int] = defaultdict(int)
    overall = second_moment = 0.0
    for first in population.members:
        for second in population.members:
            seats = [None, None]
            seats[target_seat] = first.policy_for(target_seat)
            seats[opponent_seat] = second.policy_for(opponent_seat)
            profile = PolicyProfile(tuple(seats))
            key = (first.rating, second.rating)
            pair_counts[key] += 1
            sums = mean_sums[key]
            for k, pinned in enumerate(overrides):
                mean, moment = evaluate_moments(tree, profile, target_seat, pinned)
                sums[k] += mean
                overall += probs[k] * mean
                second_moment += probs[k] * moment

    pair_total = len(population) ** 2
    overall /= pair_total
    second_moment /= pair_total
    total = second_moment - overall * overall

    skill = chance = 0.0
    for key, sums in mean_sums.items():
        weight = pair_counts[key] / pair_total
        by_assignment = [s / pair_counts[key] for s in sums]
        group_mean = sum(p * m for p, m in zip(probs, by_assignment))
        skill += weight * (group_mean - overall) ** 2
        chance += weight * sum(p * (m - group_mean) ** 2 for p, m in zip(probs, by_assignment))

    remaining = total - skill - chance
    logger.info(f"Three-way decomposition over {pair_total} policy pairs and {len(assignments)} chance "
                f"assignments: skill {skill:.6g}, chance {chance:.6g}, remaining {remaining:.6g}")
    return ThreeWayReport(skill=_clamped(skill, "skill component", total),
                          chance=_clamped(chance, "chance component", total),
                          remaining=_clamped(remaining, "remaining component", total),
                          total=_clamped(total, "total variance"))
