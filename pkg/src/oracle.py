"""
Oracle - Brute-force variance components by enumerating joint action assignments

Everything here is computed by definition (conditional means over pinned
trees and terminal-history sums) so it can arbitrate the closed-form
decomposition in exact_decomposition.
"""
import logging
import math
from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterator, List, Tuple

from src.errors import AsymmetricGame, EnumerationTooLarge
from src.game_tree import CHANCE, GameTree, PlayerRef, pin_actions
from src.policies import (BehavioralPolicy, PolicyProfile, RatedPopulation, chance_policy, deterministic_policy,
                          policy_for)
from src.reports import ThreeWayReport
from src.traversal import enumerate_terminal_histories

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 1_000_000


@dataclass(frozen=True)
class JointAssignment:
    """One action per owned info state and the product of their probabilities"""

    choice: Dict[str, str]
    probability: float


def assignment_count(tree: GameTree, player: PlayerRef) -> int:
    return math.prod(len(u.actions) for u in tree.player_info_states(player))


def enumerate_assignments(tree: GameTree, policy: BehavioralPolicy,
                          cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[JointAssignment]:
    """
    Every joint assignment of the policy owner's info states with positive probability

    Raises:
        EnumerationTooLarge: the full product of action counts exceeds `cap`
    """
    owned = tree.player_info_states(policy.owner)
    required = assignment_count(tree, policy.owner)
    if required > cap:
        raise EnumerationTooLarge(required, cap)
    iset_ids = [u.info_state_id for u in owned]
    per_state = []
    for u in owned:
        dist = policy.distribution(u.info_state_id)
        per_state.append([(a, dist.get(a, 0.0)) for a in u.actions if dist.get(a, 0.0) > 0.0])
    for combo in product(*per_state):
        probability = 1.0
        for _, p in combo:
            probability *= p
        yield JointAssignment({i: a for i, (a, _) in zip(iset_ids, combo)}, probability)


def _pinned(tree: GameTree, profile: PolicyProfile, assignment: JointAssignment) -> Tuple[GameTree, PolicyProfile]:
    if not assignment.choice:
        return tree, profile
    owner = tree.info_states[next(iter(assignment.choice))].owner
    if owner == CHANCE:
        return pin_actions(tree, assignment.choice), profile
    return tree, profile.replace_policy(deterministic_policy(tree, owner, assignment.choice))


def conditional_moments(tree: GameTree, profile: PolicyProfile, target: int,
                        assignment: JointAssignment) -> Tuple[float, float]:
    """(E[Y | assignment], E[Y^2 | assignment]) by terminal-history enumeration"""
    pinned_tree, pinned_profile = _pinned(tree, profile, assignment)
    first = second = 0.0
    for history in enumerate_terminal_histories(pinned_tree, pinned_profile, CHANCE):
        reward = history.playthrough.rewards[target]
        first += history.eta * reward
        second += history.eta * reward * reward
    return first, second


def conditional_mean(tree: GameTree, profile: PolicyProfile, target: int, assignment: JointAssignment) -> float:
    return conditional_moments(tree, profile, target, assignment)[0]


def oracle_components(tree: GameTree, profile: PolicyProfile, target: int, conditioning: PlayerRef,
                      cap: int = DEFAULT_ENUMERATION_CAP) -> Tuple[float, float]:
    """
    (explained, residual) by definition

    explained is the variance over assignments of the conditional mean;
    residual is the expectation over assignments of the conditional variance.
    """
    tree.check_player(target, allow_chance=False)
    tree.check_player(conditioning)
    policy = policy_for(tree, profile, conditioning)
    weights: List[float] = []
    means: List[float] = []
    variances: List[float] = []
    for assignment in enumerate_assignments(tree, policy, cap):
        first, second = conditional_moments(tree, profile, target, assignment)
        weights.append(assignment.probability)
        means.append(first)
        variances.append(second - first * first)
    overall = sum(w * m for w, m in zip(weights, means))
    explained = sum(w * m * m for w, m in zip(weights, means)) - overall * overall
    residual = sum(w * v for w, v in zip(weights, variances))
    logger.debug(f"Oracle enumerated {len(weights)} assignments for player {conditioning}")
    return explained, residual


def oracle_explained_variance(tree: GameTree, profile: PolicyProfile, target: int, conditioning: PlayerRef,
                              cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    return oracle_components(tree, profile, target, conditioning, cap)[0]


def oracle_threeway(tree: GameTree, population: RatedPopulation, target_seat: int = 0,
                    cap: int = DEFAULT_ENUMERATION_CAP) -> ThreeWayReport:
    """
    Skill, chance and remaining terms by nested enumeration

    Rating pairs, then policy pairs, then chance assignments, then terminal
    histories. The remaining term is computed directly as the expected
    conditional variance given chance and the policy pair.
    """
    if tree.player_count != 2 or target_seat not in (0, 1):
        raise AsymmetricGame("three-way decomposition needs a two-player game and seat 0 or 1")
    opponent_seat = 1 - target_seat
    members = population.members
    chance = chance_policy(tree)
    required = len(members) ** 2 * assignment_count(tree, CHANCE)
    if required > cap:
        raise EnumerationTooLarge(required, cap, what="policy-pair chance assignments")
    assignments = list(enumerate_assignments(tree, chance, cap))

    # rating pair -> list of per-pair [(p(a), mean, second moment)] over assignments
    groups: Dict[Tuple[float, float], List[List[Tuple[float, float, float]]]] = {}
    for first in members:
        for second in members:
            seats = [None, None]
            seats[target_seat] = first.policy_for(target_seat)
            seats[opponent_seat] = second.policy_for(opponent_seat)
            profile = PolicyProfile(tuple(seats))
            rows = []
            for assignment in assignments:
                mean, moment = conditional_moments(tree, profile, target_seat, assignment)
                rows.append((assignment.probability, mean, moment))
            groups.setdefault((first.rating, second.rating), []).append(rows)

    pair_count = len(members) ** 2
    overall = second_moment = skill_second = chance_term = remaining = 0.0
    for pairs in groups.values():
        weight = len(pairs) / pair_count
        # chance-conditional mean outcome given the rating pair, per assignment
        by_assignment = [sum(rows[k][1] for rows in pairs) / len(pairs) for k in range(len(assignments))]
        probs = [assignments[k].probability for k in range(len(assignments))]
        group_mean = sum(p * m for p, m in zip(probs, by_assignment))
        group_var = sum(p * (m - group_mean) ** 2 for p, m in zip(probs, by_assignment))
        group_second = sum(p * sum(rows[k][2] for rows in pairs) / len(pairs) for k, p in enumerate(probs))
        within = group_second - sum(p * m * m for p, m in zip(probs, by_assignment))
        overall += weight * group_mean
        second_moment += weight * group_second
        skill_second += weight * group_mean * group_mean
        chance_term += weight * group_var
        remaining += weight * within
    total = second_moment - overall * overall
    skill = skill_second - overall * overall
    return ThreeWayReport(skill=skill, chance=chance_term, remaining=remaining, total=total)
