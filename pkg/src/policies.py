"""
Policies - Behavioral policies, policy profiles and rated policy populations
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.errors import InputError, InvalidParameters, UnknownPlayer
from src.game_tree import (CHANCE, PROBABILITY_TOLERANCE, Diagnostic, GameTree, Node, PlayerRef,
                           player_label)

logger = logging.getLogger(__name__)

# info state id -> {action label -> probability}
Distribution = Dict[str, float]


@dataclass(frozen=True)
class BehavioralPolicy:
    """Independent action distribution at every info state owned by `owner`"""

    owner: PlayerRef
    probs: Dict[str, Distribution]

    def distribution(self, info_state_id: str) -> Distribution:
        try:
            return self.probs[info_state_id]
        except KeyError:
            raise InputError(f"policy of player {player_label(self.owner)} does not cover "
                             f"info state '{info_state_id}'")

    def prob(self, info_state_id: str, action: str) -> float:
        return self.distribution(info_state_id).get(action, 0.0)


@dataclass(frozen=True)
class PolicyProfile:
    """One behavioral policy per non-chance player, indexed by seat"""

    policies: Tuple[BehavioralPolicy, ...]

    def policy(self, player: PlayerRef) -> BehavioralPolicy:
        if not 0 <= player < len(self.policies):
            raise UnknownPlayer(f"profile has no policy for player {player_label(player)}")
        return self.policies[player]

    def replace_policy(self, policy: BehavioralPolicy) -> "PolicyProfile":
        policies = list(self.policies)
        policies[policy.owner] = policy
        return PolicyProfile(tuple(policies))


@dataclass(frozen=True)
class RatedMember:
    """Population member: a policy for each seat it may occupy and a skill rating"""

    name: str
    rating: float
    seat_policies: Dict[int, BehavioralPolicy] = field(default_factory=dict)

    def policy_for(self, seat: int) -> BehavioralPolicy:
        try:
            return self.seat_policies[seat]
        except KeyError:
            raise InputError(f"member '{self.name}' has no policy for seat {seat}")


@dataclass(frozen=True)
class RatedPopulation:
    """Finite set of rated policies sampled uniformly with replacement"""

    members: Tuple[RatedMember, ...]

    def __post_init__(self):
        if not self.members:
            raise InvalidParameters("population needs at least one member")
        for member in self.members:
            if not math.isfinite(member.rating):
                raise InvalidParameters(f"member '{member.name}' has a non-finite rating")

    def __len__(self) -> int:
        return len(self.members)


def _owned(tree: GameTree, player: PlayerRef):
    if player != CHANCE:
        tree.check_player(player, allow_chance=False)
    return tree.player_info_states(player)


def uniform_policy(tree: GameTree, player: PlayerRef) -> BehavioralPolicy:
    probs = {}
    for u in _owned(tree, player):
        share = 1.0 / len(u.actions)
        probs[u.info_state_id] = {a: share for a in u.actions}
    return BehavioralPolicy(player, probs)


def uniform_profile(tree: GameTree) -> PolicyProfile:
    return PolicyProfile(tuple(uniform_policy(tree, p) for p in range(tree.player_count)))


def deterministic_policy(tree: GameTree, player: PlayerRef,
                         choices: Optional[Mapping[str, str]] = None) -> BehavioralPolicy:
    """Point-mass policy; info states missing from `choices` take their first action"""
    choices = dict(choices or {})
    probs = {}
    for u in _owned(tree, player):
        chosen = choices.pop(u.info_state_id, u.actions[0])
        if chosen not in u.actions:
            raise InputError(f"info state '{u.info_state_id}' has no action '{chosen}'")
        probs[u.info_state_id] = {a: (1.0 if a == chosen else 0.0) for a in u.actions}
    if choices:
        raise InputError(f"player {player_label(player)} owns no info state {sorted(choices)}")
    return BehavioralPolicy(player, probs)


def random_policy(tree: GameTree, player: PlayerRef, rng: np.random.Generator) -> BehavioralPolicy:
    """Dirichlet(1) distribution at every owned info state"""
    probs = {}
    for u in _owned(tree, player):
        weights = rng.dirichlet(np.ones(len(u.actions)))
        probs[u.info_state_id] = {a: float(w) for a, w in zip(u.actions, weights)}
    return BehavioralPolicy(player, probs)


def random_profile(tree: GameTree, rng: np.random.Generator) -> PolicyProfile:
    return PolicyProfile(tuple(random_policy(tree, p, rng) for p in range(tree.player_count)))


def chance_policy(tree: GameTree) -> BehavioralPolicy:
    """The game's fixed chance distributions viewed as a policy owned by CHANCE"""
    probs = {}
    for u in tree.player_info_states(CHANCE):
        node = tree.nodes[u.members[0]]
        probs[u.info_state_id] = dict(zip(node.actions, node.probs))
    return BehavioralPolicy(CHANCE, probs)


def policy_for(tree: GameTree, profile: PolicyProfile, player: PlayerRef) -> BehavioralPolicy:
    if player == CHANCE:
        return chance_policy(tree)
    tree.check_player(player, allow_chance=False)
    return profile.policy(player)


def validate_policy(policy: BehavioralPolicy, tree: GameTree) -> List[Diagnostic]:
    """Coverage, support and normalization checks of one policy against a tree"""
    diags: List[Diagnostic] = []
    owned = {u.info_state_id: u for u in tree.player_info_states(policy.owner)}
    for iset_id, dist in policy.probs.items():
        u = owned.get(iset_id)
        if u is None:
            diags.append(Diagnostic("policy-unknown-infoset",
                                    f"player {player_label(policy.owner)} owns no info state '{iset_id}'",
                                    (iset_id,)))
            continue
        unknown = [a for a in dist if a not in u.actions]
        if unknown:
            diags.append(Diagnostic("policy-unknown-action",
                                    f"info state '{iset_id}' has no action(s) {unknown}", (iset_id, *unknown)))
        if not all(math.isfinite(p) and p >= 0.0 for p in dist.values()):
            diags.append(Diagnostic("policy-negative", f"info state '{iset_id}' has a negative probability",
                                    (iset_id,)))
        elif abs(math.fsum(dist.values()) - 1.0) > PROBABILITY_TOLERANCE:
            diags.append(Diagnostic("policy-normalization",
                                    f"distribution at '{iset_id}' sums to {math.fsum(dist.values())!r}",
                                    (iset_id,)))
    for iset_id in owned:
        if iset_id not in policy.probs:
            diags.append(Diagnostic("policy-coverage", f"policy does not cover info state '{iset_id}'",
                                    (iset_id,)))
    return diags


def validate_profile(profile: PolicyProfile, tree: GameTree) -> List[Diagnostic]:
    if len(profile.policies) != tree.player_count:
        return [Diagnostic("profile-size", f"profile has {len(profile.policies)} policies, game has "
                                           f"{tree.player_count} players")]
    diags: List[Diagnostic] = []
    for seat, policy in enumerate(profile.policies):
        if policy.owner != seat:
            diags.append(Diagnostic("profile-owner", f"policy in seat {seat} belongs to player "
                                                     f"{player_label(policy.owner)}"))
            continue
        diags.extend(validate_policy(policy, tree))
    return diags


def node_distributions(tree: GameTree, profile: PolicyProfile,
                       overrides: Optional[Mapping[str, Distribution]] = None
                       ) -> Dict[str, Tuple[float, ...]]:
    """
    Action probabilities at every non-terminal node, aligned with node.actions

    Args:
        tree: Game
        profile: Policies of the non-chance players
        overrides: Optional info state id -> distribution replacing the profile
            (or the chance distribution) at that info state

    Returns:
        Dict node id -> probability tuple
    """
    overrides = overrides or {}
    table: Dict[str, Tuple[float, ...]] = {}
    for node_id, node in tree.nodes.items():
        if node.is_terminal:
            continue
        iset_id = tree.info_state_id(node)
        if iset_id in overrides:
            dist = overrides[iset_id]
            table[node_id] = tuple(dist.get(a, 0.0) for a in node.actions)
        elif node.is_chance:
            table[node_id] = node.probs
        else:
            dist = profile.policy(node.player).distribution(iset_id)
            table[node_id] = tuple(dist.get(a, 0.0) for a in node.actions)
    return table


def point_mass(actions: Sequence[str], chosen: str) -> Distribution:
    return {a: (1.0 if a == chosen else 0.0) for a in actions}
