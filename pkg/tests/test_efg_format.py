import numpy as np
import pytest

from src.efg_format import parse_game, parse_policy, parse_population, serialize_game, serialize_policy
from src.errors import GameFormatError, PolicyFormatError, PopulationFormatError
from src.game_tree import validate_game
from src.policies import random_policy

FIGURE1_DOC = """\
# small game with two chance nodes
game "figure1" players 2
chance c1 left:0.5 right:0.5
edge c1 left s1
edge c1 right c2
node s1 player 0 infoset u1
edge s1 left s2
edge s1 right s3
node s2 player 1 infoset u2
node s3 player 1 infoset u2
edge s2 left z1
edge s2 right z2
edge s3 left z3
edge s3 right z4
chance c2 left:0.5 right:0.5
edge c2 left z5
edge c2 right z6
leaf z1 0 0
leaf z2 -1 1
leaf z3 1 -1
leaf z4 0 0
leaf z5 1 -1
leaf z6 -1 1
root c1
"""


def test_parse_figure1_document(figure1):
    tree = parse_game(FIGURE1_DOC)
    assert tree.nodes.keys() == figure1.nodes.keys()
    assert tree.info_states["u2"].members == ("s2", "s3")
    assert tree.nodes["z2"].rewards == (-1.0, 1.0)


def test_parse_serialize_is_identity_on_builtins(builtin_games):
    for name, tree in builtin_games.items():
        assert parse_game(serialize_game(tree)) == tree, name


def test_serialize_parse_is_identity_on_canonical_documents(builtin_games):
    for tree in builtin_games.values():
        canonical = serialize_game(tree)
        assert serialize_game(parse_game(canonical)) == canonical


def test_dangling_edge_carries_line():
    broken = FIGURE1_DOC.replace("edge c2 right z6", "edge c2 right z7")
    with pytest.raises(GameFormatError, match="dangling") as info:
        parse_game(broken)
    assert info.value.line == 17


def test_missing_root():
    with pytest.raises(GameFormatError, match="missing root") as info:
        parse_game(FIGURE1_DOC.replace("root c1\n", ""))
    assert info.value.line is not None


def test_reward_arity():
    with pytest.raises(GameFormatError, match="reward arity") as info:
        parse_game(FIGURE1_DOC.replace("leaf z4 0 0", "leaf z4 0"))
    assert info.value.line == 21


def test_chance_normalization():
    with pytest.raises(GameFormatError, match="normalization") as info:
        parse_game(FIGURE1_DOC.replace("chance c2 left:0.5 right:0.5", "chance c2 left:0.5 right:0.6"))
    assert info.value.line == 15


def test_missing_header_and_duplicate_ids():
    with pytest.raises(GameFormatError, match="missing header"):
        parse_game(FIGURE1_DOC.split("\n", 2)[2])
    with pytest.raises(GameFormatError, match="duplicate node id") as info:
        parse_game(FIGURE1_DOC.replace("leaf z6 -1 1", "leaf z5 -1 1"))
    assert info.value.line == 23


def test_info_state_owner_mismatch_is_located():
    doc = FIGURE1_DOC.replace("node s3 player 1 infoset u2", "node s3 player 0 infoset u2")
    with pytest.raises(GameFormatError) as info:
        parse_game(doc)
    assert info.value.line is not None
    assert validate_game(parse_game(doc, validate=False))


def test_policy_round_trip(figure1):
    policy = parse_policy("policy player 1\ninfoset u2 left:0.25 right:0.75\n", figure1)
    assert policy.owner == 1
    assert policy.distribution("u2") == {"left": 0.25, "right": 0.75}
    assert parse_policy(serialize_policy(policy, figure1), figure1) == policy


def test_policy_defaults_to_uniform(kuhn):
    policy = parse_policy("policy player 0\ninfoset K b:1\n", kuhn)
    assert policy.distribution("K") == {"p": 0.0, "b": 1.0}
    assert policy.distribution("J") == {"p": 0.5, "b": 0.5}
    rng = np.random.default_rng(4)
    sampled = random_policy(kuhn, 1, rng)
    assert parse_policy(serialize_policy(sampled, kuhn), kuhn) == sampled


def test_policy_errors(figure1):
    with pytest.raises(PolicyFormatError, match="unknown info state"):
        parse_policy("policy player 1\ninfoset u9 left:1\n", figure1)
    with pytest.raises(PolicyFormatError, match="player mismatch") as info:
        parse_policy("policy player 1\ninfoset u1 left:1\n", figure1)
    assert info.value.line == 2
    with pytest.raises(PolicyFormatError, match="normalization"):
        parse_policy("policy player 1\ninfoset u2 left:0.5 right:0.6\n", figure1)
    with pytest.raises(PolicyFormatError, match="no action"):
        parse_policy("policy player 1\ninfoset u2 up:1\n", figure1)
    with pytest.raises(PolicyFormatError, match="missing header"):
        parse_policy("infoset u2 left:1\n", figure1)


def test_parse_population(builtin_games):
    tree = builtin_games["skill-rps"]
    doc = "\n".join([
        "population",
        "member strong rating 2",
        "infoset pick1 2R:0.5 2P:0.25 2S:0.25",
        "infoset pick2 2R:1",
        "member casual rating 1",
    ]) + "\n"
    population = parse_population(doc, tree)
    assert len(population) == 2
    strong = population.members[0]
    assert strong.rating == 2.0
    assert strong.policy_for(0).prob("pick1", "2R") == 0.5
    assert strong.policy_for(1).prob("pick2", "2R") == 1.0
    casual = population.members[1]
    assert casual.policy_for(0).prob("pick1", "1R") == pytest.approx(1 / 6)


def test_population_errors(builtin_games):
    tree = builtin_games["skill-rps"]
    with pytest.raises(PopulationFormatError, match="missing header"):
        parse_population("member a rating 1\n", tree)
    with pytest.raises(PopulationFormatError, match="no members"):
        parse_population("population\n", tree)
    with pytest.raises(PopulationFormatError, match="duplicate member") as info:
        parse_population("population\nmember a rating 1\nmember a rating 2\n", tree)
    assert info.value.line == 3


MUTATION_TOKENS = ["node", "edge", "leaf", "chance", "root", "game", "players", "player", "infoset", "x:1",
                   "left:0.5", "-1", "0", "1e999", "nan", '"', "#", "s1", "z1", "c1", "u2", ":", "=", ""]


def mutate(text: str, rng: np.random.Generator) -> str:
    lines = text.splitlines()
    for _ in range(int(rng.integers(1, 4))):
        if not lines:
            break
        op = int(rng.integers(5))
        index = int(rng.integers(len(lines)))
        if op == 0:
            del lines[index]
        elif op == 1:
            lines.insert(int(rng.integers(len(lines) + 1)), lines[index])
        elif op == 2:
            tokens = lines[index].split(" ")
            tokens[int(rng.integers(len(tokens)))] = MUTATION_TOKENS[int(rng.integers(len(MUTATION_TOKENS)))]
            lines[index] = " ".join(tokens)
        elif op == 3:
            other = int(rng.integers(len(lines)))
            lines[index], lines[other] = lines[other], lines[index]
        else:
            lines[index] = lines[index][: int(rng.integers(len(lines[index]) + 1))]
    return "\n".join(lines) + "\n"


@pytest.mark.slow
def test_fuzzed_documents_never_crash_the_parser(builtin_games):
    rng = np.random.default_rng(20240601)
    seeds = [serialize_game(builtin_games["figure1"]), serialize_game(builtin_games["chance-rps"]), FIGURE1_DOC]
    outcomes = {"valid": 0, "error": 0}
    for case in range(10_000):
        text = mutate(seeds[case % len(seeds)], rng)
        try:
            tree = parse_game(text)
        except GameFormatError as e:
            assert e.line is not None and e.line >= 1
            outcomes["error"] += 1
        else:
            assert validate_game(tree) == []
            outcomes["valid"] += 1
    assert outcomes["error"] > 0 and outcomes["valid"] > 0
