import pytest

from src.errors import GameFormatError, GameValidationError, UnknownPlayer
from src.game_tree import (CHANCE, GameBuilder, natural_key, owner_history, parse_player_ref, pin_actions,
                           validate_game)


def codes(tree):
    return {d.code for d in validate_game(tree)}


def small_builder():
    b = GameBuilder("small", 2)
    b.decision("s1", 0, "u1")
    b.leaf("z1", (1, -1)).leaf("z2", (-1, 1))
    b.edge("s1", "l", "z1").edge("s1", "r", "z2")
    return b.set_root("s1")


def test_builtin_games_are_valid(builtin_games):
    for name, tree in builtin_games.items():
        assert validate_game(tree) == [], name


def test_natural_order_of_node_ids():
    assert sorted(["n10", "n2", "n1"], key=natural_key) == ["n1", "n2", "n10"]


def test_parse_player_ref():
    assert parse_player_ref("chance") == CHANCE
    assert parse_player_ref("1") == 1
    with pytest.raises(UnknownPlayer):
        parse_player_ref("-3")
    with pytest.raises(UnknownPlayer):
        parse_player_ref("alice")


def test_check_player_names_the_game(figure1):
    with pytest.raises(UnknownPlayer, match="figure1"):
        figure1.check_player(2)
    with pytest.raises(UnknownPlayer):
        figure1.check_player(CHANCE, allow_chance=False)


def test_figure1_structure(figure1):
    assert figure1.root_id == "c1"
    assert [u.info_state_id for u in figure1.player_info_states(1)] == ["u2"]
    assert figure1.info_states["u2"].members == ("s2", "s3")
    assert [u.info_state_id for u in figure1.player_info_states(CHANCE)] == ["c1", "c2"]
    assert figure1.height == 3
    assert len(figure1.leaves()) == 6


def test_owner_history_of_figure1(figure1):
    history = owner_history(figure1, "s2")
    assert history[CHANCE] == [("c1", "left")]
    assert history[0] == [("u1", "left")]
    assert history[1] == []


def test_perfect_recall_violation_is_reported():
    b = GameBuilder("forgetful", 1)
    b.decision("s1", 0, "u1")
    b.decision("s2", 0, "u2").decision("s3", 0, "u2")
    for i in range(1, 5):
        b.leaf(f"z{i}", (float(i),))
    b.edge("s1", "l", "s2").edge("s1", "r", "s3")
    b.edge("s2", "a", "z1").edge("s2", "b", "z2")
    b.edge("s3", "a", "z3").edge("s3", "b", "z4")
    tree = b.set_root("s1").build(validate=False)
    assert "perfect-recall" in codes(tree)
    with pytest.raises(GameValidationError):
        b.build()


def test_chance_normalization_is_reported():
    b = GameBuilder("bad-chance", 1)
    b.chance("c1", [("a", 0.5), ("b", 0.6)])
    b.leaf("z1", (0,)).leaf("z2", (1,))
    b.edge("c1", "a", "z1").edge("c1", "b", "z2")
    assert "chance-normalization" in codes(b.set_root("c1").build(validate=False))


def test_structural_diagnostics():
    b = small_builder()
    b.leaf("z3", (0, 0))
    assert codes(b.build(validate=False)) == {"unreachable-node"}

    b = small_builder()
    b.leaf("z3", (float("nan"), 0))
    b.edge("s1", "m", "z3")
    assert "non-finite-reward" in codes(b.build(validate=False))

    b = small_builder()
    b.edge("s1", "m", "z1")
    assert "multiple-parents" in codes(b.build(validate=False))

    b = small_builder()
    b.edge("s1", "m", "nowhere")
    assert "dangling-edge" in codes(b.build(validate=False))

    b = small_builder().set_root("missing")
    assert "missing-root" in codes(b.build(validate=False))


def test_info_state_action_mismatch():
    b = GameBuilder("mismatch", 2)
    b.chance("c1", [("a", 0.5), ("b", 0.5)])
    b.decision("s1", 0, "u1").decision("s2", 0, "u1")
    for i in range(1, 5):
        b.leaf(f"z{i}", (0, 0))
    b.edge("c1", "a", "s1").edge("c1", "b", "s2")
    b.edge("s1", "x", "z1").edge("s1", "y", "z2")
    b.edge("s2", "x", "z3").edge("s2", "w", "z4")
    assert "infoset-action-mismatch" in codes(b.set_root("c1").build(validate=False))


def test_info_state_id_colliding_with_chance_node():
    b = GameBuilder("collide", 1)
    b.chance("c1", [("a", 1.0)])
    b.decision("s1", 0, "c1")
    b.leaf("z1", (0,)).leaf("z2", (1,))
    b.edge("c1", "a", "s1").edge("s1", "x", "z1").edge("s1", "y", "z2")
    assert "infoset-id-collision" in codes(b.set_root("c1").build(validate=False))


def test_builder_rejects_duplicates():
    b = small_builder()
    with pytest.raises(GameFormatError):
        b.leaf("z1", (0, 0))
    b = GameBuilder("g", 1)
    b.chance("c1", [("a", 1.0)])
    with pytest.raises(GameFormatError):
        b.edge("c1", "b", "z1")


def test_pin_actions(figure1):
    pinned = pin_actions(figure1, {"c1": "right"})
    assert pinned.nodes["c1"].probs == (0.0, 1.0)
    assert figure1.nodes["c1"].probs == (0.5, 0.5)


def test_with_rewards_is_a_copy(figure1):
    doubled = figure1.with_rewards(lambda r: 2 * r)
    assert doubled.nodes["z2"].rewards == (-2.0, 2.0)
    assert figure1.nodes["z2"].rewards == (-1.0, 1.0)


def test_build_renormalizes_chance_within_tolerance():
    b = GameBuilder("drift", 1)
    b.chance("c1", [("a", 0.5 + 4e-13), ("b", 0.5)])
    b.leaf("z1", (0,)).leaf("z2", (1,))
    b.edge("c1", "a", "z1").edge("c1", "b", "z2")
    tree = b.set_root("c1").build()
    assert sum(tree.nodes["c1"].probs) == pytest.approx(1.0, abs=1e-15)
