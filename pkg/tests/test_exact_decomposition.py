import numpy as np
import pytest

from src.builtin_games import build_chance_rps, build_skill_rps, canonical_skill_rps_population
from src.errors import AsymmetricGame, ChanceEnumerationTooLarge, UnknownPlayer
from src.exact_decomposition import decompose_all, explained_variance, threeway_decompose, total_variance
from src.game_tree import CHANCE, GameBuilder
from src.policies import BehavioralPolicy, RatedPopulation, deterministic_policy, random_profile, uniform_profile
from src.skillrps_analytic import SkillRpsParams, analytic_threeway


def relative(a, b):
    return abs(a - b) / max(1.0, abs(b))


def test_figure1_components(figure1, uniform):
    assert total_variance(figure1, uniform, 0) == pytest.approx(0.75, abs=1e-12)
    chance = explained_variance(figure1, uniform, 0, CHANCE)
    assert chance.explained == pytest.approx(0.5, abs=1e-12)
    assert chance.residual == pytest.approx(0.25, abs=1e-12)
    assert chance.explained_ratio == pytest.approx(2 / 3)
    player1 = explained_variance(figure1, uniform, 0, 0)
    assert player1.explained == pytest.approx(0.0625, abs=1e-12)
    assert [c.info_state for c in player1.per_info_state] == ["u1"]
    assert explained_variance(figure1, uniform, 0, 1).explained == pytest.approx(0.0625, abs=1e-12)


def test_deterministic_conditioning_player_explains_nothing(figure1):
    profile = uniform_profile(figure1).replace_policy(deterministic_policy(figure1, 0))
    assert explained_variance(figure1, profile, 0, 0).explained == 0.0


def test_chance_rps_chance_component_is_zero():
    tree = build_chance_rps()
    report = explained_variance(tree, uniform_profile(tree), 0, CHANCE)
    assert abs(report.explained) <= 1e-12
    assert report.total_variance == pytest.approx(2 / 3, abs=1e-9)
    assert report.explained_ratio == 0.0


def test_chance_rps_with_biased_player():
    tree = build_chance_rps()
    profile = uniform_profile(tree)
    biased = profile.replace_policy(BehavioralPolicy(0, {"p1": {"R": 0.8, "P": 0.1, "S": 0.1}}))
    assert explained_variance(tree, biased, 0, CHANCE).explained == pytest.approx(0.98 / 3, abs=1e-12)


def test_kuhn_chance_component(kuhn):
    report = explained_variance(kuhn, uniform_profile(kuhn), 0, CHANCE)
    assert report.explained == pytest.approx(1.0, abs=1e-12)
    assert report.total_variance == pytest.approx(135 / 64, abs=1e-12)


def test_constant_game_has_zero_variance():
    b = GameBuilder("constant", 2)
    b.chance("c1", [("a", 0.3), ("b", 0.7)])
    b.decision("s1", 0, "u1").decision("s2", 0, "u2")
    for i in range(1, 5):
        b.leaf(f"z{i}", (2.0, -2.0))
    b.edge("c1", "a", "s1").edge("c1", "b", "s2")
    b.edge("s1", "x", "z1").edge("s1", "y", "z2").edge("s2", "x", "z3").edge("s2", "y", "z4")
    tree = b.set_root("c1").build()
    for report in decompose_all(tree, uniform_profile(tree), 0):
        assert report.total_variance == 0.0
        assert report.explained == 0.0
        assert report.explained_ratio == 0.0


def test_constant_game_behind_nested_chance_has_zero_variance():
    b = GameBuilder("nested-constant", 2)
    b.chance("c1", [("a", 0.3), ("b", 0.7)])
    b.chance("c2", [("h", 0.5), ("t", 0.5)]).chance("c3", [("h", 0.5), ("t", 0.5)])
    for i in range(1, 5):
        b.leaf(f"z{i}", (2.0, -2.0))
    b.edge("c1", "a", "c2").edge("c1", "b", "c3")
    b.edge("c2", "h", "z1").edge("c2", "t", "z2").edge("c3", "h", "z3").edge("c3", "t", "z4")
    tree = b.set_root("c1").build()
    assert total_variance(tree, uniform_profile(tree), 0) == 0.0
    assert total_variance(tree, uniform_profile(tree), 1) == 0.0


def test_single_action_conditioning_player_explains_nothing():
    b = GameBuilder("forced", 2)
    b.chance("c1", [("l", 0.4), ("r", 0.6)])
    b.decision("s1", 1, "w1").decision("s2", 1, "w2").decision("s3", 0, "u1")
    b.leaf("z1", (1.0, -1.0)).leaf("z2", (-1.0, 1.0)).leaf("z3", (0.5, -0.5))
    b.edge("c1", "l", "s1").edge("c1", "r", "s2")
    b.edge("s1", "go", "s3").edge("s3", "x", "z1").edge("s3", "y", "z2").edge("s2", "go", "z3")
    tree = b.set_root("c1").build()
    report = explained_variance(tree, uniform_profile(tree), 0, 1)
    assert report.explained == 0.0
    assert [c.contribution for c in report.per_info_state] == [0.0, 0.0]
    assert report.total_variance > 0.0


def test_law_of_total_variance_on_builtins(builtin_games):
    rng = np.random.default_rng(7)
    for name, tree in builtin_games.items():
        for _ in range(10):
            profile = random_profile(tree, rng)
            for report in decompose_all(tree, profile, 0):
                assert report.explained >= 0.0 and report.residual >= 0.0
                assert relative(report.explained + report.residual, report.total_variance) <= 1e-9, name
                assert 0.0 <= report.explained_ratio <= 1.0


@pytest.mark.parametrize("scale", [-2.0, 0.5, 3.0])
@pytest.mark.parametrize("offset", [-1.0, 7.0])
def test_affine_equivariance(builtin_games, scale, offset):
    rng = np.random.default_rng(8)
    for name, tree in builtin_games.items():
        profile = random_profile(tree, rng)
        moved_tree = tree.with_rewards(lambda r: scale * r + offset)
        factor = scale * scale
        for player in [CHANCE] + list(range(tree.player_count)):
            base = explained_variance(tree, profile, 0, player)
            moved = explained_variance(moved_tree, profile, 0, player)
            assert moved.total_variance == pytest.approx(factor * base.total_variance, rel=1e-9, abs=1e-10), name
            assert moved.explained == pytest.approx(factor * base.explained, rel=1e-9, abs=1e-10), name
            assert moved.residual == pytest.approx(factor * base.residual, rel=1e-9, abs=1e-10), name
            assert moved.explained_ratio == pytest.approx(base.explained_ratio, rel=1e-6, abs=1e-9), name


def test_unknown_players(figure1, uniform):
    with pytest.raises(UnknownPlayer):
        explained_variance(figure1, uniform, 0, 5)
    with pytest.raises(UnknownPlayer):
        explained_variance(figure1, uniform, CHANCE, 0)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
@pytest.mark.parametrize("c", [0, 1, 2, 5])
@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 1.0])
def test_exact_threeway_matches_closed_form(n, c, alpha):
    tree = build_skill_rps(n, c, alpha)
    exact = threeway_decompose(tree, canonical_skill_rps_population(tree, n))
    analytic = analytic_threeway(SkillRpsParams(n, c, alpha))
    for key in ("skill", "chance", "remaining", "total"):
        assert relative(getattr(exact, key), getattr(analytic, key)) <= 1e-9, key


@pytest.mark.parametrize("params, expected", [
    ((2, 0, 0.0), (0.5, 0.0, 0.0)),
    ((1, 1, 0.0), (0.0, 0.0, 2 / 3)),
    ((3, 2, 1.0), (0.0, 1.0, 0.0)),
])
def test_threeway_reference_points(params, expected):
    tree = build_skill_rps(*params)
    report = threeway_decompose(tree, canonical_skill_rps_population(tree, params[0]))
    assert (report.skill, report.chance, report.remaining) == pytest.approx(expected, abs=1e-12)


def test_threeway_rejects_non_zero_sum(figure1):
    tree = figure1.with_rewards(lambda r: abs(r))
    population = canonical_skill_rps_population(build_skill_rps(1, 0, 0.0), 1)
    with pytest.raises(AsymmetricGame):
        threeway_decompose(tree, population)


def test_threeway_chance_cap():
    tree = build_skill_rps(2, 1, 0.5)
    with pytest.raises(ChanceEnumerationTooLarge):
        threeway_decompose(tree, canonical_skill_rps_population(tree, 2), chance_cap=3)


def test_threeway_single_member_population():
    tree = build_skill_rps(2, 1, 0.5)
    population = RatedPopulation(canonical_skill_rps_population(tree, 2).members[:1])
    report = threeway_decompose(tree, population)
    assert report.skill == 0.0
    assert report.skill + report.chance + report.remaining == pytest.approx(report.total, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("c", [0, 1, 2, 4])
@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 1.0])
def test_threeway_parts_add_up_to_the_uniform_play_variance(n, c, alpha):
    tree = build_skill_rps(n, c, alpha)
    report = threeway_decompose(tree, canonical_skill_rps_population(tree, n))
    expected = total_variance(tree, uniform_profile(tree), 0)
    assert report.skill + report.chance + report.remaining == pytest.approx(expected, rel=1e-9, abs=1e-12)
    assert report.total == pytest.approx(expected, rel=1e-9, abs=1e-12)
