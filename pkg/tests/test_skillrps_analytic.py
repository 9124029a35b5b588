import pandas as pd
import pytest

from src.errors import InvalidParameters
from src.skillrps_analytic import (SWEEP_COLUMNS, SkillRpsParams, SweepGrid, analytic_threeway, default_grid,
                                   parse_grid, psi, sweep, write_sweep_csv)


def test_psi_reference_values():
    assert psi(2, 0) == pytest.approx(0.5)
    assert psi(1, 3) == 0.0
    assert psi(2, 1) == pytest.approx(2 / 9)
    assert psi(5, 5) == pytest.approx(0.8 / 9)


def test_psi_decreases_with_c():
    for n in (2, 3, 5, 8):
        values = [psi(n, c) for c in range(n + 1)]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:])), n


def test_analytic_reference_points():
    report = analytic_threeway(SkillRpsParams(2, 0, 0.0))
    assert (report.skill, report.chance, report.remaining) == pytest.approx((0.5, 0.0, 0.0))
    report = analytic_threeway(SkillRpsParams(1, 1, 0.0))
    assert (report.skill, report.chance, report.remaining) == pytest.approx((0.0, 0.0, 2 / 3))
    for n, c in [(1, 0), (3, 2), (5, 5)]:
        report = analytic_threeway(SkillRpsParams(n, c, 1.0))
        assert (report.skill, report.chance, report.remaining, report.total) == (0.0, 1.0, 0.0, 1.0)


def test_params_are_validated():
    with pytest.raises(InvalidParameters):
        SkillRpsParams(0, 1, 0.5)
    with pytest.raises(InvalidParameters):
        SkillRpsParams(2, 1, 1.5)


def test_default_sweep_trends():
    frame = sweep(default_grid())
    assert list(frame.columns) == SWEEP_COLUMNS
    assert len(frame) == 4 * 4 * 11
    for (n, c), group in frame.groupby(["n", "c"]):
        chance = group.sort_values("alpha")["chance"].tolist()
        assert all(a <= b + 1e-15 for a, b in zip(chance, chance[1:])), (n, c)
        assert group.loc[group["alpha"] == 1.0, "chance"].iloc[0] == 1.0
    start = frame[frame["alpha"] == 0.0]
    for n in (2, 3, 5):
        skills = start[(start["n"] == n) & (start["c"] <= n)].sort_values("c")["skill"].tolist()
        assert all(a >= b - 1e-15 for a, b in zip(skills, skills[1:])), n


def test_parse_grid():
    grid = parse_grid("n=1,2;alpha=0,0.5")
    assert grid.ns == (1, 2)
    assert grid.cs == default_grid().cs
    assert grid.alphas == (0.0, 0.5)
    for bad in ("n=0", "alpha=2", "k=1", "n=", "c=x"):
        with pytest.raises(InvalidParameters):
            parse_grid(bad)


def test_empty_grid_is_rejected():
    with pytest.raises(InvalidParameters):
        sweep(SweepGrid(ns=(), cs=(0,), alphas=(0.5,)))


def test_sweep_csv(tmp_path):
    path = write_sweep_csv(sweep(parse_grid("n=2;c=0,1;alpha=0,1")), tmp_path / "sweep.csv")
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(SWEEP_COLUMNS)
    table = pd.read_csv(path)
    assert len(table) == 4
    assert table.loc[(table["c"] == 0) & (table["alpha"] == 0.0), "skill"].iloc[0] == pytest.approx(0.5)
