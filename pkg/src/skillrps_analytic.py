"""
SkillRPS Analytic - Closed-form three-way decomposition of SkillRPS and parameter sweeps

The formulas assume both players pick their number and their RPS move
uniformly and independently; they do not hold for other policies.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Union

import pandas as pd

from src.builtin_games import check_skill_rps_params
from src.errors import InvalidParameters
from src.reports import ThreeWayReport

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["n", "c", "alpha", "skill", "chance", "remaining", "total"]


@dataclass(frozen=True)
class SkillRpsParams:
    n: int
    c: int
    alpha: float

    def __post_init__(self):
        check_skill_rps_params(self.n, self.c, self.alpha)


@dataclass(frozen=True)
class SweepGrid:
    ns: Sequence[int]
    cs: Sequence[int]
    alphas: Sequence[float]

    def __len__(self) -> int:
        return len(self.ns) * len(self.cs) * len(self.alphas)


def psi(n: int, c: int) -> float:
    """Variance of sign(N1 - N2 + c * RPS) explained by the number choices"""
    check_skill_rps_params(n, c, 0.0)
    if c == 0:
        return 1.0 - 1.0 / n
    if c < n:
        return 1.0 - 1.0 / (3 * n) + (8 * c * c + 2 * c - 16 * c * n) / (9 * n * n)
    return (1.0 - 1.0 / n) / 9.0


def nonzero_score_probability(n: int, c: int) -> float:
    """P(S != 0) when numbers and moves are uniform"""
    if c == 0:
        return 1.0 - 1.0 / n
    if c < n:
        return 1.0 - 1.0 / n + 2 * c / (3 * n * n)
    return 1.0 - 1.0 / (3 * n)


def remaining_variance(params: SkillRpsParams) -> float:
    """E[V(Y | W, Z, N1, N2)]"""
    n, c, alpha = params.n, params.c, params.alpha
    if c == 0:
        return 0.0
    if c >= n:
        return (1.0 - alpha) * (8.0 / 9.0 - 2.0 / (9 * n))
    return (1.0 - alpha) * (nonzero_score_probability(n, c) - psi(n, c))


def analytic_threeway(params: SkillRpsParams) -> ThreeWayReport:
    kernel = psi(params.n, params.c)
    alpha = params.alpha
    skill = (1.0 - alpha) ** 2 * kernel
    chance = alpha + alpha * (1.0 - alpha) * kernel
    remaining = remaining_variance(params)
    return ThreeWayReport(skill=skill, chance=chance, remaining=remaining, total=skill + chance + remaining)


def default_grid() -> SweepGrid:
    return SweepGrid(ns=(1, 2, 3, 5), cs=(0, 1, 2, 5), alphas=tuple(k / 10 for k in range(11)))


def parse_grid(text: str) -> SweepGrid:
    """
    Parse `n=1,2;c=0,1;alpha=0,0.5`; omitted keys keep the default grid values

    Raises:
        InvalidParameters: unknown key, empty list or value out of range
    """
    grid = default_grid()
    values = {"n": list(grid.ns), "c": list(grid.cs), "alpha": list(grid.alphas)}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        key, sep, raw = part.partition("=")
        key = key.strip()
        if not sep or key not in values:
            raise InvalidParameters(f"bad grid entry '{part}' (expected n=..., c=... or alpha=...)")
        items = [v.strip() for v in raw.split(",") if v.strip()]
        if not items:
            raise InvalidParameters(f"grid entry '{key}' has no values")
        try:
            values[key] = [float(v) if key == "alpha" else int(v) for v in items]
        except ValueError:
            raise InvalidParameters(f"bad value in grid entry '{part}'")
    grid = SweepGrid(ns=tuple(values["n"]), cs=tuple(values["c"]), alphas=tuple(values["alpha"]))
    for n in grid.ns:
        for c in grid.cs:
            for alpha in grid.alphas:
                check_skill_rps_params(n, c, alpha)
    return grid


def sweep(grid: SweepGrid) -> pd.DataFrame:
    """One row per (n, c, alpha) in grid order"""
    if len(grid) == 0:
        raise InvalidParameters("sweep grid is empty")
    rows: List[dict] = []
    for n in grid.ns:
        for c in grid.cs:
            for alpha in grid.alphas:
                report = analytic_threeway(SkillRpsParams(n, c, float(alpha)))
                rows.append({"n": n, "c": c, "alpha": float(alpha), **report.model_dump()})
    logger.info(f"Swept {len(rows)} SkillRPS parameter triples")
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def write_sweep_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, columns=SWEEP_COLUMNS, lineterminator="\n")
    logger.info(f"✅ Wrote {len(frame)} sweep rows to {path}")
    return path
