"""
Playthrough Data - Simulated and imported playthrough datasets for the estimators
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.errors import DatasetFormatError, InputError, InvalidParameters
from src.efg_format import format_real
from src.game_tree import GameTree, PlayerRef, player_label
from src.policies import PolicyProfile
from src.traversal import PlaythroughSampler

logger = logging.getLogger(__name__)

SIMULATION_BLOCK = 4096

Trace = Tuple[Tuple[str, str], ...]


@dataclass(frozen=True)
class PlaythroughRecord:
    """The conditioning player's visited (info state, action) pairs and the target outcome"""

    trace: Trace
    outcome: float


@dataclass(frozen=True)
class PlaythroughDataset:
    records: Tuple[PlaythroughRecord, ...]
    conditioning_player: PlayerRef
    info_states: Tuple[str, ...]
    provenance: str
    target_player: Optional[int] = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def nu(self) -> int:
        return len(self.records)

    def outcomes(self) -> np.ndarray:
        return np.fromiter((r.outcome for r in self.records), dtype=float, count=len(self.records))

    def action_codes(self, tree: GameTree) -> np.ndarray:
        """
        Integer matrix (records x info states) of chosen action indexes

        Columns follow `info_states`; -1 marks an info state the record never visited.
        """
        column = {iset: j for j, iset in enumerate(self.info_states)}
        index = {iset: {a: k for k, a in enumerate(tree.info_states[iset].actions)} for iset in self.info_states}
        codes = np.full((len(self.records), len(self.info_states)), -1, dtype=np.int64)
        for i, record in enumerate(self.records):
            for iset, action in record.trace:
                codes[i, column[iset]] = index[iset][action]
        return codes

    def to_frame(self) -> pd.DataFrame:
        """Wide view: one column per info state (chosen action or None), outcome and trace length"""
        rows = []
        for record in self.records:
            row: Dict[str, object] = {iset: None for iset in self.info_states}
            row.update(dict(record.trace))
            row["outcome"] = record.outcome
            row["trace_length"] = len(record.trace)
            rows.append(row)
        return pd.DataFrame(rows, columns=[*self.info_states, "outcome", "trace_length"])


def _owned_ids(tree: GameTree, player: PlayerRef) -> Tuple[str, ...]:
    return tuple(u.info_state_id for u in tree.player_info_states(player))


def _simulate_block(tree: GameTree, profile: PolicyProfile, conditioning: PlayerRef, target: int,
                    seed: int, block: int, count: int) -> List[PlaythroughRecord]:
    rng = np.random.default_rng([seed, block])
    sampler = PlaythroughSampler(tree, profile)
    uniforms = rng.random((count, max(tree.height, 1)))
    return [PlaythroughRecord(*sampler.walk_trace(row, conditioning, target)) for row in uniforms]


class PlaythroughSimulator:
    """
    Draws i.i.d. playthroughs in fixed-size blocks

    Block b uses the generator seeded with (seed, b), so the dataset depends
    only on (seed, nu) and never on how many workers run the blocks.
    """

    def __init__(self, tree: GameTree, profile: PolicyProfile, n_jobs: int = 1):
        self.tree = tree
        self.profile = profile
        self.n_jobs = n_jobs
        self.logger = logging.getLogger(__name__)

    def simulate(self, conditioning: PlayerRef, target: int, nu: int, seed: int) -> PlaythroughDataset:
        self.tree.check_player(conditioning)
        self.tree.check_player(target, allow_chance=False)
        if isinstance(nu, bool) or not isinstance(nu, int) or nu < 1:
            raise InvalidParameters(f"nu must be a positive integer, got {nu!r}")
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise InvalidParameters(f"seed must be a non-negative integer, got {seed!r}")
        # joblib: negative counts mean "all but k" cores, 0 is meaningless
        if isinstance(self.n_jobs, bool) or not isinstance(self.n_jobs, int) or self.n_jobs == 0:
            raise InvalidParameters(f"n_jobs must be a non-zero integer, got {self.n_jobs!r}")

        sizes = [min(SIMULATION_BLOCK, nu - start) for start in range(0, nu, SIMULATION_BLOCK)]
        self.logger.info(f"Simulating {nu} playthroughs in {len(sizes)} blocks (n_jobs={self.n_jobs})...")
        blocks = Parallel(n_jobs=self.n_jobs)(
            delayed(_simulate_block)(self.tree, self.profile, conditioning, target, seed, b, size)
            for b, size in enumerate(sizes)
        )
        records = tuple(record for block in blocks for record in block)
        return PlaythroughDataset(records, conditioning, _owned_ids(self.tree, conditioning),
                                  f"simulated(seed={seed})", target)


def simulate_dataset(tree: GameTree, profile: PolicyProfile, conditioning: PlayerRef, target: int,
                     nu: int, seed: int, n_jobs: int = 1) -> PlaythroughDataset:
    return PlaythroughSimulator(tree, profile, n_jobs).simulate(conditioning, target, nu, seed)


def parse_playthrough_log(text: str, tree: GameTree, conditioning: PlayerRef,
                          source: str = "<string>") -> PlaythroughDataset:
    """
    Parse `outcome:<real> <infoset>=<action> ...` lines

    Raises:
        DatasetFormatError: malformed line, unknown info state or action, or
            an info state of another player
    """
    tree.check_player(conditioning)
    records: List[PlaythroughRecord] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = body.split()
        if not tokens:
            continue
        head = tokens[0]
        if not head.startswith("outcome:"):
            raise DatasetFormatError("record must start with 'outcome:<real>'", lineno, 1)
        try:
            outcome = float(head[len("outcome:"):])
        except ValueError:
            raise DatasetFormatError(f"invalid outcome '{head}'", lineno, 1)
        if not math.isfinite(outcome):
            raise DatasetFormatError("outcome must be finite", lineno, 1)
        trace = []
        seen = set()
        for token in tokens[1:]:
            iset, sep, action = token.partition("=")
            if not sep or not iset or not action:
                raise DatasetFormatError(f"expected '<infoset>=<action>', got '{token}'", lineno)
            u = tree.info_states.get(iset)
            if u is None:
                raise DatasetFormatError(f"unknown info state '{iset}'", lineno, ids=(iset,))
            if u.owner != conditioning:
                raise DatasetFormatError(f"info state '{iset}' belongs to player {player_label(u.owner)}, not "
                                         f"{player_label(conditioning)}", lineno, ids=(iset,))
            if action not in u.actions:
                raise DatasetFormatError(f"info state '{iset}' has no action '{action}'", lineno,
                                         ids=(iset, action))
            if iset in seen:
                raise DatasetFormatError(f"info state '{iset}' visited twice in one record", lineno, ids=(iset,))
            seen.add(iset)
            trace.append((iset, action))
        records.append(PlaythroughRecord(tuple(trace), outcome))
    logger.info(f"Parsed {len(records)} playthrough records from {source}")
    return PlaythroughDataset(tuple(records), conditioning, _owned_ids(tree, conditioning), f"imported({source})")


def import_dataset(path: Union[str, Path], tree: GameTree, conditioning: PlayerRef) -> PlaythroughDataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read playthrough log {path}: {e}")
    except UnicodeDecodeError as e:
        raise DatasetFormatError(f"playthrough log {path} is not valid UTF-8: {e}")
    return parse_playthrough_log(text, tree, conditioning, str(path))


def format_playthrough_log(dataset: PlaythroughDataset) -> str:
    lines = [f"# conditioning player {player_label(dataset.conditioning_player)}, {dataset.provenance}"]
    for record in dataset.records:
        pairs = "".join(f" {iset}={action}" for iset, action in record.trace)
        lines.append(f"outcome:{format_real(record.outcome)}{pairs}")
    return "\n".join(lines) + "\n"


def export_dataset(dataset: PlaythroughDataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.write_text(format_playthrough_log(dataset), encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot write playthrough log {path}: {e}")
    logger.info(f"✅ Exported {len(dataset)} records to {path}")
    return path
