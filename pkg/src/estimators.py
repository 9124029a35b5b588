"""
Estimators - Sample-based estimates of the variance explained by one player's actions

Two families:
  * plug-in: averages the per-info-state spread of q around v, weighted by the
    reach of everyone else, over the info states each playthrough visits
  * regression: imputes the actions of unvisited info states from the policy,
    fits the outcome on the joint action assignment and reports the variance
    of the fitted values
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.errors import EmptyDataset, EnumerationTooLarge, InvalidParameters, MissingTableEntry, SingularDesign
from src.exact_decomposition import value_spread
from src.game_tree import GameTree, owner_history
from src.playthrough_data import PlaythroughDataset
from src.policies import BehavioralPolicy
from src.reports import EstimateReport
from src.traversal import InfoStateValues

logger = logging.getLogger(__name__)

DEFAULT_RIDGE = 1e-8
DEFAULT_BOOTSTRAP_RESAMPLES = 200
DEFAULT_MAX_DESIGN_COLUMNS = 4096
DEFAULT_LOW_SUPPORT_VISITS = 10
MODEL_KINDS = ("saturated-tabular", "linear-one-hot")


def _require_records(dataset: PlaythroughDataset):
    if len(dataset) == 0:
        raise EmptyDataset("dataset has no playthrough records")


def plugin_estimate(dataset: PlaythroughDataset, values: Mapping[str, InfoStateValues],
                    policy: BehavioralPolicy, eta_minus_i: Mapping[str, Optional[float]],
                    method: str = "plugin") -> EstimateReport:
    """
    Plug-in estimate averaged over playthroughs

    Args:
        dataset: Playthroughs of the conditioning player
        values: q/v tables per info state (exact, from reach_and_values)
        policy: Conditioning player's policy
        eta_minus_i: Reach of everyone else per info state (exact or empirical)
        method: Label recorded in the report

    Returns:
        EstimateReport; the standard error is the sample standard deviation of
        the per-record sums over sqrt(nu)

    Raises:
        MissingTableEntry: a visited info state has no q/v or eta entry
    """
    _require_records(dataset)
    summand: Dict[str, float] = {}

    def term(iset: str) -> float:
        if iset not in summand:
            entry = values.get(iset)
            if entry is None or entry.value is None:
                raise MissingTableEntry(iset, "q/v table")
            weight = eta_minus_i.get(iset)
            if weight is None:
                raise MissingTableEntry(iset, "eta table")
            summand[iset] = value_spread(entry, policy.distribution(iset)) * weight
        return summand[iset]

    sums = [math.fsum(term(iset) for iset, _ in record.trace) for record in dataset.records]
    nu = len(sums)
    # fsum keeps the estimate independent of record order
    estimate = math.fsum(sums) / nu
    if nu > 1:
        standard_error = math.sqrt(math.fsum((s - estimate) ** 2 for s in sums) / (nu - 1) / nu)
    else:
        standard_error = 0.0
    logger.info(f"Plug-in estimate {estimate:.6g} ± {standard_error:.2g} from {nu} playthroughs")
    return EstimateReport(estimate=estimate, standard_error=standard_error, nu=nu, method=method)


def own_history_probability(tree: GameTree, policy: BehavioralPolicy, iset: str) -> float:
    """Product of the owner's own probabilities along the info state's own history"""
    u = tree.info_states[iset]
    probability = 1.0
    for prior, action in owner_history(tree, u.members[0])[u.owner]:
        probability *= policy.prob(prior, action)
    return probability


@dataclass(frozen=True)
class EmpiricalEta:
    """
    Visit-frequency estimates of eta(u) and eta_others(u)

    Frequencies of rarely visited states overshoot badly; see `low_support`.
    """

    eta_hat: Dict[str, float]
    eta_minus_i: Dict[str, Optional[float]]
    flagged: Tuple[str, ...]
    nu: int

    def low_support(self, threshold: int = DEFAULT_LOW_SUPPORT_VISITS) -> List[str]:
        """Visited info states with fewer than `threshold` expected visits"""
        return [iset for iset, eta in self.eta_hat.items() if 0.0 < eta * self.nu < threshold]


def empirical_eta(dataset: PlaythroughDataset, tree: GameTree, policy: BehavioralPolicy) -> EmpiricalEta:
    _require_records(dataset)
    counts = {iset: 0 for iset in dataset.info_states}
    for record in dataset.records:
        for iset, _ in record.trace:
            counts[iset] += 1
    nu = len(dataset)
    eta_hat = {iset: count / nu for iset, count in counts.items()}
    eta_minus_i: Dict[str, Optional[float]] = {}
    flagged = []
    for iset, eta in eta_hat.items():
        own = own_history_probability(tree, policy, iset)
        if own > 0.0:
            eta_minus_i[iset] = eta / own
        else:
            eta_minus_i[iset] = None
            flagged.append(iset)
    if flagged:
        logger.warning(f"⚠️ Own-history probability is 0 for {len(flagged)} info states: {flagged}")
    return EmpiricalEta(eta_hat, eta_minus_i, tuple(flagged), nu)


@dataclass(frozen=True)
class RegressionModelSpec:
    kind: str = "saturated-tabular"
    ridge: float = DEFAULT_RIDGE

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidParameters(f"unknown model kind '{self.kind}' (known: {', '.join(MODEL_KINDS)})")
        if not math.isfinite(self.ridge) or self.ridge < 0.0:
            raise InvalidParameters(f"ridge must be finite and >= 0, got {self.ridge!r}")


class RegressionEstimator:
    """
    Fits outcome on the conditioning player's full joint action assignment

    Actions of info states a playthrough never visited are imputed from the
    policy. The imputation stream and the bootstrap stream are separate
    children of the master seed.
    """

    def __init__(self, tree: GameTree, policy: BehavioralPolicy, spec: RegressionModelSpec,
                 max_design_columns: int = DEFAULT_MAX_DESIGN_COLUMNS):
        self.tree = tree
        self.policy = policy
        self.spec = spec
        self.max_design_columns = max_design_columns
        self.logger = logging.getLogger(__name__)

    def _prepare(self, dataset: PlaythroughDataset):
        self.info_states = dataset.info_states
        self.sizes = [len(self.tree.info_states[iset].actions) for iset in self.info_states]
        self.cumulative = []
        self.last_positive = []
        for iset in self.info_states:
            probs = np.array([self.policy.prob(iset, a) for a in self.tree.info_states[iset].actions])
            self.cumulative.append(np.cumsum(probs))
            self.last_positive.append(int(np.flatnonzero(probs > 0.0)[-1]))
        if self.spec.kind == "linear-one-hot":
            columns = 1 + sum(size - 1 for size in self.sizes)
            if columns > self.max_design_columns:
                raise EnumerationTooLarge(columns, self.max_design_columns, what="design columns")

    def impute(self, codes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Fill -1 slots column by column in canonical info-state order"""
        filled = codes.copy()
        for j in range(filled.shape[1]):
            missing = np.flatnonzero(filled[:, j] < 0)
            if missing.size == 0:
                continue
            draws = np.searchsorted(self.cumulative[j], rng.random(missing.size), side="right")
            filled[missing, j] = np.minimum(draws, self.last_positive[j])
        return filled

    def impute_dataset(self, dataset: PlaythroughDataset, seed: int) -> np.ndarray:
        """Action codes with every unvisited slot drawn from the seed's imputation substream"""
        self._prepare(dataset)
        impute_seq = np.random.SeedSequence(seed).spawn(2)[0]
        return self.impute(dataset.action_codes(self.tree), np.random.default_rng(impute_seq))

    def _cells(self, codes: np.ndarray) -> np.ndarray:
        radix = math.prod(self.sizes) if self.sizes else 1
        if radix < 2 ** 62:
            keys = np.zeros(codes.shape[0], dtype=np.int64)
            for j, size in enumerate(self.sizes):
                keys = keys * size + codes[:, j]
            _, inverse = np.unique(keys, return_inverse=True)
        else:
            _, inverse = np.unique(codes, axis=0, return_inverse=True)
        return np.asarray(inverse).ravel()

    def fit(self, codes: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
        """Fitted values of the ridge-regularized least-squares model"""
        ridge = self.spec.ridge
        if self.spec.kind == "saturated-tabular":
            inverse = self._cells(codes)
            cells = int(inverse.max()) + 1
            if cells > self.max_design_columns:
                raise EnumerationTooLarge(cells, self.max_design_columns, what="design columns")
            # indicator columns are orthogonal, so the normal equations are diagonal
            sums = np.bincount(inverse, weights=outcomes, minlength=cells)
            counts = np.bincount(inverse, minlength=cells)
            return (sums / (counts + ridge))[inverse]

        design = self._one_hot(codes)
        gram = design.T @ design + ridge * np.eye(design.shape[1])
        if ridge == 0.0 and np.linalg.matrix_rank(gram) < design.shape[1]:
            raise SingularDesign("one-hot design is rank deficient and ridge is 0")
        try:
            weights = np.linalg.solve(gram, design.T @ outcomes)
        except np.linalg.LinAlgError as e:
            raise SingularDesign(f"normal equations are singular: {e}")
        return design @ weights

    def _one_hot(self, codes: np.ndarray) -> np.ndarray:
        blocks = [np.ones((codes.shape[0], 1))]
        for j, size in enumerate(self.sizes):
            # first action is the reference level
            block = np.zeros((codes.shape[0], size - 1))
            rows = np.flatnonzero(codes[:, j] > 0)
            block[rows, codes[rows, j] - 1] = 1.0
            blocks.append(block)
        return np.hstack(blocks)

    def estimate(self, dataset: PlaythroughDataset, seed: int,
                 bootstrap_resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES) -> EstimateReport:
        _require_records(dataset)
        if dataset.conditioning_player != self.policy.owner:
            raise InvalidParameters("dataset and policy belong to different players")
        filled = self.impute_dataset(dataset, seed)
        codes = dataset.action_codes(self.tree)
        outcomes = dataset.outcomes()

        fitted = self.fit(filled, outcomes)
        estimate = float(np.var(fitted))

        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])
        nu = len(dataset)
        replicates = []
        for _ in range(bootstrap_resamples):
            rows = rng.integers(0, nu, size=nu)
            refit = self.fit(self.impute(codes[rows], rng), outcomes[rows])
            replicates.append(float(np.var(refit)))
        standard_error = float(np.std(replicates, ddof=1)) if len(replicates) > 1 else 0.0
        self.logger.info(f"Regression ({self.spec.kind}) estimate {estimate:.6g} ± {standard_error:.2g} "
                         f"from {nu} playthroughs, {bootstrap_resamples} bootstrap resamples")
        return EstimateReport(estimate=estimate, standard_error=standard_error, nu=nu, method="regression")


def regression_estimate(tree: GameTree, dataset: PlaythroughDataset, spec: RegressionModelSpec,
                        policy: BehavioralPolicy, seed: int,
                        bootstrap_resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
                        max_design_columns: int = DEFAULT_MAX_DESIGN_COLUMNS) -> EstimateReport:
    return RegressionEstimator(tree, policy, spec, max_design_columns).estimate(dataset, seed, bootstrap_resamples)
