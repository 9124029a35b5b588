"""
CLI - Command-line front end for decomposition, estimation, oracle checks and sweeps

Exit codes: 0 success, 1 failed check, 2 input error, 3 resource cap exceeded.
Payloads go to standard output, logs and diagnostics to standard error.
"""
import argparse
import hashlib
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from src import __version__, exact_decomposition
from src.builtin_games import (build_builtin, build_skill_rps, canonical_skill_rps_population, parse_builtin_ref,
                               parse_skill_rps_args)
from src.efg_format import parse_game, parse_policy, parse_population, serialize_game
from src.errors import InputError, InvalidParameters, ResourceCapError, SingularDesign
from src.estimators import RegressionModelSpec, empirical_eta, plugin_estimate, regression_estimate
from src.game_tree import CHANCE, GameTree, PlayerRef, parse_player_ref, player_label, validate_game
from src.oracle import oracle_components
from src.playthrough_data import PlaythroughDataset, export_dataset, import_dataset, simulate_dataset
from src.policies import PolicyProfile, policy_for, uniform_profile
from src.reports import EnvelopeMeta, OutputEnvelope
from src.settings import load_config
from src.skillrps_analytic import SkillRpsParams, analytic_threeway, default_grid, parse_grid, sweep, write_sweep_csv
from src.traversal import reach_and_values

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_RESOURCE_CAP = 3

CHECK_TOLERANCE = 1e-9
LOG_HANDLER_NAME = "vardecomp"


def setup_logging(level: str = "INFO"):
    """Log to the current standard error, replacing the handler of an earlier run"""
    root = logging.getLogger()
    for handler in [h for h in root.handlers if h.get_name() == LOG_HANDLER_NAME]:
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(LOG_HANDLER_NAME)
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[handler],
    )


class Inputs:
    """Input documents read by one invocation, hashed into the output envelope"""

    def __init__(self):
        self.documents: List[Tuple[str, str]] = []

    def read(self, path: str, label: str) -> str:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise InputError(f"cannot read {label} {path}: {e}")
        except UnicodeDecodeError as e:
            raise InputError(f"{label} {path} is not valid UTF-8: {e}")
        self.documents.append((label, text))
        return text

    def add(self, label: str, text: str):
        self.documents.append((label, text))

    def digest(self) -> str:
        sha = hashlib.sha256()
        for label, text in self.documents:
            sha.update(label.encode("utf-8") + b"\0" + text.encode("utf-8") + b"\0")
        return sha.hexdigest()


def load_game(ref: str, inputs: Inputs) -> GameTree:
    """`builtin:<name>[:args]` or a path to a game document"""
    if ref.startswith("builtin:"):
        name, params = parse_builtin_ref(ref)
        tree = build_builtin(name, **params)
        inputs.add("game", serialize_game(tree))
        return tree
    return parse_game(inputs.read(ref, "game"))


def load_profile(tree: GameTree, paths: Optional[Sequence[str]], inputs: Inputs) -> PolicyProfile:
    """Policies from files; players without a file play uniformly"""
    profile = uniform_profile(tree)
    owners = set()
    for path in paths or ():
        policy = parse_policy(inputs.read(path, "policy"), tree)
        if policy.owner in owners:
            raise InputError(f"two policy files for player {policy.owner}")
        owners.add(policy.owner)
        profile = profile.replace_policy(policy)
    return profile


def _conditioning(text: str, tree: GameTree, allow_all: bool = False) -> List[PlayerRef]:
    if allow_all and text == "all":
        return [CHANCE] + list(range(tree.player_count))
    return [tree.check_player(parse_player_ref(text))]


def _envelope(args, command: str, payload: Dict[str, Any], inputs: Inputs, seed: Optional[int] = None):
    fmt = getattr(args, "format", "text")
    envelope = OutputEnvelope(format=fmt, command=command, payload=payload,
                              meta=EnvelopeMeta(tool_version=__version__, seed=seed, input_digest=inputs.digest()))
    print(envelope.to_json() if fmt == "json" else envelope.to_text())


def cmd_decompose(args, config) -> int:
    inputs = Inputs()
    tree = load_game(args.game, inputs)
    profile = load_profile(tree, args.policies, inputs)
    target = tree.check_player(args.target, allow_chance=False)
    players = _conditioning(args.conditioning, tree, allow_all=True)
    reports = [exact_decomposition.explained_variance(tree, profile, target, p) for p in players]
    if len(reports) == 1:
        payload = reports[0].model_dump()
    else:
        payload = {"reports": [r.model_dump() for r in reports]}
    _envelope(args, "decompose", payload, inputs)
    return EXIT_OK


def _relative_deviation(left: float, right: float) -> float:
    return abs(left - right) / max(1.0, abs(right))


def cmd_threeway(args, config) -> int:
    inputs = Inputs()
    chance_cap = config["threeway"]["chance_cap"] if args.chance_cap is None else args.chance_cap
    if args.skillrps:
        n, c, alpha = parse_skill_rps_args(args.skillrps)
        tree = build_skill_rps(n, c, alpha)
        inputs.add("game", serialize_game(tree))
        if args.population:
            population = parse_population(inputs.read(args.population, "population"), tree)
        else:
            population = canonical_skill_rps_population(tree, n)
    else:
        if not args.game or not args.population:
            raise InvalidParameters("threeway needs --skillrps, or both --game and --population")
        tree = load_game(args.game, inputs)
        population = parse_population(inputs.read(args.population, "population"), tree)

    exact = exact_decomposition.threeway_decompose(tree, population, args.target_seat, chance_cap)
    payload: Dict[str, Any] = {"exact": exact.model_dump()}
    if args.skillrps:
        analytic = analytic_threeway(SkillRpsParams(n, c, alpha))
        payload["analytic"] = analytic.model_dump()
        payload["max_relative_deviation"] = max(
            _relative_deviation(getattr(exact, k), getattr(analytic, k))
            for k in ("skill", "chance", "remaining", "total"))
    _envelope(args, "threeway", payload, inputs)
    return EXIT_OK


def _dataset(args, config, tree: GameTree, profile: PolicyProfile, conditioning: PlayerRef, target: int,
             inputs: Inputs) -> PlaythroughDataset:
    if getattr(args, "log", None):
        inputs.read(args.log, "log")
        return import_dataset(args.log, tree, conditioning)
    if args.nu is None:
        raise InvalidParameters("--nu is required when no --log is given")
    n_jobs = config["estimation"]["n_jobs"] if args.n_jobs is None else args.n_jobs
    return simulate_dataset(tree, profile, conditioning, target, args.nu, args.seed, n_jobs=n_jobs)


def cmd_estimate(args, config) -> int:
    inputs = Inputs()
    tree = load_game(args.game, inputs)
    profile = load_profile(tree, args.policies, inputs)
    target = tree.check_player(args.target, allow_chance=False)
    conditioning = _conditioning(args.conditioning, tree)[0]
    dataset = _dataset(args, config, tree, profile, conditioning, target, inputs)
    policy = policy_for(tree, profile, conditioning)

    payload: Dict[str, Any] = {}
    if args.method == "regression":
        spec = RegressionModelSpec(kind=args.model,
                                   ridge=config["estimation"]["ridge"] if args.ridge is None else args.ridge)
        resamples = config["estimation"]["bootstrap_resamples"] if args.bootstrap is None else args.bootstrap
        report = regression_estimate(tree, dataset, spec, policy, args.seed, bootstrap_resamples=resamples,
                                     max_design_columns=config["estimation"]["max_design_columns"])
    else:
        table = reach_and_values(tree, profile, conditioning, target)
        if args.method == "plugin":
            report = plugin_estimate(dataset, table, policy, {u: v.eta_others for u, v in table.items()})
        else:
            eta = empirical_eta(dataset, tree, policy)
            low = eta.low_support(config["estimation"]["low_support_visits"])
            if low:
                logger.warning(f"⚠️ Empirical visit frequencies rest on fewer than "
                               f"{config['estimation']['low_support_visits']} visits for {low}; "
                               f"they overestimate the visit probability")
            payload["low_support"] = low
            report = plugin_estimate(dataset, table, policy, eta.eta_minus_i, method="plugin-empirical-eta")
    payload.update(report.model_dump())

    if len(tree.nodes) <= config["cli"]["exact_node_limit"]:
        exact = exact_decomposition.explained_variance(tree, profile, target, conditioning).explained
        payload["exact"] = exact
        payload["z_score"] = (report.estimate - exact) / report.standard_error if report.standard_error > 0 else None
    _envelope(args, "estimate", payload, inputs, seed=args.seed)
    return EXIT_OK


def cmd_simulate(args, config) -> int:
    inputs = Inputs()
    tree = load_game(args.game, inputs)
    profile = load_profile(tree, args.policies, inputs)
    target = tree.check_player(args.target, allow_chance=False)
    conditioning = _conditioning(args.conditioning, tree)[0]
    n_jobs = config["estimation"]["n_jobs"] if args.n_jobs is None else args.n_jobs
    dataset = simulate_dataset(tree, profile, conditioning, target, args.nu, args.seed, n_jobs=n_jobs)
    path = export_dataset(dataset, args.out)
    _envelope(args, "simulate", {"records": len(dataset), "path": str(path), "provenance": dataset.provenance},
              inputs, seed=args.seed)
    return EXIT_OK


def cmd_sweep(args, config) -> int:
    inputs = Inputs()
    grid = parse_grid(args.skillrps_grid) if args.skillrps_grid else default_grid()
    inputs.add("grid", args.skillrps_grid or "")
    frame = sweep(grid)
    try:
        path = write_sweep_csv(frame, args.out)
    except OSError as e:
        raise InputError(f"cannot write sweep table {args.out}: {e}")
    _envelope(args, "sweep", {"rows": len(frame), "path": str(path)}, inputs)
    return EXIT_OK


def cmd_oracle_check(args, config) -> int:
    inputs = Inputs()
    tree = load_game(args.game, inputs)
    profile = load_profile(tree, args.policies, inputs)
    target = tree.check_player(args.target, allow_chance=False)
    cap = config["oracle"]["enumeration_cap"] if args.cap is None else args.cap

    checks = []
    passed = True
    for player in _conditioning(args.conditioning, tree, allow_all=True):
        report = exact_decomposition.explained_variance(tree, profile, target, player)
        oracle_explained, oracle_residual = oracle_components(tree, profile, target, player, cap)
        deviation = abs(report.explained - oracle_explained)
        total_gap = abs(oracle_explained + oracle_residual - report.total_variance)
        scale = max(1.0, abs(oracle_explained), report.total_variance)
        ok = deviation <= CHECK_TOLERANCE * scale and total_gap <= CHECK_TOLERANCE * scale
        passed = passed and ok
        checks.append({"conditioning": player_label(player), "exact": report.explained,
                       "oracle": oracle_explained, "oracle_residual": oracle_residual,
                       "total": report.total_variance, "passed": ok})
        if not ok:
            logger.error(f"❌ Mismatch conditioning on {player_label(player)}: exact {report.explained!r}, "
                         f"oracle {oracle_explained!r}")
    _envelope(args, "oracle-check", {"passed": passed, "checks": checks}, inputs)
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_validate(args, config) -> int:
    inputs = Inputs()
    if args.game.startswith("builtin:"):
        tree = load_game(args.game, inputs)
    else:
        tree = parse_game(inputs.read(args.game, "game"), validate=False)
    diagnostics = validate_game(tree)
    for diag in diagnostics:
        logger.warning(f"⚠️ {diag}")
    _envelope(args, "validate", {"valid": not diagnostics, "diagnostics": [str(d) for d in diagnostics]}, inputs)
    return EXIT_OK if not diagnostics else EXIT_CHECK_FAILED


def cmd_builtin(args, config) -> int:
    name, params = parse_builtin_ref(f"builtin:{args.name}")
    sys.stdout.write(serialize_game(build_builtin(name, **params)))
    return EXIT_OK


def _game_options(parser: argparse.ArgumentParser, conditioning_default: str = "chance"):
    parser.add_argument("--game", required=True, help="game document path or builtin:<name>")
    parser.add_argument("--policies", nargs="*", default=[], help="policy documents (others play uniformly)")
    parser.add_argument("--target", type=int, default=0, help="player whose reward is decomposed (0-based)")
    parser.add_argument("--conditioning", default=conditioning_default, help="player index or 'chance'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vardecomp",
                                     description="Variance decomposition for extensive-form games with chance")
    parser.add_argument("--config", help="path to a config.yaml (default config/config.yaml)")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    formats = argparse.ArgumentParser(add_help=False)
    formats.add_argument("--format", choices=["text", "json"], default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", parents=[formats], help="exact explained/residual variance")
    _game_options(p)
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser("threeway", parents=[formats], help="skill/chance/remaining decomposition")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--game")
    source.add_argument("--skillrps", metavar="N,C,ALPHA")
    p.add_argument("--population")
    p.add_argument("--target-seat", type=int, default=0)
    p.add_argument("--chance-cap", type=int)
    p.set_defaults(handler=cmd_threeway)

    p = sub.add_parser("estimate", parents=[formats], help="sample-based estimate of the explained variance")
    _game_options(p)
    p.add_argument("--method", choices=["plugin", "plugin-empirical", "regression"], default="plugin")
    p.add_argument("--nu", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--log", help="playthrough log to estimate from instead of simulating")
    p.add_argument("--model", choices=["saturated-tabular", "linear-one-hot"], default="saturated-tabular")
    p.add_argument("--ridge", type=float)
    p.add_argument("--bootstrap", type=int, help="bootstrap resamples for the regression standard error")
    p.add_argument("--n-jobs", type=int)
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("simulate", parents=[formats], help="write a simulated playthrough log")
    _game_options(p)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-jobs", type=int)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("sweep", parents=[formats], help="SkillRPS analytic sweep to CSV")
    p.add_argument("--skillrps-grid", metavar="SPEC", help="e.g. n=1,2;c=0,1;alpha=0,0.5")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("oracle-check", parents=[formats], help="compare exact decomposition with brute force")
    _game_options(p, conditioning_default="all")
    p.add_argument("--cap", type=int)
    p.set_defaults(handler=cmd_oracle_check)

    p = sub.add_parser("validate", parents=[formats], help="print structural diagnostics of a game")
    p.add_argument("--game", required=True)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("builtin", help="print a built-in game's canonical document")
    p.add_argument("name", help="figure1, rps, chance-rps, kuhn or skill-rps:n,c,alpha")
    p.set_defaults(handler=cmd_builtin)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else "INFO")
    try:
        config = load_config(args.config)
        if not args.verbose:
            logging.getLogger().setLevel(str(config["logging"]["level"]).upper())
        return args.handler(args, config)
    except ResourceCapError as e:
        logger.error(f"❌ {e}")
        return EXIT_RESOURCE_CAP
    except (InputError, SingularDesign) as e:
        logger.error(f"❌ {e}")
        return EXIT_INPUT_ERROR
    except OSError as e:
        logger.error(f"❌ {e}")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
