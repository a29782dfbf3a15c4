"""Command-line interface.

    depcons simulate  --workers 5 --questions 10 --scale 7 --seed 42 --out run/
    depcons metrics   --in twophase.jsonl --out metrics.csv
    depcons aggregate --in twophase.jsonl --out consensus.csv [--truth truth.jsonl]
    depcons infer     --in seq.jsonl --gamma 0.5 --out posterior.csv
    depcons evaluate  --in data.jsonl --truth truth.jsonl --out recovery.csv

Every command exits 0 on success and 2 with a one-line ``depcons: error:``
diagnostic on failure. Outputs depend only on the arguments and input files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from depcons import aggregation as agg
from depcons import io, plots
from depcons.dataset import SEQUENTIAL, TWO_PHASE, Dataset, LabelScale
from depcons.errors import DepconsError, UsageError
from depcons.experiment import run_experiment
from depcons.inference import ENUMERATION_LIMIT, infer_dataset
from depcons.metrics import EPSILON, R_CAP, compute_metrics
from depcons.simulate import DISCLOSURES, FIXED_ARRIVAL, MEAN_TARGET, MIXTURE, MODE_TARGET, RANDOM_ARRIVAL


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _range(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) == 1:
        return float(parts[0]), float(parts[0])
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected LO,HI or a single value")
    return float(parts[0]), float(parts[1])


def _add_scale(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scale", type=int, metavar="K", help="generic scale with labels 1..K (default: 7-point review scale)")
    g.add_argument("--scale-file", type=Path, help="JSON list (or one per line) of labels, worst first")


def _add_tunables(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=EPSILON, help="ratio smoothing constant (default 1e-9)")
    p.add_argument("--r-cap", type=float, default=R_CAP, help="reliability cap (default 100)")
    p.add_argument(
        "--weight-source", choices=(agg.PER_QUESTION, agg.PER_WORKER), default=agg.PER_QUESTION,
        help="weights from per-question metrics or per-worker means",
    )


def _add_bias(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, help="conformity of every worker")
    p.add_argument("--sigma", type=float, help="opinion noise of every worker; enables the latent-truth prior")
    p.add_argument("--profiles", type=Path, help="CSV of worker_id, competence_sigma, conformity_gamma")
    p.add_argument("--kernel", choices=DISCLOSURES, default=MIXTURE, help="disclosure kernel (default mixture)")
    p.add_argument("--limit", type=int, default=ENUMERATION_LIMIT, help="max workers per question to enumerate")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depcons", description="Consensus of dependent crowd opinions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a dataset with known ground truth and report on it")
    p.add_argument("--config", type=Path, help="JSON simulation config; flags below override it")
    p.add_argument("--workers", type=int)
    p.add_argument("--questions", type=int)
    p.add_argument("--mode", choices=(SEQUENTIAL, TWO_PHASE))
    p.add_argument("--seed", type=_seed)
    p.add_argument("--replications", type=int)
    p.add_argument("--sigma", type=_range, dest="sigma_range", metavar="LO[,HI]")
    p.add_argument("--gamma", type=_range, dest="gamma_range", metavar="LO[,HI]")
    p.add_argument("--disclosure", choices=DISCLOSURES)
    p.add_argument("--target", choices=(MEAN_TARGET, MODE_TARGET))
    p.add_argument("--arrival", choices=(RANDOM_ARRIVAL, FIXED_ARRIVAL))
    p.add_argument("--truth", type=int, help="pin every question's true score")
    p.add_argument("--no-infer", action="store_true", help="skip posterior inference for sequential runs")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")
    _add_scale(p)
    _add_tunables(p)

    p = sub.add_parser("metrics", help="worker metrics of a two-phase dataset")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-figures", action="store_true")
    _add_scale(p)
    _add_tunables(p)

    p = sub.add_parser("aggregate", help="consensus per question")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--truth", type=Path, help="truth file; adds a recovery report")
    p.add_argument("--no-figures", action="store_true")
    _add_scale(p)
    _add_tunables(p)
    _add_bias(p)

    p = sub.add_parser("infer", help="posterior over true opinions of a sequential dataset")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-figures", action="store_true")
    _add_scale(p)
    _add_bias(p)

    p = sub.add_parser("evaluate", help="compare consensus methods against ground truth")
    p.add_argument("--in", dest="input", type=Path, help="dataset to aggregate with every method")
    p.add_argument("--consensus", type=Path, help="existing consensus CSV to score instead")
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-figures", action="store_true")
    _add_scale(p)
    _add_tunables(p)
    _add_bias(p)
    return parser


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}{suffix}")


def _scale(args) -> LabelScale:
    return io.resolve_scale(args.scale, args.scale_file)


def _bias_params(args, dataset: Dataset):
    """Per-worker gammas and sigmas (or ``None``) from --profiles / --gamma / --sigma."""
    gammas = sigmas = None
    if args.profiles is not None:
        profiles = io.read_profiles(args.profiles)
        gammas = {p.worker_id: p.conformity_gamma for p in profiles}
        sigmas = {p.worker_id: p.competence_sigma for p in profiles}
        missing = sorted(set(dataset.worker_ids) - set(gammas))
        if missing:
            raise UsageError(f"{args.profiles}: no profile for workers {missing}")
    if args.gamma is not None:
        gammas = args.gamma
    if args.sigma is not None:
        sigmas = args.sigma
    return gammas, sigmas


def cmd_simulate(args) -> None:
    overrides = {
        "workers": args.workers,
        "questions": args.questions,
        "mode": args.mode,
        "seed": args.seed,
        "replications": args.replications,
        "sigma_range": args.sigma_range,
        "gamma_range": args.gamma_range,
        "disclosure": args.disclosure,
        "target": args.target,
        "arrival": args.arrival,
        "truth": args.truth,
    }
    if args.scale is not None or args.scale_file is not None:
        overrides["scale"] = _scale(args)
    if args.config is not None:
        config = io.load_sim_config(args.config, overrides)
    else:
        config = io.sim_config_from_dict({k: v for k, v in overrides.items() if v is not None})

    result = run_experiment(
        config,
        epsilon=args.epsilon,
        r_cap=args.r_cap,
        weight_source=args.weight_source,
        infer=False if args.no_infer else None,
        jobs=args.jobs,
    )
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    merged = result.merged
    io.write_scale_file(out / "scale.json", config.scale)
    io.write_dataset(out / "dataset.jsonl", merged.dataset)
    io.write_truth(out / "truth.jsonl", merged.ground_truth, config.scale)
    io.write_profiles(out / "profiles.csv", merged.profiles)
    io.write_table(
        out / "true_opinions.csv",
        ("question_id", "worker_id", "true_label"),
        ((q, w, config.scale.decode(s)) for (w, q), s in sorted(merged.true_opinions.items(), key=lambda x: (x[0][1], x[0][0]))),
    )
    if result.metric_rows:
        io.write_metrics(out / "metrics.csv", result.metric_rows, out / "metrics_summary.csv", result.summaries)
    io.write_consensus(out / "consensus.csv", result.consensus)
    io.write_recovery(out / "recovery.csv", result.recovery)
    if result.inferences:
        io.write_posteriors(out / "posterior.csv", result.inferences)
        io.write_map(out / "map.csv", result.inferences)
        io.write_opinion_recovery(out / "opinion_recovery.csv", result.opinion_recovery)
    if not args.no_figures:
        plots.recovery_figure(result.recovery, out / "recovery.png")
        if result.metric_rows:
            plots.metrics_figure(result.metric_rows, out / "metrics.png")
        if result.opinion_recovery:
            plots.opinion_recovery_figure(result.opinion_recovery, out / "opinion_recovery.png")


def cmd_metrics(args) -> None:
    dataset = io.parse_two_phase_file(args.input, _scale(args))
    rows, summaries = compute_metrics(dataset, args.epsilon, args.r_cap)
    io.write_metrics(args.out, rows, _sibling(args.out, "_summary.csv"), summaries)
    if not args.no_figures:
        plots.metrics_figure(rows, args.out.with_suffix(".png"))


def _consensus_for(args, dataset: Dataset) -> list[agg.ConsensusResult]:
    if dataset.mode == TWO_PHASE:
        rows, summaries = compute_metrics(dataset, args.epsilon, args.r_cap)
        return agg.aggregate_two_phase(dataset, rows, summaries, args.weight_source)
    gammas, sigmas = _bias_params(args, dataset)
    if gammas is None:
        return agg.aggregate_sequential(dataset)
    inferences = infer_dataset(dataset, gammas, kernel=args.kernel, sigmas=sigmas, limit=args.limit)
    return agg.aggregate_sequential(
        dataset, {inf.question_id: dict(zip(inf.worker_ids, inf.map_scores)) for inf in inferences}
    )


def cmd_aggregate(args) -> None:
    scale = _scale(args)
    dataset = io.parse_dataset_file(args.input, scale)
    results = _consensus_for(args, dataset)
    io.write_consensus(args.out, results)
    if args.truth is not None:
        recovery = agg.evaluate_recovery(results, io.read_truth(args.truth, scale))
        io.write_recovery(_sibling(args.out, "_recovery.csv"), recovery)
        if not args.no_figures:
            plots.recovery_figure(recovery, _sibling(args.out, "_recovery.png"))


def cmd_infer(args) -> None:
    dataset = io.parse_sequential_file(args.input, _scale(args))
    gammas, sigmas = _bias_params(args, dataset)
    if gammas is None:
        raise UsageError("infer needs --gamma or --profiles")
    inferences = infer_dataset(dataset, gammas, kernel=args.kernel, sigmas=sigmas, limit=args.limit)
    io.write_posteriors(args.out, inferences)
    io.write_map(_sibling(args.out, "_map.csv"), inferences)
    if not args.no_figures:
        plots.posterior_figure(inferences[0], args.out.with_suffix(".png"))


def read_consensus(path: Path, scale: LabelScale) -> list[agg.ConsensusResult]:
    results = []
    for lineno, row in enumerate(io.read_table(path), start=2):
        try:
            score = scale.encode(row["final_label"])
            results.append(
                agg.ConsensusResult(row["question_id"], row["method"], float(row["aggregate_score"]), score, row["final_label"])
            )
        except DepconsError as exc:
            exc.line, exc.path = lineno, str(path)
            raise
        except (KeyError, ValueError) as exc:
            raise DepconsError(f"malformed consensus row: {exc}", line=lineno, path=str(path)) from None
    return results


def cmd_evaluate(args) -> None:
    scale = _scale(args)
    if (args.input is None) == (args.consensus is None):
        raise UsageError("evaluate needs exactly one of --in or --consensus")
    if args.consensus is not None:
        results = read_consensus(args.consensus, scale)
    else:
        results = _consensus_for(args, io.parse_dataset_file(args.input, scale))
    recovery = agg.evaluate_recovery(results, io.read_truth(args.truth, scale))
    io.write_recovery(args.out, recovery)
    if not args.no_figures:
        plots.recovery_figure(recovery, args.out.with_suffix(".png"))


COMMANDS = {
    "simulate": cmd_simulate,
    "metrics": cmd_metrics,
    "aggregate": cmd_aggregate,
    "infer": cmd_infer,
    "evaluate": cmd_evaluate,
}


def run_cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except (DepconsError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"depcons: error: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())
