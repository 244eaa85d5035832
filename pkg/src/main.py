import argparse
import sys
from pathlib import Path
from typing import Optional
from loguru import logger
from .analytics import build_report
from .config import BEHAVIOR_KINDS, MISSING_THRESHOLD_SWEEP, RunConfig, SynthConfig, settings
from .dataset import FilterReport, expand_input_paths, filter_dataset, read_ego_network, read_ego_networks, threshold_sweep
from .pipeline import score_network, score_networks
from .storage import OutputWriter, load_results
from .synth import evaluate_detection, generate_many, read_truth, write_synthetic

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad input or arguments; maps to exit code 2."""


def configure_logging():
    logger.remove()
    logger.add(sys.stderr, level=settings.LOG_LEVEL)


def parse_mix(value: str) -> dict[str, float]:
    """'implicit_copy=0.5,unrelated=0.5' -> {kind: fraction}"""
    mix = {}
    for part in value.split(","):
        if not part.strip():
            continue
        kind, sep, fraction = part.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected kind=fraction, got {part!r}")
        kind = kind.strip()
        if kind not in BEHAVIOR_KINDS:
            raise argparse.ArgumentTypeError(f"unknown behavior kind {kind!r}; choose from {', '.join(BEHAVIOR_KINDS)}")
        try:
            mix[kind] = float(fraction)
        except ValueError:
            raise argparse.ArgumentTypeError(f"fraction for {kind} is not a number: {fraction!r}")
    return mix


def _default_input(command: str) -> Path:
    # report reads what score wrote
    return settings.OUTPUT_DIR if command == "report" else settings.DATA_DIR


def _run_config(args: argparse.Namespace) -> RunConfig:
    values = {
        "input_paths": args.input or [_default_input(args.command)],
        "output_dir": args.output,
        "window_size": args.window_size,
        "threshold": args.threshold,
        "missing_threshold": args.missing_threshold,
        "histogram_bins": args.bins,
        "parallelism": args.parallelism,
        "seed": args.seed,
        "skip_bad_files": args.skip_bad_files,
        "dump_windows": getattr(args, "dump_windows", False),
    }
    return RunConfig(**{k: v for k, v in values.items() if v is not None})


def _load_networks(cfg: RunConfig):
    networks, skipped = read_ego_networks(cfg.input_paths, cfg.skip_bad_files)
    if not networks:
        raise UsageError("no ego networks found")
    logger.info(f"Loaded {len(networks)} ego networks ({len(skipped)} files skipped)")
    return networks, skipped


def cmd_filter(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    networks, _ = _load_networks(cfg)
    report = FilterReport()
    filter_dataset(networks, cfg.dataset_config(), report)
    for threshold, retained in threshold_sweep(networks, MISSING_THRESHOLD_SWEEP).items():
        logger.info(f"  missing threshold {threshold:.2f}: {retained} networks retained")
    OutputWriter(cfg.output_dir).write_json("filter_report.json", report)
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    dataset_cfg = cfg.dataset_config()
    networks, skipped = _load_networks(cfg)

    filter_report = FilterReport()
    retained = filter_dataset(networks, dataset_cfg, filter_report)
    results, excluded = score_networks(retained, dataset_cfg, cfg.parallelism, cfg.dump_windows)

    writer = OutputWriter(cfg.output_dir)
    for result in results:
        writer.write_scored(result)
        if cfg.dump_windows:
            writer.write_windows(result)
    writer.write_json("filter_report.json", filter_report)
    writer.write_json("excluded.json", excluded)
    if cfg.skip_bad_files:
        writer.write_json("skipped_files.json", skipped)
    writer.write_manifest("score", cfg.echo())
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    results = load_results(cfg.input_paths)
    if not results:
        raise UsageError("no scored outputs found")
    report = build_report(results, cfg.threshold, cfg.histogram_bins)
    writer = OutputWriter(cfg.output_dir)
    writer.write_report(report)
    writer.write_manifest("report", cfg.echo())
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise UsageError("synth needs --seed so the dataset can be regenerated")
    if args.networks < 1:
        raise UsageError("--networks must be >= 1")
    values = {
        "seed": args.seed,
        "num_followees": args.followees,
        "tweets_per_followee": args.tweets_per_followee,
        "ego_tweet_count": args.ego_tweets,
        "behavior_mix": args.mix,
        "edit_rate": args.edit_rate,
        "implicit_source": args.implicit_source,
        "vocab_size": args.vocab_size,
        "window_size": args.window_size,
    }
    config = SynthConfig(**{k: v for k, v in values.items() if v is not None})
    output_dir = args.output or settings.OUTPUT_DIR

    writer = OutputWriter(output_dir)
    for ego, truth in generate_many(config, args.networks):
        for path in write_synthetic(writer.output_dir, ego, truth):
            writer.track(path)
    writer.write_manifest("synth", config.model_dump(mode="json") | {"networks": args.networks})
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    dataset_cfg = cfg.dataset_config()
    paths = expand_input_paths(cfg.input_paths)
    if not paths:
        raise UsageError("no ego networks found")

    scored, entries, per_network = [], {}, {}
    for path in paths:
        ego = read_ego_network(path)
        truth_path = path.with_name(f"{ego.ego_user_id}.truth.json")
        if not truth_path.exists():
            raise UsageError(f"no ground truth next to {path} (expected {truth_path.name})")
        truth = read_truth(truth_path)
        result = score_network(ego, dataset_cfg)
        per_network[ego.ego_user_id] = evaluate_detection(result.all_tweets, truth, cfg.threshold)
        scored.extend(result.all_tweets)
        entries.update(truth.entries)

    overall = evaluate_detection(scored, entries, cfg.threshold)
    logger.info(
        f"Detection at {cfg.threshold}: recall {overall.recall}, precision {overall.precision}, "
        f"best-match accuracy {overall.best_match_accuracy}"
    )
    writer = OutputWriter(cfg.output_dir)
    writer.write_json("detection.json", {
        "overall": overall.model_dump(mode="json"),
        "networks": {k: v.model_dump(mode="json") for k, v in sorted(per_network.items())},
    })
    writer.write_manifest("eval", cfg.echo())
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--input", type=Path, nargs="+", default=[], help="Input files or directories (default: ECHO_DETECT_DATA_DIR; ECHO_DETECT_OUTPUT_DIR for report)")
    parser.add_argument("--output", type=Path, default=None, help="Output directory (default: ECHO_DETECT_OUTPUT_DIR)")
    parser.add_argument("--window-size", type=int, default=None, help="Influence window size n (default 100)")
    parser.add_argument("--threshold", type=float, default=None, help="High-score threshold (default 0.384)")
    parser.add_argument("--missing-threshold", type=float, default=None, help="Max missing-data fraction (default 0.20)")
    parser.add_argument("--bins", type=int, default=None, help="Score histogram bins (default 50)")
    parser.add_argument("--parallelism", type=int, default=None, help="Worker processes (default: ECHO_DETECT_PARALLELISM)")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (required for synth)")
    parser.add_argument("--skip-bad-files", action="store_true", help="Skip unparseable files instead of failing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echo-detect", description="Detect untagged responses in ego-network tweet histories.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="Drop networks with too much missing followee data")
    _add_common(p)
    p.set_defaults(handler=cmd_filter)

    p = sub.add_parser("score", help="Filter, window and score every ego tweet")
    _add_common(p)
    p.add_argument("--dump-windows", action="store_true", help="Also write <ego>.windows.csv")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("report", help="Aggregate *.scored.json outputs into a report")
    _add_common(p)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("synth", help="Generate synthetic networks with ground truth")
    _add_common(p)
    p.add_argument("--networks", type=int, default=1, help="Number of networks (seeds seed..seed+N-1)")
    p.add_argument("--followees", type=int, default=None)
    p.add_argument("--tweets-per-followee", type=int, default=None)
    p.add_argument("--ego-tweets", type=int, default=None)
    p.add_argument("--mix", type=parse_mix, default=None, help="kind=fraction,... over " + ", ".join(BEHAVIOR_KINDS))
    p.add_argument("--edit-rate", type=float, default=None)
    p.add_argument("--implicit-source", choices=["strongest", "uniform"], default=None, help="Window member implicit copies are taken from (default strongest)")
    p.add_argument("--vocab-size", type=int, default=None)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("eval", help="Score synthetic networks and compare with their ground truth")
    _add_common(p)
    p.set_defaults(handler=cmd_eval)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        settings.validate()
        return args.handler(args)
    except (UsageError, ValueError, FileNotFoundError) as e:
        # ValueError covers parse, validation, empty-corpus and synth errors
        logger.error(str(e))
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"Run failed: {e}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
