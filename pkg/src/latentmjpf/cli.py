"""Command line entry point: gen, train, score, eval."""

import argparse
import sys
from dataclasses import replace

from . import synthetic
from .pipeline import PipelineConfig, eval_files, load_config, score_pipeline, train_pipeline
from .storage import save_frames, save_labels


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentmjpf",
        description="Latent-space anomaly detection for frame sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic labeled dataset")
    gen.add_argument("--preset", required=True,
                     choices=("train", "stop", "avoid", "uturn"))
    gen.add_argument("--out", required=True, help="dataset file to write")
    gen.add_argument("--labels", required=True, help="labels CSV to write")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--size", type=int, default=16, help="frame side length")

    train = sub.add_parser("train", help="train a model bundle from a dataset")
    train.add_argument("--config", required=True, help="pipeline config file")

    score = sub.add_parser("score", help="score a dataset against a bundle")
    score.add_argument("--config", required=True, help="pipeline config file")
    score.add_argument("--dataset", default=None, help="override the config dataset")
    score.add_argument("--report", default=None, help="override the report path")
    score.add_argument("--plot", default=None, help="override the plot path")

    ev = sub.add_parser("eval", help="compare a report against ground truth")
    ev.add_argument("--report", required=True)
    ev.add_argument("--labels", required=True)
    return parser


def _cmd_gen(args) -> None:
    spec = synthetic.preset(args.preset, seed=args.seed, frame_size=args.size)
    frames, labels = synthetic.generate(spec)
    save_frames(args.out, frames)
    save_labels(args.labels, labels)
    print(f"[gen] preset {args.preset}: {len(frames)} frames -> {args.out}, "
          f"labels -> {args.labels}")


def _cmd_score(args) -> None:
    cfg = load_config(args.config)
    if args.report:
        cfg = replace(cfg, report=args.report)
    if args.plot:
        cfg = replace(cfg, plot=args.plot)
    score_pipeline(cfg, dataset=args.dataset)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            _cmd_gen(args)
        elif args.command == "train":
            train_pipeline(load_config(args.config))
        elif args.command == "score":
            _cmd_score(args)
        else:
            eval_files(args.report, args.labels)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
