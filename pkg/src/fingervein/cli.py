"""Command-line interface for the verification pipeline.

Exit status taxonomy: 0 success (or ACCEPT for verify), 1 REJECT
(verify only), 2 usage error, 3 I/O error, 4 data/validation error,
5 numeric error. Errors print one machine-parsable line:
``error [category] message``.
"""

import argparse
import sys

from .bundle import load_bundle, save_bundle
from .config import (
    PipelineConfig,
    format_config,
    load_config,
    load_synth_config,
)
from .dataset import (
    SynthConfig,
    export_dataset,
    load_dataset,
    load_image,
    synthesize_dataset,
)
from .pipeline import (
    enroll_users,
    evaluate_bundle,
    learn_features,
    sweep,
    verify_image,
)
from .protocol import format_fold_table, format_sweep_tables, write_report_csv
from .validation import NumericError

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_NUMERIC = 5


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fingervein",
        description="Finger-vein verification pipeline",
    )
    parser.add_argument("--config", help="path to a key=value config file")
    parser.add_argument(
        "--seed", type=int, help="override the config's master seed"
    )
    parser.add_argument(
        "--threads", type=int, help="cap internal linear-algebra parallelism"
    )
    parser.add_argument(
        "--quiet", action="store_true", help="suppress progress output"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    learn = sub.add_parser("learn-features", help="train whitening + autoencoder")
    learn.add_argument("dataset_root")
    learn.add_argument("out_bundle")

    enroll = sub.add_parser("enroll", help="fit per-user models into a bundle")
    enroll.add_argument("bundle")
    enroll.add_argument("dataset_root")
    enroll.add_argument("user_ids", nargs="+")

    verify = sub.add_parser("verify", help="verify one image against a user")
    verify.add_argument("bundle")
    verify.add_argument("user_id")
    verify.add_argument("image_path")

    evaluate = sub.add_parser("evaluate", help="run the repeated-split protocol")
    evaluate.add_argument("bundle")
    evaluate.add_argument("dataset_root")
    evaluate.add_argument("report_csv")

    sweep_cmd = sub.add_parser("sweep", help="hidden-size x iterations grid")
    sweep_cmd.add_argument("dataset_root")
    sweep_cmd.add_argument("report_csv")
    sweep_cmd.add_argument(
        "--hidden-sizes", required=True,
        help="comma-separated hidden layer sizes",
    )
    sweep_cmd.add_argument(
        "--iterations", required=True,
        help="comma-separated optimizer iteration counts",
    )

    synth = sub.add_parser("synth", help="write a synthetic dataset")
    synth.add_argument("synth_config", nargs="?", default=None,
                       help="key=value generator settings (defaults when omitted)")
    synth.add_argument("out_dir")

    sub.add_parser("print-config", help="print the effective configuration")
    return parser


def _load_effective_config(args):
    config = PipelineConfig()
    if args.config:
        config = load_config(args.config, base=config)
    if args.seed is not None:
        config.seed = args.seed
    return config.validate()


def _int_list(text, flag):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"{flag} must be a comma-separated integer list")
    if not values:
        raise ValueError(f"{flag} must be a comma-separated integer list")
    return values


def _cmd_learn_features(args, say):
    config = _load_effective_config(args)
    records = load_dataset(args.dataset_root, config.layout_pattern)
    bundle, summary = learn_features(records, config)
    save_bundle(bundle, args.out_bundle)
    say(
        f"trained on {summary.n_learning_images} images / "
        f"{summary.n_patches} patches"
    )
    say(
        f"hidden_dim={config.hidden_dim} iterations={summary.iterations_run}"
        f"/{config.max_iterations} final_cost={summary.final_cost:.6f} "
        f"grad_norm={summary.final_gradient_norm:.3e} "
        f"wall={summary.wall_seconds:.1f}s"
    )
    say(f"bundle written to {args.out_bundle}")
    return EXIT_OK


def _cmd_enroll(args, say):
    bundle = load_bundle(args.bundle)
    config = PipelineConfig(**bundle.config)
    records = load_dataset(args.dataset_root, config.layout_pattern)
    replaced = enroll_users(bundle, records, args.user_ids)
    save_bundle(bundle, args.bundle)
    say(f"enrolled {len(args.user_ids)} user(s); bundle now holds "
        f"{len(bundle.user_models)} model(s)")
    for user in replaced:
        say(f"note: user {user} was re-enrolled")
    return EXIT_OK


def _cmd_verify(args, say):
    bundle = load_bundle(args.bundle)
    image = load_image(args.image_path)
    accepted, score, threshold = verify_image(bundle, args.user_id, image)
    print(
        f"{'ACCEPT' if accepted else 'REJECT'} user={args.user_id} "
        f"score={score:.6f} threshold={threshold:.6f}"
    )
    return EXIT_OK if accepted else EXIT_REJECT


def _cmd_evaluate(args, say):
    bundle = load_bundle(args.bundle)
    config = PipelineConfig(**bundle.config)
    records = load_dataset(args.dataset_root, config.layout_pattern)
    report = evaluate_bundle(bundle, records)
    write_report_csv(
        args.report_csv,
        [(config.hidden_dim, config.max_iterations, report)],
    )
    say(format_fold_table(report))
    if report.skipped_users:
        say(f"skipped users (too few samples): {', '.join(report.skipped_users)}")
    print(f"mean EER {report.mean_eer:.6f}  mean AUC {report.mean_auc:.6f}")
    return EXIT_OK


def _cmd_sweep(args, say):
    config = _load_effective_config(args)
    hidden_sizes = _int_list(args.hidden_sizes, "--hidden-sizes")
    iteration_counts = _int_list(args.iterations, "--iterations")
    records = load_dataset(args.dataset_root, config.layout_pattern)
    results = sweep(records, config, hidden_sizes, iteration_counts)
    write_report_csv(args.report_csv, results)
    print(format_sweep_tables(results))
    return EXIT_OK


def _cmd_synth(args, say):
    if args.synth_config is None:
        synth_config = SynthConfig()
    else:
        synth_config = load_synth_config(args.synth_config)
    records = synthesize_dataset(synth_config)
    count = export_dataset(records, args.out_dir)
    say(f"wrote {count} images under {args.out_dir}")
    return EXIT_OK


def _cmd_print_config(args, say):
    config = _load_effective_config(args)
    print(format_config(config), end="")
    return EXIT_OK


_COMMANDS = {
    "learn-features": _cmd_learn_features,
    "enroll": _cmd_enroll,
    "verify": _cmd_verify,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "synth": _cmd_synth,
    "print-config": _cmd_print_config,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.threads is not None:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=max(1, args.threads))

    def say(message):
        if not args.quiet:
            print(message)

    try:
        return _COMMANDS[args.command](args, say)
    except NumericError as exc:
        print(f"error [numeric] {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error [io] {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, RuntimeError) as exc:
        print(f"error [data] {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
