"""Command-line interface.

Subcommands mirror the pipeline stages (``ingest``, ``correct``, ``encode``,
``propagate``, ``analyze``, ``probe``) plus ``pipeline`` to run every enabled
stage.  Values come from an INI config file; flags override it.  Exit codes:
0 ok, 1 internal error, 2 bad input, 3 capability/limit refusal.
"""

from __future__ import annotations

import argparse
import sys
from importlib.metadata import PackageNotFoundError, version

from .config import PipelineConfig
from .errors import AtpropError, CapabilityError, ValidationError
from .pipeline import run_pipeline, run_stage

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_BAD_INPUT = 2
EXIT_CAPABILITY = 3


def _version() -> str:
    try:
        return version("atprop")
    except PackageNotFoundError:
        return "0.0.0+local"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; flags override its values")
    p.add_argument("--output-dir", dest="output_dir", help="artifact directory")


def _add_ingest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", dest="graph_path", help="edge-list file to load")
    p.add_argument("--features", dest="features_path", help="feature matrix (CSV or ATPF)")
    p.add_argument("--labels", dest="labels_path", help="label file, one int per line")
    p.add_argument("--split", dest="split_path", help="split file with train/val/test lines")
    p.add_argument("--generate", dest="gen_kind",
                   help="generate a graph instead of loading (path|cycle|star|complete|erdos_renyi|sbm)")
    p.add_argument("--gen-n", dest="gen_n", type=int, help="generator node count")
    p.add_argument("--gen-p", dest="gen_p", type=float, help="edge probability (erdos_renyi)")
    p.add_argument("--random-features", dest="gen_f", type=int, metavar="F",
                   help="generate seeded random features with F columns")


def _add_correct_flags(p: argparse.ArgumentParser, standalone: bool = True) -> None:
    p.add_argument("--theta", type=float, help="fraction of top-degree nodes to select")
    p.add_argument("--sparse-sample-ratio", dest="sparse_sample_ratio", type=float)
    p.add_argument("--mask-fraction", dest="mask_fraction", type=float)
    p.add_argument("--mask-token", dest="mask_token", type=float)
    p.add_argument("--epsilon", type=float, help="select by convergence-bound threshold instead")
    if standalone:  # these spellings collide with pipeline-level flags
        p.add_argument("--seed", dest="correction_seed", type=int, help="masking RNG seed")
        p.add_argument("--k", dest="epsilon_k", type=int, help="hop count used with --epsilon")
    else:
        p.add_argument("--epsilon-k", dest="epsilon_k", type=int,
                       help="hop count used with --epsilon")


def _add_skip_correction(p: argparse.ArgumentParser) -> None:
    p.add_argument("--skip-correction", action="store_true",
                   help="use the raw graph when no corrected topology exists")


def _add_encode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c-norm", dest="c_norm", type=float)
    p.add_argument("--no-eigen", dest="use_eigen", action="store_false", default=None)
    p.add_argument("--power-tol", dest="power_tol", type=float)
    p.add_argument("--cluster-variant", dest="cluster_variant", choices=["literal", "standard"])
    p.add_argument("--k-order", dest="k_order", type=int)


def _add_propagate_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", dest="k", type=int, help="hop count")
    p.add_argument("--scheme", choices=["sgc", "s2gc", "gbp", "heat", "concat", "custom"])
    p.add_argument("--beta", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--mode", choices=["sum", "concat"])
    p.add_argument("--depths", dest="depths_path", help="per-node depth file")
    p.add_argument("--fixed-r", dest="fixed_r", type=float,
                   help="scalar kernel exponent; bypasses the encode stage")


def _add_analyze_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-max", dest="analyze_k_max", type=int)
    p.add_argument("--dense", dest="analyze_dense", action="store_true", default=None)
    p.add_argument("--dense-limit", dest="dense_limit", type=int)


def _add_probe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", dest="features_path", help="feature file (defaults to propagated)")
    p.add_argument("--labels", dest="labels_path")
    p.add_argument("--split", dest="split_path")
    p.add_argument("--lr", dest="probe_lr", type=float)
    p.add_argument("--epochs", dest="probe_epochs", type=int)
    p.add_argument("--l2", dest="probe_l2", type=float)
    p.add_argument("--seed", dest="probe_seed", type=int)
    p.add_argument("--degree-threshold", dest="degree_threshold", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atprop",
        description="Node-wise graph feature propagation precompute pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load or generate the graph and side data")
    _add_common(p)
    _add_ingest_flags(p)

    p = sub.add_parser("correct", help="select nodes and mask a fraction of their edges")
    _add_common(p)
    _add_correct_flags(p)

    p = sub.add_parser("encode", help="compute per-node kernel coefficients")
    _add_common(p)
    _add_encode_flags(p)
    _add_skip_correction(p)

    p = sub.add_parser("propagate", help="k-step weighted feature propagation")
    _add_common(p)
    _add_propagate_flags(p)
    _add_skip_correction(p)

    p = sub.add_parser("analyze", help="spectral gap and convergence-bound report")
    _add_common(p)
    _add_analyze_flags(p)

    p = sub.add_parser("probe", help="train the linear probe on propagated features")
    _add_common(p)
    _add_probe_flags(p)

    p = sub.add_parser("pipeline", help="run every enabled stage in order")
    _add_common(p)
    _add_ingest_flags(p)
    _add_correct_flags(p, standalone=False)
    _add_encode_flags(p)
    _add_propagate_flags(p)
    _add_analyze_flags(p)
    # probe flags overlap ingest/propagate names; configure the probe via the
    # config file (or run the probe subcommand) when using one-shot pipeline
    p.add_argument("--seed", dest="seed", type=int, help="master seed")

    return parser


def _effective_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_ini(args.config) if args.config else PipelineConfig()
    if getattr(args, "gen_f", None) is not None:
        cfg.gen_features = "random"
    for field, value in vars(args).items():
        if field in ("command", "config", "skip_correction") or value is None:
            continue
        if hasattr(cfg, field):
            cfg.override(field, value)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        cfg = _effective_config(args)
        if command == "pipeline":
            run_pipeline(cfg)
        else:
            run_stage(command, cfg, skip_correction=getattr(args, "skip_correction", False))
    except CapabilityError as exc:
        print(f"atprop {command}: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except ValidationError as exc:
        print(f"atprop {command}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except AtpropError as exc:
        print(f"atprop {command}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
