"""Stage implementations behind the CLI.

Each stage reads the previous stage's artifacts from the output directory and
writes its own, so composing subcommands one by one is byte-identical to the
one-shot pipeline.  Every artifact gets a ``<name>.manifest`` sidecar carrying
the effective config hash; no artifact embeds timestamps or other
run-varying state.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import data
from .config import PipelineConfig
from .correction import MaskPlan, apply_mask, select_nodes_epsilon
from .encoding import EncodingConfig, compute_kernel
from .errors import CapabilityError, DependencyError, ValidationError
from .graph import (
    SparseGraph,
    add_self_loops,
    degrees,
    generate,
    load_edge_list,
    save_edge_list,
    validate_graph,
)
from .probe import ProbeConfig, SplitSpec, degree_group_report, evaluate, predict, train_probe
from .propagation import PropagationConfig, build_operator, propagate
from .spectral import spectral_gap_report, verify_bound

__all__ = [
    "STAGES",
    "run_stage",
    "run_pipeline",
]

GRAPH_FILE = "graph.edges"
CORRECTED_FILE = "corrected.edges"
FEATURES_FILE = "features.atpf"
LABELS_FILE = "labels.txt"
SPLIT_FILE = "split.txt"
KERNEL_FILE = "kernel.csv"
PROPAGATED_FILE = "propagated.atpf"
CORRECTION_REPORT = "correction_report.txt"
ANALYSIS_CSV = "analysis.csv"
ANALYSIS_SUMMARY = "analysis_summary.txt"
PROBE_SUMMARY = "probe_summary.txt"
PROBE_GROUPS = "probe_groups.csv"


def _out(cfg: PipelineConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, artifact: str, cfg: PipelineConfig, **extra) -> None:
    lines = {"artifact": artifact, "stage": extra.pop("stage"), "config_hash": cfg.config_hash()}
    lines.update({k: str(v) for k, v in extra.items()})
    body = "".join(f"{k} = {lines[k]}\n" for k in sorted(lines))
    (out / f"{artifact}.manifest").write_text(body, encoding="utf-8")


def _read_manifest(out: Path, artifact: str) -> dict[str, str]:
    path = out / f"{artifact}.manifest"
    if not path.exists():
        return {}
    entries = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            entries[k] = v
    return entries


def _load_graph_artifact(out: Path, artifact: str, missing_hint: str) -> SparseGraph:
    path = out / artifact
    if not path.exists():
        raise DependencyError(f"missing upstream artifact {path}; {missing_hint}")
    n_hint = _read_manifest(out, artifact).get("n")
    return load_edge_list(path, n_hint=int(n_hint) if n_hint else None)


def _topology(cfg: PipelineConfig, out: Path, skip_correction: bool) -> SparseGraph:
    """Corrected topology, or the raw graph when correction is skipped."""
    if (out / CORRECTED_FILE).exists():
        return _load_graph_artifact(out, CORRECTED_FILE, "run the correct stage")
    if skip_correction:
        return _load_graph_artifact(out, GRAPH_FILE, "run the ingest stage")
    raise DependencyError(
        f"missing upstream artifact {out / CORRECTED_FILE}; "
        "run the correct stage or pass --skip-correction"
    )


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def stage_ingest(cfg: PipelineConfig) -> None:
    out = _out(cfg)
    if cfg.gen_kind:
        params: dict = {}
        if cfg.gen_kind in ("path", "cycle", "star", "complete"):
            params["n"] = cfg.gen_n
        elif cfg.gen_kind == "erdos_renyi":
            params.update(n=cfg.gen_n, p=cfg.gen_p)
        elif cfg.gen_kind == "sbm":
            params.update(sizes=cfg.gen_sizes, p_in=cfg.gen_p_in, p_out=cfg.gen_p_out)
        else:
            raise ValidationError(f"unknown generator kind {cfg.gen_kind!r}")
        g = generate(cfg.gen_kind, seed=cfg.stage_seed_for("generate"), **params)
    elif cfg.graph_path:
        g = load_edge_list(cfg.graph_path)
    else:
        raise ValidationError("no graph: set [paths] graph or [generate] kind")
    validate_graph(g)
    if g.has_self_loops:
        raise ValidationError("input graph must not contain self-loops")
    save_edge_list(g, out / GRAPH_FILE)
    _write_manifest(out, GRAPH_FILE, cfg, stage="ingest", n=g.n, m=g.num_edges())

    if cfg.gen_features == "random":
        rng = np.random.default_rng(cfg.stage_seed_for("features"))
        x = rng.random((g.n, cfg.gen_f))
    elif cfg.features_path:
        x = data.load_features(cfg.features_path)
        if x.shape[0] != g.n:
            raise ValidationError(
                f"features have {x.shape[0]} rows but the graph has {g.n} nodes"
            )
    else:
        x = None
    if x is not None:
        data.save_features_atpf(x, out / FEATURES_FILE)
        _write_manifest(out, FEATURES_FILE, cfg, stage="ingest", n=x.shape[0], f=x.shape[1])

    if cfg.labels_path:
        labels = data.load_labels(cfg.labels_path, n_hint=g.n)
        data.save_labels(labels, out / LABELS_FILE)
        _write_manifest(out, LABELS_FILE, cfg, stage="ingest", n=len(labels))
    if cfg.split_path:
        split = data.load_split(cfg.split_path)
        data.save_split(split, out / SPLIT_FILE)
        _write_manifest(out, SPLIT_FILE, cfg, stage="ingest")


def stage_correct(cfg: PipelineConfig) -> None:
    out = _out(cfg)
    g = _load_graph_artifact(out, GRAPH_FILE, "run the ingest stage")
    seed = cfg.correction_seed if cfg.correction_seed is not None else cfg.stage_seed_for("correct")
    plan = MaskPlan(
        theta=cfg.theta,
        sparse_sample_ratio=cfg.sparse_sample_ratio,
        edge_mask_fraction=cfg.mask_fraction,
        mask_token=cfg.mask_token,
        seed=seed,
    )
    if cfg.epsilon is not None:
        plan.selected_nodes = select_nodes_epsilon(
            g, cfg.epsilon, cfg.epsilon_k, dense_limit=cfg.dense_limit
        )
    masked, report = apply_mask(g, plan)
    save_edge_list(masked, out / CORRECTED_FILE)
    _write_manifest(out, CORRECTED_FILE, cfg, stage="correct", n=masked.n, m=masked.num_edges())

    reductions = " ".join(f"{v:.17g}" for v in report.degree_reduction_per_selected_node)
    body = (
        f"edges_before: {report.edges_before}\n"
        f"edges_masked: {report.edges_masked}\n"
        f"edges_removed: {report.edges_removed}\n"
        f"selected_nodes: {' '.join(str(u) for u in plan.selected_nodes)}\n"
        f"degree_reduction_per_selected_node: {reductions}\n"
    )
    (out / CORRECTION_REPORT).write_text(body, encoding="utf-8")
    _write_manifest(out, CORRECTION_REPORT, cfg, stage="correct")


def stage_encode(cfg: PipelineConfig, skip_correction: bool = False) -> None:
    out = _out(cfg)
    g = _topology(cfg, out, skip_correction)
    enc = EncodingConfig(
        use_eigen=cfg.use_eigen,
        c_norm=cfg.c_norm,
        power_iter_tol=cfg.power_tol,
        power_iter_max=cfg.power_max,
        k_order=cfg.k_order,
        cluster_variant=cfg.cluster_variant,
    )
    kernel = compute_kernel(g, enc)
    data.save_kernel_csv(kernel, out / KERNEL_FILE)
    _write_manifest(out, KERNEL_FILE, cfg, stage="encode", n=g.n)


def stage_propagate(cfg: PipelineConfig, skip_correction: bool = False) -> None:
    out = _out(cfg)
    g = _topology(cfg, out, skip_correction)
    feats_path = out / FEATURES_FILE
    if not feats_path.exists():
        raise DependencyError(f"missing upstream artifact {feats_path}; run the ingest stage")
    x = data.load_features(feats_path)

    if cfg.fixed_r is not None:
        kernel = cfg.fixed_r
    else:
        kernel_path = out / KERNEL_FILE
        if not kernel_path.exists():
            raise DependencyError(
                f"missing upstream artifact {kernel_path}; run the encode stage or pass --fixed-r"
            )
        kernel = data.load_kernel_csv(kernel_path)
        if len(kernel.r_tilde) != g.n:
            raise ValidationError("kernel length does not match the graph")

    depths = data.load_depths(cfg.depths_path, g.n) if cfg.depths_path else None
    pcfg = PropagationConfig(
        k=cfg.k,
        scheme=cfg.scheme,
        beta=cfg.beta,
        omega=cfg.omega,
        rho=cfg.rho,
        custom_weights=None if cfg.custom_weights is None else np.asarray(cfg.custom_weights),
        node_depths=depths,
        mode=cfg.mode,
    )
    op = build_operator(g, kernel)
    result = propagate(op, x, pcfg)
    if result.mode == "sum":
        data.save_features_atpf(result.summed, out / PROPAGATED_FILE)
        _write_manifest(out, PROPAGATED_FILE, cfg, stage="propagate", n=g.n, f=x.shape[1])
    else:
        for i, hop in enumerate(result.hops):
            data.save_features_atpf(hop, out / f"propagated.hop{i}.atpf")
        _write_manifest(
            out, PROPAGATED_FILE, cfg, stage="propagate", n=g.n, f=x.shape[1],
            hops=len(result.hops),
        )


def stage_analyze(cfg: PipelineConfig) -> None:
    out = _out(cfg)
    if (out / CORRECTED_FILE).exists():
        g = _load_graph_artifact(out, CORRECTED_FILE, "run the correct stage")
        source = CORRECTED_FILE
    else:
        g = _load_graph_artifact(out, GRAPH_FILE, "run the ingest stage")
        source = GRAPH_FILE
    if cfg.analyze_dense and g.n > cfg.dense_limit:
        raise CapabilityError(
            f"analyze --dense refused: n={g.n} exceeds dense limit {cfg.dense_limit}"
        )
    method = "dense" if cfg.analyze_dense else "power_deflate"
    looped = add_self_loops(g)
    comps = spectral_gap_report(looped, method=method, dense_limit=cfg.dense_limit)
    connected = len(comps) == 1
    lam2 = max(1.0 - c.gap for c in comps)
    m = looped.num_nonloop_edges()

    lines = [
        f"source: {source}",
        f"n: {g.n}",
        f"m: {m}",
        f"two_m_plus_n: {2 * m + g.n}",
        f"connected: {connected}",
        f"lambda2: {lam2:.17g}",
        f"spectral_gap: {1.0 - lam2:.17g}",
        f"avg_degree: {float(degrees(g).values.mean()):.17g}",
    ]
    for c in comps:
        lines.append(
            f"component {c.component}: size={c.size} gap={c.gap:.17g} avg_degree={c.avg_degree:.17g}"
        )

    if connected and cfg.analyze_dense:
        report = verify_bound(looped, cfg.analyze_k_max, dense_limit=cfg.dense_limit)
        lines.append(f"worst_slack: {report.worst_slack:.17g}")
        with open(out / ANALYSIS_CSV, "w", encoding="utf-8") as fh:
            fh.write("node,k,d_tilde,bound,empirical\n")
            for node, k, dt, bound, emp in report.rows():
                fh.write(f"{node},{k},{dt:.17g},{bound:.17g},{emp:.17g}\n")
        _write_manifest(out, ANALYSIS_CSV, cfg, stage="analyze")
    elif not connected:
        lines.append("worst_slack: n/a (disconnected; bound verification skipped)")
    else:
        lines.append("worst_slack: n/a (dense verification disabled)")

    (out / ANALYSIS_SUMMARY).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, ANALYSIS_SUMMARY, cfg, stage="analyze")


def stage_probe(cfg: PipelineConfig) -> None:
    out = _out(cfg)
    feats_path = out / PROPAGATED_FILE
    if cfg.features_path and not feats_path.exists():
        feats_path = Path(cfg.features_path)
    if not feats_path.exists():
        raise DependencyError(
            f"missing features {feats_path}; run the propagate stage or pass --features"
        )
    x = data.load_features(feats_path)

    labels_path = out / LABELS_FILE if (out / LABELS_FILE).exists() else cfg.labels_path
    if not labels_path:
        raise DependencyError("probe needs labels; set [paths] labels")
    labels = data.load_labels(labels_path, n_hint=x.shape[0])

    split_path = out / SPLIT_FILE if (out / SPLIT_FILE).exists() else cfg.split_path
    if not split_path:
        raise DependencyError("probe needs a split file; set [paths] split")
    parts = data.load_split(split_path)
    split = SplitSpec(train=parts["train"], val=parts["val"], test=parts["test"])

    g = _load_graph_artifact(out, GRAPH_FILE, "run the ingest stage")
    seed = cfg.probe_seed if cfg.probe_seed is not None else cfg.stage_seed_for("probe")
    pcfg = ProbeConfig(
        learning_rate=cfg.probe_lr, epochs=cfg.probe_epochs, l2=cfg.probe_l2, seed=seed
    )
    trained = train_probe(x, labels, split, pcfg)

    preds = predict(trained.weights, x)
    eval_ids = split.test if len(split.test) else split.train
    groups = degree_group_report(preds, labels, g, cfg.degree_threshold, node_ids=eval_ids)

    lines = [
        f"train_accuracy: {evaluate(trained.weights, x, labels, split.train):.17g}",
        f"final_train_loss: {trained.train_loss[-1]:.17g}",
    ]
    if len(split.val):
        lines.append(f"val_accuracy: {evaluate(trained.weights, x, labels, split.val):.17g}")
    if len(split.test):
        lines.append(f"test_accuracy: {evaluate(trained.weights, x, labels, split.test):.17g}")
    (out / PROBE_SUMMARY).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(out, PROBE_SUMMARY, cfg, stage="probe")

    with open(out / PROBE_GROUPS, "w", encoding="utf-8") as fh:
        fh.write("group,threshold,size,accuracy\n")
        low_acc = "" if groups.low_accuracy is None else f"{groups.low_accuracy:.17g}"
        high_acc = "" if groups.high_accuracy is None else f"{groups.high_accuracy:.17g}"
        fh.write(f"low,{groups.threshold:.17g},{groups.low_size},{low_acc}\n")
        fh.write(f"high,{groups.threshold:.17g},{groups.high_size},{high_acc}\n")
    _write_manifest(out, PROBE_GROUPS, cfg, stage="probe")


STAGES = {
    "ingest": stage_ingest,
    "correct": stage_correct,
    "encode": stage_encode,
    "propagate": stage_propagate,
    "analyze": stage_analyze,
    "probe": stage_probe,
}


def run_stage(name: str, cfg: PipelineConfig, skip_correction: bool = False) -> None:
    if name in ("encode", "propagate"):
        STAGES[name](cfg, skip_correction=skip_correction)
    else:
        STAGES[name](cfg)


def run_pipeline(cfg: PipelineConfig) -> None:
    """Run all enabled stages in dependency order."""
    stage_ingest(cfg)
    if cfg.correction_enabled:
        stage_correct(cfg)
    if cfg.encoding_enabled:
        stage_encode(cfg, skip_correction=not cfg.correction_enabled)
    elif cfg.fixed_r is None:
        raise ValidationError("encoding disabled: set [propagation] fixed_r to bypass it")
    stage_propagate(cfg, skip_correction=not cfg.correction_enabled)
    if cfg.analyze_enabled:
        stage_analyze(cfg)
    if cfg.probe_enabled:
        stage_probe(cfg)
