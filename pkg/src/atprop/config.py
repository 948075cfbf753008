"""Pipeline configuration: flat ``key = value`` INI with bracketed sections.

Every effective value (defaults merged with file and CLI overrides) feeds a
SHA-256 config hash that is stamped into each artifact's sidecar manifest,
and all stage randomness derives from one master seed fanned out through
stable per-stage sub-seeds.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

__all__ = ["PipelineConfig", "stage_seed"]


def stage_seed(master_seed: int, stage: str) -> int:
    """Stable sub-seed: first 8 bytes of sha256("<seed>:<stage>")."""
    digest = hashlib.sha256(f"{master_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


# (section, key, field name, parser) — the parser also renders the value for
# hashing via repr, so types stay stable across runs.
def _opt(parser):
    def parse(raw):
        if raw is None or raw == "" or raw.lower() == "none":
            return None
        return parser(raw)

    return parse


def _bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    if raw.lower() in ("1", "true", "yes", "on"):
        return True
    if raw.lower() in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {raw!r}")


def _int_list(raw) -> tuple[int, ...]:
    if isinstance(raw, (tuple, list)):
        return tuple(int(v) for v in raw)
    return tuple(int(p) for p in raw.split(",") if p.strip())


def _float_list(raw) -> tuple[float, ...]:
    if isinstance(raw, (tuple, list)):
        return tuple(float(v) for v in raw)
    return tuple(float(p) for p in raw.split(",") if p.strip())


_SCHEMA: list[tuple[str, str, str, object]] = [
    ("paths", "output_dir", "output_dir", str),
    ("paths", "graph", "graph_path", _opt(str)),
    ("paths", "features", "features_path", _opt(str)),
    ("paths", "labels", "labels_path", _opt(str)),
    ("paths", "split", "split_path", _opt(str)),
    ("paths", "depths", "depths_path", _opt(str)),
    ("generate", "kind", "gen_kind", _opt(str)),
    ("generate", "n", "gen_n", int),
    ("generate", "p", "gen_p", float),
    ("generate", "p_in", "gen_p_in", float),
    ("generate", "p_out", "gen_p_out", float),
    ("generate", "sizes", "gen_sizes", _int_list),
    ("generate", "features", "gen_features", str),
    ("generate", "f", "gen_f", int),
    ("correction", "enabled", "correction_enabled", _bool),
    ("correction", "theta", "theta", float),
    ("correction", "sparse_sample_ratio", "sparse_sample_ratio", float),
    ("correction", "mask_fraction", "mask_fraction", float),
    ("correction", "mask_token", "mask_token", float),
    ("correction", "seed", "correction_seed", _opt(int)),
    ("correction", "epsilon", "epsilon", _opt(float)),
    ("correction", "epsilon_k", "epsilon_k", int),
    ("encoding", "enabled", "encoding_enabled", _bool),
    ("encoding", "c_norm", "c_norm", float),
    ("encoding", "use_eigen", "use_eigen", _bool),
    ("encoding", "power_tol", "power_tol", float),
    ("encoding", "power_max", "power_max", int),
    ("encoding", "cluster_variant", "cluster_variant", str),
    ("encoding", "k_order", "k_order", int),
    ("propagation", "k", "k", int),
    ("propagation", "scheme", "scheme", str),
    ("propagation", "beta", "beta", float),
    ("propagation", "omega", "omega", float),
    ("propagation", "rho", "rho", float),
    ("propagation", "mode", "mode", str),
    ("propagation", "fixed_r", "fixed_r", _opt(float)),
    ("propagation", "custom_weights", "custom_weights", _opt(_float_list)),
    ("analyze", "enabled", "analyze_enabled", _bool),
    ("analyze", "k_max", "analyze_k_max", int),
    ("analyze", "dense", "analyze_dense", _bool),
    ("analyze", "dense_limit", "dense_limit", int),
    ("probe", "enabled", "probe_enabled", _bool),
    ("probe", "lr", "probe_lr", float),
    ("probe", "epochs", "probe_epochs", int),
    ("probe", "l2", "probe_l2", float),
    ("probe", "seed", "probe_seed", _opt(int)),
    ("probe", "degree_threshold", "degree_threshold", float),
    ("pipeline", "seed", "seed", int),
]

_BY_FIELD = {f: (s, k, p) for s, k, f, p in _SCHEMA}


@dataclass
class PipelineConfig:
    output_dir: str = "out"
    graph_path: str | None = None
    features_path: str | None = None
    labels_path: str | None = None
    split_path: str | None = None
    depths_path: str | None = None
    gen_kind: str | None = None
    gen_n: int = 10
    gen_p: float = 0.1
    gen_p_in: float = 0.1
    gen_p_out: float = 0.01
    gen_sizes: tuple[int, ...] = (200, 200)
    gen_features: str = "none"  # none | random
    gen_f: int = 8
    correction_enabled: bool = True
    theta: float = 0.10
    sparse_sample_ratio: float = 0.2
    mask_fraction: float = 0.5
    mask_token: float = 0.0
    correction_seed: int | None = None
    epsilon: float | None = None
    epsilon_k: int = 5
    encoding_enabled: bool = True
    c_norm: float = 1.0 / 3.0
    use_eigen: bool = True
    power_tol: float = 1e-10
    power_max: int = 10000
    cluster_variant: str = "literal"
    k_order: int = 1
    k: int = 3
    scheme: str = "s2gc"
    beta: float = 0.5
    omega: float = 1.0
    rho: float = 1.0
    mode: str = "sum"
    fixed_r: float | None = None
    custom_weights: tuple[float, ...] | None = None
    analyze_enabled: bool = False
    analyze_k_max: int = 10
    analyze_dense: bool = True
    dense_limit: int = 2000
    probe_enabled: bool = False
    probe_lr: float = 0.1
    probe_epochs: int = 300
    probe_l2: float = 1e-4
    probe_seed: int | None = None
    degree_threshold: float = 3.0
    seed: int = 0

    @classmethod
    def from_ini(cls, path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ValidationError(f"{path}: {exc}") from None
        cfg = cls()
        known = {(s, k): (f, p) for s, k, f, p in _SCHEMA}
        for section in parser.sections():
            for key, raw in parser.items(section):
                if (section, key) not in known:
                    raise ValidationError(f"{path}: unknown config key [{section}] {key}")
                fname, parse = known[(section, key)]
                try:
                    setattr(cfg, fname, parse(raw))
                except (TypeError, ValueError) as exc:
                    raise ValidationError(f"{path}: bad value for [{section}] {key}: {exc}") from None
        return cfg

    def override(self, field_name: str, value) -> None:
        if field_name not in _BY_FIELD:
            raise ValidationError(f"unknown config field {field_name!r}")
        setattr(self, field_name, value)

    def lines(self) -> list[str]:
        """Canonical section.key=value lines for hashing and manifests."""
        out = []
        for section, key, fname, _ in _SCHEMA:
            out.append(f"{section}.{key}={getattr(self, fname)!r}")
        return sorted(out)

    def config_hash(self) -> str:
        return hashlib.sha256("\n".join(self.lines()).encode()).hexdigest()

    def stage_seed_for(self, stage: str) -> int:
        return stage_seed(self.seed, stage)
