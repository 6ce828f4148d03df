"""End-to-end analysis orchestration.

Turns a raw dataset into the full result the views consume: detected causal
states, per-group patterns, glyph statistics, and graph columns. The
pipeline is deterministic for a fixed dataset and config; the seed is
recorded for provenance but nothing downstream draws randomness.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigError
from .events import Dataset, dataset_from_json, preprocess
from .grouping import CausalStateSet, StateConfig, detect_states
from .layout import causal_order_columns, glyph_stats
from .patterns import SequentialPattern, mine_patterns

__all__ = ["AnalysisConfig", "AnalysisResult", "run_pipeline", "sequence_groups"]


@dataclass(frozen=True)
class AnalysisConfig:
    """Every tunable of the pipeline in one serializable record."""

    session_interval_ms: int
    alpha: float = 0.05
    min_support: float = 0.1
    max_pattern_len: int = 8
    eps: float = 0.3
    min_pts: int = 5
    max_iter: int = 20
    min_type_count: int = 1
    seed: int = 0
    binary: bool = False

    def __post_init__(self) -> None:
        if self.session_interval_ms <= 0:
            raise ConfigError("session_interval_ms must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0 < self.min_support <= 1:
            raise ConfigError(f"min_support must be in (0, 1], got {self.min_support}")
        if self.max_pattern_len < 1:
            raise ConfigError("max_pattern_len must be >= 1")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if self.min_pts < 1:
            raise ConfigError("min_pts must be >= 1")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be >= 0")
        if self.min_type_count < 0:
            raise ConfigError("min_type_count must be >= 0")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "AnalysisConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        if "session_interval_ms" not in data:
            raise ConfigError("session_interval_ms is required")
        return cls(**data)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def sequence_groups(ds: Dataset, states: CausalStateSet) -> dict[str, int]:
    """Aggregate session-level groups to one group per sequence by majority
    vote; ties and sequences without sessions go to the lowest index."""
    votes: dict[str, Counter] = {}
    for (parent_id, _), g in states.assignment.groups.items():
        votes.setdefault(parent_id, Counter())[g] += 1
    out = {}
    for seq in ds.sequences:
        counter = votes.get(seq.id)
        if not counter:
            out[seq.id] = 0
        else:
            out[seq.id] = max(counter, key=lambda g: (counter[g], -g))
    return out


@dataclass(frozen=True)
class AnalysisResult:
    """Everything a finished analysis exposes; serializes canonically."""

    config: AnalysisConfig
    states: CausalStateSet
    patterns: tuple[tuple[SequentialPattern, ...], ...]
    glyphs: tuple[tuple[dict, ...], ...]
    columns: tuple[dict, ...]
    sequence_assignment: dict[str, int]

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "config_hash": self.config.config_hash(),
            "states": self.states.to_json(),
            "patterns": [
                [p.to_json() for p in group] for group in self.patterns
            ],
            "glyphs": [list(group) for group in self.glyphs],
            "columns": [dict(c) for c in self.columns],
            "sequence_assignment": dict(sorted(self.sequence_assignment.items())),
        }


def run_pipeline(raw: Dataset | dict, config: AnalysisConfig) -> AnalysisResult:
    """Preprocess, detect states, and mine per-group artifacts."""
    ds = dataset_from_json(raw) if isinstance(raw, dict) else raw
    ds = preprocess(
        ds,
        min_type_count=config.min_type_count,
        interval_ms=config.session_interval_ms,
        source=ds.provenance.source if ds.provenance else "",
    )
    states = detect_states(
        ds,
        StateConfig(
            alpha=config.alpha,
            eps=config.eps,
            min_pts=config.min_pts,
            max_iter=config.max_iter,
            binary=config.binary,
        ),
    )
    seq_groups = sequence_groups(ds, states)

    k = len(states.graphs)
    grouped = [[] for _ in range(k)]
    for seq in ds.sequences:
        grouped[seq_groups[seq.id]].append(seq)

    patterns = tuple(
        tuple(
            mine_patterns(
                grouped[g],
                min_support=config.min_support,
                max_len=config.max_pattern_len,
            )
        )
        for g in range(k)
    )
    glyphs = tuple(
        tuple(
            glyph_stats(grouped[g], t, ds.catalog).to_json()
            for t in range(len(ds.catalog.types))
        )
        for g in range(k)
    )
    columns = tuple(
        {str(v): c for v, c in sorted(causal_order_columns(g).items())}
        for g in states.graphs
    )
    return AnalysisResult(
        config=config,
        states=states,
        patterns=patterns,
        glyphs=glyphs,
        columns=columns,
        sequence_assignment=seq_groups,
    )
