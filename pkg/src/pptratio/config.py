"""Run configuration: one declarative, hashable description per run.

The configuration hash covers every field that affects the statistical
output.  Execution details (worker count, output directory) are excluded:
results are guaranteed identical across worker counts, so changing them on
resume is legitimate.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, replace

from . import criteria, measures
from .faure import SequenceConfig
from .states import coordinate_count

RANK_MODES = ("full", "boundary", "paired")
SEQUENCE_KINDS = ("faure", "prng")
BOUNDARY_STREAMS = ("subset", "independent")

# Fields that do not change the run's statistical output.
_NON_SEMANTIC_FIELDS = ("workers", "output_dir")


@dataclass(frozen=True)
class RunConfig:
    d_a: int
    d_b: int
    rank_mode: str = "paired"
    # Each entry is (metric name, c_expr or None).
    metrics: tuple = (("hs", None),)
    criteria: tuple = ("ppt",)
    sequence_kind: str = "faure"
    base: int | None = None
    scrambling: str = "none"
    scramble_seed: int = 0
    skip: int = 0
    prng_seed: int = 0
    boundary_stream: str = "subset"
    total_points: int = 100_000
    points_per_interval: int = 100_000
    ppt_tol: float = 1e-10
    cn_tol: float = 1e-10
    clip_threshold: float = measures.CLIP_THRESHOLD
    edit_window: int = 5
    edit_threshold: float = 0.5
    pooling: str = "pass_weight"
    workers: int = 1
    output_dir: str = "run_output"

    def __post_init__(self):
        object.__setattr__(self, "metrics", _normalize_metrics(self.metrics))
        object.__setattr__(self, "criteria", tuple(self.criteria))
        if self.d_a < 1 or self.d_b < 1:
            raise ValueError("subsystem dimensions must be positive")
        if self.rank_mode not in RANK_MODES:
            raise ValueError(f"rank_mode must be one of {RANK_MODES}")
        if self.sequence_kind not in SEQUENCE_KINDS:
            raise ValueError(f"sequence_kind must be one of {SEQUENCE_KINDS}")
        if self.boundary_stream not in BOUNDARY_STREAMS:
            raise ValueError(f"boundary_stream must be one of {BOUNDARY_STREAMS}")
        for crit in self.criteria:
            if crit not in ("ppt", "cross_norm"):
                raise ValueError(f"unknown criterion {crit!r}")
        if self.total_points < 1:
            raise ValueError("total_points must be >= 1")
        if not 1 <= self.points_per_interval:
            raise ValueError("points_per_interval must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.pooling not in ("pass_weight", "plain"):
            raise ValueError("pooling must be 'pass_weight' or 'plain'")
        # Fail early on malformed metric definitions.
        self.metric_kinds()

    @property
    def d(self) -> int:
        return self.d_a * self.d_b

    @property
    def full_dimension(self) -> int:
        return coordinate_count(self.d, rank_deficient=False)

    @property
    def boundary_dimension(self) -> int:
        return coordinate_count(self.d, rank_deficient=True)

    @property
    def metric_names(self) -> tuple:
        return tuple(name for name, _ in self.metrics)

    def metric_kinds(self):
        return tuple(measures.metric_from_name(n, e) for n, e in self.metrics)

    def boundary_metric_names(self) -> tuple:
        """Metrics with a defined boundary (hyperarea) density."""
        return tuple(
            k.name for k in self.metric_kinds() if not k.is_monotone
        )

    def conventions(self) -> tuple:
        return criteria.conventions_for(self.d_a, self.d_b)

    def full_sequence(self) -> SequenceConfig:
        return SequenceConfig(
            dimension=self.full_dimension,
            base=self.base,
            scrambling=self.scrambling,
            scramble_seed=self.scramble_seed,
            skip=self.skip,
        )

    def boundary_sequence(self) -> SequenceConfig:
        if self.boundary_stream == "subset":
            # The paper-style extraction: the leading s-1 coordinates of the
            # full-dimensional stream.
            return replace(
                self.full_sequence(),
                coordinate_subset=tuple(range(self.boundary_dimension)),
            )
        return SequenceConfig(
            dimension=self.boundary_dimension,
            base=None,
            scrambling=self.scrambling,
            scramble_seed=self.scramble_seed,
            skip=self.skip,
        )

    def to_dict(self) -> dict:
        data = asdict(self)
        data["metrics"] = [
            {"name": n} if e is None else {"name": n, "c_expr": e}
            for n, e in self.metrics
        ]
        data["criteria"] = list(self.criteria)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown configuration fields: {sorted(unknown)}")
        if "metrics" in data:
            data["metrics"] = _normalize_metrics(data["metrics"])
        if "criteria" in data:
            data["criteria"] = tuple(data["criteria"])
        return cls(**data)

    def config_hash(self) -> str:
        data = self.to_dict()
        for key in _NON_SEMANTIC_FIELDS:
            data.pop(key, None)
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path, **overrides) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)


def _normalize_metrics(entries) -> tuple:
    norm = []
    for entry in entries:
        if isinstance(entry, str):
            norm.append((entry, None))
        elif isinstance(entry, dict):
            norm.append((entry["name"], entry.get("c_expr")))
        else:
            name, expr = entry
            norm.append((str(name), expr))
    return tuple(norm)
