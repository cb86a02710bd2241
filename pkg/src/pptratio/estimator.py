"""Streaming weighted accumulation, ratio estimates, and series editing.

Accumulators form a commutative monoid under ``merge``: workers process
disjoint index ranges and the coordinator merges their partial sums in a
canonical order, so results are independent of the worker count.  All sums
use Neumaier-compensated summation; within a processing block the exact
``math.fsum`` is used, so merge order only matters at the 1e-16 level.

The cumulative ratio series is the quantity the long qutrit-qutrit runs
are judged by; it occasionally crashes by orders of magnitude when a
near-singular weight lands in the denominator stream.  ``edit_series``
discards such intervals (deviation from a running median of kept values
beyond a threshold fraction) and recomputes every downstream cumulative
estimate from the kept intervals' sums only.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

PPT = "ppt"
CROSS_NORM = "cross_norm"
CRITERIA = (PPT, CROSS_NORM)

# Convention under which the PPT indicator enters the contingency table.
CANONICAL_CONVENTION = "inner"

POOLED = "pooled"


class EstimateUndefined(ZeroDivisionError):
    """Raised when a probability or ratio has no defined value yet."""


class NotApplicable(ValueError):
    """Raised when an operation does not apply to the run's configuration."""


class CheckpointError(RuntimeError):
    """Raised when a checkpoint cannot be loaded or does not match."""


@dataclass
class KahanSum:
    """Neumaier-compensated running sum."""

    total: float = 0.0
    comp: float = 0.0

    def add(self, value: float) -> None:
        t = self.total + value
        if abs(self.total) >= abs(value):
            self.comp += (self.total - t) + value
        else:
            self.comp += (value - t) + self.total
        self.total = t

    def merge(self, other: "KahanSum") -> None:
        self.add(other.total)
        self.add(other.comp)

    @property
    def value(self) -> float:
        return self.total + self.comp


def _cell_key(metric: str, criterion: str, convention: str) -> str:
    return f"{metric}|{criterion}|{convention}"


@dataclass
class Accumulator:
    """Mergeable weighted sums for one point stream.

    ``sum_weight`` holds the total weight per metric; ``sum_pass`` holds the
    weight of criterion-passing points per (metric, criterion, convention)
    cell.  The 2x2 contingency table (PPT-pass x cross-norm-pass, canonical
    convention) is only filled when both criteria are evaluated;
    ``contingency_points`` records how many points entered it.
    """

    metrics: tuple
    criteria: tuple
    conventions: tuple
    n_points: int = 0
    sum_weight: dict = field(default_factory=dict)
    sum_pass: dict = field(default_factory=dict)
    contingency: np.ndarray = field(
        default_factory=lambda: np.zeros((2, 2), dtype=np.int64)
    )
    contingency_points: int = 0
    clipped: dict = field(default_factory=dict)

    def __post_init__(self):
        self.metrics = tuple(self.metrics)
        self.criteria = tuple(self.criteria)
        self.conventions = tuple(self.conventions)
        for m in self.metrics:
            self.sum_weight.setdefault(m, KahanSum())
            self.clipped.setdefault(m, 0)
            for crit, conv in self.cells():
                self.sum_pass.setdefault(_cell_key(m, crit, conv), KahanSum())

    def cells(self):
        for crit in self.criteria:
            if crit == PPT:
                for conv in self.conventions:
                    yield crit, conv
            else:
                yield crit, CANONICAL_CONVENTION

    def accumulate(self, weight_per_metric: dict, outcome) -> None:
        """Add one point.  ``outcome`` is a criteria.CriterionOutcome."""
        for m in self.metrics:
            w = float(weight_per_metric[m])
            if w < 0:
                raise ValueError("weights must be non-negative")
            self.sum_weight[m].add(w)
            if PPT in self.criteria:
                for conv in self.conventions:
                    if outcome.ppt_pass[conv]:
                        self.sum_pass[_cell_key(m, PPT, conv)].add(w)
            if CROSS_NORM in self.criteria and outcome.cn_pass:
                self.sum_pass[_cell_key(m, CROSS_NORM, CANONICAL_CONVENTION)].add(w)
        if PPT in self.criteria and CROSS_NORM in self.criteria:
            i = 0 if outcome.ppt_pass[self._contingency_convention()] else 1
            j = 0 if outcome.cn_pass else 1
            self.contingency[i, j] += 1
            self.contingency_points += 1
        self.n_points += 1

    def _contingency_convention(self) -> str:
        if CANONICAL_CONVENTION in self.conventions:
            return CANONICAL_CONVENTION
        return self.conventions[0]

    def accumulate_batch(self, weights: dict, ppt_pass: dict, cn_pass, clipped=None):
        """Add a block of points with exact within-block summation.

        ``weights``: {metric: (n,) array}; ``ppt_pass``: {convention: (n,)
        bool array} (empty if PPT not evaluated); ``cn_pass``: (n,) bool
        array or None; ``clipped``: {metric: (n,) bool array}.
        """
        n = None
        for m in self.metrics:
            w = np.asarray(weights[m], dtype=np.float64)
            n = w.size
            if np.any(w < 0):
                raise ValueError("weights must be non-negative")
            self.sum_weight[m].add(math.fsum(w))
            if PPT in self.criteria:
                for conv in self.conventions:
                    self.sum_pass[_cell_key(m, PPT, conv)].add(
                        math.fsum(w[ppt_pass[conv]])
                    )
            if CROSS_NORM in self.criteria:
                self.sum_pass[_cell_key(m, CROSS_NORM, CANONICAL_CONVENTION)].add(
                    math.fsum(w[cn_pass])
                )
            if clipped is not None and m in clipped and clipped[m] is not None:
                self.clipped[m] += int(np.count_nonzero(clipped[m]))
        if PPT in self.criteria and CROSS_NORM in self.criteria:
            p = ppt_pass[self._contingency_convention()]
            c = np.asarray(cn_pass, dtype=bool)
            self.contingency[0, 0] += int(np.count_nonzero(p & c))
            self.contingency[0, 1] += int(np.count_nonzero(p & ~c))
            self.contingency[1, 0] += int(np.count_nonzero(~p & c))
            self.contingency[1, 1] += int(np.count_nonzero(~p & ~c))
            self.contingency_points += n
        self.n_points += n

    def merge(self, other: "Accumulator") -> None:
        if (self.metrics, self.criteria, self.conventions) != (
            other.metrics,
            other.criteria,
            other.conventions,
        ):
            raise ValueError("cannot merge accumulators with different layouts")
        self.n_points += other.n_points
        for m in self.metrics:
            self.sum_weight[m].merge(other.sum_weight[m])
            self.clipped[m] += other.clipped[m]
        for key in self.sum_pass:
            self.sum_pass[key].merge(other.sum_pass[key])
        self.contingency += other.contingency
        self.contingency_points += other.contingency_points

    def copy(self) -> "Accumulator":
        out = Accumulator(self.metrics, self.criteria, self.conventions)
        out.merge(self)
        return out

    def to_dict(self) -> dict:
        return {
            "metrics": list(self.metrics),
            "criteria": list(self.criteria),
            "conventions": list(self.conventions),
            "n_points": self.n_points,
            "sum_weight": {m: [k.total, k.comp] for m, k in self.sum_weight.items()},
            "sum_pass": {key: [k.total, k.comp] for key, k in self.sum_pass.items()},
            "contingency": self.contingency.tolist(),
            "contingency_points": self.contingency_points,
            "clipped": dict(self.clipped),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Accumulator":
        acc = cls(
            tuple(data["metrics"]),
            tuple(data["criteria"]),
            tuple(data["conventions"]),
        )
        acc.n_points = int(data["n_points"])
        for m, (t, c) in data["sum_weight"].items():
            acc.sum_weight[m] = KahanSum(t, c)
        for key, (t, c) in data["sum_pass"].items():
            acc.sum_pass[key] = KahanSum(t, c)
        acc.contingency = np.array(data["contingency"], dtype=np.int64)
        acc.contingency_points = int(data["contingency_points"])
        acc.clipped = {m: int(v) for m, v in data["clipped"].items()}
        return acc


def probability(acc: Accumulator, metric: str, criterion: str, convention: str) -> float:
    """Weighted pass probability; raises EstimateUndefined on zero weight."""
    total = acc.sum_weight[metric].value
    if total <= 0.0:
        raise EstimateUndefined(f"no weight accumulated for metric {metric!r}")
    if criterion == CROSS_NORM:
        convention = CANONICAL_CONVENTION
    return acc.sum_pass[_cell_key(metric, criterion, convention)].value / total


def omega(
    full: Accumulator,
    boundary: Accumulator,
    metric: str,
    criterion: str = PPT,
    convention: str = CANONICAL_CONVENTION,
) -> float:
    """Full-rank pass probability over boundary pass probability."""
    p_full = probability(full, metric, criterion, convention)
    p_bdry = probability(boundary, metric, criterion, convention)
    if p_bdry <= 0.0:
        raise EstimateUndefined("boundary probability is zero")
    return p_full / p_bdry


def pooled_omega(
    full: Accumulator,
    boundary: Accumulator,
    metric: str,
    criterion: str = PPT,
    mode: str = "pass_weight",
) -> float:
    """Average of the two per-convention ratios for N != M runs.

    ``pass_weight`` weights each convention's ratio by its
    boundary-denominator pass weight (a precision proxy); ``plain`` is the
    unweighted mean.
    """
    convs = [c for c in full.conventions]
    if len(convs) < 2:
        raise NotApplicable("pooling requires two conventions (N != M)")
    values = [omega(full, boundary, metric, criterion, c) for c in convs]
    if mode == "plain":
        return sum(values) / len(values)
    if mode != "pass_weight":
        raise ValueError(f"unknown pooling mode {mode!r}")
    wts = [boundary.sum_pass[_cell_key(metric, criterion, c)].value for c in convs]
    wt_total = sum(wts)
    if wt_total <= 0.0:
        raise EstimateUndefined("no boundary pass weight to pool with")
    return sum(w * v for w, v in zip(wts, values)) / wt_total


@dataclass(frozen=True)
class IntervalRecord:
    """Cumulative estimates logged after one interval of points."""

    interval_index: int
    n_points: int
    # {(metric, criterion, convention-or-"pooled"): (prob_full, prob_boundary, omega)}
    entries: dict
    timestamp: float = 0.0


def _safe(fn, *args, **kwargs) -> float:
    try:
        return fn(*args, **kwargs)
    except (EstimateUndefined, NotApplicable, KeyError):
        return float("nan")


def make_interval_record(
    interval_index: int,
    n_points: int,
    full: Accumulator | None,
    boundary: Accumulator | None,
    pooling: str = "pass_weight",
    timestamp: float = 0.0,
) -> IntervalRecord:
    """Snapshot all cumulative probabilities and ratios into one record."""
    ref = full if full is not None else boundary
    entries = {}
    for crit, conv in ref.cells():
        for m in ref.metrics:
            pf = _safe(probability, full, m, crit, conv) if full else float("nan")
            pb = (
                _safe(probability, boundary, m, crit, conv)
                if boundary is not None and m in boundary.metrics
                else float("nan")
            )
            om = (
                _safe(omega, full, boundary, m, crit, conv)
                if full is not None and boundary is not None and m in boundary.metrics
                else float("nan")
            )
            entries[(m, crit, conv)] = (pf, pb, om)
    if (
        full is not None
        and boundary is not None
        and PPT in ref.criteria
        and len(ref.conventions) > 1
    ):
        for m in ref.metrics:
            if m in boundary.metrics:
                po = _safe(pooled_omega, full, boundary, m, PPT, pooling)
            else:
                po = float("nan")
            entries[(m, PPT, POOLED)] = (float("nan"), float("nan"), po)
    return IntervalRecord(interval_index, n_points, entries, timestamp)


# ---------------------------------------------------------------------------
# Fluctuation editing


@dataclass(frozen=True)
class EditRule:
    """Discard an interval when its cumulative estimate strays from the
    running median of the prior ``window`` kept values by more than
    ``threshold`` as a fraction of that median."""

    window: int = 5
    threshold: float = 0.5

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be an odd integer >= 3")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")


@dataclass(frozen=True)
class IntervalDelta:
    """Per-interval increments of the four sums behind a cumulative ratio."""

    pass_full: float
    weight_full: float
    pass_boundary: float
    weight_boundary: float


def _ratio(pf: float, wf: float, pb: float, wb: float) -> float:
    if wf <= 0 or wb <= 0 or pb <= 0:
        return float("nan")
    return (pf / wf) / (pb / wb)


def cumulative_series(deltas) -> list:
    """Unedited cumulative ratio after each interval."""
    pf = wf = pb = wb = 0.0
    out = []
    for d in deltas:
        pf += d.pass_full
        wf += d.weight_full
        pb += d.pass_boundary
        wb += d.weight_boundary
        out.append(_ratio(pf, wf, pb, wb))
    return out


@dataclass(frozen=True)
class EditResult:
    kept_indices: tuple
    discarded_indices: tuple
    edited_values: tuple  # cumulative ratio over kept intervals only


def edit_series(deltas, rule: EditRule = EditRule()) -> EditResult:
    """Walk the interval series, discarding large fluctuations.

    Every candidate cumulative estimate is computed from the kept
    intervals' sums plus the candidate interval, so all downstream values
    are automatically recomputed after a discard.  Deterministic, and
    idempotent: editing the kept series again discards nothing.
    """
    pf = wf = pb = wb = 0.0
    kept, disc, values = [], [], []
    for idx, d in enumerate(deltas):
        cand = _ratio(
            pf + d.pass_full,
            wf + d.weight_full,
            pb + d.pass_boundary,
            wb + d.weight_boundary,
        )
        if values:
            med = float(np.median(values[-rule.window :]))
            bad = not math.isfinite(cand) or abs(cand - med) > rule.threshold * abs(med)
        else:
            bad = False
        if bad:
            disc.append(idx)
            continue
        pf += d.pass_full
        wf += d.weight_full
        pb += d.pass_boundary
        wb += d.weight_boundary
        kept.append(idx)
        values.append(cand)
    return EditResult(tuple(kept), tuple(disc), tuple(values))


# ---------------------------------------------------------------------------
# Checkpointing

CHECKPOINT_VERSION = 1


@dataclass
class RunState:
    """Everything needed to resume a run bit-identically."""

    config_hash: str
    next_index: int
    interval_index: int
    full: Accumulator | None
    boundary: Accumulator | None

    def to_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "config_hash": self.config_hash,
            "next_index": self.next_index,
            "interval_index": self.interval_index,
            "full": self.full.to_dict() if self.full else None,
            "boundary": self.boundary.to_dict() if self.boundary else None,
        }


def checkpoint_save(state: RunState, path) -> None:
    """Atomically write the run state as JSON (floats round-trip exactly)."""
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(state.to_dict(), fh, indent=1)
    os.replace(tmp, path)


def checkpoint_load(path, expect_hash: str | None = None) -> RunState:
    """Load a checkpoint, verifying its config hash when one is expected."""
    try:
        with open(path) as fh:
            data = json.load(fh)
        if data.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version in {path}")
        state = RunState(
            config_hash=data["config_hash"],
            next_index=int(data["next_index"]),
            interval_index=int(data["interval_index"]),
            full=Accumulator.from_dict(data["full"]) if data["full"] else None,
            boundary=(
                Accumulator.from_dict(data["boundary"]) if data["boundary"] else None
            ),
        )
    except CheckpointError:
        raise
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if expect_hash is not None and state.config_hash != expect_hash:
        raise CheckpointError(
            "checkpoint was produced by a different configuration "
            f"(hash {state.config_hash} != {expect_hash}); refusing to resume"
        )
    return state
