"""Run orchestration: paired-stream integration, logging, resume, report.

Work is split into pieces along a fixed global grid (chunks of
``CHUNK_POINTS`` indices, additionally cut at interval boundaries), each
piece is evaluated independently (possibly by a worker pool), and the
partial accumulators are merged in piece order.  Because the grid and the
merge order are canonical, the output is byte-identical for any worker
count, and a resumed run replays exactly the pieces an uninterrupted run
would have processed.

Two CSV logs are written side by side: ``intervals.csv`` carries the
cumulative probabilities and ratios, ``intervals_raw.csv`` the cumulative
raw sums behind them, which is what fluctuation editing needs to recompute
downstream estimates after a discard.
"""

from __future__ import annotations

import json
import math
import multiprocessing
import sys
from pathlib import Path

import numpy as np

from . import criteria as crit_mod
from . import faure, measures
from .config import RunConfig
from .estimator import (
    CANONICAL_CONVENTION,
    POOLED,
    Accumulator,
    CheckpointError,
    EditRule,
    IntervalDelta,
    RunState,
    checkpoint_load,
    checkpoint_save,
    cumulative_series,
    edit_series,
    make_interval_record,
)
from .states import cube_to_state_batch, simplex_from_cube_batch

# Determinism unit: accumulation is always chunked on this grid and merged
# in order, whatever the worker count.
CHUNK_POINTS = 8192

INTERVAL_HEADER = "interval,n_points,metric,criterion,convention,prob_full,prob_boundary,omega"
RAW_HEADER = "interval,n_points,metric,criterion,convention,pass_full,weight_full,pass_boundary,weight_boundary"

CONFIG_FILENAME = "config.json"
CHECKPOINT_FILENAME = "checkpoint.json"
INTERVALS_FILENAME = "intervals.csv"
RAW_FILENAME = "intervals_raw.csv"
SUMMARY_FILENAME = "summary.json"


def _fmt(x: float) -> str:
    return repr(float(x))


def piece_bounds(total: int, per_interval: int, chunk: int = CHUNK_POINTS):
    """(start, end) pairs covering [0, total), cut on the chunk grid and at
    interval boundaries."""
    edges = set(range(0, total, chunk))
    edges.update(range(0, total, per_interval))
    edges.add(total)
    edges = sorted(edges)
    return list(zip(edges[:-1], edges[1:]))


def _stream_points(cfg: RunConfig, start: int, count: int):
    """(full points or None, boundary points or None) for one index range."""
    want_full = cfg.rank_mode in ("full", "paired")
    want_bdry = cfg.rank_mode in ("boundary", "paired")
    pts_full = pts_bdry = None
    if cfg.sequence_kind == "faure":
        if want_full or cfg.boundary_stream == "subset":
            parent = faure.stream(cfg.full_sequence(), start, count)
            if want_full:
                pts_full = parent
            if want_bdry and cfg.boundary_stream == "subset":
                pts_bdry = parent[:, : cfg.boundary_dimension]
        if want_bdry and cfg.boundary_stream == "independent":
            pts_bdry = faure.stream(cfg.boundary_sequence(), start, count)
    else:
        if want_full or cfg.boundary_stream == "subset":
            parent = faure.prng_stream(cfg.prng_seed, cfg.full_dimension, count, start)
            if want_full:
                pts_full = parent
            if want_bdry and cfg.boundary_stream == "subset":
                pts_bdry = parent[:, : cfg.boundary_dimension]
        if want_bdry and cfg.boundary_stream == "independent":
            pts_bdry = faure.prng_stream(
                cfg.prng_seed, cfg.boundary_dimension, count, start, stream_id=1
            )
    return pts_full, pts_bdry


def _new_accumulator(cfg: RunConfig, boundary: bool) -> Accumulator:
    names = cfg.boundary_metric_names() if boundary else cfg.metric_names
    return Accumulator(names, cfg.criteria, cfg.conventions())


def _eval_stream(cfg: RunConfig, pts: np.ndarray, boundary: bool) -> Accumulator:
    d = cfg.d
    kinds = [
        k
        for k in cfg.metric_kinds()
        if not boundary or not k.is_monotone
    ]
    if cfg.criteria:
        rho, lam = cube_to_state_batch(pts, d, rank_deficient=boundary)
        ppt_pass, cn_pass = crit_mod.evaluate_criteria_batch(
            rho, cfg.d_a, cfg.d_b, cfg.criteria, cfg.ppt_tol, cfg.cn_tol
        )
    else:
        nsimp = d - 2 if boundary else d - 1
        lam = simplex_from_cube_batch(pts[:, :nsimp], rank_deficient=boundary)
        ppt_pass, cn_pass = {}, None
    weights, clipped = {}, {}
    for kind in kinds:
        w, cl = measures.weight_batch(lam, kind, boundary, cfg.clip_threshold)
        weights[kind.name] = w
        clipped[kind.name] = cl
    acc = _new_accumulator(cfg, boundary)
    acc.accumulate_batch(weights, ppt_pass, cn_pass, clipped)
    return acc


def _piece_task(args):
    config_data, start, end = args
    cfg = RunConfig.from_dict(config_data)
    pts_full, pts_bdry = _stream_points(cfg, start, end - start)
    out = {}
    if pts_full is not None:
        out["full"] = _eval_stream(cfg, pts_full, boundary=False).to_dict()
    if pts_bdry is not None:
        out["boundary"] = _eval_stream(cfg, pts_bdry, boundary=True).to_dict()
    return out


def accumulate_only(cfg: RunConfig):
    """Run the integration without writing any files.

    Returns (full, boundary) accumulators (either may be None depending on
    rank_mode).  Uses the same piece grid and merge order as ``run``, so the
    sums are identical to a logged run with the same configuration.
    """
    full = _new_accumulator(cfg, boundary=False) if cfg.rank_mode != "boundary" else None
    boundary = _new_accumulator(cfg, boundary=True) if cfg.rank_mode != "full" else None
    pieces = piece_bounds(cfg.total_points, cfg.points_per_interval)
    tasks = [(cfg.to_dict(), s, e) for s, e in pieces]
    pool = multiprocessing.Pool(cfg.workers) if cfg.workers > 1 else None
    try:
        results = pool.imap(_piece_task, tasks, chunksize=1) if pool else map(_piece_task, tasks)
        for result in results:
            if "full" in result:
                full.merge(Accumulator.from_dict(result["full"]))
            if "boundary" in result:
                boundary.merge(Accumulator.from_dict(result["boundary"]))
    finally:
        if pool is not None:
            pool.close()
            pool.join()
    return full, boundary


def _interval_rows(cfg: RunConfig, record) -> list:
    rows = []
    order = []
    for crit in cfg.criteria:
        if crit == "ppt":
            order.extend(("ppt", c) for c in cfg.conventions())
            if cfg.rank_mode == "paired" and len(cfg.conventions()) > 1:
                order.append(("ppt", POOLED))
        else:
            order.append((crit, CANONICAL_CONVENTION))
    for metric in cfg.metric_names:
        for crit, conv in order:
            pf, pb, om = record.entries.get(
                (metric, crit, conv), (float("nan"),) * 3
            )
            rows.append(
                f"{record.interval_index},{record.n_points},{metric},{crit},{conv},"
                f"{_fmt(pf)},{_fmt(pb)},{_fmt(om)}"
            )
    return rows


def _raw_rows(cfg: RunConfig, interval_index, n_points, full, boundary) -> list:
    rows = []
    nan = float("nan")
    for metric in cfg.metric_names:
        for crit in cfg.criteria:
            convs = cfg.conventions() if crit == "ppt" else (CANONICAL_CONVENTION,)
            for conv in convs:
                key = f"{metric}|{crit}|{conv}"
                pf = full.sum_pass[key].value if full and key in full.sum_pass else nan
                wf = full.sum_weight[metric].value if full and metric in full.sum_weight else nan
                pb = (
                    boundary.sum_pass[key].value
                    if boundary and key in boundary.sum_pass
                    else nan
                )
                wb = (
                    boundary.sum_weight[metric].value
                    if boundary and metric in boundary.sum_weight
                    else nan
                )
                rows.append(
                    f"{interval_index},{n_points},{metric},{crit},{conv},"
                    f"{_fmt(pf)},{_fmt(wf)},{_fmt(pb)},{_fmt(wb)}"
                )
    return rows


def _summary(cfg: RunConfig, full, boundary) -> dict:
    from .estimator import omega as omega_fn
    from .estimator import pooled_omega, probability

    def maybe(fn, *args, **kwargs):
        try:
            value = fn(*args, **kwargs)
        except Exception:
            return None
        return value if math.isfinite(value) else None

    probs, omegas = {}, {}
    for metric in cfg.metric_names:
        probs[metric], omegas[metric] = {}, {}
        for crit in cfg.criteria:
            convs = list(cfg.conventions()) if crit == "ppt" else [CANONICAL_CONVENTION]
            probs[metric][crit] = {}
            omegas[metric][crit] = {}
            for conv in convs:
                probs[metric][crit][conv] = {
                    "full": maybe(probability, full, metric, crit, conv) if full else None,
                    "boundary": (
                        maybe(probability, boundary, metric, crit, conv)
                        if boundary and metric in boundary.metrics
                        else None
                    ),
                }
                omegas[metric][crit][conv] = (
                    maybe(omega_fn, full, boundary, metric, crit, conv)
                    if full and boundary and metric in boundary.metrics
                    else None
                )
            if crit == "ppt" and len(convs) > 1 and full and boundary:
                omegas[metric][crit][POOLED] = (
                    maybe(pooled_omega, full, boundary, metric, crit, cfg.pooling)
                    if metric in boundary.metrics
                    else None
                )

    def acc_block(acc):
        if acc is None:
            return None
        return {
            "n_points": acc.n_points,
            "contingency": acc.contingency.tolist(),
            "contingency_points": acc.contingency_points,
            "clipped": dict(acc.clipped),
        }

    return {
        "config_hash": cfg.config_hash(),
        "d_a": cfg.d_a,
        "d_b": cfg.d_b,
        "rank_mode": cfg.rank_mode,
        "total_points": cfg.total_points,
        "probabilities": probs,
        "omega": omegas,
        "full": acc_block(full),
        "boundary": acc_block(boundary),
    }


def run(cfg: RunConfig, progress: bool = True) -> dict:
    """Execute a run from scratch; returns the summary dict."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg.save(outdir / CONFIG_FILENAME)
    ckpt_path = outdir / CHECKPOINT_FILENAME
    if ckpt_path.exists():
        ckpt_path.unlink()
    state = RunState(
        config_hash=cfg.config_hash(),
        next_index=0,
        interval_index=0,
        full=_new_accumulator(cfg, boundary=False) if cfg.rank_mode != "boundary" else None,
        boundary=_new_accumulator(cfg, boundary=True) if cfg.rank_mode != "full" else None,
    )
    return _execute(cfg, state, outdir, progress=progress)


def resume(run_dir, workers: int | None = None, progress: bool = True) -> dict:
    """Continue an interrupted run to total_points, as if uninterrupted."""
    outdir = Path(run_dir)
    cfg = RunConfig.load(outdir / CONFIG_FILENAME, output_dir=str(outdir), workers=workers)
    state = checkpoint_load(outdir / CHECKPOINT_FILENAME, expect_hash=cfg.config_hash())
    return _execute(cfg, state, outdir, progress=progress)


def _execute(cfg: RunConfig, state: RunState, outdir: Path, progress: bool) -> dict:
    pieces = [
        (s, e)
        for s, e in piece_bounds(cfg.total_points, cfg.points_per_interval)
        if s >= state.next_index
    ]
    fresh = state.next_index == 0
    csv_fh = open(outdir / INTERVALS_FILENAME, "w" if fresh else "a")
    raw_fh = open(outdir / RAW_FILENAME, "w" if fresh else "a")
    if fresh:
        print(INTERVAL_HEADER, file=csv_fh)
        print(RAW_HEADER, file=raw_fh)
    pool = None
    try:
        if cfg.workers > 1 and pieces:
            pool = multiprocessing.Pool(cfg.workers)
            results = pool.imap(
                _piece_task,
                [(cfg.to_dict(), s, e) for s, e in pieces],
                chunksize=1,
            )
        else:
            results = map(_piece_task, [(cfg.to_dict(), s, e) for s, e in pieces])
        for (start, end), result in zip(pieces, results):
            if "full" in result:
                state.full.merge(Accumulator.from_dict(result["full"]))
            if "boundary" in result:
                state.boundary.merge(Accumulator.from_dict(result["boundary"]))
            state.next_index = end
            if end % cfg.points_per_interval == 0 or end == cfg.total_points:
                state.interval_index += 1
                record = make_interval_record(
                    state.interval_index, end, state.full, state.boundary, cfg.pooling
                )
                for row in _interval_rows(cfg, record):
                    print(row, file=csv_fh)
                for row in _raw_rows(
                    cfg, state.interval_index, end, state.full, state.boundary
                ):
                    print(row, file=raw_fh)
                csv_fh.flush()
                raw_fh.flush()
                checkpoint_save(state, outdir / CHECKPOINT_FILENAME)
                if progress:
                    print(
                        f"[pptratio] interval {state.interval_index}: "
                        f"{end}/{cfg.total_points} points",
                        file=sys.stderr,
                    )
    finally:
        if pool is not None:
            pool.close()
            pool.join()
        csv_fh.close()
        raw_fh.close()
    summary = _summary(cfg, state.full, state.boundary)
    with open(outdir / SUMMARY_FILENAME, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


# ---------------------------------------------------------------------------
# Reporting and series editing


def _read_raw_series(raw_path):
    """Parse intervals_raw.csv into {series key: list of row dicts}."""
    series = {}
    with open(raw_path) as fh:
        header = fh.readline().strip()
        if header != RAW_HEADER:
            raise ValueError(f"unexpected raw-interval header in {raw_path}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 9:
                raise ValueError(f"malformed raw-interval row: {line!r}")
            key = (parts[2], parts[3], parts[4])
            series.setdefault(key, []).append(
                {
                    "interval": int(parts[0]),
                    "n_points": int(parts[1]),
                    "pass_full": float(parts[5]),
                    "weight_full": float(parts[6]),
                    "pass_boundary": float(parts[7]),
                    "weight_boundary": float(parts[8]),
                }
            )
    if not series:
        raise ValueError(f"no interval rows found in {raw_path}")
    return series


def _deltas(rows):
    out = []
    prev = (0.0, 0.0, 0.0, 0.0)
    for row in rows:
        cur = (
            row["pass_full"],
            row["weight_full"],
            row["pass_boundary"],
            row["weight_boundary"],
        )
        out.append(IntervalDelta(*(c - p for c, p in zip(cur, prev))))
        prev = cur
    return out


def report(run_dir, rule: EditRule | None = None, output_dir=None) -> dict:
    """Edit the interval series of a finished (or partial) run.

    Writes unedited and edited cumulative-ratio CSVs (with an omega-2
    column), plus a summary with the discarded intervals and the final
    estimates, and returns the summary dict.
    """
    run_dir = Path(run_dir)
    raw_path = run_dir / RAW_FILENAME if run_dir.is_dir() else run_dir
    outdir = Path(output_dir) if output_dir else raw_path.parent
    outdir.mkdir(parents=True, exist_ok=True)
    if rule is None:
        cfg_path = raw_path.parent / CONFIG_FILENAME
        if cfg_path.exists():
            cfg = RunConfig.load(cfg_path)
            rule = EditRule(cfg.edit_window, cfg.edit_threshold)
        else:
            rule = EditRule()
    series = _read_raw_series(raw_path)
    summary = {"edit_rule": {"window": rule.window, "threshold": rule.threshold}, "series": {}}
    uned_fh = open(outdir / "report_unedited.csv", "w")
    ed_fh = open(outdir / "report_edited.csv", "w")
    header = "interval,n_points,metric,criterion,convention,omega,omega_minus_2"
    print(header, file=uned_fh)
    print(header, file=ed_fh)
    try:
        for key in sorted(series):
            metric, crit, conv = key
            rows = series[key]
            if not all(
                math.isfinite(r["weight_full"]) and math.isfinite(r["weight_boundary"])
                for r in rows
            ):
                continue  # single-sided run: no ratio series to edit
            deltas = _deltas(rows)
            unedited = cumulative_series(deltas)
            for row, value in zip(rows, unedited):
                print(
                    f"{row['interval']},{row['n_points']},{metric},{crit},{conv},"
                    f"{_fmt(value)},{_fmt(value - 2.0)}",
                    file=uned_fh,
                )
            result = edit_series(deltas, rule)
            for pos, idx in enumerate(result.kept_indices):
                row = rows[idx]
                value = result.edited_values[pos]
                print(
                    f"{row['interval']},{row['n_points']},{metric},{crit},{conv},"
                    f"{_fmt(value)},{_fmt(value - 2.0)}",
                    file=ed_fh,
                )
            skey = "|".join(key)
            summary["series"][skey] = {
                "discarded_intervals": [rows[i]["interval"] for i in result.discarded_indices],
                "n_discarded": len(result.discarded_indices),
                "final_unedited": _json_float(unedited[-1]) if unedited else None,
                "final_edited": (
                    _json_float(result.edited_values[-1]) if result.edited_values else None
                ),
            }
    finally:
        uned_fh.close()
        ed_fh.close()
    with open(outdir / "report_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _json_float(x: float):
    return x if math.isfinite(x) else None
