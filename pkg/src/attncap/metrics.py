"""Event-level precision/recall, average precision, and the T-sweep report."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from . import energy as en
from .gate import GateConfig, collect_snippets
from .oculomotor import OculomotorConfig

UNDEFINED = None  # marker for 0/0 precision or recall


@dataclass(frozen=True)
class MatchRule:
    min_overlap: float = 0.5  # fraction of snippet duration

    def __post_init__(self):
        if not 0.0 < self.min_overlap <= 1.0:
            raise ValueError(f"min_overlap must lie in (0, 1], got {self.min_overlap}")


@dataclass(frozen=True)
class Matching:
    tp: int
    fp: int
    fn: int
    pairs: tuple = ()  # (snippet index, truth index)

    def counts(self):
        return self.tp, self.fp, self.fn


def _bounds(s):
    if hasattr(s, "t_start"):
        return float(s.t_start), float(s.t_end)
    return float(s[0]), float(s[1])


def _overlap(a0, a1, b0, b1):
    return max(0.0, min(a1, b1) - max(a0, b0))


def match_events(snippets, truth, rule=MatchRule()):
    """Greedy one-to-one matching of snippets to truth intervals in time order.

    A snippet matches the earliest unmatched truth interval that it overlaps
    by at least ``rule.min_overlap`` times its own duration.
    """
    snips = sorted((_bounds(s) + (i,) for i, s in enumerate(snippets)), key=lambda r: (r[0], r[1]))
    intervals = sorted(((float(iv[0]), float(iv[1]), j) for j, iv in enumerate(truth)), key=lambda r: (r[0], r[1]))
    used = [False] * len(intervals)
    pairs = []
    for s0, s1, i in snips:
        need = rule.min_overlap * (s1 - s0)
        for k, (a, b, j) in enumerate(intervals):
            if used[k]:
                continue
            ov = _overlap(s0, s1, a, b)
            hit = ov >= need and ov > 0 if s1 > s0 else a <= s0 < b
            if hit:
                used[k] = True
                pairs.append((i, j))
                break
    tp = len(pairs)
    return Matching(tp, len(snips) - tp, len(intervals) - tp, tuple(pairs))


def precision_recall(tp, fp, fn):
    """``(precision, recall)``; a zero denominator gives :data:`UNDEFINED`."""
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be nonnegative")
    p = tp / (tp + fp) if tp + fp else UNDEFINED
    r = tp / (tp + fn) if tp + fn else UNDEFINED
    return p, r


def pr_curve(scores, labels):
    """Precision and recall at every unique score threshold, highest first."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-D and the same length")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    tp = np.cumsum(labels[order])
    # last index of each tied score group
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = tp[ends]
    npred = ends + 1
    return s[ends], tp / npred, tp / n_pos


def average_precision(scores, labels):
    """``sum_n (r_n - r_{n-1}) p_n`` over unique score thresholds, descending, with ``r_0 = 0``."""
    _, p, r = pr_curve(scores, labels)
    return float(np.sum(np.diff(np.r_[0.0, r]) * p))


@dataclass(frozen=True)
class MetricsReport:
    TP: int
    FP: int
    FN: int
    precision: float | None
    recall: float | None
    AP: float | None


def decision_labels(decisions, truth):
    """A decision is a positive when its time falls inside a truth interval."""
    iv = [(float(a[0]), float(a[1])) for a in truth]
    return [any(s <= d.t < e for s, e in iv) for d in decisions]


def evaluate(snippets, truth, decisions=(), rule=MatchRule()):
    m = match_events(snippets, truth, rule)
    p, r = precision_recall(*m.counts())
    labels = decision_labels(decisions, truth)
    ap = average_precision([d.score for d in decisions], labels) if any(labels) else UNDEFINED
    return MetricsReport(m.tp, m.fp, m.fn, p, r, ap)


def pooled(reports):
    """Pool counts over traces; AP is the mean over traces where it is defined."""
    tp = sum(r.TP for r in reports)
    fp = sum(r.FP for r in reports)
    fn = sum(r.FN for r in reports)
    p, r = precision_recall(tp, fp, fn)
    aps = [x.AP for x in reports if x.AP is not None]
    return MetricsReport(tp, fp, fn, p, r, float(np.mean(aps)) if aps else UNDEFINED)


# -- T sweep --------------------------------------------------------------------

SWEEP_COLUMNS = ("T_seconds", "alpha", "savings", "precision", "recall", "AP", "TP", "FP", "FN")


@dataclass(frozen=True)
class SweepRow:
    T_seconds: float
    alpha: float
    savings: float | None
    precision: float | None
    recall: float | None
    AP: float | None
    TP: int
    FP: int
    FN: int

    def values(self):
        return tuple(getattr(self, c) for c in SWEEP_COLUMNS)


def replay_row(trace, gate_cfg, fusion, ocfg, params, rule=MatchRule()):
    """One pipeline replay reduced to a :class:`SweepRow`."""
    run = collect_snippets(trace, gate_cfg, fusion, ocfg)
    rep = evaluate(run.snippets, trace.truth or (), run.decisions, rule)
    duty = en.duty_from_run(run)
    alpha = _alpha(run)
    erep = en.energy_report(duty, params, alpha)
    return SweepRow(gate_cfg.T, alpha, erep.savings, rep.precision, rep.recall, rep.AP, rep.TP, rep.FP, rep.FN), run


def _alpha(run):
    if not run.events:
        return 0.0
    from .gate import trigger_rate

    try:
        return trigger_rate(run.log_rows())
    except ValueError:
        return 0.0


def sweep_T(trace, T_values, gate_cfg=GateConfig(), fusion=None, ocfg=OculomotorConfig(), params=None, rule=MatchRule()):
    """One full replay of ``trace`` per ``T``; rows come back in the order of ``T_values``."""
    T_values = [float(T) for T in T_values]
    if len(T_values) < 2:
        raise ValueError("a sweep needs at least two T values")
    params = en.default_params() if params is None else params
    rows = []
    for T in T_values:
        row, _ = replay_row(trace, replace(gate_cfg, T=T), fusion, ocfg, params, rule)
        rows.append(row)
    return rows


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


def aggregate_sweeps(per_trace):
    """Mean per T over traces (undefined entries skipped); counts are summed."""
    out = []
    for rows in zip(*per_trace):
        T = rows[0].T_seconds
        if any(r.T_seconds != T for r in rows):
            raise ValueError("sweeps disagree on T values")
        out.append(
            SweepRow(
                T,
                _mean([r.alpha for r in rows]),
                _mean([r.savings for r in rows]),
                _mean([r.precision for r in rows]),
                _mean([r.recall for r in rows]),
                _mean([r.AP for r in rows]),
                sum(r.TP for r in rows),
                sum(r.FP for r in rows),
                sum(r.FN for r in rows),
            )
        )
    return out


def _cell(v):
    if v is None:
        return "undefined"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def format_sweep_csv(rows, header=None, extra=None):
    """Sweep CSV; ``extra`` prepends ``(name, value)`` columns to every row."""
    buf = io.StringIO()
    for line in header or ():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    names = [k for k, _ in extra] if extra else []
    w.writerow(names + list(SWEEP_COLUMNS))
    for r in rows:
        w.writerow([v for _, v in (extra or ())] + [_cell(v) for v in r.values()])
    return buf.getvalue()


def parse_sweep_csv(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        vals = {}
        for c in SWEEP_COLUMNS:
            v = rec[c]
            if v == "undefined":
                vals[c] = None
            elif c in ("TP", "FP", "FN"):
                vals[c] = int(v)
            else:
                vals[c] = float(v)
        out.append(SweepRow(**vals))
    return out


# -- comparison table -------------------------------------------------------------

TABLE_COLUMNS = ("Method", "Precision", "Recall", "Average Precision", "Energy Savings")


def _pct(v):
    return "undefined" if v is None else f"{100.0 * v:.2f}%"


def format_table(rows):
    """Plain-text comparison table; ``rows`` holds ``(method, precision, recall, AP, savings)``."""
    cells = [TABLE_COLUMNS] + [(m,) + tuple(_pct(v) for v in rest) for m, *rest in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(TABLE_COLUMNS))]
    lines = []
    for k, r in enumerate(cells):
        lines.append(" | ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
        if k == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
