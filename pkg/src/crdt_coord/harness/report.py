"""Run tables and per task x mode summaries.

``runs.csv`` always carries exactly ``CSV_COLUMNS``. ``summary.json`` and
``summary.txt`` hold the aggregates. Fields that only live-model runs can
fill (quality scores, for one) are present with null values so both kinds
of run share one schema.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .experiment import CSV_COLUMNS, RunRecord
from .stats import cohens_dz, summarize, wilcoxon_signed_rank

SCHEMA_VERSION = 1
MODE_ORDER = ("sequential", "parallel")

#: summary fields a simulated run cannot produce; kept as nulls
LIVE_ONLY = ("qualityScores", "compileMetrics", "outlierFractionLive")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(round(value, 6))
    return str(value)


def write_csv(records: Iterable[RunRecord], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow([_fmt(getattr(rec, c)) for c in CSV_COLUMNS])
    return path


def _parse(col: str, text: str):
    kind = RunRecord.__dataclass_fields__[col].type
    if text == "":
        return None
    if "bool" in kind:
        return text == "true"
    if "int" in kind and "float" not in kind:
        return int(text)
    if "float" in kind:
        return float(text)
    return text


def read_csv(path: str | Path) -> list[RunRecord]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [RunRecord(**{c: _parse(c, row[c]) for c in CSV_COLUMNS}) for row in reader]


def _finite(xs: Iterable[Optional[float]]) -> list[float]:
    return [x for x in xs if x is not None and not math.isnan(x)]


def _mode_summary(recs: Sequence[RunRecord]) -> dict:
    n = len(recs)
    return {
        "runs": n,
        "responseS": summarize(_finite(r.response_s for r in recs)).to_dict(),
        "sPerKchar": summarize(_finite(r.s_per_kchar for r in recs)).to_dict(),
        "chars": summarize([r.chars for r in recs], filter_outliers=False).to_dict(),
        "claims": {
            "lostTotal": sum(r.claims_lost for r in recs),
            "lostPerRun": sum(r.claims_lost for r in recs) / n,
            "transientDoubleWonTotal": sum(r.transient_double_won for r in recs),
        },
        "callbacksPerRun": sum(r.callbacks for r in recs) / n,
        "convergedRate": sum(1 for r in recs if r.converged) / n,
        "duplicateDeclarations": sum(r.duplicates for r in recs),
        "conflictRunRate": sum(1 for r in recs if r.duplicates) / n,
    }


def _delta_pct(seq: Optional[float], par: Optional[float]) -> Optional[float]:
    if seq is None or par is None or math.isnan(seq) or math.isnan(par) or seq == 0:
        return None
    return (par - seq) / seq * 100.0


def _comparison(seq: Sequence[RunRecord], par: Sequence[RunRecord]) -> dict:
    """Parallel against sequential. Negative deltas mean parallel was faster."""
    by_seed = {r.seed: r for r in seq}
    pairs = [(by_seed[r.seed].s_per_kchar, r.s_per_kchar) for r in par
             if r.seed in by_seed and r.s_per_kchar is not None and by_seed[r.seed].s_per_kchar is not None]
    s_seq, s_par = summarize(_finite(r.response_s for r in seq)), summarize(_finite(r.response_s for r in par))
    n_seq = summarize(_finite(r.s_per_kchar for r in seq))
    n_par = summarize(_finite(r.s_per_kchar for r in par))
    wil = wilcoxon_signed_rank(pairs)
    dz = cohens_dz(pairs)
    return {
        "deltaPctResponseMean": _delta_pct(s_seq.mean, s_par.mean),
        "deltaPctSPerKcharMean": _delta_pct(n_seq.mean, n_par.mean),
        "deltaPctSPerKcharMedian": _delta_pct(n_seq.median, n_par.median),
        "pairedRuns": len(pairs),
        "wilcoxon": {"w": wil.w, "n": wil.n, "z": wil.z, "p": wil.p, "flags": list(wil.flags)},
        "cohensDz": {"value": dz.value, "flags": list(dz.flags)},
    }


def build_summary(records: Sequence[RunRecord], meta: Optional[dict] = None) -> dict:
    groups: dict[str, dict[str, list[RunRecord]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        groups[r.task][r.mode].append(r)
    tasks = {}
    for task in sorted(groups):
        modes = groups[task]
        entry = {"modes": {m: _mode_summary(modes[m]) for m in MODE_ORDER if modes.get(m)}}
        if modes.get("sequential") and modes.get("parallel"):
            entry["comparison"] = _comparison(modes["sequential"], modes["parallel"])
        entry.update({k: None for k in LIVE_ONLY})
        tasks[task] = entry
    return {
        "schemaVersion": SCHEMA_VERSION,
        "meta": dict(meta or {}),
        "seeds": sorted({r.seed for r in records}),
        "tasks": tasks,
    }


def _num(x, spec: str = ".2f") -> str:
    return "-" if x is None or (isinstance(x, float) and math.isnan(x)) else format(x, spec)


def summary_text(summary: dict) -> str:
    out = []
    meta = summary.get("meta") or {}
    if meta:
        out.append("  ".join(f"{k}={meta[k]}" for k in sorted(meta) if not isinstance(meta[k], (dict, list))))
    for task, entry in summary["tasks"].items():
        out.append(f"[{task}]")
        for mode, m in entry["modes"].items():
            r, k = m["responseS"], m["sPerKchar"]
            out.append(
                f"  {mode:<10} runs={m['runs']:<4} response mean={_num(r['mean'])}s median={_num(r['median'])}s "
                f"s/kchar={_num(k['mean'])} lost/run={_num(m['claims']['lostPerRun'])} "
                f"doubleWon={m['claims']['transientDoubleWonTotal']} converged={_num(m['convergedRate'] * 100, '.1f')}% "
                f"dups={m['duplicateDeclarations']}"
            )
        cmp_ = entry.get("comparison")
        if cmp_:
            w = cmp_["wilcoxon"]
            out.append(
                f"  delta: response {_num(cmp_['deltaPctResponseMean'], '+.1f')}%  "
                f"s/kchar {_num(cmp_['deltaPctSPerKcharMean'], '+.1f')}%  "
                f"wilcoxon W={_num(w['w'], '.1f')} p={_num(w['p'], '.4g')}  dz={_num(cmp_['cohensDz']['value'])}"
            )
    return "\n".join(out) + "\n"


def write_report(records: Sequence[RunRecord], out_dir: str | Path, meta: Optional[dict] = None) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(records, out / "runs.csv")
    summary = build_summary(records, meta)
    text = json.dumps(_strict(summary), indent=2, sort_keys=True, allow_nan=False)
    (out / "summary.json").write_text(text + "\n", encoding="utf-8")
    (out / "summary.txt").write_text(summary_text(summary), encoding="utf-8")
    return summary


def _strict(obj):
    """NaN and infinities become null so the file is plain JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _strict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strict(v) for v in obj]
    return obj
