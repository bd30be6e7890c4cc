"""Records on disk and the per-region tables recomputed from them."""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from ..canonical import canonicalize, dumps, dumps_line

RECORDS_FILE = "records.jsonl"
AGGREGATE_FILE = "aggregate.json"


def write_records(out_dir: Path, records: Iterable[Mapping]) -> Path:
    path = Path(out_dir) / RECORDS_FILE
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(dumps_line(r))
    return path


def write_aggregate(out_dir: Path, aggregate: Mapping) -> Path:
    path = Path(out_dir) / AGGREGATE_FILE
    path.write_bytes(dumps(aggregate))
    return path


def read_records(out_dir: Path) -> tuple[list[dict], dict]:
    """Load records and aggregate; ValueError on corrupt content, OSError if missing."""
    out_dir = Path(out_dir)
    lines = (out_dir / RECORDS_FILE).read_text(encoding="utf-8").splitlines()
    records = []
    for k, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{RECORDS_FILE} line {k}: {exc.msg}") from None
    try:
        aggregate = json.loads((out_dir / AGGREGATE_FILE).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{AGGREGATE_FILE}: {exc.msg}") from None
    if not isinstance(aggregate, dict) or "task" not in aggregate:
        raise ValueError(f"{AGGREGATE_FILE} has no task field")
    return records, aggregate


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{canonicalize(v):.6g}"
    return str(v)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _mean(vals: Sequence[Optional[float]]) -> Optional[float]:
    vals = [v for v in vals if v is not None]
    return sum(vals) / len(vals) if vals else None


# -- VLN

VLN_HEADER = ("region", "n_routes", "success", "start_arr", "start_reac", "intersection_arr",
              "intersection_reac", "stop_arr", "stop_reac")


def _vln_row(region: str, recs: Sequence[Mapping]) -> list:
    row: list = [region, len(recs), sum(bool(r["success"]) for r in recs) / len(recs)]
    for kind in ("start", "intersection", "stop"):
        keys = [k for r in recs for k in r["keys"] if k["kind"] == kind]
        reached = [k for k in keys if k["reached"]]
        row.append(len(reached) / len(keys) if keys else None)
        row.append(sum(bool(k["correct"]) for k in reached) / len(reached) if reached else None)
    return row


def vln_table(records: Sequence[Mapping]) -> list[list]:
    by = defaultdict(list)
    for r in records:
        by[r["region"]].append(r)
    rows = [_vln_row(reg, by[reg]) for reg in sorted(by)]
    if records:
        rows.append(_vln_row("ALL", records))
    return rows


# -- detection

DETECTION_HEADER = ("region", "category", "tp", "fn", "recall")


def detection_table(records: Sequence[Mapping]) -> list[list]:
    """Per-region, per-category rows, pooled rows, and AR rows.

    Categories without ground truth get an empty recall and a footnote row;
    they never enter AR.
    """
    rows = []
    pooled: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for r in sorted(records, key=lambda r: r["region"]):
        recalls = []
        for cat, v in sorted(r["per_category"].items()):
            tp, fn = v["tp"], v["fn"]
            rec = tp / (tp + fn) if tp + fn else None
            rows.append([r["region"], cat, tp, fn, rec])
            pooled[cat][0] += tp
            pooled[cat][1] += fn
            recalls.append(rec)
        rows.append([r["region"], "AR", "", "", _mean(recalls)])
    all_recalls = []
    empty = []
    for cat in sorted(pooled):
        tp, fn = pooled[cat]
        rec = tp / (tp + fn) if tp + fn else None
        all_recalls.append(rec)
        if rec is None:
            empty.append(cat)
        rows.append(["ALL", cat, tp, fn, rec])
    rows.append(["ALL", "AR", "", "", _mean(all_recalls)])
    if empty:
        rows.append(["note", "excluded from AR (no ground truth): " + " ".join(empty), "", "", ""])
    return rows


def pooled_detection(records: Sequence[Mapping]) -> dict:
    pooled: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for r in records:
        for cat, v in r["per_category"].items():
            pooled[cat][0] += v["tp"]
            pooled[cat][1] += v["fn"]
    per = {c: {"tp": tp, "fn": fn, "recall": tp / (tp + fn) if tp + fn else None}
           for c, (tp, fn) in sorted(pooled.items())}
    return {"per_category": per, "AR": _mean([v["recall"] for v in per.values()])}


# -- VQA

VQA_HEADER = ("region", "n_items", "macc_circular", "macc_plain")


def _macc(recs: Sequence[Mapping], key: str) -> Optional[float]:
    by = defaultdict(list)
    for r in recs:
        by[r["category"]].append(bool(r[key]))
    return _mean([sum(v) / len(v) for v in by.values()]) if by else None


def vqa_table(records: Sequence[Mapping]) -> list[list]:
    by = defaultdict(list)
    for r in records:
        by[r["region"]].append(r)
    rows = [[reg, len(by[reg]), _macc(by[reg], "circular_correct"), _macc(by[reg], "plain_correct")]
            for reg in sorted(by)]
    if records:
        rows.append(["ALL", len(records), _macc(records, "circular_correct"), _macc(records, "plain_correct")])
    return rows


def flat_rows(aggregate: Mapping, prefix: str = "") -> list[list]:
    rows = []
    for k in sorted(aggregate):
        v = aggregate[k]
        if isinstance(v, Mapping):
            rows.extend(flat_rows(v, f"{prefix}{k}."))
        elif not isinstance(v, list):
            rows.append([f"{prefix}{k}", v])
    return rows


def build_report(records: Sequence[Mapping], aggregate: Mapping) -> dict[str, str]:
    """File name -> CSV text for the task the records came from."""
    task = aggregate["task"]
    out = {"summary.csv": to_csv(("key", "value"), flat_rows(aggregate))}
    if task == "vln":
        out["vln_metrics.csv"] = to_csv(VLN_HEADER, vln_table(records))
    elif task == "detect-bench":
        out["detection_recall.csv"] = to_csv(DETECTION_HEADER, detection_table(records))
    elif task == "vqa-bench":
        out["vqa_by_region.csv"] = to_csv(VQA_HEADER, vqa_table([r for r in records if r.get("kind") == "vqa"]))
    return out


def write_report(out_dir: Path, tables: Mapping[str, str]) -> list[Path]:
    target = Path(out_dir) / "report"
    target.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in sorted(tables.items()):
        p = target / name
        p.write_text(text, encoding="utf-8", newline="")
        paths.append(p)
    return paths
