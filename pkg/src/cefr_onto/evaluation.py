"""Ordinal classification metrics and report writers."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .levels import LEVELS, N_LEVELS, encode


def _pair(gold, pred):
    g, p = encode(gold), encode(pred)
    if len(g) != len(p):
        raise ValueError(f"length mismatch: {len(g)} gold labels vs {len(p)} predictions")
    if len(g) == 0:
        raise ValueError("empty label lists")
    return g, p


def accuracy(gold, pred) -> float:
    g, p = _pair(gold, pred)
    return float(np.mean(g == p))


def mae_ordinal(gold, pred) -> float:
    """Mean absolute level distance with A1=0 ... C2=5."""
    g, p = _pair(gold, pred)
    return float(np.mean(np.abs(g - p)))


def confusion_matrix(gold, pred) -> np.ndarray:
    """6x6 counts, rows = gold level, columns = predicted level."""
    g, p = _pair(gold, pred)
    m = np.zeros((N_LEVELS, N_LEVELS), dtype=np.int64)
    np.add.at(m, (g, p), 1)
    return m


def neighbor_error_share(confusion) -> float | None:
    """Share of misclassifications landing on an adjacent level; ``None`` without errors."""
    m = np.asarray(confusion)
    off = m.sum() - np.trace(m)
    if off == 0:
        return None
    return float((np.trace(m, offset=1) + np.trace(m, offset=-1)) / off)


@dataclass(frozen=True)
class ClassScores:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    undefined: bool  # a zero denominator forced one of the scores to 0

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "support": self.support, "undefined": self.undefined}


def prf_per_class(confusion) -> list:
    m = np.asarray(confusion)
    out = []
    for k, label in enumerate(LEVELS):
        tp = int(m[k, k])
        col, row = int(m[:, k].sum()), int(m[k, :].sum())
        precision = tp / col if col else 0.0
        recall = tp / row if row else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out.append(ClassScores(label, precision, recall, f1, row, col == 0 or row == 0))
    return out


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    mae: float
    confusion: np.ndarray
    per_class: tuple
    n: int

    @classmethod
    def compute(cls, gold, pred) -> "EvalReport":
        cm = confusion_matrix(gold, pred)
        return cls(accuracy(gold, pred), mae_ordinal(gold, pred), cm, tuple(prf_per_class(cm)), int(cm.sum()))

    @property
    def neighbor_error_share(self) -> float | None:
        return neighbor_error_share(self.confusion)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "mae": self.mae,
            "neighbor_error_share": self.neighbor_error_share,
            "labels": list(LEVELS),
            "confusion": self.confusion.tolist(),
            "per_class": {s.label: s.to_dict() for s in self.per_class},
        }


def confusion_csv(confusion) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["gold\\pred"] + list(LEVELS))
    for label, row in zip(LEVELS, np.asarray(confusion)):
        writer.writerow([label] + [int(v) for v in row])
    return buf.getvalue()


def render_text(report: EvalReport, importance=None, consistency=None) -> str:
    lines = [f"n = {report.n}", f"accuracy = {report.accuracy:.4f}", f"mae = {report.mae:.4f}"]
    share = report.neighbor_error_share
    lines.append("neighbor error share = " + ("n/a" if share is None else f"{share:.4f}"))
    lines += ["", "confusion (rows = gold, columns = predicted)"]
    width = max(4, len(str(int(report.confusion.max()))) + 1)
    lines.append("    " + "".join(f"{lab:>{width}}" for lab in LEVELS))
    for label, row in zip(LEVELS, report.confusion):
        lines.append(f"{label:<4}" + "".join(f"{int(v):>{width}}" for v in row))
    lines += ["", f"{'level':<6}{'prec':>8}{'recall':>8}{'f1':>8}{'support':>9}"]
    for s in report.per_class:
        mark = " *" if s.undefined else ""
        lines.append(f"{s.label:<6}{s.precision:>8.3f}{s.recall:>8.3f}{s.f1:>8.3f}{s.support:>9d}{mark}")
    lines.append("(* zero denominator, score reported as 0)")
    if importance is not None:
        lines += ["", "feature importance"]
        for d, v in importance.ranked:
            lines.append(f"  {d:<22}{v:>8.4f}" + ("  below threshold" if d in importance.flagged else ""))
    if consistency is not None:
        findings = consistency.findings
        lines += ["", "consistency findings" + ("" if findings else ": none")]
        lines += [f"  {f}" for f in findings]
    return "\n".join(lines) + "\n"


def write_reports(out_dir, report: EvalReport, importance=None, consistency=None, prefix: str = "eval") -> dict:
    """Write ``<prefix>.json``, ``<prefix>_confusion.csv`` and ``<prefix>.txt``; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    if importance is not None:
        payload["importance"] = importance.to_dict()
    if consistency is not None:
        payload["consistency"] = consistency.to_dict()
    paths = {"json": out / f"{prefix}.json", "csv": out / f"{prefix}_confusion.csv", "text": out / f"{prefix}.txt"}
    paths["json"].write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(paths["csv"], "w", encoding="utf-8", newline="") as fh:
        fh.write(confusion_csv(report.confusion))
    paths["text"].write_text(render_text(report, importance, consistency), encoding="utf-8")
    return paths
