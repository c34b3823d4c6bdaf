"""Confusion-matrix metrics and labeling-disagreement reports.

"hate" is the positive class throughout. Degenerate 0/0 precision or recall
follows the 0-with-flag convention so empty predictions can't hide inside a
summary table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

HATE = "hate"
NORMAL = "normal"
LABELS = (HATE, NORMAL)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class EvaluationReport:
    tp: int
    fp: int
    fn: int
    tn: int
    accuracy: float
    per_class: dict[str, ClassMetrics]
    macro_f1: float
    degenerate: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "accuracy": self.accuracy,
            "per_class": {
                c: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                for c, m in self.per_class.items()
            },
            "macro_f1": self.macro_f1,
            "degenerate": self.degenerate,
        }

    def format_table(self, title: str = "") -> str:
        """Aligned columns: Class / Prec. / Rec. / F1 / Accr."""
        lines = []
        if title:
            lines.append(title)
        lines.append(f"{'Class':<10}{'Prec.':>8}{'Rec.':>8}{'F1':>8}{'Accr.':>8}")
        for i, cls in enumerate(LABELS):
            m = self.per_class[cls]
            acc = f"{self.accuracy:.2f}" if i == 0 else ""
            lines.append(f"{cls.capitalize():<10}{m.precision:>8.2f}{m.recall:>8.2f}"
                         f"{m.f1:>8.2f}{acc:>8}")
        lines.append(f"{'Macro-F1':<10}{'':>8}{'':>8}{self.macro_f1:>8.2f}{'':>8}")
        if self.degenerate:
            lines.append("degenerate (0/0 -> 0): " + ", ".join(self.degenerate))
        return "\n".join(lines)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n",
                              encoding="utf-8")


@dataclass
class DisagreementReport:
    only_a: list[str]
    only_b: list[str]
    both: list[str]
    neither: int
    samples: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "only_a": self.only_a,
            "only_b": self.only_b,
            "both": self.both,
            "neither": self.neither,
            "counts": {"a_total": len(self.only_a) + len(self.both),
                       "b_total": len(self.only_b) + len(self.both),
                       "only_a": len(self.only_a), "only_b": len(self.only_b),
                       "both": len(self.both), "neither": self.neither},
            "samples": self.samples,
        }


def _ratio(num: int, den: int, name: str, degenerate: list[str]) -> float:
    if den == 0:
        degenerate.append(name)
        return 0.0
    return num / den


def evaluate(predictions: list[str], gold: list[str]) -> EvaluationReport:
    """Confusion counts plus accuracy, per-class precision/recall/F1, and
    macro-F1 (unweighted mean of the two class F1s)."""
    if len(predictions) != len(gold):
        raise ValueError(f"length mismatch: {len(predictions)} predictions "
                         f"vs {len(gold)} gold labels")
    if not gold:
        raise ValueError("cannot evaluate an empty label list")
    for label in (*predictions, *gold):
        if label not in LABELS:
            raise ValueError(f"unknown label symbol {label!r}")

    tp = fp = fn = tn = 0
    for p, g in zip(predictions, gold):
        if p == HATE and g == HATE:
            tp += 1
        elif p == HATE:
            fp += 1
        elif g == HATE:
            fn += 1
        else:
            tn += 1

    degenerate: list[str] = []
    hate = ClassMetrics(
        precision=_ratio(tp, tp + fp, "hate.precision", degenerate),
        recall=_ratio(tp, tp + fn, "hate.recall", degenerate),
        f1=0.0,
    )
    normal = ClassMetrics(
        precision=_ratio(tn, tn + fn, "normal.precision", degenerate),
        recall=_ratio(tn, tn + fp, "normal.recall", degenerate),
        f1=0.0,
    )
    for name, m in (("hate", hate), ("normal", normal)):
        if m.precision + m.recall == 0.0:
            degenerate.append(f"{name}.f1")
            m.f1 = 0.0
        else:
            m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall)

    n = len(gold)
    return EvaluationReport(
        tp=tp, fp=fp, fn=fn, tn=tn,
        accuracy=(tp + tn) / n,
        per_class={"hate": hate, "normal": normal},
        macro_f1=(hate.f1 + normal.f1) / 2.0,
        degenerate=degenerate,
    )


def compare_labelings(a: dict[str, str], b: dict[str, str], corpus,
                      max_samples: int = 50) -> DisagreementReport:
    """Partition corpus ids by which labeling flags them as hate.

    Both labelings must cover every corpus id. Samples list disagreeing
    posts in ascending id order, capped at max_samples.
    """
    ids = [post.id for post in corpus]
    missing_a = [i for i in ids if i not in a]
    missing_b = [i for i in ids if i not in b]
    if missing_a or missing_b:
        raise ValueError(f"labelings missing ids: a={missing_a[:5]} b={missing_b[:5]}")

    only_a, only_b, both = [], [], []
    neither = 0
    for pid in ids:
        fa, fb = a[pid] == HATE, b[pid] == HATE
        if fa and fb:
            both.append(pid)
        elif fa:
            only_a.append(pid)
        elif fb:
            only_b.append(pid)
        else:
            neither += 1

    by_id = {post.id: post for post in corpus}
    samples = [
        {"id": pid, "text": by_id[pid].text, "a": a[pid], "b": b[pid]}
        for pid in sorted(only_a + only_b)[:max_samples]
    ]
    return DisagreementReport(only_a=sorted(only_a), only_b=sorted(only_b),
                              both=sorted(both), neither=neither, samples=samples)
