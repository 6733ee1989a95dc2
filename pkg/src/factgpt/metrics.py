"""Score predictions against gold labels: confusion matrix, per-class
precision/recall/F1, macro averages, accuracy, and report rendering.

Averaging scheme: precision and recall are macro-averaged over the three
classes; accuracy is micro (share of scored pairs predicted exactly). Tie
gold outcomes are excluded from scoring by default; unparseable predictions
count as wrong by default (they stay in recall denominators and in the
accuracy denominator but earn no credit anywhere).
"""

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

from .records import LABEL_ORDER, label_from_token


class MissingGold(KeyError):
    """A prediction's pair_id has no gold label."""


class DuplicatePrediction(ValueError):
    """The same pair_id appears twice in the predictions."""


TIE_POLICIES = ("exclude", "lenient")
UNPARSEABLE_POLICIES = ("wrong", "exclude")


@dataclass
class ConfusionMatrix:
    """3x3 counts indexed [gold][predicted] in canonical label order, plus a
    per-gold-row count of unparseable predictions (the synthetic "wrong"
    column)."""

    counts: list = field(default_factory=lambda: [[0, 0, 0] for _ in range(3)])
    unparseable_by_gold: list = field(default_factory=lambda: [0, 0, 0])
    n_excluded_ties: int = 0
    n_excluded_unparseable: int = 0

    @property
    def unparseable_count(self):
        return sum(self.unparseable_by_gold) + self.n_excluded_unparseable

    @property
    def n_scored(self):
        return sum(sum(row) for row in self.counts) + sum(self.unparseable_by_gold)


def confusion_matrix(gold_labels, predictions, *, tie_policy="exclude", unparseable_policy="wrong"):
    """Tally predictions against gold outcomes.

    tie_policy "exclude" drops tie-gold pairs (counted in n_excluded_ties);
    "lenient" credits a prediction matching either tied label on the
    diagonal and books a miss against the first tied label otherwise.
    unparseable_policy "wrong" keeps label-less predictions in their gold
    row with no diagonal credit; "exclude" drops them from scoring.
    """
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"tie_policy must be one of {TIE_POLICIES}")
    if unparseable_policy not in UNPARSEABLE_POLICIES:
        raise ValueError(f"unparseable_policy must be one of {UNPARSEABLE_POLICIES}")

    gold_by_pair = {}
    for gold in gold_labels:
        if gold.pair_id in gold_by_pair:
            raise ValueError(f"duplicate gold label for pair {gold.pair_id}")
        gold_by_pair[gold.pair_id] = gold

    matrix = ConfusionMatrix()
    seen = set()
    index = {label: i for i, label in enumerate(LABEL_ORDER)}
    for prediction in predictions:
        if prediction.pair_id in seen:
            raise DuplicatePrediction(f"duplicate prediction for pair {prediction.pair_id}")
        seen.add(prediction.pair_id)
        gold = gold_by_pair.get(prediction.pair_id)
        if gold is None:
            raise MissingGold(f"no gold label for pair {prediction.pair_id}")

        if gold.is_tie:
            if tie_policy == "exclude":
                matrix.n_excluded_ties += 1
                continue
            if prediction.label is not None and prediction.label in gold.tie:
                matrix.counts[index[prediction.label]][index[prediction.label]] += 1
                continue
            gold_row = index[gold.tie[0]]
        else:
            gold_row = index[gold.decided]

        if prediction.label is None:
            if unparseable_policy == "wrong":
                matrix.unparseable_by_gold[gold_row] += 1
            else:
                matrix.n_excluded_unparseable += 1
            continue
        matrix.counts[gold_row][index[prediction.label]] += 1
    return matrix


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


def _ratio(numerator, denominator):
    return numerator / denominator if denominator else 0.0


def per_class_metrics(matrix):
    """precision = TP/(TP+FP), recall = TP/(TP+FN), F1 harmonic mean; 0/0 -> 0."""
    out = {}
    for i, label in enumerate(LABEL_ORDER):
        tp = matrix.counts[i][i]
        predicted = sum(matrix.counts[j][i] for j in range(3))
        gold_total = sum(matrix.counts[i]) + matrix.unparseable_by_gold[i]
        precision = _ratio(tp, predicted)
        recall = _ratio(tp, gold_total)
        f1 = _ratio(2 * precision * recall, precision + recall)
        out[label] = ClassMetrics(precision=precision, recall=recall, f1=f1)
    return out


@dataclass
class OverallMetrics:
    macro_precision: float
    macro_recall: float
    accuracy: float


def overall_metrics(matrix):
    """Unweighted mean of per-class precision/recall; accuracy = trace/scored."""
    per_class = per_class_metrics(matrix)
    values = [per_class[label] for label in LABEL_ORDER]
    trace = sum(matrix.counts[i][i] for i in range(3))
    return OverallMetrics(
        macro_precision=sum(m.precision for m in values) / 3,
        macro_recall=sum(m.recall for m in values) / 3,
        accuracy=_ratio(trace, matrix.n_scored),
    )


@dataclass
class EvalReport:
    per_class: dict  # EntailmentLabel -> ClassMetrics
    macro_precision: float
    macro_recall: float
    accuracy: float
    n_scored: int
    n_excluded_ties: int
    n_unparseable: int


def evaluate(gold_labels, predictions, *, tie_policy="exclude", unparseable_policy="wrong"):
    matrix = confusion_matrix(
        gold_labels, predictions, tie_policy=tie_policy, unparseable_policy=unparseable_policy
    )
    per_class = per_class_metrics(matrix)
    overall = overall_metrics(matrix)
    return EvalReport(
        per_class=per_class,
        macro_precision=overall.macro_precision,
        macro_recall=overall.macro_recall,
        accuracy=overall.accuracy,
        n_scored=matrix.n_scored,
        n_excluded_ties=matrix.n_excluded_ties,
        n_unparseable=matrix.unparseable_count,
    )


def report_to_dict(report):
    return {
        "per_class": {
            label.value: {
                "precision": metrics.precision,
                "recall": metrics.recall,
                "f1": metrics.f1,
            }
            for label, metrics in report.per_class.items()
        },
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "accuracy": report.accuracy,
        "n_scored": report.n_scored,
        "n_excluded_ties": report.n_excluded_ties,
        "n_unparseable": report.n_unparseable,
    }


def report_from_dict(obj):
    per_class = {
        label_from_token(token): ClassMetrics(
            precision=values["precision"], recall=values["recall"], f1=values["f1"]
        )
        for token, values in obj["per_class"].items()
    }
    return EvalReport(
        per_class=per_class,
        macro_precision=obj["macro_precision"],
        macro_recall=obj["macro_recall"],
        accuracy=obj["accuracy"],
        n_scored=obj["n_scored"],
        n_excluded_ties=obj["n_excluded_ties"],
        n_unparseable=obj["n_unparseable"],
    )


@dataclass
class NamedReport:
    """An EvalReport labeled by the model evaluated and the provenance of
    its training set (None for pre-trained models)."""

    model: str
    train_set_from: str | None
    report: EvalReport


def format_metric(value):
    """Two decimals, half-up, leading-dot style: 0.725 -> ".73", 1.0 -> "1.00"."""
    quantized = Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    text = str(quantized)
    if text.startswith("0."):
        return text[1:]
    if text.startswith("-0."):
        return "-" + text[2:]
    return text


FOOTER_NOTE = (
    "Precision and recall are macro-averaged over the three classes; "
    "accuracy is micro (share of scored pairs predicted exactly)."
)


def render_report(named_reports):
    """Markdown: an overall table and a label-by-label F1 table, one row per
    (model, train-set-source) pair."""
    lines = ["## Overall performance", ""]
    lines.append("| Model | Train Set From | Precision | Recall | Accuracy |")
    lines.append("| --- | --- | --- | --- | --- |")
    for named in named_reports:
        source = named.train_set_from if named.train_set_from is not None else "---"
        lines.append(
            f"| {named.model} | {source} | {format_metric(named.report.macro_precision)} "
            f"| {format_metric(named.report.macro_recall)} | {format_metric(named.report.accuracy)} |"
        )
    lines += ["", "## Label-by-label performance", ""]
    lines.append("| Model | Train Set From | F1 (ENTAILMENT) | F1 (NEUTRAL) | F1 (CONTRADICTION) |")
    lines.append("| --- | --- | --- | --- | --- |")
    for named in named_reports:
        source = named.train_set_from if named.train_set_from is not None else "---"
        cells = " | ".join(format_metric(named.report.per_class[label].f1) for label in LABEL_ORDER)
        lines.append(f"| {named.model} | {source} | {cells} |")
    lines += ["", FOOTER_NOTE, ""]
    return "\n".join(lines)


def write_report_json(path, named_report, manifest=None):
    payload = {
        "model": named_report.model,
        "train_set_from": named_report.train_set_from,
        "report": report_to_dict(named_report.report),
        "manifest": manifest or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def read_report_json(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    named = NamedReport(
        model=payload["model"],
        train_set_from=payload.get("train_set_from"),
        report=report_from_dict(payload["report"]),
    )
    return named, payload.get("manifest", {})
