"""Majority-vote aggregation of human annotations and distribution reporting.

Ties are first-class outcomes, never broken: the distribution report gives
two-way ties their own row (and three-way ties one more, when present).
"""

from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .records import LABEL_ORDER, GoldLabel


class EmptyVotes(ValueError):
    """A vote set with no votes cannot be aggregated."""


def aggregate_votes(vote_set):
    """Majority vote: a unique argmax decides; otherwise the maximal labels tie."""
    if not vote_set.votes:
        raise EmptyVotes(f"vote set for pair {vote_set.pair_id} has no votes")
    counts = Counter(vote.label for vote in vote_set.votes)
    top = max(counts.values())
    winners = [label for label in LABEL_ORDER if counts.get(label, 0) == top]
    if len(winners) == 1:
        return GoldLabel(pair_id=vote_set.pair_id, decided=winners[0])
    return GoldLabel(pair_id=vote_set.pair_id, tie=tuple(winners))


TWO_WAY_ROW = "(Two-way ties)"
THREE_WAY_ROW = "(Three-way ties)"
TOTAL_ROW = "TOTAL"


@dataclass
class DistributionRow:
    label: str
    count: int
    percentage: Decimal  # one decimal place, rounded half-up


def _percentage(count, total):
    if total == 0:
        return Decimal("0.0")
    return (Decimal(count) * 100 / Decimal(total)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


def distribution_report(gold_labels):
    """Count decided labels and ties; percentages rounded half-up to one decimal.

    The final TOTAL row always equals the input size.
    """
    decided = Counter()
    two_way = 0
    three_way = 0
    for gold in gold_labels:
        if gold.decided is not None:
            decided[gold.decided] += 1
        elif len(gold.tie) == 2:
            two_way += 1
        else:
            three_way += 1
    total = sum(decided.values()) + two_way + three_way

    rows = [
        DistributionRow(label.value, decided.get(label, 0), _percentage(decided.get(label, 0), total))
        for label in LABEL_ORDER
    ]
    rows.append(DistributionRow(TWO_WAY_ROW, two_way, _percentage(two_way, total)))
    if three_way:
        rows.append(DistributionRow(THREE_WAY_ROW, three_way, _percentage(three_way, total)))
    rows.append(DistributionRow(TOTAL_ROW, total, Decimal(100) if total else Decimal("0.0")))
    return rows


def render_distribution(rows):
    """Markdown table with the Label / Count / Percentage layout."""
    lines = ["| Label | Count | Percentage |", "| --- | --- | --- |"]
    for row in rows:
        lines.append(f"| {row.label} | {row.count} | {row.percentage}% |")
    return "\n".join(lines) + "\n"
