from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path

from dfl.harness.metrics import MetricRow, MetricsFormatError, read_csv


class CompareError(ValueError):
    pass


@dataclass(frozen=True)
class RoundGap:
    round: int
    accuracy_a: float
    accuracy_b: float

    @property
    def gap(self) -> float:
        return self.accuracy_a - self.accuracy_b


@dataclass(frozen=True)
class GapReport:
    gaps: list[RoundGap]

    @property
    def max_abs_gap(self) -> float:
        return max((abs(g.gap) for g in self.gaps), default=0.0)

    @property
    def final_gap(self) -> float:
        return self.gaps[-1].gap if self.gaps else 0.0


def _summary_rows(rows: list[MetricRow]) -> list[MetricRow]:
    return sorted((r for r in rows if r.is_summary), key=lambda r: r.round)


def compare_rows(a: list[MetricRow], b: list[MetricRow]) -> GapReport:
    """Per-round accuracy gap between the whole-run rows of two runs."""
    rows_a, rows_b = _summary_rows(a), _summary_rows(b)
    if len(rows_a) != len(rows_b):
        raise CompareError(f"round counts differ: {len(rows_a)} vs {len(rows_b)}")
    gaps = []
    for ra, rb in zip(rows_a, rows_b):
        if ra.round != rb.round:
            raise CompareError(f"round mismatch: {ra.round} vs {rb.round}")
        gaps.append(RoundGap(ra.round, ra.accuracy, rb.accuracy))
    return GapReport(gaps)


def compare(path_a: Path, path_b: Path) -> GapReport:
    try:
        return compare_rows(read_csv(path_a), read_csv(path_b))
    except MetricsFormatError as e:
        raise CompareError(f"schema mismatch: {e}") from e
