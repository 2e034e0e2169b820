from __future__ import annotations
import csv
from dataclasses import dataclass
import io
from pathlib import Path
from typing import Iterable, Optional, Union

from dfl.baseline.central import CentralRoundRecord
from dfl.protocol.federation import RoundReport

HEADER = ("round", "agent_id", "accuracy", "loss", "bytes_sent", "bytes_received", "epsilon_mean", "event")


class MetricsFormatError(ValueError):
    pass


@dataclass(frozen=True)
class MetricRow:
    round: int
    agent_id: Union[int, str]  # "global" / "central" for whole-run rows
    accuracy: float
    loss: float
    bytes_sent: int
    bytes_received: int
    epsilon_mean: Optional[float]
    event: str = ""

    @property
    def is_summary(self) -> bool:
        return isinstance(self.agent_id, str)

    def cells(self) -> list[str]:
        return [
            str(self.round),
            str(self.agent_id),
            f"{self.accuracy:.10f}",
            f"{self.loss:.10f}",
            str(self.bytes_sent),
            str(self.bytes_received),
            "" if self.epsilon_mean is None else f"{self.epsilon_mean:.10f}",
            self.event,
        ]


def rows_from_report(report: RoundReport) -> list[MetricRow]:
    rows = [MetricRow(
        round=report.round,
        agent_id="global",
        accuracy=report.accuracy,
        loss=report.loss,
        bytes_sent=report.bytes_sent,
        bytes_received=report.bytes_received,
        epsilon_mean=report.epsilon_mean,
        event="|".join(report.events),
    )]
    for view in report.views:
        entry = report.traffic.get(view.agent)
        rows.append(MetricRow(
            round=report.round,
            agent_id=view.agent,
            accuracy=view.accuracy,
            loss=view.loss,
            bytes_sent=entry.bytes_sent if entry else 0,
            bytes_received=entry.bytes_received if entry else 0,
            epsilon_mean=view.epsilon_mean,
        ))
    return rows


def rows_from_central(records: Iterable[CentralRoundRecord]) -> list[MetricRow]:
    return [
        MetricRow(r.round, "central", r.accuracy, r.loss, 0, 0, None)
        for r in records
    ]


def render_csv(rows: Iterable[MetricRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def write_csv(path: Path, rows: Iterable[MetricRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(rows), encoding="utf-8")


def read_csv(path: Path) -> list[MetricRow]:
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != HEADER:
            raise MetricsFormatError(f"{path}: unexpected header {header!r}")
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if len(cells) != len(HEADER):
                raise MetricsFormatError(f"{path}:{line_no}: expected {len(HEADER)} fields, got {len(cells)}")
            try:
                agent: Union[int, str] = int(cells[1]) if cells[1].isdigit() else cells[1]
                rows.append(MetricRow(
                    round=int(cells[0]),
                    agent_id=agent,
                    accuracy=float(cells[2]),
                    loss=float(cells[3]),
                    bytes_sent=int(cells[4]),
                    bytes_received=int(cells[5]),
                    epsilon_mean=float(cells[6]) if cells[6] else None,
                    event=cells[7],
                ))
            except ValueError as e:
                raise MetricsFormatError(f"{path}:{line_no}: {e}") from e
    return rows
