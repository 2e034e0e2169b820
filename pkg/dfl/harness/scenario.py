from __future__ import annotations
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import os
from pathlib import Path
import sys
from typing import Optional, Sequence

import toml

from dfl.baseline.central import central_train
from dfl.config.loader import ResolvedScenario
from dfl.config.models import ScenarioConfig
from dfl.data.loader import FederatedDataset, load_dataset
from dfl.harness.compare import GapReport, compare_rows
from dfl.harness.metrics import MetricRow, rows_from_central, rows_from_report, write_csv
from dfl.protocol.federation import Federation, RoundReport


def _debug(message: str) -> None:
    """Emit debug diagnostics when DFL_DEBUG is enabled."""
    if os.getenv("DFL_DEBUG") == "1":
        print(f"[DEBUG] harness: {message}", file=sys.stderr)


@dataclass
class SimulationResult:
    reports: list[RoundReport]
    federation: Federation

    @property
    def rows(self) -> list[MetricRow]:
        return [row for report in self.reports for row in rows_from_report(report)]

    @property
    def final_accuracy(self) -> float:
        return self.reports[-1].accuracy


@dataclass
class RunOutcome:
    name: str
    csv_path: Path
    rounds: int
    final_accuracy: float
    final_loss: float
    total_bytes: int
    central_path: Optional[Path] = None
    gap: Optional[GapReport] = None
    files: list[Path] = field(default_factory=list)


def simulate(cfg: ScenarioConfig, data: Optional[FederatedDataset] = None) -> SimulationResult:
    """Handshake plus ``cfg.rounds`` rounds; report 0 is the initial model."""
    data = data or load_dataset(cfg)
    federation = Federation(cfg, data)
    federation.initialize()
    reports = [federation.report(0)]
    for round_index in range(1, cfg.rounds + 1):
        report = federation.run_round(round_index)
        reports.append(report)
        _debug(f"{cfg.name} round {round_index}: accuracy={report.accuracy:.4f} loss={report.loss:.4f}")
        if cfg.target_accuracy is not None and report.accuracy >= cfg.target_accuracy:
            report.events.append("target-reached")
            break
    return SimulationResult(reports=reports, federation=federation)


def variant_path(out: Path, name: str, count: int) -> Path:
    if count == 1:
        return out
    return out.with_name(f"{out.stem}-{name}{out.suffix or '.csv'}")


def run_one(
    scenario: ResolvedScenario,
    csv_path: Path,
    trace_path: Optional[Path] = None,
    baseline: bool = False,
) -> RunOutcome:
    """Run one scenario and write its CSV, resolved config and optional trace/baseline files."""
    cfg = scenario.config
    data = load_dataset(cfg)
    result = simulate(cfg, data)
    rows = result.rows
    write_csv(csv_path, rows)
    config_path = csv_path.with_name(csv_path.name + ".config.toml")
    config_path.write_text(toml.dumps(cfg.as_dict()), encoding="utf-8")
    files = [csv_path, config_path]

    if trace_path is not None:
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        trace_path.write_text(
            "".join(f"{record.line()}\n" for record in result.federation.sim.trace),
            encoding="utf-8",
        )
        files.append(trace_path)

    last = result.reports[-1]
    outcome = RunOutcome(
        name=scenario.name,
        csv_path=csv_path,
        rounds=last.round,
        final_accuracy=last.accuracy,
        final_loss=last.loss,
        total_bytes=sum(r.bytes_sent for r in result.reports),
        files=files,
    )

    if baseline:
        records = central_train(cfg.model, data.shards, cfg.train, last.round, data.eval)
        central_rows = rows_from_central(records)
        central_path = csv_path.with_name(f"{csv_path.stem}.central{csv_path.suffix or '.csv'}")
        write_csv(central_path, central_rows)
        outcome.central_path = central_path
        outcome.gap = compare_rows(rows, central_rows)
        files.append(central_path)
    return outcome


def _run_job(args: tuple[ResolvedScenario, Path, Optional[Path], bool]) -> RunOutcome:
    return run_one(*args)


def run_scenario(
    scenarios: Sequence[ResolvedScenario],
    out: Path,
    trace: Optional[Path] = None,
    baseline: bool = False,
    jobs: int = 1,
) -> list[RunOutcome]:
    """Run every variant; with ``jobs > 1`` independent variants run in separate processes."""
    count = len(scenarios)
    job_args = [
        (
            s,
            variant_path(out, s.name, count),
            variant_path(trace, s.name, count) if trace is not None else None,
            baseline,
        )
        for s in scenarios
    ]
    if jobs > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, count)) as pool:
            return list(pool.map(_run_job, job_args))
    return [_run_job(a) for a in job_args]
