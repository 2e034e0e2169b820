from __future__ import annotations
from pathlib import Path
from typing import Optional, Sequence

from rich import print as rprint
from rich.table import Table

from dfl.config.loader import ConfigError, load_scenarios
from dfl.config.presets import PRESETS
from dfl.data.idx import IdxFormatError
from dfl.data.loader import DatasetError
from dfl.harness.compare import CompareError, compare
from dfl.harness.scenario import run_scenario
from dfl.protocol.state import HandshakeError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def run_command(
    preset: Optional[str],
    config_path: Optional[Path],
    out: Path,
    overrides: Sequence[str],
    seed: Optional[int] = None,
    trace: Optional[Path] = None,
    baseline: bool = False,
    jobs: int = 1,
    event_details: Optional[dict] = None,
) -> int:
    details = event_details if event_details is not None else {}
    try:
        scenarios = load_scenarios(preset=preset, config_path=config_path, overrides=overrides, seed=seed)
    except ConfigError as e:
        rprint(f"[red]Config error:[/red] {e}")
        details["error"] = str(e)
        return EXIT_CONFIG

    try:
        outcomes = run_scenario(scenarios, out, trace=trace, baseline=baseline, jobs=jobs)
    except (DatasetError, HandshakeError) as e:
        rprint(f"[red]Config error:[/red] {e}")
        details["error"] = str(e)
        return EXIT_CONFIG
    except (OSError, IdxFormatError) as e:
        rprint(f"[red]I/O error:[/red] {e}")
        details["error"] = str(e)
        return EXIT_IO

    table = Table(title="dfl run")
    table.add_column("Scenario", style="bold cyan")
    table.add_column("Rounds", justify="right")
    table.add_column("Accuracy", justify="right")
    table.add_column("Loss", justify="right")
    table.add_column("Bytes", justify="right")
    table.add_column("Max gap", justify="right", style="yellow")
    table.add_column("CSV", style="white")
    for o in outcomes:
        gap = f"{o.gap.max_abs_gap:.4f}" if o.gap is not None else "-"
        table.add_row(
            o.name, str(o.rounds), f"{o.final_accuracy:.4f}", f"{o.final_loss:.4f}",
            str(o.total_bytes), gap, str(o.csv_path),
        )
    rprint(table)

    details["runs"] = [
        {"name": o.name, "accuracy": o.final_accuracy, "rounds": o.rounds, "csv": str(o.csv_path)}
        for o in outcomes
    ]
    return EXIT_OK


def compare_command(path_a: Path, path_b: Path, event_details: Optional[dict] = None) -> int:
    details = event_details if event_details is not None else {}
    try:
        report = compare(path_a, path_b)
    except CompareError as e:
        rprint(f"[red]Cannot compare:[/red] {e}")
        details["error"] = str(e)
        return EXIT_CONFIG
    except OSError as e:
        rprint(f"[red]I/O error:[/red] {e}")
        details["error"] = str(e)
        return EXIT_IO

    table = Table(title=f"accuracy gap: {path_a.name} - {path_b.name}")
    table.add_column("Round", justify="right", style="bold cyan")
    table.add_column("A", justify="right")
    table.add_column("B", justify="right")
    table.add_column("Gap", justify="right", style="yellow")
    for g in report.gaps:
        table.add_row(str(g.round), f"{g.accuracy_a:.4f}", f"{g.accuracy_b:.4f}", f"{g.gap:+.4f}")
    rprint(table)
    rprint(f"max |gap| = {report.max_abs_gap:.6f}, final gap = {report.final_gap:+.6f}")
    details["max_abs_gap"] = report.max_abs_gap
    return EXIT_OK


def presets_command() -> int:
    table = Table(title="dfl presets")
    table.add_column("Preset", style="bold cyan")
    table.add_column("Variants", style="white")
    table.add_column("Description", style="white")
    for name, preset in sorted(PRESETS.items()):
        table.add_row(name, ", ".join(preset.variants) or "-", preset.description)
    rprint(table)
    return EXIT_OK


def config_command(preset: Optional[str], config_path: Optional[Path], overrides: Sequence[str]) -> int:
    """Print the resolved scenario(s) and which layers contributed."""
    try:
        scenarios = load_scenarios(preset=preset, config_path=config_path, overrides=overrides)
    except ConfigError as e:
        rprint(f"[red]Config error:[/red] {e}")
        return EXIT_CONFIG
    for s in scenarios:
        table = Table(title=f"dfl config: {s.name}")
        table.add_column("Key", style="bold cyan")
        table.add_column("Value", style="white")
        for key, value in _flatten(s.config.as_dict()):
            table.add_row(key, value)
        table.add_row("config_source", s.meta.source_summary)
        rprint(table)
    return EXIT_OK


def _flatten(d: dict, prefix: str = "") -> list[tuple[str, str]]:
    out = []
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict) and value:
            out.extend(_flatten(value, f"{name}."))
        else:
            out.append((name, str(value)))
    return out
