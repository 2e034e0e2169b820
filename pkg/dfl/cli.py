import typer
from pathlib import Path
from typing import Optional
from time import perf_counter

from dfl.check.self_check import self_check
from dfl.harness.command import compare_command, config_command, presets_command, run_command
from dfl.log.events import append_event
from dfl.registry.command import partition_command

app = typer.Typer(help="Decentralized federated learning simulator")


@app.callback(invoke_without_command=True)
def main(ctx: typer.Context) -> None:
    """Show top-level help when no command is provided."""
    if ctx.invoked_subcommand is None:
        typer.echo(ctx.get_help())
        raise typer.Exit(0)


@app.command()
def run(
    overrides: Optional[list[str]] = typer.Argument(
        None, help="Dotted key=value overrides, e.g. net.drop_prob=0.2"
    ),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Scenario TOML file"),
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Named preset (see `dfl presets`)"),
    out: Path = typer.Option(Path("metrics.csv"), "--out", "-o", help="Metrics CSV path"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed for training and network draws"),
    trace: Optional[Path] = typer.Option(None, "--trace", help="Write the network event trace here"),
    baseline: bool = typer.Option(
        False, "--baseline", help="Also run the centralized baseline and report the accuracy gap"
    ),
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Parallel processes for preset variants"),
) -> None:
    """Run a scenario and write per-round metrics as CSV."""
    started_at = perf_counter()
    run_details: dict = {}
    exit_code = run_command(
        preset=preset,
        config_path=config,
        out=out,
        overrides=overrides or [],
        seed=seed,
        trace=trace,
        baseline=baseline,
        jobs=jobs,
        event_details=run_details,
    )
    append_event(
        command="run",
        args={
            "preset": preset,
            "config": config,
            "out": out,
            "seed": seed,
            "trace": trace,
            "baseline": baseline,
            "jobs": jobs,
            "overrides": " ".join(overrides or []),
        },
        details={
            "status": "success" if exit_code == 0 else "error",
            "exit_code": exit_code,
            "duration_ms": int((perf_counter() - started_at) * 1000),
            **run_details,
        },
    )
    raise SystemExit(exit_code)


@app.command()
def compare(
    run_a: Path = typer.Argument(..., help="First metrics CSV"),
    run_b: Path = typer.Argument(..., help="Second metrics CSV"),
) -> None:
    """Per-round accuracy gap between two metrics CSVs."""
    details: dict = {}
    exit_code = compare_command(run_a, run_b, event_details=details)
    append_event(
        command="compare",
        args={"run_a": run_a, "run_b": run_b},
        details={"status": "success" if exit_code == 0 else "error", "exit_code": exit_code, **details},
    )
    raise SystemExit(exit_code)


@app.command()
def presets() -> None:
    """List the named scenario presets."""
    raise SystemExit(presets_command())


@app.command("config")
def config_cmd(
    overrides: Optional[list[str]] = typer.Argument(None, help="Dotted key=value overrides"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Scenario TOML file"),
    preset: Optional[str] = typer.Option(None, "--preset", "-p", help="Named preset"),
) -> None:
    """Show the resolved scenario configuration and where it came from."""
    raise SystemExit(config_command(preset, config, overrides or []))


@app.command()
def partition(
    k: int = typer.Option(6, "--k", help="Number of partitions"),
    pi: int = typer.Option(4, "--pi", help="Minimum partitions per holder"),
    rho: int = typer.Option(2, "--rho", help="Maximum replication per partition"),
    agents: int = typer.Option(4, "--agents", min=1, help="Agents joining in ID order"),
) -> None:
    """Show how partitions are assigned as agents join."""
    exit_code = partition_command(k, pi, rho, agents)
    append_event(
        command="partition",
        args={"k": k, "pi": pi, "rho": rho, "agents": agents},
        details={"status": "success" if exit_code == 0 else "error", "exit_code": exit_code},
    )
    raise SystemExit(exit_code)


@app.command("self-check")
def self_check_cmd() -> None:
    """Verify gradients, partition slicing and the partition assignment rule."""
    raise SystemExit(self_check())
