from __future__ import annotations

from rich import print as rprint
from rich.table import Table

from dfl.registry.table import RegistryError, bootstrap, join


def partition_command(k: int, pi: int, rho: int, agents: int) -> int:
    """Show each join outcome and the final table for agents 1..agents joining in order."""
    try:
        table = bootstrap(k, pi, rho, 1)
    except RegistryError as e:
        rprint(f"[red]Invalid parameters:[/red] {e}")
        return 1

    joins = Table(title=f"joins (K={k}, pi={pi}, rho={rho})")
    joins.add_column("Agent", justify="right", style="bold cyan")
    joins.add_column("Assigned", style="white")
    joins.add_column("Transfers", style="yellow")
    joins.add_row("1", ", ".join(map(str, table.held[1])), "bootstrap")
    for agent in range(2, agents + 1):
        result = join(table, agent)
        table = result.table
        transfers = ", ".join(
            f"{t.partition}<-{t.donor}" + ("" if t.relinquished else " (co-held)") for t in result.transfers
        )
        joins.add_row(str(agent), ", ".join(map(str, result.assigned)) or "[dim]trainer-only[/dim]", transfers)
    rprint(joins)

    final = Table(title="partition table")
    final.add_column("Partition", justify="right", style="bold cyan")
    final.add_column("Holders", style="white")
    for partition, holders in table.holders.items():
        final.add_row(str(partition), ", ".join(map(str, holders)))
    rprint(final)
    return 0
