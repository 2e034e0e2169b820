from __future__ import annotations

import numpy as np
from rich import print as rprint
from rich.table import Table

from dfl.config.models import ModelSpec
from dfl.model.mlp import batch_loss, gradient, init_weights
from dfl.model.partition import assemble, slice_weights
from dfl.registry.table import bootstrap, join


def gradient_check(cases: int = 50, seed: int = 0, step: float = 1e-6) -> tuple[bool, float]:
    """Analytic vs central-difference gradients on random small models; returns (ok, worst relative error)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for case in range(cases):
        while True:
            sizes = [int(rng.integers(1, 5)) for _ in range(int(rng.integers(2, 4)))]
            sizes[-1] = max(sizes[-1], 2)
            spec = ModelSpec(layer_sizes=sizes, seed=case)
            if spec.parameter_count <= 30:
                break
        w = init_weights(spec)
        x = rng.normal(size=(6, spec.input_size))
        y = rng.integers(0, spec.num_classes, size=6)
        analytic = gradient(spec, w, x, y)
        numeric = np.empty_like(w)
        for i in range(len(w)):
            e = np.zeros_like(w)
            e[i] = step
            numeric[i] = (batch_loss(spec, w + e, x, y) - batch_loss(spec, w - e, x, y)) / (2 * step)
        scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
    return worst < 1e-5, worst


def round_trip_check(cases: int = 200, seed: int = 0) -> bool:
    rng = np.random.default_rng(seed)
    for _ in range(cases):
        size = int(rng.integers(1, 1001))
        k = int(rng.integers(1, size + 1))
        w = rng.normal(size=size)
        parts = slice_weights(w, k)
        order = rng.permutation(len(parts))
        if not np.array_equal(assemble([parts[i] for i in order], size), w):
            return False
    return True


def worked_example_check() -> bool:
    table = bootstrap(6, 4, 2, 1)
    results = []
    for agent in (2, 3, 4):
        result = join(table, agent)
        table = result.table
        results.append(result.assigned)
    return (
        table.held == {1: (1, 2, 3, 4), 2: (3, 4, 5, 6), 3: (1, 2, 5, 6)}
        and results == [(3, 4, 5, 6), (1, 2, 5, 6), ()]
    )


def self_check() -> int:
    grad_ok, worst = gradient_check()
    trip_ok = round_trip_check()
    example_ok = worked_example_check()

    table = Table(title="dfl self-check")
    table.add_column("Check", style="bold cyan")
    table.add_column("Status", style="white")
    table.add_column("Detail", style="yellow")

    table.add_row("Gradient", "ok" if grad_ok else "[red]failed[/red]", f"worst relative error {worst:.2e}")
    table.add_row("Slice/assemble", "ok" if trip_ok else "[red]failed[/red]", "200 random cases")
    table.add_row("Partition example", "ok" if example_ok else "[red]failed[/red]", "K=6, pi=4, rho=2")

    rprint(table)

    return 0 if (grad_ok and trip_ok and example_ok) else 1
