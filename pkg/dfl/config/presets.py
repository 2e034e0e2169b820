"""Named experiment scenarios.

Each preset is a set of config overrides applied on top of the defaults; a
preset with several variants produces one run (and one CSV) per variant.
Hyperparameters are calibration values for the desk-scale synthetic dataset.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, Dict


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    overrides: Dict[str, Any]
    variants: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    @property
    def variant_names(self) -> list[str]:
        return list(self.variants) or [""]


_PERFECT = {"drop_prob": 0.0, "late_prob": 0.0, "disconnects": []}
_HALF_DOWN = [{"agent": a, "from_round": 10, "to_round": 15} for a in (5, 6, 7, 8)]
# 2400 training samples, 600 evaluation samples
_LARGE = {"kind": "synthetic", "samples": 3000}

PRESETS: Dict[str, Preset] = {
    p.name: p
    for p in [
        Preset(
            name="oracle",
            description="4 agents, rho=1, synchronous, epsilon fixed at 1/r; must match the central baseline",
            overrides={
                "agents": 4, "k": 4, "pi": 1, "rho": 1, "rounds": 20,
                "sync_mode": "synchronous", "fixed_epsilon": True, "net": _PERFECT,
            },
        ),
        Preset(
            name="parity-10",
            description="10 agents, rho=1, perfect network, synchronous rounds",
            overrides={
                "agents": 10, "k": 10, "pi": 1, "rho": 1, "rounds": 40,
                "sync_mode": "synchronous", "net": _PERFECT,
            },
        ),
        Preset(
            name="convergence",
            description="10 agents, rho=2, asynchronous, perfect network, 40 rounds",
            overrides={
                "agents": 10, "k": 10, "pi": 2, "rho": 2, "rounds": 40,
                "sync_mode": "asynchronous", "net": _PERFECT,
                "dataset": _LARGE,
            },
        ),
        Preset(
            name="rho-compare",
            description="8 agents: rho=1 perfect, rho=4 perfect, rho=4 with loss and late messages",
            overrides={
                "agents": 8, "k": 8, "pi": 2, "rounds": 40, "sync_mode": "asynchronous", "dataset": _LARGE,
            },
            variants={
                "rho1-perfect": {"rho": 1, "pi": 1, "net": _PERFECT},
                "rho4-perfect": {"rho": 4, "net": _PERFECT},
                "rho4-imperfect": {
                    "rho": 4,
                    "net": {"drop_prob": 0.2, "late_prob": 0.1, "late_extra": 150.0, "seed": 1},
                },
            },
        ),
        Preset(
            name="replica",
            description="8 agents, rho=4, synchronous, perfect network; replicas must agree bitwise",
            overrides={
                "agents": 8, "k": 8, "pi": 2, "rho": 4, "rounds": 20,
                "sync_mode": "synchronous", "net": _PERFECT,
            },
        ),
        Preset(
            name="churn",
            description="8 agents, rho=2, half of them offline in rounds 10-15",
            overrides={
                "agents": 8, "k": 8, "pi": 2, "rho": 2, "rounds": 40, "sync_mode": "asynchronous",
                "dataset": _LARGE,
            },
            variants={
                "fault-free": {"net": _PERFECT},
                "with-memory": {"net": {"disconnects": [dict(w, memory=True) for w in _HALF_DOWN]}},
                "memoryless": {"net": {"disconnects": [dict(w, memory=False) for w in _HALF_DOWN]}},
            },
        ),
        Preset(
            name="participation",
            description="one fixed dataset split among 2, 5 and 10 agents, one local epoch per round",
            overrides={
                "k": 10, "pi": 1, "rho": 2, "rounds": 40, "sync_mode": "asynchronous", "net": _PERFECT,
                "dataset": _LARGE, "train": {"learning_rate": 0.01, "local_epochs": 1},
            },
            variants={
                "agents-2": {"agents": 2},
                "agents-5": {"agents": 5},
                "agents-10": {"agents": 10},
            },
        ),
        Preset(
            name="scaling",
            description="10, 25 and 50 agents on one fixed dataset, rho=5",
            overrides={
                "k": 10, "pi": 1, "rho": 5, "rounds": 40, "sync_mode": "asynchronous", "net": _PERFECT,
                "dataset": _LARGE,
            },
            variants={
                "agents-10": {"agents": 10},
                "agents-25": {"agents": 25},
                "agents-50": {"agents": 50},
            },
        ),
        Preset(
            name="handoff",
            description="6 agents, rho=1; agents 3 and 5 terminate mid-run and hand their partitions off",
            overrides={
                "agents": 6, "k": 6, "pi": 1, "rho": 1, "rounds": 20, "sync_mode": "asynchronous",
                "net": _PERFECT,
                "leaves": [{"agent": 3, "round": 5}, {"agent": 5, "round": 10}],
            },
        ),
    ]
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; known presets: {known}") from None
