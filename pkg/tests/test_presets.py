import pytest

from dfl.config.loader import load_scenarios
from dfl.config.presets import PRESETS
from dfl.data.loader import load_dataset
from dfl.harness.metrics import render_csv
from dfl.harness.scenario import run_one, simulate


def _final_reports(preset, overrides=()):
    return {
        s.meta.variant: simulate(s.config).reports[-1]
        for s in load_scenarios(preset=preset, overrides=list(overrides), env={})
    }


@pytest.mark.parametrize("preset", sorted(PRESETS))
def test_every_preset_gives_identical_csv_twice(preset):
    # 16 rounds reach every scheduled leave and reconnection
    for scenario in load_scenarios(preset=preset, overrides=["rounds=16"], env={}):
        first = render_csv(simulate(scenario.config).rows)
        second = render_csv(simulate(scenario.config).rows)

        assert first == second, scenario.name


def test_convergence_preset_tracks_the_central_baseline(tmp_path):
    (scenario,) = load_scenarios(preset="convergence", env={})

    outcome = run_one(scenario, tmp_path / "convergence.csv", baseline=True)

    assert outcome.rounds == 40
    assert abs(outcome.gap.final_gap) <= 0.01


def test_churn_preset_recovers_from_half_the_agents_going_offline():
    reports = _final_reports("churn")

    baseline = reports["fault-free"].accuracy
    assert abs(reports["with-memory"].accuracy - baseline) <= 0.02
    assert abs(reports["memoryless"].accuracy - baseline) <= 0.05


def test_lossy_replicated_run_stays_close_to_the_perfect_one():
    reports = _final_reports("rho-compare")

    assert [r.round for r in reports.values()] == [40, 40, 40]
    assert abs(reports["rho4-imperfect"].accuracy - reports["rho1-perfect"].accuracy) <= 0.05


def test_fewer_agents_with_more_data_each_do_better():
    reports = _final_reports("participation")
    two, five, ten = (reports[f"agents-{n}"] for n in (2, 5, 10))

    assert two.loss < five.loss < ten.loss
    assert ten.accuracy <= five.accuracy + 0.01
    assert five.accuracy <= two.accuracy + 0.01


def test_participation_trend_shows_early():
    reports = _final_reports("participation", ["rounds=10"])
    two, ten = reports["agents-2"], reports["agents-10"]

    assert two.loss < reports["agents-5"].loss < ten.loss
    assert ten.accuracy <= two.accuracy + 0.01


def test_scaling_variants_fit_their_shards():
    scenarios = load_scenarios(preset="scaling", env={})

    assert [s.meta.variant for s in scenarios] == ["agents-10", "agents-25", "agents-50"]
    for scenario in scenarios:
        data = load_dataset(scenario.config)
        assert len(data.shards) == scenario.config.agents
        assert len(data.shards[0]) >= scenario.config.train.batch_size
        assert len(data.eval) == 600


def test_fifty_agents_share_every_partition_five_ways():
    scenario = load_scenarios(preset="scaling", overrides=["rounds=1"], env={})[-1]

    federation = simulate(scenario.config).federation

    table = federation.observer().table
    assert all(agent.initialized for agent in federation.agents.values())
    assert [table.load(a) for a in range(1, 51)] == [1] * 50
    assert [table.replication(p) for p in range(1, 11)] == [5] * 10
    assert all(agent.rounds_trained == 1 for agent in federation.agents.values())
