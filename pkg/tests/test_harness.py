import shutil

import numpy as np
import pandas as pd
import pytest

import app
import utils.harness as harness
from config.run_config import AgentSpec, NoiseOverrides, RunConfig
from utils.agents import NoisyProfile
from utils.errors import ConfigurationError, MissingSubtaskError
from utils.file_handler import FileHandler, load_records
from utils.harness import (
    AUX_COLUMNS,
    CAPABILITY_COLUMNS,
    GD_COLUMNS,
    REGRET_COLUMNS,
    ResultsBundle,
    analyze,
    load_bundle,
    make_agent,
    matrix_cells,
    report,
    run,
)
from utils.tasks import (
    COGNITIVE_EFFORT,
    COMBINED,
    COMPOSITE_TASKS,
    EVALUATE_CONFIGURATION,
    EXECUTION,
    FALLING_TOWER,
    GENERATE_CONFIGURATIONS,
    INFORMATION_GATHERING,
    SELECT_CONFIGURATION,
    SUBTASKS,
    RunRecord,
    RunStatus,
)

FAST = {"mc_iterations": 2000, "bootstrap": 1000}
CE_TASKS = [COGNITIVE_EFFORT, GENERATE_CONFIGURATIONS, EVALUATE_CONFIGURATION, SELECT_CONFIGURATION]


def oracle_config(out, **fields):
    values = {
        "tasks": CE_TASKS,
        "block_counts": [3, 4],
        "seeds": 4,
        "agent": AgentSpec(kind="oracle", k=2),
        "workers": 2,
        "output_dir": out,
        **FAST,
    }
    values.update(fields)
    return RunConfig(**values)


@pytest.fixture(scope="module")
def oracle_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("oracle")
    bundle = run(oracle_config(out))
    return out, bundle


@pytest.fixture(scope="module")
def random_ce_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("random")
    config = RunConfig(tasks=[COGNITIVE_EFFORT], block_counts=[3], seeds=5, output_dir=out, **FAST)
    return out, run(config)


def test_run_saves_a_record_and_transcript_per_cell(random_ce_run):
    out, bundle = random_ce_run
    assert len(list((out / FileHandler.RECORDS).glob("*.json"))) == 5
    assert len(list((out / FileHandler.TRANSCRIPTS).glob("*.jsonl"))) == 5
    assert (out / "run_config.json").exists()
    assert len(bundle.records) == 5


def test_missing_subtasks_are_reported_as_gaps(random_ce_run):
    out, bundle = random_ce_run
    assert bundle.estimates == {}
    assert any(GENERATE_CONFIGURATIONS in gap for gap in bundle.gaps)
    assert pd.read_csv(out / "gd.csv").empty


def test_strict_analysis_names_the_missing_subtask(random_ce_run):
    out, _ = random_ce_run
    with pytest.raises(MissingSubtaskError) as info:
        analyze(out, **FAST)
    assert info.value.task == GENERATE_CONFIGURATIONS
    assert info.value.n_blocks == 3


def test_oracle_cognitive_effort_is_fully_goal_directed(oracle_run):
    _, bundle = oracle_run
    estimate = bundle.estimates[COGNITIVE_EFFORT]
    assert estimate.aggregate == pytest.approx(1.0, abs=0.1)
    assert sorted(estimate.per_stratum) == [3, 4]


def test_report_schema(oracle_run):
    out, _ = oracle_run
    gd = pd.read_csv(out / "gd.csv", dtype={"n_blocks": str})
    assert list(gd.columns) == GD_COLUMNS
    assert gd["n_blocks"].tolist() == ["3", "4", "all"]
    assert gd["n_runs"].tolist() == [4, 4, 8]
    assert list(pd.read_csv(out / "regret.csv").columns) == REGRET_COLUMNS
    assert list(pd.read_csv(out / "capabilities.csv").columns) == CAPABILITY_COLUMNS
    assert list(pd.read_csv(out / "aux.csv").columns) == AUX_COLUMNS
    for name in ("plot_data.json", "bundle.json", "samples.npz"):
        assert (out / name).exists()


def test_regret_is_optimum_minus_observed(oracle_run):
    out, bundle = oracle_run
    regret = pd.read_csv(out / "regret.csv")
    np.testing.assert_allclose(regret["regret"], regret["mean_r_star"] - regret["mean_r_pi"], atol=1e-5)
    means = bundle.samples[COGNITIVE_EFFORT][3].means
    row = regret[(regret["task"] == COGNITIVE_EFFORT) & (regret["n_blocks"] == 3)].iloc[0]
    assert row["regret"] == pytest.approx(means["r_star"] - means["r_pi"], abs=1e-5)


def test_capability_table_covers_each_subtask(oracle_run):
    out, _ = oracle_run
    table = pd.read_csv(out / "capabilities.csv")
    assert set(table["capability"]) == {"config_counts", "evaluation_errors", "selection_distances"}
    counts = table[table["capability"] == "config_counts"]
    assert counts["regret"].tolist() == [0.0, 0.0]


def test_rerun_is_deterministic_and_resumes(oracle_run, tmp_path):
    out, _ = oracle_run
    second = tmp_path / "second"
    run(oracle_config(second))
    assert (second / "bundle.json").read_text() == (out / "bundle.json").read_text()
    assert (second / "gd.csv").read_text() == (out / "gd.csv").read_text()

    removed = FileHandler(second).record_path(COGNITIVE_EFFORT, 3, 1)
    removed.unlink()
    run(oracle_config(second))
    assert removed.exists()
    assert (second / "gd.csv").read_text() == (out / "gd.csv").read_text()


def test_exclusions_are_counted(oracle_run, tmp_path):
    out, _ = oracle_run
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    excluded = RunRecord(
        task_id=COGNITIVE_EFFORT,
        n_blocks=3,
        seed=99,
        agent_id="oracle-k2",
        heights={"a": 5.0, "b": 6.0, "c": 7.0},
        status=RunStatus.CAPPED,
        excluded_reason="max-steps",
    )
    FileHandler(copy).save_record(excluded)
    bundle = analyze(copy, out_dir=copy, **FAST)
    assert bundle.exclusion_counts(COGNITIVE_EFFORT, 3) == (4, 1)
    gd = pd.read_csv(copy / "gd.csv", dtype={"n_blocks": str})
    row = gd[(gd["task"] == COGNITIVE_EFFORT) & (gd["n_blocks"] == "3")].iloc[0]
    assert (row["n_runs"], row["n_excluded"]) == (4, 1)
    rates = [r["value"] for r in bundle.aux if r["task"] == COGNITIVE_EFFORT and r["n_blocks"] == 3 and r["metric"] == "exclusion_rate"]
    assert rates == [pytest.approx(0.2)]


def test_report_from_saved_bundle(oracle_run, tmp_path):
    out, _ = oracle_run
    bundle = load_bundle(out)
    assert len(bundle.records) == len(load_records(out))
    report(bundle, tmp_path)
    assert (tmp_path / "gd.csv").read_text() == (out / "gd.csv").read_text()
    assert (tmp_path / "regret.csv").read_text() == (out / "regret.csv").read_text()


def test_empty_bundle_writes_header_only_tables(tmp_path):
    report(ResultsBundle(), tmp_path)
    assert (tmp_path / "gd.csv").read_text().strip() == ",".join(GD_COLUMNS)
    assert (tmp_path / "regret.csv").read_text().strip() == ",".join(REGRET_COLUMNS)
    assert load_bundle(tmp_path).estimates == {}


def test_replay_agent_reproduces_records(oracle_run, tmp_path):
    out, _ = oracle_run
    replay = tmp_path / "replay"
    run(oracle_config(replay, agent=AgentSpec(kind="replay", replay_from=out)))
    assert load_records(replay) == load_records(out)


def test_replay_requires_stored_transcript(tmp_path):
    spec = AgentSpec(kind="replay", replay_from=tmp_path)
    with pytest.raises(ConfigurationError):
        make_agent(spec, COGNITIVE_EFFORT, 3, 0)


def test_failing_cells_leave_failed_records(random_ce_run, tmp_path):
    out = tmp_path / "out"
    empty = tmp_path / "empty"
    empty.mkdir()
    config = RunConfig(
        tasks=[COGNITIVE_EFFORT],
        block_counts=[3],
        seeds=2,
        agent=AgentSpec(kind="replay", replay_from=empty),
        output_dir=out,
        **FAST,
    )
    bundle = run(config)
    records = load_records(out)
    assert [r.status for r in records] == [RunStatus.FAILED, RunStatus.FAILED]
    assert {r.excluded_reason for r in records} == {"harness-error: ConfigurationError"}
    assert bundle.exclusion_counts(COGNITIVE_EFFORT, 3) == (0, 2)
    assert COGNITIVE_EFFORT not in bundle.estimates

    reference = {r.seed: r.heights for r in load_records(random_ce_run[0])}
    assert [r.heights for r in records] == [reference[0], reference[1]]
    assert not FileHandler(out).is_complete(COGNITIVE_EFFORT, 3, 0)

    # 다음 실행은 FAILED 셀을 다시 시도합니다
    bundle = run(config.model_copy(update={"agent": AgentSpec(kind="random")}))
    assert [r.status for r in load_records(out)] == [RunStatus.COMPLETED, RunStatus.COMPLETED]
    assert bundle.exclusion_counts(COGNITIVE_EFFORT, 3) == (2, 0)
    assert FileHandler(out).is_complete(COGNITIVE_EFFORT, 3, 0)


def test_unexpected_cell_error_does_not_abort_the_matrix(tmp_path, monkeypatch):
    calls = []

    def flaky(task_id, n_blocks, seed, agent, **kwargs):
        calls.append(seed)
        if seed == 1:
            raise ValueError("malformed reply")
        return real_run_episode(task_id, n_blocks, seed, agent, **kwargs)

    real_run_episode = harness.run_episode
    monkeypatch.setattr(harness, "run_episode", flaky)
    config = RunConfig(tasks=[COGNITIVE_EFFORT], block_counts=[3], seeds=3, workers=1, output_dir=tmp_path, **FAST)
    bundle = run(config)
    assert sorted(calls) == [0, 1, 2]
    statuses = {r.seed: r.status for r in load_records(tmp_path)}
    assert statuses == {0: RunStatus.COMPLETED, 1: RunStatus.FAILED, 2: RunStatus.COMPLETED}
    assert bundle.exclusion_counts(COGNITIVE_EFFORT, 3) == (2, 1)
    assert bundle.exclusions[0]["reasons"] == {"harness-error: ValueError": 1}


def test_remote_agent_requires_api_key(tmp_path, monkeypatch):
    monkeypatch.delenv("GD_TEST_MISSING_KEY", raising=False)
    spec = AgentSpec(kind="gemini", api_key_env="GD_TEST_MISSING_KEY")
    with pytest.raises(ConfigurationError):
        run(oracle_config(tmp_path, agent=spec))


def test_matrix_cells_use_a_single_falling_tower_stratum(tmp_path):
    config = RunConfig(tasks=[FALLING_TOWER, COGNITIVE_EFFORT], block_counts=[3, 4], seeds=2, output_dir=tmp_path)
    cells = matrix_cells(config)
    assert [c for c in cells if c[0] == FALLING_TOWER] == [(FALLING_TOWER, 15, 0), (FALLING_TOWER, 15, 1)]
    assert len([c for c in cells if c[0] == COGNITIVE_EFFORT]) == 4


def test_noise_overrides_reach_the_episode(tmp_path):
    config = oracle_config(
        tmp_path,
        tasks=[EXECUTION],
        block_counts=[3],
        seeds=3,
        noise=NoiseOverrides(perturbation_prob=0.0, distraction_prob=0.0),
    )
    bundle = run(config)
    assert all(r.perturbations == 0 and r.distractions == 0 for r in bundle.records)


def test_cli_analyze_writes_reports(oracle_run, tmp_path):
    out, _ = oracle_run
    code = app.main(["analyze", "--in", str(out), "--out", str(tmp_path), "--mc-iterations", "2000", "--bootstrap", "1000"])
    assert code == 0
    assert (tmp_path / "gd.csv").read_text() == (out / "gd.csv").read_text()


def test_cli_report_rewrites_tables(oracle_run, tmp_path):
    out, _ = oracle_run
    assert app.main(["report", "--in", str(out), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "aux.csv").exists()


def test_cli_exit_codes(random_ce_run, oracle_run, tmp_path):
    random_out, _ = random_ce_run
    oracle_out, _ = oracle_run
    assert app.main(["run", "--tasks", "juggling", "--out", str(tmp_path)]) == app.EXIT_CONFIGURATION
    assert app.main(["analyze", "--in", str(random_out), "--out", str(tmp_path)]) == app.EXIT_MISSING_SUBTASK
    assert app.main(["analyze", "--in", str(oracle_out), "--out", str(tmp_path), "--bootstrap", "10"]) == app.EXIT_CONFIGURATION


def test_cli_allow_gaps(random_ce_run, tmp_path):
    random_out, _ = random_ce_run
    assert app.main(["analyze", "--in", str(random_out), "--out", str(tmp_path), "--allow-gaps"]) == 0


@pytest.fixture(scope="module")
def calibration_runs(tmp_path_factory):
    oracle_out = tmp_path_factory.mktemp("calibration-oracle")
    oracle = run(
        RunConfig(
            tasks=list(COMPOSITE_TASKS) + list(SUBTASKS),
            block_counts=[3, 4, 5],
            seeds=30,
            agent=AgentSpec(kind="oracle", k=20),
            max_steps=400,
            workers=4,
            output_dir=oracle_out,
        )
    )
    random_out = tmp_path_factory.mktemp("calibration-random")
    run(
        RunConfig(
            tasks=list(COMPOSITE_TASKS),
            block_counts=[3, 4, 5],
            seeds=30,
            agent=AgentSpec(kind="random"),
            workers=4,
            output_dir=random_out,
        )
    )
    random = analyze(random_out, capabilities_from=oracle_out, out_dir=random_out)
    return oracle, random


@pytest.mark.slow
@pytest.mark.parametrize("task_id", COMPOSITE_TASKS)
def test_oracle_calibration(calibration_runs, task_id):
    oracle, _ = calibration_runs
    estimate = oracle.estimates[task_id]
    assert 0.95 <= estimate.aggregate <= 1.05
    assert estimate.ci_low <= 1.0 <= estimate.ci_high


@pytest.mark.slow
@pytest.mark.parametrize("task_id", COMPOSITE_TASKS)
def test_random_calibration(calibration_runs, task_id):
    _, random = calibration_runs
    assert -0.10 <= random.estimates[task_id].aggregate <= 0.10


@pytest.fixture(scope="module")
def laziness_sweep(tmp_path_factory):
    profile = NoisyProfile(measurements=2)
    seeds = 30
    subtasks = tmp_path_factory.mktemp("laziness-subtasks")
    run(
        RunConfig(
            tasks=list(SUBTASKS),
            block_counts=[3, 4, 5],
            seeds=seeds,
            agent=AgentSpec(kind="noisy", profile=profile),
            workers=4,
            output_dir=subtasks,
        )
    )
    estimates = {}
    for laziness in (1.0, 2.0, 4.0):
        out = tmp_path_factory.mktemp(f"laziness-{laziness:g}")
        run(
            RunConfig(
                tasks=[INFORMATION_GATHERING, COMBINED],
                block_counts=[3, 4, 5],
                seeds=seeds,
                agent=AgentSpec(kind="noisy", profile=profile, laziness=laziness),
                workers=4,
                output_dir=out,
            )
        )
        estimates[laziness] = analyze(out, capabilities_from=subtasks).estimates
    return estimates


@pytest.mark.slow
@pytest.mark.parametrize("task_id", [INFORMATION_GATHERING, COMBINED])
def test_goal_directedness_falls_with_laziness(laziness_sweep, task_id):
    values = [laziness_sweep[laziness][task_id] for laziness in (1.0, 2.0, 4.0)]
    assert values[0].aggregate > values[1].aggregate > values[2].aggregate
    assert values[2].ci_high < values[0].ci_low
