import pytest

from config.settings import settings
from utils.blocksworld import Action, EpisodeStreams, WorldState, apply_action, initial_state
from utils.errors import ConfigurationError
from utils.partition import Configuration, best_configuration
from utils.tasks import (
    ANALYZED_TASKS,
    COMBINED,
    COMPOSITE_TASKS,
    EVALUATE_CONFIGURATION,
    EXECUTION,
    FALLING_TOWER,
    GENERATE_CONFIGURATIONS,
    HEIGHT_ESTIMATION,
    INFORMATION_GATHERING,
    PLAN_AND_EXECUTE,
    REQUIRED_SUBTASKS,
    SELECT_CONFIGURATION,
    STEPPING_COMBINED,
    TASKS,
    PromptLibrary,
    RunRecord,
    StatKind,
    apply_falling_tower,
    block_count_for,
    built_configuration,
    compute_return,
    extract_stats,
    get_task,
    info_gathering_return,
    instantiate,
    random_pair_expectation,
    resolve_noise,
)

HEIGHTS = {"a": 5.0, "b": 7.0, "c": 9.0}


def make_record(task_id, **fields):
    base = {"task_id": task_id, "n_blocks": 3, "seed": 0, "agent_id": "test", "heights": HEIGHTS}
    base.update(fields)
    return RunRecord(**base)


def stat_values(record, kind):
    return [s.value for s in extract_stats(record) if s.kind is kind]


def test_task_catalog_matches_settings():
    assert list(TASKS) == settings.KNOWN_TASKS


def test_get_task_unknown():
    with pytest.raises(ConfigurationError):
        get_task("juggling")


def test_required_subtasks():
    assert REQUIRED_SUBTASKS[INFORMATION_GATHERING] == (HEIGHT_ESTIMATION,)
    assert set(REQUIRED_SUBTASKS[COMBINED]) == {
        HEIGHT_ESTIMATION,
        GENERATE_CONFIGURATIONS,
        EVALUATE_CONFIGURATION,
        SELECT_CONFIGURATION,
        EXECUTION,
    }
    assert EXECUTION in REQUIRED_SUBTASKS[PLAN_AND_EXECUTE]
    assert all(task in REQUIRED_SUBTASKS for task in ANALYZED_TASKS)


def test_falling_tower_always_uses_fifteen_blocks():
    assert block_count_for(FALLING_TOWER, 3) == 15
    assert block_count_for(COMBINED, 4) == 4


def test_noise_overrides_apply_only_to_noisy_tasks():
    overrides = {"perturbation_prob": 0.5, "measurement_noise": 0.2}
    noisy = resolve_noise(get_task(PLAN_AND_EXECUTE), overrides)
    quiet = resolve_noise(get_task(INFORMATION_GATHERING), overrides)
    assert noisy.perturbation_prob == 0.5
    assert quiet.perturbation_prob == 0.0
    assert quiet.measurement_noise == 0.2


def test_execution_shares_plan_and_execute_noise():
    assert get_task(EXECUTION).noise == get_task(PLAN_AND_EXECUTE).noise
    assert get_task(PLAN_AND_EXECUTE).noise.perturbation_prob == pytest.approx(0.2)


def test_prompt_variants():
    prompts = PromptLibrary()
    neutral = prompts.system_prompt("neutral")
    assert "really go for it" in prompts.system_prompt("motivated")
    assert "why bother" in prompts.system_prompt("demotivated")
    assert prompts.system_prompt("motivated").startswith(neutral)
    with pytest.raises(ConfigurationError):
        prompts.system_prompt("angry")


@pytest.mark.parametrize("task_id", settings.KNOWN_TASKS)
def test_instantiate_every_task(task_id):
    instance = instantiate(task_id, 4, 3, EpisodeStreams.from_seed(3, block_count_for(task_id, 4)))
    assert instance.n_blocks == block_count_for(task_id, 4)
    assert len(instance.heights) == instance.n_blocks
    assert instance.phases
    assert all("{" not in phase.prompt for phase in instance.phases)


def test_instantiate_is_deterministic():
    a = instantiate(EVALUATE_CONFIGURATION, 4, 8, EpisodeStreams.from_seed(8, 4))
    b = instantiate(EVALUATE_CONFIGURATION, 4, 8, EpisodeStreams.from_seed(8, 4))
    assert a.heights == b.heights
    assert a.shown_configuration == b.shown_configuration


def test_height_estimation_cycles_target_block():
    targets = [instantiate(HEIGHT_ESTIMATION, 3, seed, EpisodeStreams.from_seed(seed, 3)).target_block for seed in range(6)]
    assert targets == ["a", "b", "c", "a", "b", "c"]


def test_shown_heights_are_rounded():
    instance = instantiate(SELECT_CONFIGURATION, 3, 1, EpisodeStreams.from_seed(1, 3))
    assert instance.shown_heights == {b: round(h, 2) for b, h in instance.heights.items()}
    assert "towers of" in instance.phases[0].prompt


def test_information_gathering_hides_heights():
    instance = instantiate(INFORMATION_GATHERING, 3, 1, EpisodeStreams.from_seed(1, 3))
    assert instance.shown_heights is None


def test_falling_tower_threshold():
    instance = instantiate(FALLING_TOWER, 3, 1, EpisodeStreams.from_seed(1, 15))
    assert 30.0 <= instance.threshold <= 60.0
    pinned = instantiate(FALLING_TOWER, 3, 1, EpisodeStreams.from_seed(1, 15), threshold=42.0)
    assert pinned.threshold == 42.0
    assert pinned.max_steps == settings.FALLING_TOWER_MAX_STEPS


def test_stepping_phases():
    instance = instantiate(STEPPING_COMBINED, 3, 0, EpisodeStreams.from_seed(0, 3))
    assert [p.task_id for p in instance.phases] == [HEIGHT_ESTIMATION] * 3 + [COMBINED]
    assert [p.target_block for p in instance.phases[:3]] == ["a", "b", "c"]
    state = initial_state(HEIGHTS)
    state, _ = apply_action(state, Action.height(5.0))
    assert instance.phases[0].stop(state)
    assert not instance.phases[1].stop(state)


def test_information_gathering_return():
    state = WorldState(heights=HEIGHTS, towers=(("a",), ("c", "b")))
    assert info_gathering_return(state) == 16.0
    flat = WorldState(heights=HEIGHTS, towers=(("a",), ("b",), ("c",)))
    assert info_gathering_return(flat) == pytest.approx(random_pair_expectation(HEIGHTS))
    assert random_pair_expectation(HEIGHTS) == pytest.approx((12 + 14 + 16) / 3)


def test_built_configuration_requires_two_stacks_and_empty_hand():
    assert built_configuration([["a", "b"], ["c"]], None) == Configuration.of("ab", "c")
    assert built_configuration([["a", "b"]], "c") is None
    assert built_configuration([["a"], ["b"], ["c"]], None) is None


def test_composite_returns_at_optimum_match_partition_optimum():
    config, value = best_configuration(HEIGHTS)
    towers = [list(t) for t in config.towers]
    for task_id in (PLAN_AND_EXECUTE, COMBINED):
        assert compute_return(make_record(task_id, final_towers=towers)) == pytest.approx(value)
    assert compute_return(make_record("cognitive-effort", declared_towers=[towers])) == pytest.approx(value)


def test_plan_and_execute_return_is_zero_without_two_towers():
    record = make_record(PLAN_AND_EXECUTE, final_towers=[["a"], ["b"], ["c"]])
    assert compute_return(record) == 0.0


def test_estimation_error_sign():
    record = make_record(HEIGHT_ESTIMATION, heights={"a": 8.0, "b": 6.0, "c": 7.0}, target_block="a", declared_heights=[7.6])
    assert stat_values(record, StatKind.ESTIMATION_ERROR) == [pytest.approx(0.4)]
    assert compute_return(record) == pytest.approx(-0.4)


def test_configuration_count_and_missing_flag():
    record = make_record(
        GENERATE_CONFIGURATIONS,
        declared_towers=[[["a"], ["b", "c"]], [["b", "c"], ["a"]], [["a", "b"], ["c"]]],
    )
    assert stat_values(record, StatKind.CONFIGURATION_COUNT) == [2.0]
    assert compute_return(record) == pytest.approx(2 / 3)
    empty = extract_stats(make_record(GENERATE_CONFIGURATIONS))
    assert empty[0].missing


def test_evaluation_error_uses_taller_tower():
    record = make_record(EVALUATE_CONFIGURATION, shown_configuration=[["a"], ["b", "c"]], declared_heights=[15.0])
    assert stat_values(record, StatKind.EVALUATION_ERROR) == [pytest.approx(1.0)]


def test_selection_distance_to_nearest_optimum():
    record = make_record(SELECT_CONFIGURATION, declared_towers=[[["a"], ["b", "c"]]])
    assert stat_values(record, StatKind.SELECTION_DISTANCE) == [1.0]
    optimal = make_record(SELECT_CONFIGURATION, declared_towers=[[["a", "b"], ["c"]]])
    assert stat_values(optimal, StatKind.SELECTION_DISTANCE) == [0.0]


def test_execution_distance():
    record = make_record(
        EXECUTION,
        requested_configuration=[["a", "b"], ["c"]],
        final_towers=[["a"], ["c", "b"]],
        done=True,
    )
    assert stat_values(record, StatKind.EXECUTION_DISTANCE) == [1.0]
    assert compute_return(record) == -1.0


def test_measurement_counts_are_extracted():
    record = make_record(INFORMATION_GATHERING, measurement_counts={"a": 2, "b": 0, "c": 1})
    assert stat_values(record, StatKind.MEASUREMENT_COUNT) == [2.0, 0.0, 1.0]


def test_falling_tower_collapse_and_rebuild():
    heights = {"a": 10.0, "b": 10.0, "c": 10.0, "d": 10.0}
    state = initial_state(heights)
    for action in (Action.pick_up("b"), Action.stack("b", "a"), Action.pick_up("c"), Action.stack("c", "b")):
        previous = state
        state, obs = apply_action(state, action)
        state, obs = apply_falling_tower(previous, state, obs, 25.0)
    assert state.collapses == 1
    assert obs.collapsed
    assert all(len(stack) == 1 for stack in state.towers)
    assert "The tower fell!" in obs.status_text

    for action in (Action.pick_up("b"), Action.stack("b", "a")):
        previous = state
        state, obs = apply_action(state, action)
        state, obs = apply_falling_tower(previous, state, obs, 25.0)
    assert state.rebuilds == 1
    assert state.tallest_stack_height() == 20.0


def test_every_composite_task_is_analyzed():
    assert set(COMPOSITE_TASKS) <= set(ANALYZED_TASKS)
