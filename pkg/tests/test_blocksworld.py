import math

import numpy as np
import pytest

from utils.blocksworld import (
    Action,
    ActionKind,
    EpisodeStreams,
    NoiseConfig,
    Observation,
    apply_action,
    describe_state,
    format_measurement,
    initial_state,
    legal_manipulations,
    load_distraction_corpus,
    maybe_distract,
    measure,
    parse_measurement,
    perturb_action,
    sample_heights,
)
from utils.errors import ConfigurationError, EpisodeTerminatedError


def make_state(heights=None, seed=0):
    heights = heights or {"a": 5.0, "b": 7.0, "c": 9.0}
    return initial_state(heights, EpisodeStreams.from_seed(seed, len(heights)))


def test_sample_heights_range_and_ids():
    heights = sample_heights(5, np.random.default_rng(1))
    assert sorted(heights) == ["a", "b", "c", "d", "e"]
    assert all(5.0 <= h <= 10.0 for h in heights.values())


def test_sample_heights_are_uniform_on_the_height_range():
    rng = np.random.default_rng(2)
    values = np.array([h for _ in range(20000) for h in sample_heights(5, rng).values()])
    assert values.size == 100000
    assert values.mean() == pytest.approx(7.5, abs=0.02)
    assert values.var() == pytest.approx(25 / 12, abs=0.05)
    assert 5.0 <= values.min() and values.max() <= 10.0


@pytest.mark.parametrize("n", [2, 16])
def test_sample_heights_rejects_unsupported_counts(n):
    with pytest.raises(ConfigurationError):
        sample_heights(n, np.random.default_rng(0))


def test_streams_are_reproducible():
    first = EpisodeStreams.from_seed(7, 4)
    second = EpisodeStreams.from_seed(7, 4)
    assert sample_heights(4, first.heights) == sample_heights(4, second.heights)
    assert first.measurement.random() == second.measurement.random()


def test_streams_differ_by_block_count():
    a = sample_heights(3, EpisodeStreams.from_seed(7, 3).heights)
    b = sample_heights(4, EpisodeStreams.from_seed(7, 4).heights)
    assert a["a"] != b["a"]


def test_initial_state_places_blocks_on_table():
    state = make_state()
    assert state.towers == (("a",), ("b",), ("c",))
    assert state.holding is None
    assert state.step == 0
    assert describe_state(state.towers, None) == (
        "Current state (bottom to top): [a]; [b]; [c]. You are holding nothing."
    )


@pytest.mark.parametrize("h", [5.0, 7.5, 10.0])
def test_measurement_statistics(h):
    state = make_state({"a": h, "b": 6.0, "c": 7.0}, seed=11)
    readings = np.array([measure(state, "a") for _ in range(50_000)])
    assert abs(readings.mean() - h) < 0.03
    assert readings.std() == pytest.approx(0.1 * h, rel=0.02)


def test_measurement_is_rounded_to_two_decimals():
    state = make_state()
    reading = measure(state, "b")
    assert reading == round(reading, 2)


def test_measurement_rounding_can_be_disabled():
    state = make_state()
    readings = [measure(state, "b", NoiseConfig(measurement_decimals=None)) for _ in range(20)]
    assert any(r != round(r, 2) for r in readings)


def test_measure_unknown_block_raises():
    with pytest.raises(ConfigurationError):
        measure(make_state(), "z")


def test_measurement_format_round_trip():
    assert format_measurement("a", 9.654) == "a: 9.65cm"
    assert parse_measurement("a: 9.65cm") == ("a", 9.65)
    with pytest.raises(ValueError):
        parse_measurement("nine point six")


def test_pick_up_then_stack():
    state = make_state()
    state, obs = apply_action(state, Action.pick_up("a"))
    assert state.holding == "a"
    assert obs.holding == "a"
    state, obs = apply_action(state, Action.stack("a", "c"))
    assert state.towers == (("b",), ("c", "a"))
    assert state.holding is None
    assert state.step == 2
    assert "You stacked block a on block c." in obs.status_text


def test_stacking_on_non_clear_block_is_a_no_op():
    state = make_state()
    state, _ = apply_action(state, Action.pick_up("a"))
    state, _ = apply_action(state, Action.stack("a", "b"))
    state, _ = apply_action(state, Action.pick_up("c"))
    after, obs = apply_action(state, Action.stack("c", "b"))
    assert after.towers == (("b", "a"),)
    assert after.holding == "c"
    assert "not clear" in obs.status_text


def test_illegal_pick_up_changes_nothing_but_counts_step():
    state = make_state()
    state, _ = apply_action(state, Action.pick_up("a"))
    after, obs = apply_action(state, Action.pick_up("b"))
    assert after.towers == state.towers
    assert after.holding == "a"
    assert after.step == state.step + 1
    assert "already holding" in obs.status_text


def test_unknown_block_is_reported_not_raised():
    state = make_state()
    after, obs = apply_action(state, Action.pick_up("q"))
    assert after.towers == state.towers
    assert "There is no block named q." in obs.status_text


def test_disallowed_action_is_reported():
    state = make_state()
    after, obs = apply_action(state, Action.measure("a"), allowed=frozenset({ActionKind.TOWERS}))
    assert after.measurement_counts["a"] == 0
    assert "not available" in obs.status_text


def test_measure_action_counts_and_reports():
    state = make_state()
    state, obs = apply_action(state, Action.measure("b"))
    assert state.measurement_counts["b"] == 1
    assert obs.measurement[0] == "b"
    assert "Measurement b:" in obs.status_text


def test_towers_declaration_validation():
    state = make_state()
    bad, obs = apply_action(state, Action.declare_towers([["a"], ["b"]]))
    assert bad.declared_towers == ()
    assert "every block" in obs.status_text
    good, _ = apply_action(state, Action.declare_towers([["a", "b"], ["c"]]))
    assert good.declared_towers == ((("a", "b"), ("c",)),)


@pytest.mark.parametrize("value", [0.0, -3.0, math.inf])
def test_height_declaration_must_be_positive_and_finite(value):
    state = make_state()
    after, _ = apply_action(state, Action.height(value))
    assert after.declared_heights == ()


def test_done_sets_flag_and_stop_terminates():
    state = make_state()
    after, obs = apply_action(state, Action.done(), stop=lambda s: s.done)
    assert after.done and after.terminal and obs.terminal


def test_terminal_state_rejects_actions():
    state = make_state()
    state, _ = apply_action(state, Action.done(), stop=lambda s: s.done)
    with pytest.raises(EpisodeTerminatedError):
        apply_action(state, Action.pick_up("a"))


def test_legal_manipulations():
    state = make_state()
    assert legal_manipulations(state) == [Action.pick_up("a"), Action.pick_up("b"), Action.pick_up("c")]
    state, _ = apply_action(state, Action.pick_up("b"))
    assert legal_manipulations(state) == [Action.put_down("b"), Action.stack("b", "a"), Action.stack("b", "c")]


def test_perturbation_rate():
    state = make_state()
    rng = np.random.default_rng(3)
    trials = 40_000
    hits = sum(
        perturb_action(Action.pick_up("a"), state, rng, 0.2).perturbed_from is not None for _ in range(trials)
    )
    assert hits / trials == pytest.approx(0.2, abs=0.01)


def test_perturbation_never_touches_declarations():
    state = make_state()
    rng = np.random.default_rng(0)
    for action in (Action.done(), Action.measure("a"), Action.height(5.0)):
        assert perturb_action(action, state, rng, 1.0) is action


def test_perturbed_action_is_legal_and_counted():
    state = make_state()
    action = perturb_action(Action.pick_up("a"), state, np.random.default_rng(0), 1.0)
    assert action in legal_manipulations(state)
    after, obs = apply_action(state, action)
    assert after.perturbations == 1
    assert obs.perturbed


def test_zero_probability_does_not_consume_randomness():
    state = make_state()
    rng = np.random.default_rng(5)
    perturb_action(Action.pick_up("a"), state, rng, 0.0)
    assert rng.random() == np.random.default_rng(5).random()


def test_distraction_rate_and_text():
    corpus = ("First excerpt.", "Second excerpt.")
    rng = np.random.default_rng(9)
    obs = Observation(status_text="You picked up block a.")
    trials = 40_000
    results = [maybe_distract(obs, rng, corpus, 0.2) for _ in range(trials)]
    distracted = [r for r in results if r.distraction is not None]
    assert len(distracted) / trials == pytest.approx(0.2, abs=0.01)
    assert distracted[0].status_text.startswith("You picked up block a.\n\n")


def test_distraction_requires_corpus():
    with pytest.raises(ConfigurationError):
        maybe_distract(Observation(status_text="x"), np.random.default_rng(0), (), 0.2)


def test_bundled_corpus_has_excerpts():
    corpus = load_distraction_corpus()
    assert len(corpus) >= 100
    assert all(excerpt.strip() == excerpt for excerpt in corpus)


def test_observation_dict_round_trip():
    obs = Observation(
        status_text="x", measurement=("a", 7.5), towers=(("a", "b"), ("c",)), holding=None, phase=2, perturbed=True
    )
    assert Observation.from_dict(obs.to_dict()) == obs
