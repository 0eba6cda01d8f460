from collections import Counter

import numpy as np
import pytest
import requests

from config.settings import settings
from utils.agents import (
    NoisyProfile,
    RateLimiter,
    ReplayAgent,
    ScriptedAgent,
    Transcript,
    choose_configuration,
    make_noisy_agent,
    make_oracle_agent,
    make_random_agent,
    next_message,
    plan_next_move,
    shared_rate_limiter,
)
from utils.blocksworld import EpisodeStreams, apply_action, initial_state, legal_manipulations
from utils.chat_api import ChatCompletionAgent
from utils.episode import run_episode
from utils.errors import AuthenticationError, HarnessError, RemoteAgentError
from utils.partition import Configuration, best_configuration, enumerate_configurations
from utils.tasks import (
    COGNITIVE_EFFORT,
    COMBINED,
    HEIGHT_ESTIMATION,
    INFORMATION_GATHERING,
    PLAN_AND_EXECUTE,
    PromptLibrary,
    RunStatus,
    StatKind,
    built_configuration,
    instantiate,
)

PROMPTS = PromptLibrary()


def test_transcript_enforces_turn_order():
    transcript = Transcript()
    with pytest.raises(HarnessError):
        transcript.add_agent("hello")
    transcript.add_system("rules")
    with pytest.raises(HarnessError):
        transcript.add_agent("too early")
    transcript.add_environment("task")
    transcript.add_agent("<done>")
    with pytest.raises(HarnessError):
        transcript.add_agent("twice")
    with pytest.raises(HarnessError):
        transcript.add_system("again")
    assert [m["role"] for m in transcript.to_messages()] == ["system", "user", "assistant"]


def test_transcript_records_keep_metadata():
    transcript = Transcript({"task_id": "combined", "seed": 4})
    transcript.add_system("rules")
    transcript.add_environment("task")
    restored = Transcript.from_records(transcript.to_records())
    assert restored.metadata == {"task_id": "combined", "seed": 4}
    assert restored.to_messages() == transcript.to_messages()


def test_next_message_requires_environment_turn():
    transcript = Transcript()
    transcript.add_system("rules")
    with pytest.raises(HarnessError):
        next_message(make_random_agent(0), transcript)


def test_plan_next_move_builds_any_target_from_scrambled_states():
    heights = {b: 7.0 for b in "abcde"}
    rng = np.random.default_rng(5)
    for target in enumerate_configurations(heights):
        state = initial_state(heights)
        for _ in range(int(rng.integers(0, 12))):
            moves = legal_manipulations(state)
            state, _ = apply_action(state, moves[int(rng.integers(len(moves)))])
        for _ in range(40):
            action = plan_next_move(state.towers, state.holding, target)
            if action is None:
                break
            state, _ = apply_action(state, action)
        assert built_configuration(state.towers, state.holding) == target


def test_choose_configuration_with_full_recall_finds_optimum():
    heights = {"a": 5.0, "b": 7.0, "c": 9.0, "d": 6.0}
    chosen = choose_configuration(heights, 1.0, 0.0, 0.0, np.random.default_rng(0))
    assert chosen == best_configuration(heights)[0]


def test_choose_configuration_slip_never_returns_the_preferred_configuration():
    heights = {"a": 5.0, "b": 7.0, "c": 9.0}
    best = best_configuration(heights)[0]
    rng = np.random.default_rng(1)
    assert all(choose_configuration(heights, 1.0, 0.0, 1.0, rng) != best for _ in range(20))


@pytest.mark.parametrize("k", [1, 5, 20])
def test_oracle_estimation_error_matches_measurement_theory(k):
    ratios = []
    for seed in range(1000):
        record, _ = run_episode(HEIGHT_ESTIMATION, 3, seed, make_oracle_agent(k), prompts=PROMPTS)
        (stat,) = [s for s in record.stats if s.kind is StatKind.ESTIMATION_ERROR]
        ratios.append(stat.value / record.heights[record.target_block])
    assert np.std(ratios) == pytest.approx(0.1 / np.sqrt(k), rel=0.1)
    assert abs(np.mean(ratios)) < 0.01


def test_oracle_agent_ids_and_validation():
    assert make_oracle_agent(20).id == "oracle-k20"
    assert make_noisy_agent(NoisyProfile(measurements=4), 2.0).id == "noisy-k4-l2"
    with pytest.raises(HarnessError):
        make_oracle_agent(0)
    with pytest.raises(HarnessError):
        ScriptedAgent("lazy", NoisyProfile(), laziness=0.5)


def test_oracle_information_gathering_measures_every_block():
    record, _ = run_episode(INFORMATION_GATHERING, 3, 0, make_oracle_agent(20), prompts=PROMPTS)
    assert record.included
    assert record.measurement_counts == {"a": 20, "b": 20, "c": 20}
    assert any(len(stack) == 2 for stack in record.final_towers)


def test_laziness_scales_only_composite_behaviour():
    profile = NoisyProfile(measurements=4, config_recall=1.0, evaluation_noise=0.5)
    agent = ScriptedAgent("lazy", profile, laziness=2.0)

    agent.start(instantiate(COMBINED, 3, 0, EpisodeStreams.from_seed(0, 3)), np.random.default_rng(0))
    assert agent.measurements == 2
    assert agent.recall == pytest.approx(0.5)
    assert agent.evaluation_noise == pytest.approx(1.0)

    agent.start(instantiate(HEIGHT_ESTIMATION, 3, 0, EpisodeStreams.from_seed(0, 3)), np.random.default_rng(0))
    assert agent.measurements == 4
    assert agent.recall == pytest.approx(1.0)
    assert agent.evaluation_noise == pytest.approx(0.5)


def test_very_lazy_agent_skips_measuring():
    agent = make_noisy_agent(NoisyProfile(measurements=1), laziness=4.0)
    record, _ = run_episode(INFORMATION_GATHERING, 3, 0, agent, prompts=PROMPTS)
    assert sum(record.measurement_counts.values()) == 0
    assert record.steps == 2
    assert record.included


def test_random_agent_is_reproducible_with_seed():
    first, _ = run_episode(INFORMATION_GATHERING, 4, 2, make_random_agent(7), prompts=PROMPTS)
    second, _ = run_episode(INFORMATION_GATHERING, 4, 2, make_random_agent(7), prompts=PROMPTS)
    assert first == second


def test_random_agent_declares_a_valid_configuration():
    record, _ = run_episode(COGNITIVE_EFFORT, 4, 3, make_random_agent(1), prompts=PROMPTS)
    declared = Configuration.from_towers(record.declared_towers[-1])
    assert declared in enumerate_configurations(record.heights)
    assert record.return_value == pytest.approx(declared.lowest(record.heights))


def test_random_agent_builds_two_towers_in_plan_and_execute():
    record, _ = run_episode(PLAN_AND_EXECUTE, 4, 3, make_random_agent(1), prompts=PROMPTS)
    assert record.done
    assert built_configuration(record.final_towers, record.holding) is not None
    assert record.return_value > 0


def test_random_agent_picks_two_tower_configurations_uniformly():
    counts = Counter()
    for seed in range(3000):
        record, _ = run_episode(COGNITIVE_EFFORT, 3, seed, make_random_agent(), prompts=PROMPTS)
        counts[frozenset(frozenset(tower) for tower in record.declared_towers[-1])] += 1
    assert len(counts) == len(enumerate_configurations("abc")) == 3
    for count in counts.values():
        assert count / 3000 == pytest.approx(1 / 3, abs=0.03)


def test_random_agent_stacks_every_information_gathering_pair_equally_often():
    counts = Counter()
    for seed in range(2000):
        record, _ = run_episode(INFORMATION_GATHERING, 3, seed, make_random_agent(), prompts=PROMPTS)
        pairs = [frozenset(stack) for stack in record.final_towers if len(stack) == 2]
        counts.update(pairs)
    total = sum(counts.values())
    assert total > 700
    assert set(counts) == {frozenset("ab"), frozenset("ac"), frozenset("bc")}
    for count in counts.values():
        assert count / total == pytest.approx(1 / 3, abs=0.06)


def test_replay_reproduces_the_stored_episode():
    original, transcript = run_episode(COMBINED, 3, 6, make_oracle_agent(3), prompts=PROMPTS)
    replayed, _ = run_episode(COMBINED, 3, 6, ReplayAgent(transcript), prompts=PROMPTS)
    assert replayed.agent_id == "oracle-k3"
    assert replayed == original


def test_exhausted_replay_fails_the_episode():
    stored = Transcript({"agent_id": "stored"})
    stored.add_system("rules")
    stored.add_environment("task")
    record, _ = run_episode(COGNITIVE_EFFORT, 3, 0, ReplayAgent(stored), prompts=PROMPTS)
    assert record.status is RunStatus.FAILED
    assert not record.included


def test_rate_limiter_spaces_requests(monkeypatch):
    sleeps = []
    monkeypatch.setattr("utils.agents.time.sleep", sleeps.append)
    limiter = RateLimiter(60)
    waits = [limiter.acquire() for _ in range(3)]
    assert waits[0] == 0.0
    assert waits[1] == pytest.approx(1.0, abs=0.05)
    assert waits[2] == pytest.approx(2.0, abs=0.05)
    assert len(sleeps) == 2


def test_rate_limiter_validation_and_sharing():
    with pytest.raises(HarnessError):
        RateLimiter(0)
    assert shared_rate_limiter("test-provider", 60) is shared_rate_limiter("test-provider", 30)


class FakeResponse:
    def __init__(self, status_code, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text

    def json(self):
        return self._payload


class HtmlResponse(FakeResponse):
    def json(self):
        raise ValueError("Expecting value: line 1 column 1 (char 0)")


class FakeSession:
    def __init__(self, responses):
        self.headers = {}
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, timeout=None):
        self.calls.append(json)
        response = self.responses.pop(0)
        if isinstance(response, Exception):
            raise response
        return response


def _chat_transcript():
    transcript = Transcript()
    transcript.add_system("rules")
    transcript.add_environment("task")
    return transcript


def test_chat_agent_parses_reply_and_logs_request():
    payload = {"choices": [{"message": {"content": "Finished. <done>"}}], "usage": {"total_tokens": 12}}
    session = FakeSession([FakeResponse(200, payload)])
    agent = ChatCompletionAgent("http://localhost/v1/chat", "tiny", "secret", temperature=0.0, session=session)
    logged = []
    agent.request_log = logged.append

    assert agent.respond(_chat_transcript()) == "Finished. <done>"
    assert agent.last_usage == {"total_tokens": 12}
    assert session.headers["Authorization"] == "Bearer secret"
    assert session.calls[0]["messages"][0] == {"role": "system", "content": "rules"}
    assert session.calls[0]["temperature"] == 0.0
    assert [entry["type"] for entry in logged] == ["request", "response"]


def test_chat_agent_authentication_failure_is_not_retried():
    session = FakeSession([FakeResponse(401, text="bad key")])
    agent = ChatCompletionAgent("http://localhost/v1/chat", "tiny", "wrong", session=session)
    with pytest.raises(AuthenticationError):
        agent.respond(_chat_transcript())
    assert len(session.calls) == 1


def test_chat_agent_rejects_malformed_reply():
    session = FakeSession([FakeResponse(200, {"unexpected": True})])
    agent = ChatCompletionAgent("http://localhost/v1/chat", "tiny", "secret", session=session)
    with pytest.raises(RemoteAgentError):
        agent.respond(_chat_transcript())


def test_chat_agent_rejects_a_non_json_page():
    session = FakeSession([HtmlResponse(200, text="<html>gateway page</html>")])
    agent = ChatCompletionAgent("http://localhost/v1/chat", "tiny", "secret", session=session)
    with pytest.raises(RemoteAgentError) as info:
        agent.respond(_chat_transcript())
    assert "gateway page" in str(info.value)
    assert not isinstance(info.value, AuthenticationError)


def test_non_json_page_fails_the_episode_instead_of_raising():
    session = FakeSession([HtmlResponse(200, text="<html>gateway page</html>")])
    agent = ChatCompletionAgent("http://localhost/v1/chat", "tiny", "secret", session=session)
    record, _ = run_episode(COGNITIVE_EFFORT, 3, 0, agent, prompts=PROMPTS)
    assert record.status is RunStatus.FAILED
    assert not record.included
    assert "JSON" in record.excluded_reason


def test_chat_agent_retries_broken_connections(monkeypatch):
    monkeypatch.setattr("time.sleep", lambda seconds: None)
    payload = {"choices": [{"message": {"content": "<done>"}}]}
    session = FakeSession(
        [requests.exceptions.ChunkedEncodingError("connection reset"), requests.Timeout("slow"), FakeResponse(200, payload)]
    )
    agent = ChatCompletionAgent("http://localhost/v1/chat", "tiny", "secret", session=session)
    assert agent.respond(_chat_transcript()) == "<done>"
    assert len(session.calls) == 3


def test_chat_agent_gives_up_after_repeated_connection_errors(monkeypatch):
    monkeypatch.setattr("time.sleep", lambda seconds: None)
    session = FakeSession([requests.ConnectionError("refused") for _ in range(settings.REMOTE_MAX_TRIES)])
    agent = ChatCompletionAgent("http://localhost/v1/chat", "tiny", "secret", session=session)
    with pytest.raises(RemoteAgentError):
        agent.respond(_chat_transcript())
    assert len(session.calls) == settings.REMOTE_MAX_TRIES


def test_other_request_errors_are_not_retried():
    session = FakeSession([requests.exceptions.InvalidURL("bad url")])
    agent = ChatCompletionAgent("http://localhost/v1/chat", "tiny", "secret", session=session)
    with pytest.raises(RemoteAgentError):
        agent.respond(_chat_transcript())
    assert len(session.calls) == 1
