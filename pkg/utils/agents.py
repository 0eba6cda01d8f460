"""
에이전트 추상화 모듈

스크립트 에이전트(무작위 기준선, 능력 맞춤 오라클, 게으름 계수를 가진 잡음 에이전트)와
저장된 트랜스크립트를 재생하는 에이전트, 그리고 원격 에이전트의 공통 기반을 정의합니다.
"""
from __future__ import annotations

import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config.settings import settings
from utils.action_parser import format_action
from utils.blocksworld import (
    Action,
    ActionKind,
    Observation,
    Towers,
    WorldState,
    legal_manipulations,
)
from utils.errors import HarnessError, RemoteAgentError
from utils.logger import get_logger
from utils.partition import Configuration, enumerate_configurations
from utils.tasks import (
    COGNITIVE_EFFORT,
    COMBINED,
    EVALUATE_CONFIGURATION,
    EXECUTION,
    FALLING_TOWER,
    GENERATE_CONFIGURATIONS,
    HEIGHT_ESTIMATION,
    INFORMATION_GATHERING,
    PLAN_AND_EXECUTE,
    SELECT_CONFIGURATION,
    TaskInstance,
)

logger = get_logger(__name__)

RequestLog = Callable[[dict], None]


class Role(str, Enum):
    SYSTEM = "system"
    ENVIRONMENT = "environment"
    AGENT = "agent"


# 채팅 API 역할 이름
_CHAT_ROLES = {Role.SYSTEM: "system", Role.ENVIRONMENT: "user", Role.AGENT: "assistant"}


@dataclass(frozen=True)
class TranscriptEntry:
    role: Role
    text: str
    timestamp: Optional[float] = None
    observation: Optional[dict] = None
    usage: Optional[dict] = None

    def to_dict(self) -> dict:
        data = {"role": self.role.value, "text": self.text}
        if self.timestamp is not None:
            data["timestamp"] = self.timestamp
        if self.observation is not None:
            data["observation"] = self.observation
        if self.usage is not None:
            data["usage"] = self.usage
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "TranscriptEntry":
        return cls(
            role=Role(data["role"]),
            text=data["text"],
            timestamp=data.get("timestamp"),
            observation=data.get("observation"),
            usage=data.get("usage"),
        )


class Transcript:
    """
    에피소드 하나의 대화 기록 (추가만 가능)

    시스템 메시지와 첫 작업 설명 이후에는 환경과 에이전트가 번갈아 말합니다.
    """

    def __init__(self, metadata: Optional[Dict[str, object]] = None):
        self.metadata: Dict[str, object] = dict(metadata or {})
        self._entries: List[TranscriptEntry] = []

    @property
    def entries(self) -> Tuple[TranscriptEntry, ...]:
        return tuple(self._entries)

    @property
    def last_role(self) -> Optional[Role]:
        return self._entries[-1].role if self._entries else None

    def __len__(self) -> int:
        return len(self._entries)

    def append(self, entry: TranscriptEntry) -> None:
        """
        순서 규칙을 확인한 뒤 항목을 추가합니다.

        Raises:
            HarnessError: 시스템 메시지로 시작하지 않거나 같은 역할이 연속될 때 발생
        """
        last = self.last_role
        if last is None:
            valid = entry.role is Role.SYSTEM
        elif last is Role.SYSTEM:
            valid = entry.role is Role.ENVIRONMENT
        else:
            valid = entry.role is not Role.SYSTEM and entry.role is not last
        if not valid:
            raise HarnessError(
                f"트랜스크립트 순서 위반: {last.value if last else '시작'} 다음에 {entry.role.value}"
            )
        self._entries.append(entry)

    def add_system(self, text: str) -> None:
        self.append(TranscriptEntry(Role.SYSTEM, text))

    def add_environment(
        self, text: str, observation: Optional[Observation] = None, timestamp: Optional[float] = None
    ) -> None:
        payload = observation.to_dict() if observation is not None else None
        self.append(TranscriptEntry(Role.ENVIRONMENT, text, timestamp, payload))

    def add_agent(self, text: str, timestamp: Optional[float] = None, usage: Optional[dict] = None) -> None:
        self.append(TranscriptEntry(Role.AGENT, text, timestamp, usage=usage))

    def last_observation(self) -> Optional[Observation]:
        """가장 최근의 구조화된 관측 (형식 안내 메시지는 건너뜀)"""
        for entry in reversed(self._entries):
            if entry.role is Role.ENVIRONMENT and entry.observation is not None:
                return Observation.from_dict(entry.observation)
        return None

    def agent_messages(self) -> List[str]:
        return [e.text for e in self._entries if e.role is Role.AGENT]

    def to_messages(self) -> List[Dict[str, str]]:
        """채팅 API용 메시지 목록 (system / user / assistant)"""
        return [{"role": _CHAT_ROLES[e.role], "content": e.text} for e in self._entries]

    def to_records(self) -> List[dict]:
        return [{"type": "meta", **self.metadata}] + [e.to_dict() for e in self._entries]

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "Transcript":
        records = list(records)
        metadata = {}
        if records and records[0].get("type") == "meta":
            metadata = {k: v for k, v in records[0].items() if k != "type"}
            records = records[1:]
        transcript = cls(metadata)
        for data in records:
            transcript.append(TranscriptEntry.from_dict(data))
        return transcript


class NoisyProfile(BaseModel):
    """
    스크립트 에이전트의 능력 수준

    oracle은 measurements=k, 나머지는 오차 없는 프로필입니다.
    """

    model_config = ConfigDict(frozen=True)

    measurements: int = Field(default=8, ge=1)
    config_recall: float = Field(default=1.0, gt=0.0, le=1.0)
    evaluation_noise: float = Field(default=0.0, ge=0.0)
    selection_slip: float = Field(default=0.0, ge=0.0, le=1.0)
    give_up_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    max_rebuilds: int = Field(default=3, ge=0)


class AgentHandle(ABC):
    """
    에이전트 공통 인터페이스

    에피소드마다 새 인스턴스를 만들어 한 에피소드에서만 사용합니다.
    """

    kind: str = "scripted"
    deterministic: bool = True

    def __init__(self, agent_id: str, behavior: Optional[Dict[str, object]] = None):
        self.id = agent_id
        self.behavior: Dict[str, object] = dict(behavior or {})
        self.instance: Optional[TaskInstance] = None
        self.rng: Optional[np.random.Generator] = None
        self.request_log: Optional[RequestLog] = None
        self.last_usage: Optional[dict] = None

    def start(
        self,
        instance: TaskInstance,
        rng: np.random.Generator,
        request_log: Optional[RequestLog] = None,
    ) -> None:
        """에피소드를 시작합니다. 하위 클래스는 에피소드 상태를 여기서 초기화합니다."""
        self.instance = instance
        self.rng = rng
        self.request_log = request_log
        self.last_usage = None

    @abstractmethod
    def respond(self, transcript: Transcript) -> str:
        """환경 메시지로 끝나는 트랜스크립트에 대한 다음 메시지"""


def next_message(agent: AgentHandle, transcript: Transcript) -> str:
    """
    에이전트의 다음 메시지(추론 + 행동 태그)를 받습니다.

    Raises:
        HarnessError: 트랜스크립트가 환경 메시지로 끝나지 않을 때 발생
    """
    if transcript.last_role is not Role.ENVIRONMENT:
        raise HarnessError("에이전트 차례가 아닙니다: 트랜스크립트가 환경 메시지로 끝나야 합니다.")
    return agent.respond(transcript)


def _view_state(instance: TaskInstance, obs: Optional[Observation]) -> WorldState:
    # 구조만 필요하므로 높이는 0으로 채움
    heights = dict.fromkeys(instance.blocks, 0.0)
    if obs is None:
        return WorldState(heights=heights, towers=tuple((b,) for b in instance.blocks))
    return WorldState(heights=heights, towers=obs.towers, holding=obs.holding)


def plan_next_move(
    towers: Towers, holding: Optional[str], target: Configuration
) -> Optional[Action]:
    """
    현재 배치에서 목표 구성을 향한 다음 조작 행동을 결정합니다.

    교란으로 배치가 어긋나도 매 턴 현재 상태에서 다시 계획하므로 스스로 복구합니다.

    Args:
        towers (Towers): 현재 스택 목록 (아래에서 위)
        holding (str, optional): 손에 든 블록
        target (Configuration): 목표 구성

    Returns:
        Optional[Action]: 다음 행동. 목표가 완성되었으면 None
    """
    desired = [list(t) for t in target.towers]
    bottoms = {d[0]: d for d in desired}

    def correct_prefix(stack: Sequence[str]) -> int:
        plan = bottoms.get(stack[0])
        if plan is None:
            return 0
        length = 0
        while length < min(len(stack), len(plan)) and stack[length] == plan[length]:
            length += 1
        return length

    stacks = [list(s) for s in towers if s]
    prefixes = {s[0]: correct_prefix(s) for s in stacks}

    if holding is not None:
        for plan in desired:
            if holding == plan[0]:
                return Action.put_down(holding)
            for stack in stacks:
                p = prefixes[stack[0]]
                if stack[0] == plan[0] and p == len(stack) and p < len(plan) and plan[p] == holding:
                    return Action.stack(holding, stack[-1])
        return Action.put_down(holding)

    # 올바른 접두부 위에 잘못 쌓인 블록부터 내립니다
    for stack in stacks:
        if len(stack) > 1 and prefixes[stack[0]] < len(stack):
            return Action.pick_up(stack[-1])

    for plan in desired:
        base = next((s for s in stacks if s[0] == plan[0]), None)
        p = prefixes[base[0]] if base is not None else 0
        if p < len(plan):
            return Action.pick_up(plan[p])
    return None


def choose_configuration(
    heights: Mapping[str, float],
    recall: float,
    evaluation_noise: float,
    slip: float,
    rng: np.random.Generator,
) -> Configuration:
    """
    구성 일부를 떠올리고, 잡음 섞인 평가로 고른 뒤, 확률 slip으로 다른 구성을 선택합니다.

    Args:
        heights (Mapping[str, float]): 에이전트가 믿는 블록 높이
        recall (float): 떠올리는 구성의 비율
        evaluation_noise (float): 평가 오차 표준편차 (cm)
        slip (float): 선택 실수 확률
        rng (np.random.Generator): 에이전트 난수 생성기

    Returns:
        Configuration: 선택한 구성
    """
    configs = enumerate_configurations(heights)
    total = len(configs)
    m = min(total, max(1, int(round(recall * total))))
    conceived = np.sort(rng.choice(total, size=m, replace=False))
    scores = np.array([configs[i].lowest(heights) for i in conceived])
    if evaluation_noise > 0:
        scores = scores + rng.normal(0.0, evaluation_noise, size=m)
    chosen = int(conceived[int(np.argmax(scores))])
    if slip > 0 and total > 1 and rng.random() < slip:
        others = [i for i in range(total) if i != chosen]
        chosen = others[int(rng.integers(len(others)))]
    return configs[chosen]


class ScriptedAgent(AgentHandle):
    """
    능력 프로필로 움직이는 결정적 스크립트 에이전트

    복합 작업에서는 게으름 계수만큼 측정 횟수와 떠올리는 구성 수를 줄이고 평가 잡음을 키웁니다.
    """

    def __init__(
        self,
        agent_id: str,
        profile: NoisyProfile,
        laziness: float = 1.0,
        seed: Optional[int] = None,
    ):
        if laziness < 1:
            raise HarnessError(f"게으름 계수는 1 이상이어야 합니다: {laziness}")
        super().__init__(
            agent_id,
            {"profile": profile.model_dump(), "laziness": laziness, "seed": seed},
        )
        self.profile = profile
        self.laziness = laziness
        self.seed = seed

    def start(self, instance, rng, request_log=None) -> None:
        if self.seed is not None:
            rng = np.random.default_rng([self.seed, instance.seed, instance.n_blocks])
        super().start(instance, rng, request_log)
        self.readings: Dict[str, List[float]] = {b: [] for b in instance.blocks}
        self.plan: Optional[Configuration] = None
        self.pair: Optional[Tuple[str, str]] = None
        self.to_declare: Optional[List[Configuration]] = None
        self.collapses_seen = 0
        self.quitting = False
        self._seen_entries = 0

    @property
    def measurements(self) -> int:
        # 복합 작업에서는 0이 될 수 있습니다 (측정하지 않고 중간값을 가정)
        k = self.profile.measurements
        return int(round(k / self.laziness)) if self.instance.composite else k

    @property
    def recall(self) -> float:
        r = self.profile.config_recall
        return r / self.laziness if self.instance.composite else r

    @property
    def evaluation_noise(self) -> float:
        sd = self.profile.evaluation_noise
        return sd * self.laziness if self.instance.composite else sd

    def _consume(self, transcript: Transcript) -> Optional[Observation]:
        # 새로 들어온 환경 관측만 반영합니다
        latest = None
        for entry in transcript.entries[self._seen_entries:]:
            if entry.role is Role.ENVIRONMENT and entry.observation is not None:
                obs = Observation.from_dict(entry.observation)
                if obs.measurement is not None:
                    block, reading = obs.measurement
                    self.readings[block].append(reading)
                if obs.collapsed:
                    self.collapses_seen += 1
                latest = obs
        self._seen_entries = len(transcript)
        return latest or transcript.last_observation()

    def _estimate(self, block: str) -> float:
        if not self.readings[block]:
            return (settings.BLOCK_MIN_HEIGHT + settings.BLOCK_MAX_HEIGHT) / 2
        return float(np.mean(self.readings[block]))

    def _next_measurement(self, blocks: Sequence[str]) -> Optional[Action]:
        for block in blocks:
            if len(self.readings[block]) < self.measurements:
                return Action.measure(block)
        return None

    def respond(self, transcript: Transcript) -> str:
        obs = self._consume(transcript)
        phase = self.instance.phases[obs.phase if obs is not None else 0]
        action, reason = self._policy(phase.task_id, phase.target_block, obs)
        return f"{reason} {format_action(action)}"

    def _policy(
        self, task_id: str, target_block: Optional[str], obs: Optional[Observation]
    ) -> Tuple[Action, str]:
        instance = self.instance
        if task_id == HEIGHT_ESTIMATION:
            action = self._next_measurement([target_block])
            if action is not None:
                return action, f"Measuring block {target_block} again."
            return Action.height(self._estimate(target_block)), "I will report the average of my readings."

        if task_id == INFORMATION_GATHERING:
            action = self._next_measurement(instance.blocks)
            if action is not None:
                return action, "Measuring the blocks first."
            if self.pair is None:
                ranked = sorted(instance.blocks, key=lambda b: (-self._estimate(b), b))
                self.pair = (ranked[0], ranked[1])
            base, mover = self.pair
            view = _view_state(instance, obs)
            if view.holding == mover:
                return Action.stack(mover, base), "Placing it on the tallest block."
            if view.holding is not None:
                return Action.put_down(view.holding), "That is not the block I wanted."
            return Action.pick_up(mover), "Picking up the second tallest block."

        if task_id == GENERATE_CONFIGURATIONS:
            if self.to_declare is None:
                configs = enumerate_configurations(instance.shown_heights)
                total = len(configs)
                m = min(total, max(1, int(round(self.recall * total))))
                chosen = np.sort(self.rng.choice(total, size=m, replace=False))
                self.to_declare = [configs[i] for i in chosen]
            if self.to_declare:
                config = self.to_declare.pop(0)
                return Action.declare_towers(config.towers), "Here is another configuration."
            return Action.done(), "I cannot think of any more configurations."

        if task_id == EVALUATE_CONFIGURATION:
            value = instance.shown_configuration.highest(instance.shown_heights)
            if self.evaluation_noise > 0:
                value += float(self.rng.normal(0.0, self.evaluation_noise))
            return Action.height(max(value, 0.01)), "Adding up the taller tower."

        if task_id in (SELECT_CONFIGURATION, COGNITIVE_EFFORT):
            recall = 1.0 if task_id == SELECT_CONFIGURATION else self.recall
            noise = 0.0 if task_id == SELECT_CONFIGURATION else self.evaluation_noise
            config = choose_configuration(
                instance.shown_heights, recall, noise, self.profile.selection_slip, self.rng
            )
            return Action.declare_towers(config.towers), "This split keeps the lower tower highest."

        if task_id == EXECUTION:
            return self._build(instance.requested_configuration, obs)

        if task_id == PLAN_AND_EXECUTE:
            if self.plan is None:
                self.plan = self._choose(instance.shown_heights)
            return self._build(self.plan, obs)

        if task_id == COMBINED:
            action = self._next_measurement(instance.blocks)
            if action is not None:
                return action, "Measuring the blocks first."
            if self.plan is None:
                self.plan = self._choose({b: self._estimate(b) for b in instance.blocks})
            return self._build(self.plan, obs)

        if task_id == FALLING_TOWER:
            return self._falling_tower(obs)

        raise HarnessError(f"스크립트 에이전트가 지원하지 않는 작업입니다: {task_id}")

    def _choose(self, heights: Mapping[str, float]) -> Configuration:
        return choose_configuration(
            heights, self.recall, self.evaluation_noise, self.profile.selection_slip, self.rng
        )

    def _build(self, target: Configuration, obs: Optional[Observation]) -> Tuple[Action, str]:
        view = _view_state(self.instance, obs)
        action = plan_next_move(view.towers, view.holding, target)
        if action is None:
            return Action.done(), f"The towers {target} are built."
        return action, f"Working towards {target}."

    def _falling_tower(self, obs: Optional[Observation]) -> Tuple[Action, str]:
        view = _view_state(self.instance, obs)
        if obs is not None and obs.collapsed and not self.quitting:
            gave_up = self.rng.random() < self.profile.give_up_prob
            if gave_up or self.collapses_seen > self.profile.max_rebuilds:
                self.quitting = True
        if self.quitting:
            return Action.done(), "I will stop here."

        stacks = sorted(view.towers, key=lambda s: (-len(s), s[0]))
        main = stacks[0]
        if view.holding is not None:
            return Action.stack(view.holding, main[-1]), "Adding it to the tower."
        if len(stacks) == 1:
            return Action.done(), "Every block is in the tower."
        return Action.pick_up(stacks[1][-1]), "Taking the next block."


class RandomAgent(AgentHandle):
    """
    무작위 기준선 에이전트

    매 턴 현재 합법 행동 중 하나를 균등하게 고릅니다. Plan and Execute와 Combined에서는
    매 턴 조작을 고르지 않고, 처음 응답할 때 모든 두 탑 구성 중 하나를 균등하게 골라
    그 구성을 끝까지 쌓습니다. 따라서 무작위 기준 수익은 무작위 구성의 기대 수익입니다.

    형식 오류 제외는 재촉 메시지 횟수가 아니라 낭비된 스텝 수로 셉니다.
    해석할 수 없는 응답이 MAX_WASTED_STEPS(3)번 나오면 에피소드가 제외되며,
    이 에이전트는 항상 유효한 행동을 내므로 그 경로에 들어가지 않습니다.
    """

    def __init__(self, agent_id: str = "random", seed: Optional[int] = None):
        super().__init__(agent_id, {"seed": seed})
        self.seed = seed

    def start(self, instance, rng, request_log=None) -> None:
        if self.seed is not None:
            rng = np.random.default_rng([self.seed, instance.seed, instance.n_blocks])
        super().start(instance, rng, request_log)
        self.target: Optional[Configuration] = None

    def _random_configuration(self) -> Configuration:
        configs = enumerate_configurations(self.instance.blocks)
        return configs[int(self.rng.integers(len(configs)))]

    def respond(self, transcript: Transcript) -> str:
        obs = transcript.last_observation()
        phase = self.instance.phases[obs.phase if obs is not None else 0]
        if phase.task_id in (PLAN_AND_EXECUTE, COMBINED):
            if self.target is None:
                self.target = self._random_configuration()
            view = _view_state(self.instance, obs)
            action = plan_next_move(view.towers, view.holding, self.target) or Action.done()
            return f"Random choice. {format_action(action)}"

        view = _view_state(self.instance, obs)
        candidates: List[Action] = []
        allowed = phase.allowed
        if ActionKind.MEASURE in allowed:
            candidates.extend(Action.measure(b) for b in self.instance.blocks)
        if allowed & {ActionKind.PICK_UP, ActionKind.STACK, ActionKind.PUT_DOWN}:
            candidates.extend(legal_manipulations(view))
        if ActionKind.TOWERS in allowed:
            candidates.append(Action.declare_towers(self._random_configuration().towers))
        if ActionKind.HEIGHT in allowed:
            low = settings.BLOCK_MIN_HEIGHT
            high = settings.BLOCK_MAX_HEIGHT * (self.instance.n_blocks - 1)
            candidates.append(Action.height(float(self.rng.uniform(low, high))))
        if ActionKind.DONE in allowed:
            candidates.append(Action.done())
        action = candidates[int(self.rng.integers(len(candidates)))]
        return f"Random choice. {format_action(action)}"


class ReplayAgent(AgentHandle):
    """
    저장된 트랜스크립트의 에이전트 메시지를 순서대로 다시 보냅니다.
    """

    kind = "replay"

    def __init__(self, stored: Transcript, agent_id: Optional[str] = None):
        super().__init__(agent_id or str(stored.metadata.get("agent_id", "replay")))
        self._messages = stored.agent_messages()
        self._usages = [e.usage for e in stored.entries if e.role is Role.AGENT]
        self._cursor = 0

    def respond(self, transcript: Transcript) -> str:
        if self._cursor >= len(self._messages):
            raise RemoteAgentError("재생할 에이전트 메시지가 더 이상 없습니다.")
        message = self._messages[self._cursor]
        self.last_usage = self._usages[self._cursor]
        self._cursor += 1
        return message


class RateLimiter:
    """
    공급자별 요청 속도 제한기 (스레드 안전)

    여러 에피소드가 같은 인스턴스를 공유합니다.
    """

    def __init__(self, requests_per_minute: float = settings.REQUESTS_PER_MINUTE):
        if requests_per_minute <= 0:
            raise HarnessError(f"분당 요청 수는 0보다 커야 합니다: {requests_per_minute}")
        self.interval = 60.0 / requests_per_minute
        self._next_slot = 0.0
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """다음 요청 시점까지 기다리고, 기다린 시간(초)을 반환합니다."""
        with self._lock:
            now = time.monotonic()
            wait = max(0.0, self._next_slot - now)
            self._next_slot = max(now, self._next_slot) + self.interval
        if wait > 0:
            time.sleep(wait)
        return wait


_rate_limiters: Dict[str, RateLimiter] = {}
_rate_limiters_lock = threading.Lock()


def shared_rate_limiter(provider: str, requests_per_minute: float) -> RateLimiter:
    """공급자 이름별로 하나의 RateLimiter를 공유합니다."""
    with _rate_limiters_lock:
        limiter = _rate_limiters.get(provider)
        if limiter is None:
            limiter = _rate_limiters[provider] = RateLimiter(requests_per_minute)
        return limiter


class RemoteAgent(AgentHandle):
    """
    채팅 API 에이전트의 기반 클래스

    요청 본문은 보내기 전에 request_log로 먼저 기록됩니다.
    """

    kind = "remote"
    deterministic = False

    def __init__(
        self,
        agent_id: str,
        model: str,
        temperature: Optional[float] = None,
        rate_limiter: Optional[RateLimiter] = None,
        behavior: Optional[Dict[str, object]] = None,
    ):
        super().__init__(agent_id, {"model": model, "temperature": temperature, **(behavior or {})})
        self.model = model
        self.temperature = temperature
        self.rate_limiter = rate_limiter

    @abstractmethod
    def build_request(self, messages: List[Dict[str, str]]) -> dict:
        """공급자별 요청 본문"""

    @abstractmethod
    def send(self, request: dict) -> Tuple[str, Optional[dict]]:
        """요청을 보내고 (응답 텍스트, 토큰 사용량)을 반환합니다. 재시도는 하위 클래스가 처리합니다."""

    def respond(self, transcript: Transcript) -> str:
        request = self.build_request(transcript.to_messages())
        if self.request_log is not None:
            self.request_log({"type": "request", "body": request})
        if self.rate_limiter is not None:
            waited = self.rate_limiter.acquire()
            if waited:
                logger.debug("%s: 요청 속도 제한으로 %.2f초 대기", self.id, waited)
        text, usage = self.send(request)
        self.last_usage = usage
        if self.request_log is not None:
            self.request_log({"type": "response", "text": text, "usage": usage})
        return text


def make_random_agent(seed: Optional[int] = None) -> RandomAgent:
    """균등 무작위 기준선 에이전트"""
    return RandomAgent("random" if seed is None else f"random-{seed}", seed=seed)


def make_oracle_agent(k: int = 20) -> ScriptedAgent:
    """
    블록마다 정확히 k번 측정하고 나머지 능력은 오차 없는 오라클 에이전트

    Args:
        k (int): 블록당 측정 횟수 (1 이상)

    Returns:
        ScriptedAgent: 오라클 에이전트
    """
    if k < 1:
        raise HarnessError(f"측정 횟수는 1 이상이어야 합니다: {k}")
    return ScriptedAgent(f"oracle-k{k}", NoisyProfile(measurements=k))


def make_noisy_agent(profile: NoisyProfile, laziness: float = 1.0) -> ScriptedAgent:
    """
    하위 작업에서는 프로필대로, 복합 작업에서는 게으름 계수만큼 덜 애쓰는 에이전트

    Args:
        profile (NoisyProfile): 능력 프로필
        laziness (float): 게으름 계수 (1 이상)

    Returns:
        ScriptedAgent: 잡음 에이전트
    """
    return ScriptedAgent(f"noisy-k{profile.measurements}-l{laziness:g}", profile, laziness=laziness)
