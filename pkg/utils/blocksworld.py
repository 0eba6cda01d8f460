"""
Blocksworld 상태 기계 모듈

블록의 실제 높이는 에이전트에게 숨겨져 있으며, 측정 행동은 잡음이 섞인 값을 반환합니다.
행동 교란(perturbation)과 주의 분산(distraction) 채널은 서로 독립된 난수 스트림을 사용합니다.
"""
from __future__ import annotations

import dataclasses
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config.settings import settings
from utils.errors import ConfigurationError, EpisodeTerminatedError

BLOCK_IDS = string.ascii_lowercase
Towers = Tuple[Tuple[str, ...], ...]


class ActionKind(str, Enum):
    MEASURE = "measure"
    PICK_UP = "pick up"
    STACK = "stack"
    PUT_DOWN = "put down"
    TOWERS = "towers"
    HEIGHT = "height"
    DONE = "done"


MANIPULATIONS: FrozenSet[ActionKind] = frozenset(
    {ActionKind.PICK_UP, ActionKind.STACK, ActionKind.PUT_DOWN}
)


@dataclass(frozen=True)
class Action:
    """
    에이전트가 태그로 출력한 하나의 행동

    raw_text와 perturbed_from은 비교에서 제외됩니다.
    """

    kind: ActionKind
    block: Optional[str] = None
    target: Optional[str] = None
    towers: Optional[Towers] = None
    value: Optional[float] = None
    raw_text: str = field(default="", compare=False)
    perturbed_from: Optional["Action"] = field(default=None, compare=False, repr=False)

    @classmethod
    def measure(cls, block: str) -> "Action":
        return cls(ActionKind.MEASURE, block=block)

    @classmethod
    def pick_up(cls, block: str) -> "Action":
        return cls(ActionKind.PICK_UP, block=block)

    @classmethod
    def stack(cls, block: str, target: str) -> "Action":
        return cls(ActionKind.STACK, block=block, target=target)

    @classmethod
    def put_down(cls, block: str) -> "Action":
        return cls(ActionKind.PUT_DOWN, block=block)

    @classmethod
    def declare_towers(cls, towers: Sequence[Sequence[str]]) -> "Action":
        return cls(ActionKind.TOWERS, towers=tuple(tuple(t) for t in towers))

    @classmethod
    def height(cls, value: float, block: Optional[str] = None) -> "Action":
        return cls(ActionKind.HEIGHT, block=block, value=float(value))

    @classmethod
    def done(cls) -> "Action":
        return cls(ActionKind.DONE)

    @property
    def referenced_blocks(self) -> Tuple[str, ...]:
        """행동이 참조하는 블록 id 목록"""
        refs = [b for b in (self.block, self.target) if b is not None]
        if self.towers:
            refs.extend(b for tower in self.towers for b in tower)
        return tuple(refs)

    def describe(self) -> str:
        if self.kind is ActionKind.STACK:
            return f"stack {self.block} on {self.target}"
        if self.kind is ActionKind.TOWERS:
            return "towers " + "; ".join(f"[{', '.join(t)}]" for t in self.towers or ())
        if self.kind is ActionKind.HEIGHT:
            return f"height {self.value:.2f}cm"
        if self.block is not None:
            return f"{self.kind.value} {self.block}"
        return self.kind.value


class NoiseConfig(BaseModel):
    """측정 잡음과 교란/주의 분산 확률 설정"""

    model_config = ConfigDict(frozen=True)

    measurement_noise: float = Field(default=settings.MEASUREMENT_NOISE, ge=0.0)
    perturbation_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    distraction_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    # None이면 측정값을 반올림하지 않습니다 (민감도 분석용)
    measurement_decimals: Optional[int] = Field(default=settings.MEASUREMENT_DECIMALS, ge=0)


@dataclass(frozen=True)
class EpisodeStreams:
    """
    에피소드 하나의 독립 난수 스트림 묶음

    한 채널을 켜거나 꺼도 다른 채널의 난수열은 바뀌지 않습니다.
    """

    heights: np.random.Generator
    measurement: np.random.Generator
    perturbation: np.random.Generator
    distraction: np.random.Generator
    task: np.random.Generator
    agent: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int, n_blocks: int) -> "EpisodeStreams":
        """
        루트 시드와 블록 수로부터 자식 스트림을 생성합니다.

        Args:
            seed (int): 에피소드 루트 시드
            n_blocks (int): 블록 수 (같은 시드라도 블록 수마다 다른 높이)

        Returns:
            EpisodeStreams: 자식 난수 생성기 묶음
        """
        children = np.random.SeedSequence([int(seed), int(n_blocks)]).spawn(6)
        return cls(*(np.random.default_rng(child) for child in children))


@dataclass(frozen=True)
class WorldState:
    """
    Blocksworld 상태

    towers의 각 스택은 아래에서 위 순서이며, 테이블 위의 블록은 길이 1인 스택입니다.
    """

    heights: Dict[str, float]
    towers: Towers
    holding: Optional[str] = None
    step: int = 0
    streams: Optional[EpisodeStreams] = field(default=None, compare=False, repr=False)
    declared_heights: Tuple[float, ...] = ()
    declared_towers: Tuple[Towers, ...] = ()
    done: bool = False
    terminal: bool = False
    measurement_counts: Dict[str, int] = field(default_factory=dict)
    perturbations: int = 0
    distractions: int = 0
    collapses: int = 0
    rebuilds: int = 0
    stacked_since_collapse: bool = False
    phase: int = 0

    @property
    def block_ids(self) -> Tuple[str, ...]:
        return tuple(sorted(self.heights))

    def clear_blocks(self) -> Tuple[str, ...]:
        """위에 아무것도 없는 블록 (각 스택의 맨 위)"""
        return tuple(sorted(stack[-1] for stack in self.towers if stack))

    def stack_height(self, stack: Sequence[str]) -> float:
        return float(sum(self.heights[b] for b in stack))

    def tallest_stack_height(self) -> float:
        return max((self.stack_height(s) for s in self.towers), default=0.0)


@dataclass(frozen=True)
class Observation:
    """행동 적용 후 환경이 에이전트에게 돌려주는 응답"""

    status_text: str
    measurement: Optional[Tuple[str, float]] = None
    distraction: Optional[str] = None
    terminal: bool = False
    towers: Towers = ()
    holding: Optional[str] = None
    phase: int = 0
    collapsed: bool = False
    perturbed: bool = False

    def to_dict(self) -> dict:
        return {
            "status_text": self.status_text,
            "measurement": list(self.measurement) if self.measurement else None,
            "distraction": self.distraction,
            "terminal": self.terminal,
            "towers": [list(t) for t in self.towers],
            "holding": self.holding,
            "phase": self.phase,
            "collapsed": self.collapsed,
            "perturbed": self.perturbed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Observation":
        measurement = data.get("measurement")
        return cls(
            status_text=data["status_text"],
            measurement=(measurement[0], float(measurement[1])) if measurement else None,
            distraction=data.get("distraction"),
            terminal=bool(data.get("terminal", False)),
            towers=tuple(tuple(t) for t in data.get("towers", [])),
            holding=data.get("holding"),
            phase=int(data.get("phase", 0)),
            collapsed=bool(data.get("collapsed", False)),
            perturbed=bool(data.get("perturbed", False)),
        )


def sample_heights(n: int, rng: np.random.Generator) -> Dict[str, float]:
    """
    블록 높이를 [5, 10] cm 균등분포에서 독립적으로 추출합니다.

    Args:
        n (int): 블록 수 (3~15)
        rng (np.random.Generator): 높이 전용 난수 생성기

    Returns:
        Dict[str, float]: 블록 id -> 실제 높이(cm)

    Raises:
        ConfigurationError: 블록 수가 지원 범위를 벗어났을 때 발생
    """
    if not settings.MIN_BLOCKS <= n <= settings.MAX_BLOCKS:
        raise ConfigurationError(
            f"지원하지 않는 블록 수입니다: {n} "
            f"(허용 범위 {settings.MIN_BLOCKS}~{settings.MAX_BLOCKS})"
        )
    values = rng.uniform(settings.BLOCK_MIN_HEIGHT, settings.BLOCK_MAX_HEIGHT, size=n)
    return {BLOCK_IDS[i]: float(v) for i, v in enumerate(values)}


def initial_state(heights: Dict[str, float], streams: Optional[EpisodeStreams] = None) -> WorldState:
    """모든 블록이 테이블 위에 놓인 초기 상태를 만듭니다."""
    blocks = sorted(heights)
    return WorldState(
        heights=dict(heights),
        towers=tuple((b,) for b in blocks),
        streams=streams,
        measurement_counts={b: 0 for b in blocks},
    )


def measure(state: WorldState, block: str, noise: Optional[NoiseConfig] = None) -> float:
    """
    블록 높이를 한 번 측정합니다. 측정값 ~ N(h, 0.1h)

    Args:
        state (WorldState): 현재 상태 (측정 스트림이 전진합니다)
        block (str): 측정할 블록 id
        noise (NoiseConfig, optional): 잡음 설정. 기본값은 NoiseConfig()

    Returns:
        float: 측정값 (cm, 기본 소수점 2자리)
    """
    if block not in state.heights:
        raise ConfigurationError(f"알 수 없는 블록입니다: {block}")
    if state.streams is None:
        raise ConfigurationError("측정에는 난수 스트림이 필요합니다.")
    noise = noise or NoiseConfig()
    h = state.heights[block]
    reading = float(state.streams.measurement.normal(h, noise.measurement_noise * h))
    if noise.measurement_decimals is not None:
        reading = round(reading, noise.measurement_decimals)
    return reading


_MEASUREMENT_PATTERN = re.compile(r"^\s*([a-z])\s*:\s*(-?\d+(?:\.\d+)?)\s*cm\s*$", re.IGNORECASE)


def format_measurement(block: str, reading: float) -> str:
    return f"{block}: {reading:.2f}cm"


def parse_measurement(text: str) -> Tuple[str, float]:
    """'a: 9.65cm' 형식의 측정 문자열을 (블록, 값)으로 되돌립니다."""
    match = _MEASUREMENT_PATTERN.match(text)
    if not match:
        raise ValueError(f"측정 형식이 아닙니다: {text!r}")
    return match.group(1).lower(), float(match.group(2))


def describe_state(towers: Towers, holding: Optional[str]) -> str:
    """에이전트에게 보여줄 현재 배치 설명"""
    stacks = "; ".join(f"[{', '.join(stack)}]" for stack in towers)
    hand = f"block {holding}" if holding else "nothing"
    return f"Current state (bottom to top): {stacks}. You are holding {hand}."


def legal_manipulations(state: WorldState) -> List[Action]:
    """
    지금 적용 가능한 조작 행동(pick up / stack / put down) 목록

    Args:
        state (WorldState): 현재 상태

    Returns:
        List[Action]: 결정적 순서로 정렬된 합법 행동
    """
    if state.holding is not None:
        held = state.holding
        return [Action.put_down(held)] + [Action.stack(held, top) for top in state.clear_blocks()]
    return [Action.pick_up(top) for top in state.clear_blocks()]


def _validate_towers(state: WorldState, towers: Towers) -> Optional[str]:
    placed = [b for tower in towers for b in tower]
    if len(towers) != 2 or any(len(t) == 0 for t in towers):
        return "A configuration must consist of exactly two non-empty towers."
    if sorted(placed) != sorted(state.heights):
        return "A configuration must place every block in exactly one of the two towers."
    return None


def apply_action(
    state: WorldState,
    action: Action,
    noise: Optional[NoiseConfig] = None,
    *,
    allowed: Optional[FrozenSet[ActionKind]] = None,
    stop: Optional[Callable[[WorldState], bool]] = None,
) -> Tuple[WorldState, Observation]:
    """
    행동 하나를 상태에 적용합니다. 불법 행동은 배치를 바꾸지 않고 설명 메시지만 돌려줍니다.

    Args:
        state (WorldState): 현재 상태
        action (Action): 적용할 행동 (교란이 있었다면 교란된 행동)
        noise (NoiseConfig, optional): 측정 잡음 설정
        allowed (FrozenSet[ActionKind], optional): 작업에서 허용된 행동 종류
        stop (Callable, optional): 종료 조건. 새 상태에 대해 True이면 terminal

    Returns:
        Tuple[WorldState, Observation]: 새 상태와 관측

    Raises:
        EpisodeTerminatedError: 이미 종료된 상태에 적용하려 할 때 발생
    """
    if state.terminal:
        raise EpisodeTerminatedError("종료된 에피소드에는 행동을 적용할 수 없습니다.")

    towers = [list(stack) for stack in state.towers]
    holding = state.holding
    updates: Dict[str, object] = {}
    measurement = None
    clear = set(state.clear_blocks())
    unknown = [b for b in action.referenced_blocks if b not in state.heights]

    if allowed is not None and action.kind not in allowed:
        message = f"The action '{action.kind.value}' is not available in this task."
    elif unknown:
        message = f"There is no block named {unknown[0]}."
    elif action.kind is ActionKind.MEASURE:
        reading = measure(state, action.block, noise)
        measurement = (action.block, reading)
        counts = dict(state.measurement_counts)
        counts[action.block] = counts.get(action.block, 0) + 1
        updates["measurement_counts"] = counts
        message = f"Measurement {format_measurement(action.block, reading)}"
    elif action.kind is ActionKind.PICK_UP:
        if holding is not None:
            message = f"You are already holding block {holding}."
        elif action.block not in clear:
            message = f"Block {action.block} is not clear, so it cannot be picked up."
        else:
            for stack in towers:
                if stack and stack[-1] == action.block:
                    stack.pop()
            towers = [s for s in towers if s]
            holding = action.block
            message = f"You picked up block {action.block}."
    elif action.kind is ActionKind.STACK:
        if holding != action.block:
            message = f"You are not holding block {action.block}."
        elif action.target == action.block or action.target not in clear:
            message = f"Block {action.target} is not clear, so nothing can be stacked on it."
        else:
            for stack in towers:
                if stack[-1] == action.target:
                    stack.append(action.block)
                    break
            holding = None
            updates["stacked_since_collapse"] = True
            message = f"You stacked block {action.block} on block {action.target}."
    elif action.kind is ActionKind.PUT_DOWN:
        if holding != action.block:
            message = f"You are not holding block {action.block}."
        else:
            towers.append([action.block])
            holding = None
            message = f"You put block {action.block} down on the table."
    elif action.kind is ActionKind.TOWERS:
        problem = _validate_towers(state, action.towers or ())
        if problem:
            message = problem
        else:
            updates["declared_towers"] = state.declared_towers + (action.towers,)
            message = f"Configuration recorded: {action.describe()[len('towers '):]}."
    elif action.kind is ActionKind.HEIGHT:
        if action.value is None or not np.isfinite(action.value) or action.value <= 0:
            message = "A height must be a positive number of centimetres."
        else:
            updates["declared_heights"] = state.declared_heights + (float(action.value),)
            message = f"Height estimate of {action.value:.2f}cm recorded."
    else:
        updates["done"] = True
        message = "You declared that you are done."

    new_towers = tuple(tuple(s) for s in towers)
    new_state = dataclasses.replace(
        state, towers=new_towers, holding=holding, step=state.step + 1, **updates
    )
    if action.perturbed_from is not None:
        new_state = dataclasses.replace(new_state, perturbations=new_state.perturbations + 1)
    terminal = bool(stop(new_state)) if stop is not None else False
    new_state = dataclasses.replace(new_state, terminal=terminal)

    observation = Observation(
        status_text=f"{message}\n{describe_state(new_towers, holding)}",
        measurement=measurement,
        terminal=terminal,
        towers=new_towers,
        holding=holding,
        phase=state.phase,
        perturbed=action.perturbed_from is not None,
    )
    return new_state, observation


def perturb_action(action: Action, state: WorldState, rng: np.random.Generator, p: float) -> Action:
    """
    확률 p로 조작 행동을 현재 합법인 조작 행동 중 하나로 바꿉니다.

    Done, Towers, 측정, 높이 선언은 교란 대상이 아닙니다.

    Args:
        action (Action): 에이전트가 의도한 행동
        state (WorldState): 현재 상태
        rng (np.random.Generator): 교란 전용 난수 생성기
        p (float): 교란 확률

    Returns:
        Action: 실제로 수행될 행동 (교란되면 perturbed_from에 원래 행동 보관)
    """
    if p <= 0 or action.kind not in MANIPULATIONS:
        return action
    if rng.random() >= p:
        return action
    candidates = legal_manipulations(state)
    if not candidates:
        return action
    chosen = candidates[int(rng.integers(len(candidates)))]
    return dataclasses.replace(chosen, raw_text=action.raw_text, perturbed_from=action)


def maybe_distract(
    obs: Observation, rng: np.random.Generator, corpus: Sequence[str], q: float
) -> Observation:
    """
    확률 q로 관측 메시지 뒤에 말뭉치 발췌문 하나를 덧붙입니다.

    Raises:
        ConfigurationError: q > 0인데 말뭉치가 비어 있을 때 발생
    """
    if q <= 0:
        return obs
    if not corpus:
        raise ConfigurationError("주의 분산 확률이 0보다 크지만 말뭉치가 비어 있습니다.")
    if rng.random() >= q:
        return obs
    excerpt = corpus[int(rng.integers(len(corpus)))]
    return dataclasses.replace(
        obs, status_text=f"{obs.status_text}\n\n{excerpt}", distraction=excerpt
    )


def load_distraction_corpus(path: Optional[Path] = None) -> Tuple[str, ...]:
    """
    빈 줄로 구분된 발췌문 말뭉치를 읽습니다.

    Args:
        path (Path, optional): 말뭉치 파일 경로. 기본값은 settings.DISTRACTION_CORPUS

    Returns:
        Tuple[str, ...]: 발췌문 목록
    """
    path = Path(path or settings.DISTRACTION_CORPUS)
    if not path.exists():
        raise ConfigurationError(f"주의 분산 말뭉치 파일이 존재하지 않습니다: {path}")
    text = path.read_text(encoding="utf-8")
    return tuple(p.strip() for p in re.split(r"\n\s*\n", text) if p.strip())
