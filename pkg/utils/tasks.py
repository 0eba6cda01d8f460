"""
작업 카탈로그 모듈

복합 작업 4개, 능력 하위 작업 5개, Falling Tower, 그리고 하위 작업 단계 진행(stepping) 대조 작업을 정의합니다.
각 작업은 프롬프트, 허용 행동, 잡음, 종료 조건, 보상 함수로 구성됩니다.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache, partial
from itertools import combinations
from pathlib import Path
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from config.settings import settings
from utils.blocksworld import (
    ActionKind,
    EpisodeStreams,
    NoiseConfig,
    Observation,
    WorldState,
    sample_heights,
)
from utils.errors import ConfigurationError
from utils.partition import (
    Configuration,
    distance_to_stacks,
    enumerate_configurations,
    optimal_configurations,
    distance,
    two_tower_return,
)

INFORMATION_GATHERING = "information-gathering"
COGNITIVE_EFFORT = "cognitive-effort"
PLAN_AND_EXECUTE = "plan-and-execute"
COMBINED = "combined"
HEIGHT_ESTIMATION = "height-estimation"
GENERATE_CONFIGURATIONS = "generate-configurations"
EVALUATE_CONFIGURATION = "evaluate-configuration"
SELECT_CONFIGURATION = "select-configuration"
EXECUTION = "execution"
FALLING_TOWER = "falling-tower"
STEPPING_INFORMATION_GATHERING = "stepping-information-gathering"
STEPPING_COMBINED = "stepping-combined"

COMPOSITE_TASKS = (INFORMATION_GATHERING, COGNITIVE_EFFORT, PLAN_AND_EXECUTE, COMBINED)
STEPPING_TASKS = (STEPPING_INFORMATION_GATHERING, STEPPING_COMBINED)
SUBTASKS = (
    HEIGHT_ESTIMATION,
    GENERATE_CONFIGURATIONS,
    EVALUATE_CONFIGURATION,
    SELECT_CONFIGURATION,
    EXECUTION,
)
# GD를 계산하는 작업 (stepping 작업은 대응하는 복합 작업과 같은 방식으로 분석)
ANALYZED_TASKS = COMPOSITE_TASKS + STEPPING_TASKS

REQUIRED_SUBTASKS: Dict[str, Tuple[str, ...]] = {
    INFORMATION_GATHERING: (HEIGHT_ESTIMATION,),
    COGNITIVE_EFFORT: (GENERATE_CONFIGURATIONS, EVALUATE_CONFIGURATION, SELECT_CONFIGURATION),
    PLAN_AND_EXECUTE: (
        GENERATE_CONFIGURATIONS,
        EVALUATE_CONFIGURATION,
        SELECT_CONFIGURATION,
        EXECUTION,
    ),
    COMBINED: SUBTASKS,
    STEPPING_INFORMATION_GATHERING: (HEIGHT_ESTIMATION,),
    STEPPING_COMBINED: SUBTASKS,
}

_MANIPULATE = frozenset({ActionKind.PICK_UP, ActionKind.STACK, ActionKind.PUT_DOWN, ActionKind.DONE})
_NOISY = NoiseConfig(
    perturbation_prob=settings.PERTURBATION_PROB,
    distraction_prob=settings.DISTRACTION_PROB,
)


class StatKind(str, Enum):
    ESTIMATION_ERROR = "estimation-error"
    CONFIGURATION_COUNT = "configuration-count"
    EVALUATION_ERROR = "evaluation-error"
    SELECTION_DISTANCE = "selection-distance"
    EXECUTION_DISTANCE = "execution-distance"
    MEASUREMENT_COUNT = "measurement-count"
    REBUILD_COUNT = "rebuild-count"


class RunStatus(str, Enum):
    COMPLETED = "completed"
    CAPPED = "capped"
    EXCLUDED = "excluded"
    FAILED = "failed"


class SubtaskStat(BaseModel):
    """에피소드 하나에서 추출한 하위 작업 통계 값"""

    kind: StatKind
    value: Optional[float] = None
    task_id: str
    n_blocks: int
    seed: int
    subject: Optional[str] = None
    missing: bool = False


class RunRecord(BaseModel):
    """
    시드가 정해진 에피소드 하나의 결과

    점수 계산에 필요한 값은 모두 이 기록에 들어 있어 트랜스크립트 없이 재계산할 수 있습니다.
    """

    task_id: str
    n_blocks: int
    seed: int
    agent_id: str
    prompt_variant: str = "neutral"
    heights: Dict[str, float]
    status: RunStatus = RunStatus.COMPLETED
    return_value: Optional[float] = None
    steps: int = 0
    wasted_steps: int = 0
    transcript: Optional[str] = None
    final_towers: List[List[str]] = Field(default_factory=list)
    holding: Optional[str] = None
    done: bool = False
    declared_heights: List[float] = Field(default_factory=list)
    declared_towers: List[List[List[str]]] = Field(default_factory=list)
    measurement_counts: Dict[str, int] = Field(default_factory=dict)
    target_block: Optional[str] = None
    shown_configuration: Optional[List[List[str]]] = None
    requested_configuration: Optional[List[List[str]]] = None
    threshold: Optional[float] = None
    perturbations: int = 0
    distractions: int = 0
    collapses: int = 0
    rebuilds: int = 0
    flags: List[str] = Field(default_factory=list)
    excluded_reason: Optional[str] = None
    stats: List[SubtaskStat] = Field(default_factory=list)

    @property
    def included(self) -> bool:
        return self.status is RunStatus.COMPLETED

    @property
    def cell(self) -> Tuple[str, int, int]:
        return self.task_id, self.n_blocks, self.seed

    def final_state(self) -> WorldState:
        """기록에서 최종 상태를 복원합니다 (난수 스트림 제외)."""
        return WorldState(
            heights=dict(self.heights),
            towers=tuple(tuple(t) for t in self.final_towers),
            holding=self.holding,
            step=self.steps,
            declared_heights=tuple(self.declared_heights),
            declared_towers=tuple(
                tuple(tuple(t) for t in towers) for towers in self.declared_towers
            ),
            done=self.done,
            terminal=True,
            measurement_counts=dict(self.measurement_counts),
            collapses=self.collapses,
            rebuilds=self.rebuilds,
        )


@lru_cache(maxsize=None)
def _read_prompt(path: Path) -> str:
    if not path.exists():
        raise ConfigurationError(f"프롬프트 파일이 존재하지 않습니다: {path}")
    return path.read_text(encoding="utf-8").strip()


class PromptLibrary:
    """
    버전별 프롬프트 텍스트 자산을 읽고 채워 넣는 클래스
    """

    def __init__(self, directory: Optional[Path] = None):
        """
        Args:
            directory (Path, optional): 프롬프트 디렉토리. 기본값은 settings.PROMPTS_DIR
        """
        self.directory = Path(directory or settings.PROMPTS_DIR)

    def text(self, name: str) -> str:
        return _read_prompt(self.directory / f"{name}.txt")

    def render(self, name: str, **slots) -> str:
        return self.text(name).format(**slots)

    def system_prompt(self, variant: str = "neutral") -> str:
        """시스템 메시지에 동기 부여 문장을 덧붙입니다."""
        if variant not in settings.PROMPT_VARIANTS:
            raise ConfigurationError(f"알 수 없는 프롬프트 변형입니다: {variant}")
        motivation = self.text(f"motivation_{variant}")
        system = self.text("system")
        return f"{system}\n\n{motivation}" if motivation else system

    def reminder(self) -> str:
        return self.text("reminder")


@dataclass(frozen=True)
class Phase:
    """
    에피소드의 한 단계

    stepping 작업만 여러 단계를 가지며, 나머지 작업은 단계가 하나입니다.
    """

    task_id: str
    prompt: str
    allowed: FrozenSet[ActionKind]
    noise: NoiseConfig
    stop: Callable[[WorldState], bool]
    target_block: Optional[str] = None
    followup: Optional[str] = None


@dataclass(frozen=True)
class TaskInstance:
    """시드와 블록 수가 정해진 작업 하나 (에이전트에게 보여줄 정보 포함)"""

    task_id: str
    n_blocks: int
    seed: int
    heights: Dict[str, float]
    phases: Tuple[Phase, ...]
    system_prompt: str
    prompt_variant: str = "neutral"
    max_steps: int = settings.DEFAULT_MAX_STEPS
    composite: bool = False
    shown_heights: Optional[Dict[str, float]] = None
    shown_configuration: Optional[Configuration] = None
    requested_configuration: Optional[Configuration] = None
    target_block: Optional[str] = None
    threshold: Optional[float] = None

    @property
    def blocks(self) -> Tuple[str, ...]:
        return tuple(sorted(self.heights))


@dataclass(frozen=True)
class TaskSpec:
    """
    작업 정의

    Args:
        id (str): 작업 id
        template (str): 프롬프트 자산 이름
        allowed (FrozenSet[ActionKind]): 허용 행동
        stop (Callable): 종료 조건
        noise (NoiseConfig): 전이 잡음
        max_steps (int): 최대 스텝 수
        composite (bool): 복합 작업 여부 (게으름 계수 적용 대상)
        shows_heights (bool): 프롬프트에 블록 높이를 보여주는지 여부
        declaration (ActionKind, optional): 종료 시 반드시 있어야 하는 선언
    """

    id: str
    template: str
    allowed: FrozenSet[ActionKind]
    stop: Callable[[WorldState], bool]
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    max_steps: int = settings.DEFAULT_MAX_STEPS
    composite: bool = False
    shows_heights: bool = False
    declaration: Optional[ActionKind] = None
    n_blocks: Optional[int] = None

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ConfigurationError(f"max_steps는 0보다 커야 합니다: {self.id}")


def _is_done(state: WorldState) -> bool:
    return state.done


def _two_block_tower_or_done(state: WorldState) -> bool:
    # 두 블록이 쌓이거나 Done 선언 시 종료
    return state.done or any(len(stack) >= 2 for stack in state.towers)


def _declared_heights_at_least(state: WorldState, count: int = 1) -> bool:
    return len(state.declared_heights) >= count


def _declared_towers(state: WorldState) -> bool:
    return len(state.declared_towers) > 0


TASKS: Dict[str, TaskSpec] = {
    INFORMATION_GATHERING: TaskSpec(
        id=INFORMATION_GATHERING,
        template="information_gathering",
        allowed=frozenset({ActionKind.MEASURE}) | _MANIPULATE,
        stop=_two_block_tower_or_done,
        composite=True,
    ),
    COGNITIVE_EFFORT: TaskSpec(
        id=COGNITIVE_EFFORT,
        template="cognitive_effort",
        allowed=frozenset({ActionKind.TOWERS}),
        stop=_declared_towers,
        composite=True,
        shows_heights=True,
        declaration=ActionKind.TOWERS,
    ),
    PLAN_AND_EXECUTE: TaskSpec(
        id=PLAN_AND_EXECUTE,
        template="plan_and_execute",
        allowed=_MANIPULATE,
        stop=_is_done,
        noise=_NOISY,
        composite=True,
        shows_heights=True,
    ),
    COMBINED: TaskSpec(
        id=COMBINED,
        template="combined",
        allowed=frozenset({ActionKind.MEASURE}) | _MANIPULATE,
        stop=_is_done,
        noise=_NOISY,
        composite=True,
    ),
    HEIGHT_ESTIMATION: TaskSpec(
        id=HEIGHT_ESTIMATION,
        template="height_estimation",
        allowed=frozenset({ActionKind.MEASURE, ActionKind.HEIGHT}),
        stop=_declared_heights_at_least,
        declaration=ActionKind.HEIGHT,
    ),
    GENERATE_CONFIGURATIONS: TaskSpec(
        id=GENERATE_CONFIGURATIONS,
        template="generate_configurations",
        allowed=frozenset({ActionKind.TOWERS, ActionKind.DONE}),
        stop=_is_done,
        shows_heights=True,
        declaration=ActionKind.TOWERS,
    ),
    EVALUATE_CONFIGURATION: TaskSpec(
        id=EVALUATE_CONFIGURATION,
        template="evaluate_configuration",
        allowed=frozenset({ActionKind.HEIGHT}),
        stop=_declared_heights_at_least,
        shows_heights=True,
        declaration=ActionKind.HEIGHT,
    ),
    SELECT_CONFIGURATION: TaskSpec(
        id=SELECT_CONFIGURATION,
        template="select_configuration",
        allowed=frozenset({ActionKind.TOWERS}),
        stop=_declared_towers,
        shows_heights=True,
        declaration=ActionKind.TOWERS,
    ),
    EXECUTION: TaskSpec(
        id=EXECUTION,
        template="execution",
        allowed=_MANIPULATE,
        stop=_is_done,
        noise=_NOISY,
    ),
    FALLING_TOWER: TaskSpec(
        id=FALLING_TOWER,
        template="falling_tower",
        allowed=_MANIPULATE,
        stop=_is_done,
        max_steps=settings.FALLING_TOWER_MAX_STEPS,
        n_blocks=settings.FALLING_TOWER_BLOCKS,
    ),
    STEPPING_INFORMATION_GATHERING: TaskSpec(
        id=STEPPING_INFORMATION_GATHERING,
        template="stepping_build_information_gathering",
        allowed=frozenset({ActionKind.MEASURE}) | _MANIPULATE,
        stop=_two_block_tower_or_done,
        composite=True,
    ),
    STEPPING_COMBINED: TaskSpec(
        id=STEPPING_COMBINED,
        template="stepping_build_combined",
        allowed=frozenset({ActionKind.MEASURE}) | _MANIPULATE,
        stop=_is_done,
        noise=_NOISY,
        composite=True,
    ),
}


def get_task(task_id: str) -> TaskSpec:
    """
    작업 id로 TaskSpec을 찾습니다.

    Raises:
        ConfigurationError: 알 수 없는 작업 id일 때 발생
    """
    try:
        return TASKS[task_id]
    except KeyError:
        raise ConfigurationError(
            f"알 수 없는 작업입니다: {task_id} (지원 작업: {', '.join(TASKS)})"
        ) from None


def block_count_for(task_id: str, n_blocks: int) -> int:
    """Falling Tower는 설정된 블록 수와 관계없이 항상 15개 블록을 사용합니다."""
    return get_task(task_id).n_blocks or n_blocks


def resolve_noise(spec: TaskSpec, overrides: Optional[Mapping[str, object]] = None) -> NoiseConfig:
    """
    작업 기본 잡음에 설정 파일의 값을 덮어씁니다.

    교란/주의 분산 확률은 원래 잡음이 있는 작업에만 적용됩니다.
    """
    if not overrides:
        return spec.noise
    values = {k: v for k, v in overrides.items() if v is not None}
    noisy = spec.noise.perturbation_prob > 0 or spec.noise.distraction_prob > 0
    if not noisy:
        values.pop("perturbation_prob", None)
        values.pop("distraction_prob", None)
    return spec.noise.model_copy(update=values)


def format_heights(heights: Mapping[str, float]) -> str:
    return ", ".join(f"{b}: {h:.2f}cm" for b, h in sorted(heights.items()))


def _format_configuration_list(heights: Mapping[str, float]) -> str:
    lines = []
    for config in enumerate_configurations(heights):
        first, second = config.tower_heights(heights)
        lines.append(f"- {config}: towers of {first:.2f}cm and {second:.2f}cm")
    return "\n".join(lines)


def instantiate(
    task_id: str,
    n_blocks: int,
    seed: int,
    streams: EpisodeStreams,
    *,
    prompts: Optional[PromptLibrary] = None,
    prompt_variant: str = "neutral",
    noise_overrides: Optional[Mapping[str, object]] = None,
    threshold: Optional[float] = None,
    max_steps: Optional[int] = None,
) -> TaskInstance:
    """
    시드와 블록 수에 맞는 작업 인스턴스를 만듭니다.

    Args:
        task_id (str): 작업 id
        n_blocks (int): 블록 수 (Falling Tower는 무시하고 15개)
        seed (int): 에피소드 시드
        streams (EpisodeStreams): 에피소드 난수 스트림 (heights, task 스트림 사용)
        prompts (PromptLibrary, optional): 프롬프트 자산
        prompt_variant (str): neutral / motivated / demotivated
        noise_overrides (Mapping, optional): 잡음 설정 덮어쓰기
        threshold (float, optional): Falling Tower 붕괴 높이 고정값
        max_steps (int, optional): 최대 스텝 수 덮어쓰기

    Returns:
        TaskInstance: 작업 인스턴스
    """
    spec = get_task(task_id)
    prompts = prompts or PromptLibrary()
    n_blocks = block_count_for(task_id, n_blocks)
    heights = sample_heights(n_blocks, streams.heights)
    blocks = sorted(heights)
    shown = {b: round(h, 2) for b, h in heights.items()}
    noise = resolve_noise(spec, noise_overrides)
    nudge = prompts.text("nudge")

    slots = {
        "n_blocks": n_blocks,
        "blocks": ", ".join(blocks),
        "heights": format_heights(shown),
        "nudge": nudge,
    }
    extra: Dict[str, object] = {}
    followup = None

    if task_id == HEIGHT_ESTIMATION:
        # 시드에 따라 블록을 순환하여 고르게 다룹니다
        extra["target_block"] = blocks[seed % n_blocks]
        slots["target_block"] = extra["target_block"]
    elif task_id == EVALUATE_CONFIGURATION:
        configs = enumerate_configurations(blocks)
        extra["shown_configuration"] = configs[int(streams.task.integers(len(configs)))]
        slots["configuration"] = str(extra["shown_configuration"])
    elif task_id == EXECUTION:
        configs = enumerate_configurations(blocks)
        extra["requested_configuration"] = configs[int(streams.task.integers(len(configs)))]
        slots["configuration"] = str(extra["requested_configuration"])
    elif task_id == SELECT_CONFIGURATION:
        slots["configurations"] = _format_configuration_list(shown)
    elif task_id == GENERATE_CONFIGURATIONS:
        followup = prompts.text("generate_followup")
    elif task_id == FALLING_TOWER:
        low, high = settings.FALLING_THRESHOLD_RANGE
        extra["threshold"] = float(threshold) if threshold is not None else float(streams.task.uniform(low, high))

    if task_id in STEPPING_TASKS:
        phases = []
        for i, block in enumerate(blocks):
            estimate = prompts.render("stepping_estimate", target_block=block)
            if i == 0:
                estimate = f"{prompts.render('stepping_intro', **slots)}\n{estimate}"
            phases.append(
                Phase(
                    task_id=HEIGHT_ESTIMATION,
                    prompt=estimate,
                    allowed=TASKS[HEIGHT_ESTIMATION].allowed,
                    noise=resolve_noise(TASKS[HEIGHT_ESTIMATION], noise_overrides),
                    stop=partial(_declared_heights_at_least, count=i + 1),
                    target_block=block,
                )
            )
        build_task = INFORMATION_GATHERING if task_id == STEPPING_INFORMATION_GATHERING else COMBINED
        phases.append(
            Phase(
                task_id=build_task,
                prompt=prompts.render(spec.template, **slots),
                allowed=spec.allowed,
                noise=noise,
                stop=spec.stop,
            )
        )
    else:
        phases = [
            Phase(
                task_id=task_id,
                prompt=prompts.render(spec.template, **slots),
                allowed=spec.allowed,
                noise=noise,
                stop=spec.stop,
                target_block=extra.get("target_block"),
                followup=followup,
            )
        ]

    return TaskInstance(
        task_id=task_id,
        n_blocks=n_blocks,
        seed=seed,
        heights=heights,
        phases=tuple(phases),
        system_prompt=prompts.system_prompt(prompt_variant),
        prompt_variant=prompt_variant,
        max_steps=max_steps or spec.max_steps,
        composite=spec.composite,
        shown_heights=shown if spec.shows_heights else None,
        **extra,
    )


def random_pair_expectation(heights: Mapping[str, float]) -> float:
    """무작위로 고른 두 블록 높이 합의 기댓값"""
    pairs = list(combinations(heights.values(), 2))
    return float(np.mean([a + b for a, b in pairs]))


def info_gathering_return(final: WorldState) -> float:
    """
    두 블록 탑의 실제 높이 합. 탑이 없으면 무작위 두 블록의 기댓값을 반환합니다.

    Args:
        final (WorldState): 종료 상태

    Returns:
        float: 보상 (cm)
    """
    for stack in final.towers:
        if len(stack) >= 2:
            return final.stack_height(stack)
    return random_pair_expectation(final.heights)


def built_configuration(towers: Sequence[Sequence[str]], holding: Optional[str]) -> Optional[Configuration]:
    """손이 비어 있고 정확히 두 스택이 서 있을 때만 구성으로 인정합니다."""
    stacks = [s for s in towers if s]
    if holding is not None or len(stacks) != 2:
        return None
    return Configuration.from_towers(stacks)


def _last_declared_configuration(record: RunRecord) -> Optional[Configuration]:
    if not record.declared_towers:
        return None
    return Configuration.from_towers(record.declared_towers[-1])


def _execution_distance(record: RunRecord) -> int:
    requested = Configuration.from_towers(record.requested_configuration)
    stacks = [list(s) for s in record.final_towers]
    if record.holding is not None:
        stacks.append([record.holding])
    return distance_to_stacks(requested, stacks)


def _evaluation_error(record: RunRecord) -> Optional[float]:
    if not record.declared_heights:
        return None
    shown = Configuration.from_towers(record.shown_configuration)
    return abs(record.declared_heights[-1] - shown.highest(record.heights))


def _estimation_error(record: RunRecord, block: str, index: int) -> Optional[float]:
    if len(record.declared_heights) <= index:
        return None
    return record.heights[block] - record.declared_heights[index]


def compute_return(record: RunRecord) -> Optional[float]:
    """
    기록의 최종 상태로부터 작업 보상을 계산합니다. 필요한 선언이 없으면 None.
    """
    task_id = record.task_id
    heights = record.heights
    if task_id in (INFORMATION_GATHERING, STEPPING_INFORMATION_GATHERING):
        return info_gathering_return(record.final_state())
    if task_id in (PLAN_AND_EXECUTE, COMBINED, STEPPING_COMBINED):
        return two_tower_return(built_configuration(record.final_towers, record.holding), heights)
    if task_id in (COGNITIVE_EFFORT, SELECT_CONFIGURATION):
        declared = _last_declared_configuration(record)
        return None if declared is None else declared.lowest(heights)
    if task_id == HEIGHT_ESTIMATION:
        error = _estimation_error(record, record.target_block, 0)
        return None if error is None else -abs(error)
    if task_id == GENERATE_CONFIGURATIONS:
        return _distinct_configuration_count(record) / len(enumerate_configurations(heights))
    if task_id == EVALUATE_CONFIGURATION:
        error = _evaluation_error(record)
        return None if error is None else -error
    if task_id == EXECUTION:
        return -float(_execution_distance(record))
    if task_id == FALLING_TOWER:
        return record.final_state().tallest_stack_height()
    raise ConfigurationError(f"알 수 없는 작업입니다: {task_id}")


def _distinct_configuration_count(record: RunRecord) -> int:
    return len({Configuration.from_towers(t) for t in record.declared_towers})


def extract_stats(record: RunRecord) -> List[SubtaskStat]:
    """
    기록에서 하위 작업 통계를 추출합니다.

    선언이 없으면 missing=True 인 통계를 하나 남깁니다.

    Args:
        record (RunRecord): 완료된 에피소드 기록

    Returns:
        List[SubtaskStat]: 통계 목록
    """
    base = {"task_id": record.task_id, "n_blocks": record.n_blocks, "seed": record.seed}
    stats: List[SubtaskStat] = []

    def add(kind: StatKind, value: Optional[float], subject: Optional[str] = None) -> None:
        stats.append(
            SubtaskStat(kind=kind, value=value, subject=subject, missing=value is None, **base)
        )

    task_id = record.task_id
    if task_id == HEIGHT_ESTIMATION:
        add(StatKind.ESTIMATION_ERROR, _estimation_error(record, record.target_block, 0), record.target_block)
    elif task_id in STEPPING_TASKS:
        for i, block in enumerate(sorted(record.heights)):
            add(StatKind.ESTIMATION_ERROR, _estimation_error(record, block, i), block)
    elif task_id == GENERATE_CONFIGURATIONS:
        count = _distinct_configuration_count(record)
        add(StatKind.CONFIGURATION_COUNT, float(count) if count else None)
    elif task_id == EVALUATE_CONFIGURATION:
        shown = Configuration.from_towers(record.shown_configuration)
        add(StatKind.EVALUATION_ERROR, _evaluation_error(record), str(shown))
    elif task_id == SELECT_CONFIGURATION:
        declared = _last_declared_configuration(record)
        value = None
        if declared is not None:
            value = float(min(distance(declared, c) for c in optimal_configurations(record.heights)))
        add(StatKind.SELECTION_DISTANCE, value, None if declared is None else str(declared))
    elif task_id == EXECUTION:
        requested = Configuration.from_towers(record.requested_configuration)
        value = float(_execution_distance(record)) if record.done else None
        add(StatKind.EXECUTION_DISTANCE, value, str(requested))
    elif task_id == FALLING_TOWER:
        add(StatKind.REBUILD_COUNT, float(record.rebuilds))

    if ActionKind.MEASURE in get_task(task_id).allowed:
        for block, count in sorted(record.measurement_counts.items()):
            add(StatKind.MEASUREMENT_COUNT, float(count), block)
    return stats


def apply_falling_tower(
    previous: WorldState, state: WorldState, obs: Observation, threshold: float
) -> Tuple[WorldState, Observation]:
    """
    가장 높은 스택이 붕괴 높이를 처음 넘으면 모든 블록을 테이블로 되돌립니다.

    붕괴 후 다시 한 번이라도 쌓기에 성공하면 재건(rebuild)으로 셉니다.

    Args:
        previous (WorldState): 행동 적용 전 상태
        state (WorldState): 행동 적용 후 상태
        obs (Observation): 행동 적용 후 관측
        threshold (float): 붕괴 높이 (cm)

    Returns:
        Tuple[WorldState, Observation]: 붕괴가 반영된 상태와 관측
    """
    if state.collapses > 0 and state.stacked_since_collapse and not previous.stacked_since_collapse:
        state = dataclasses.replace(state, rebuilds=state.rebuilds + 1)

    if state.tallest_stack_height() <= threshold:
        return state, obs

    blocks = [b for stack in state.towers for b in stack]
    towers = tuple((b,) for b in sorted(blocks))
    state = dataclasses.replace(
        state,
        towers=towers,
        collapses=state.collapses + 1,
        stacked_since_collapse=False,
    )
    hand = f"block {state.holding}" if state.holding else "nothing"
    stacks = "; ".join(f"[{b}]" for (b,) in towers)
    text = (
        f"{obs.status_text}\nThe tower fell! All blocks on it are back on the table.\n"
        f"Current state (bottom to top): {stacks}. You are holding {hand}."
    )
    return state, dataclasses.replace(obs, status_text=text, towers=towers, collapsed=True)
