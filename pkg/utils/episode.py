"""
에피소드 실행 모듈

에이전트와 환경 사이의 대화를 한 에피소드 동안 진행하고 RunRecord를 만듭니다.
"""
import dataclasses
import math
import time
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence, Set, Tuple

from config.settings import settings
from utils.action_parser import looks_hallucinated, parse_action
from utils.agents import AgentHandle, RequestLog, Transcript, next_message
from utils.blocksworld import (
    Action,
    ActionKind,
    EpisodeStreams,
    Observation,
    WorldState,
    apply_action,
    describe_state,
    initial_state,
    load_distraction_corpus,
    maybe_distract,
    perturb_action,
)
from utils.errors import AuthenticationError, ConfigurationError, ParseFailure, RemoteAgentError
from utils.logger import get_logger
from utils.tasks import (
    COMBINED,
    FALLING_TOWER,
    INFORMATION_GATHERING,
    STEPPING_COMBINED,
    STEPPING_INFORMATION_GATHERING,
    PromptLibrary,
    RunRecord,
    RunStatus,
    TaskInstance,
    apply_falling_tower,
    block_count_for,
    compute_return,
    extract_stats,
    get_task,
    instantiate,
)

logger = get_logger(__name__)

_default_corpus = lru_cache(maxsize=1)(load_distraction_corpus)

_STEPPING = {
    INFORMATION_GATHERING: STEPPING_INFORMATION_GATHERING,
    COMBINED: STEPPING_COMBINED,
}


def _request_action(
    agent: AgentHandle,
    transcript: Transcript,
    reminder: str,
    stamp: Callable[[], Optional[float]],
    flags: Set[str],
) -> Optional[Action]:
    # 형식 오류는 최대 FORMAT_REMINDERS번 안내 후 스텝 낭비로 처리
    for attempt in range(settings.FORMAT_REMINDERS + 1):
        text = next_message(agent, transcript)
        transcript.add_agent(text, stamp(), agent.last_usage)
        if looks_hallucinated(text):
            flags.add("hallucination")
        try:
            return parse_action(text)
        except ParseFailure as e:
            logger.debug("행동 해석 실패 (%d번째): %s", attempt + 1, e.reason)
            if attempt < settings.FORMAT_REMINDERS:
                transcript.add_environment(reminder, timestamp=stamp())
    transcript.add_environment(f"{reminder} This step was wasted.", timestamp=stamp())
    return None


def _build_record(
    instance: TaskInstance,
    agent: AgentHandle,
    state: WorldState,
    status: RunStatus,
    wasted: int,
    flags: Set[str],
    reason: Optional[str],
    transcript_name: Optional[str],
) -> RunRecord:
    def towers_of(config):
        return [list(t) for t in config.towers] if config is not None else None

    threshold = instance.threshold
    record = RunRecord(
        task_id=instance.task_id,
        n_blocks=instance.n_blocks,
        seed=instance.seed,
        agent_id=agent.id,
        prompt_variant=instance.prompt_variant,
        heights=instance.heights,
        status=status,
        steps=state.step,
        wasted_steps=wasted,
        transcript=transcript_name,
        final_towers=[list(t) for t in state.towers],
        holding=state.holding,
        done=state.done,
        declared_heights=list(state.declared_heights),
        declared_towers=[[list(t) for t in towers] for towers in state.declared_towers],
        measurement_counts=dict(state.measurement_counts),
        target_block=instance.target_block,
        shown_configuration=towers_of(instance.shown_configuration),
        requested_configuration=towers_of(instance.requested_configuration),
        threshold=threshold if threshold is not None and math.isfinite(threshold) else None,
        perturbations=state.perturbations,
        distractions=state.distractions,
        collapses=state.collapses,
        rebuilds=state.rebuilds,
        flags=sorted(flags),
        excluded_reason=reason,
    )

    declaration = get_task(instance.task_id).declaration
    if record.included and declaration is not None:
        declared = record.declared_heights if declaration is ActionKind.HEIGHT else record.declared_towers
        if not declared:
            record.status = RunStatus.EXCLUDED
            record.excluded_reason = "missing-declaration"
            record.flags = sorted(set(record.flags) | {"missing-declaration"})

    record.stats = extract_stats(record)
    record.return_value = compute_return(record) if record.included else None
    return record


def run_episode(
    task_id: str,
    n_blocks: int,
    seed: int,
    agent: AgentHandle,
    *,
    prompts: Optional[PromptLibrary] = None,
    corpus: Optional[Sequence[str]] = None,
    prompt_variant: str = "neutral",
    noise_overrides: Optional[Mapping[str, object]] = None,
    threshold: Optional[float] = None,
    max_steps: Optional[int] = None,
    request_log: Optional[RequestLog] = None,
    transcript_name: Optional[str] = None,
) -> Tuple[RunRecord, Transcript]:
    """
    에피소드 하나를 끝까지 진행합니다.

    Args:
        task_id (str): 작업 id
        n_blocks (int): 블록 수
        seed (int): 에피소드 시드
        agent (AgentHandle): 이 에피소드 전용 에이전트 인스턴스
        prompts (PromptLibrary, optional): 프롬프트 자산
        corpus (Sequence[str], optional): 주의 분산 말뭉치. None이면 필요할 때 기본 말뭉치를 읽음
        prompt_variant (str): 동기 부여 변형
        noise_overrides (Mapping, optional): 잡음 설정 덮어쓰기
        threshold (float, optional): Falling Tower 붕괴 높이 고정값
        max_steps (int, optional): 최대 스텝 수 덮어쓰기
        request_log (RequestLog, optional): 원격 요청 기록 함수
        transcript_name (str, optional): 기록에 남길 트랜스크립트 파일 이름

    Returns:
        Tuple[RunRecord, Transcript]: 에피소드 기록과 트랜스크립트

    Raises:
        AuthenticationError: 원격 API 인증 실패 시 발생 (매트릭스 중단)
    """
    prompts = prompts or PromptLibrary()
    streams = EpisodeStreams.from_seed(seed, block_count_for(task_id, n_blocks))
    instance = instantiate(
        task_id,
        n_blocks,
        seed,
        streams,
        prompts=prompts,
        prompt_variant=prompt_variant,
        noise_overrides=noise_overrides,
        threshold=threshold,
        max_steps=max_steps,
    )
    if corpus is None:
        noisy = any(phase.noise.distraction_prob > 0 for phase in instance.phases)
        corpus = _default_corpus() if noisy else ()
    state = initial_state(instance.heights, streams)

    # 결정적 에이전트의 트랜스크립트에는 시각을 남기지 않습니다
    stamp: Callable[[], Optional[float]] = (lambda: None) if agent.deterministic else time.time
    transcript = Transcript(
        {
            "task_id": task_id,
            "n_blocks": instance.n_blocks,
            "seed": seed,
            "agent_id": agent.id,
            "agent_kind": agent.kind,
            "behavior": agent.behavior,
            "prompt_variant": prompt_variant,
            "prompt_version": settings.PROMPT_VERSION,
        }
    )
    transcript.add_system(instance.system_prompt)
    first = Observation(status_text=describe_state(state.towers, None), towers=state.towers)
    transcript.add_environment(f"{instance.phases[0].prompt}\n{first.status_text}", first, stamp())
    agent.start(instance, streams.agent, request_log)

    reminder = prompts.reminder()
    status = RunStatus.COMPLETED
    reason: Optional[str] = None
    wasted = 0
    flags: Set[str] = set()

    while not state.terminal:
        if state.step + wasted >= instance.max_steps:
            status, reason = RunStatus.CAPPED, "max-steps"
            break
        try:
            action = _request_action(agent, transcript, reminder, stamp, flags)
        except AuthenticationError:
            raise
        except RemoteAgentError as e:
            logger.error("원격 에이전트 실패 (%s, 블록 %d개, 시드 %d): %s", task_id, instance.n_blocks, seed, str(e))
            status, reason = RunStatus.FAILED, str(e)
            break

        if action is None:
            wasted += 1
            if wasted >= settings.MAX_WASTED_STEPS:
                status, reason = RunStatus.EXCLUDED, "format"
                break
            continue

        phase = instance.phases[state.phase]
        executed = perturb_action(action, state, streams.perturbation, phase.noise.perturbation_prob)
        previous = state
        state, obs = apply_action(state, executed, phase.noise, allowed=phase.allowed, stop=phase.stop)
        if task_id == FALLING_TOWER:
            state, obs = apply_falling_tower(previous, state, obs, instance.threshold)
        obs = maybe_distract(obs, streams.distraction, corpus, phase.noise.distraction_prob)
        if obs.distraction is not None:
            state = dataclasses.replace(state, distractions=state.distractions + 1)

        text = obs.status_text
        if state.terminal and state.phase + 1 < len(instance.phases):
            # 같은 문맥에서 다음 단계로 진행
            state = dataclasses.replace(state, phase=state.phase + 1, terminal=False)
            obs = dataclasses.replace(obs, terminal=False, phase=state.phase)
            text = f"{text}\n\n{instance.phases[state.phase].prompt}"
        elif not state.terminal and phase.followup and executed.kind is ActionKind.TOWERS:
            text = f"{text}\n{phase.followup}"
        transcript.add_environment(text, obs, stamp())

    record = _build_record(instance, agent, state, status, wasted, flags, reason, transcript_name)
    if not record.included:
        logger.info(
            "에피소드 제외 (%s, 블록 %d개, 시드 %d): %s",
            task_id, instance.n_blocks, seed, record.excluded_reason or record.status.value,
        )
    return record, transcript


def falling_tower_run(
    agent: AgentHandle,
    threshold: Optional[float] = None,
    seed: int = 0,
    **kwargs,
) -> Tuple[float, int]:
    """
    Falling Tower 에피소드를 실행하고 (최종 높이, 재건 횟수)를 반환합니다.

    Args:
        agent (AgentHandle): 에이전트
        threshold (float, optional): 붕괴 높이. None이면 시드의 task 스트림에서 [30, 60] 균등 추출
        seed (int): 에피소드 시드

    Returns:
        Tuple[float, int]: 서 있는 가장 높은 탑의 높이(cm)와 재건 횟수
    """
    record, _ = run_episode(FALLING_TOWER, settings.FALLING_TOWER_BLOCKS, seed, agent, threshold=threshold, **kwargs)
    final = record.return_value
    if final is None:
        final = record.final_state().tallest_stack_height()
    return final, record.rebuilds


def subtask_stepping_run(agent: AgentHandle, task: str, seed: int, n_blocks: int, **kwargs) -> RunRecord:
    """
    높이 추정 단계를 같은 문맥에서 블록마다 차례로 거친 뒤 최종 작업을 요청합니다.

    Args:
        agent (AgentHandle): 에이전트
        task (str): information-gathering 또는 combined
        seed (int): 에피소드 시드
        n_blocks (int): 블록 수

    Returns:
        RunRecord: 복합 작업과 같은 통계 스키마의 기록

    Raises:
        ConfigurationError: 지원하지 않는 작업일 때 발생
    """
    if task not in _STEPPING and task not in _STEPPING.values():
        raise ConfigurationError(f"단계 진행은 information-gathering 또는 combined만 지원합니다: {task}")
    record, _ = run_episode(_STEPPING.get(task, task), n_blocks, seed, agent, **kwargs)
    return record
