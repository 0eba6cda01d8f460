"""
능력 프로필로부터 capability-conditioned 최적 보상과 무작위 기준선 보상을 몬테카를로로 추정하는 모듈

모든 반복은 numpy 배열 연산으로 한 번에 처리하며, 구성 수가 많으면 반복을 나누어 메모리를 제한합니다.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from utils.errors import ConfigurationError, MissingSubtaskError
from utils.logger import get_logger
from utils.partition import ConfigurationSpace, configuration_space
from utils.tasks import (
    COGNITIVE_EFFORT,
    COMBINED,
    EVALUATE_CONFIGURATION,
    EXECUTION,
    GENERATE_CONFIGURATIONS,
    HEIGHT_ESTIMATION,
    INFORMATION_GATHERING,
    PLAN_AND_EXECUTE,
    REQUIRED_SUBTASKS,
    SELECT_CONFIGURATION,
    STEPPING_COMBINED,
    STEPPING_INFORMATION_GATHERING,
    SUBTASKS,
    RunRecord,
    StatKind,
)

logger = get_logger(__name__)

# 한 번에 만드는 (반복 x 구성) 배열의 최대 원소 수
_CHUNK_ELEMENTS = 2_000_000

# 하위 작업 -> 프로필 표본 집합
SAMPLE_SET_BY_SUBTASK = {
    HEIGHT_ESTIMATION: "estimation_errors",
    GENERATE_CONFIGURATIONS: "config_counts",
    EVALUATE_CONFIGURATION: "evaluation_errors",
    SELECT_CONFIGURATION: "selection_distances",
    EXECUTION: "execution_distances",
}

_SAMPLE_SET_BY_KIND = {
    StatKind.ESTIMATION_ERROR: "estimation_errors",
    StatKind.CONFIGURATION_COUNT: "config_counts",
    StatKind.EVALUATION_ERROR: "evaluation_errors",
    StatKind.SELECTION_DISTANCE: "selection_distances",
    StatKind.EXECUTION_DISTANCE: "execution_distances",
}


@dataclass(frozen=True)
class ObservedRun:
    """복합 작업 에피소드 하나의 실제 높이와 관측 보상"""

    heights: Dict[str, float]
    r_pi: float
    seed: int = 0


@dataclass
class CapabilityProfile:
    """
    블록 수 하나(층)에 대한 하위 작업 통계의 경험 분포

    층이 다른 표본은 절대 섞지 않습니다.
    """

    n_blocks: int
    estimation_errors: np.ndarray = field(default_factory=lambda: np.empty(0))
    config_counts: np.ndarray = field(default_factory=lambda: np.empty(0))
    evaluation_errors: np.ndarray = field(default_factory=lambda: np.empty(0))
    selection_distances: np.ndarray = field(default_factory=lambda: np.empty(0))
    execution_distances: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        for name in SAMPLE_SET_BY_SUBTASK.values():
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def require(self, task_id: str) -> None:
        """
        작업에 필요한 표본 집합이 모두 있는지 확인합니다.

        Raises:
            MissingSubtaskError: 비어 있는 표본 집합이 있을 때 발생 (빠진 하위 작업을 명시)
        """
        for subtask in REQUIRED_SUBTASKS[task_id]:
            if getattr(self, SAMPLE_SET_BY_SUBTASK[subtask]).size == 0:
                raise MissingSubtaskError(subtask, self.n_blocks, task_id)

    def to_dict(self) -> dict:
        data = {"n_blocks": self.n_blocks}
        for name in SAMPLE_SET_BY_SUBTASK.values():
            data[name] = getattr(self, name).tolist()
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "CapabilityProfile":
        return cls(**{k: v for k, v in data.items()})


@dataclass
class ReturnSamples:
    """
    층 하나의 관측 보상(r_pi)과 시뮬레이션 보상(r_star, r_zero)

    r_pi는 관측한 에피소드 보상 그대로이며, r_star와 r_zero는 길이 N입니다.
    """

    r_pi: np.ndarray
    r_star: np.ndarray
    r_zero: np.ndarray
    n_blocks: int
    iterations: int
    task_id: str = ""
    clamped: int = 0

    @property
    def means(self) -> Dict[str, float]:
        return {
            "r_pi": float(np.mean(self.r_pi)),
            "r_star": float(np.mean(self.r_star)),
            "r_zero": float(np.mean(self.r_zero)),
        }


def build_capability_profiles(records: Iterable[RunRecord]) -> Dict[int, CapabilityProfile]:
    """
    완료된 하위 작업 기록에서 블록 수별 능력 프로필을 만듭니다.

    Args:
        records (Iterable[RunRecord]): 에피소드 기록

    Returns:
        Dict[int, CapabilityProfile]: 블록 수 -> 프로필
    """
    samples: Dict[int, Dict[str, List[float]]] = {}
    for record in records:
        if not record.included or record.task_id not in SUBTASKS:
            continue
        stratum = samples.setdefault(record.n_blocks, {name: [] for name in SAMPLE_SET_BY_SUBTASK.values()})
        for stat in record.stats:
            name = _SAMPLE_SET_BY_KIND.get(stat.kind)
            if name is not None and not stat.missing:
                stratum[name].append(float(stat.value))
    return {n: CapabilityProfile(n_blocks=n, **sets) for n, sets in sorted(samples.items())}


def observed_runs(records: Iterable[RunRecord], task_id: str, n_blocks: int) -> List[ObservedRun]:
    """복합 작업의 포함된(제외되지 않은) 에피소드를 시드 순으로 모읍니다."""
    runs = [
        ObservedRun(dict(r.heights), float(r.return_value), r.seed)
        for r in records
        if r.task_id == task_id and r.n_blocks == n_blocks and r.included
    ]
    return sorted(runs, key=lambda run: run.seed)


def _validate(N: int, runs: Sequence[ObservedRun], profile: CapabilityProfile, task_id: str) -> None:
    if N < 1:
        raise ConfigurationError(f"반복 횟수는 1 이상이어야 합니다: {N}")
    if not runs:
        raise ConfigurationError(f"'{task_id}' 관측 에피소드가 없습니다 (블록 {profile.n_blocks}개)")
    profile.require(task_id)


def _heights_matrix(runs: Sequence[ObservedRun]) -> Tuple[Tuple[str, ...], np.ndarray, np.ndarray]:
    blocks = tuple(sorted(runs[0].heights))
    H = np.array([[run.heights[b] for b in blocks] for run in runs], dtype=float)
    r_pi = np.array([run.r_pi for run in runs], dtype=float)
    return blocks, H, r_pi


def preferred_pair_return(true: np.ndarray, estimated: np.ndarray) -> np.ndarray:
    """
    추정 높이가 가장 큰 두 블록을 고르고, 그 두 블록의 실제 높이 합을 반환합니다.

    Args:
        true (np.ndarray): 실제 높이 (..., n)
        estimated (np.ndarray): 추정 높이 (..., n)

    Returns:
        np.ndarray: 실제 높이 합 (...)
    """
    order = np.argsort(-estimated, axis=-1, kind="stable")[..., :2]
    return np.take_along_axis(true, order, axis=-1).sum(axis=-1)


def simulate_info_gathering(
    N: int, runs: Sequence[ObservedRun], profile: CapabilityProfile, rng: np.random.Generator
) -> ReturnSamples:
    """
    정보 수집 작업의 R_π*c와 R_π0 표본을 시뮬레이션합니다.

    반복마다 관측 에피소드 하나의 실제 높이를 뽑고, 블록마다 추정 오차를 더해 선호하는 두 블록을 고릅니다.
    기준선은 무작위 두 블록입니다.
    """
    _validate(N, runs, profile, INFORMATION_GATHERING)
    _, H, r_pi = _heights_matrix(runs)
    n = H.shape[1]
    rows = np.arange(N)

    h = H[rng.integers(len(runs), size=N)]
    eps = rng.choice(profile.estimation_errors, size=h.shape)
    r_star = preferred_pair_return(h, h + eps)

    first = rng.integers(n, size=N)
    second = rng.integers(n - 1, size=N)
    second = second + (second >= first)
    r_zero = h[rows, first] + h[rows, second]
    return ReturnSamples(r_pi, r_star, r_zero, n, N, INFORMATION_GATHERING)


def _shell_sample(
    space: ConfigurationSpace, origins: np.ndarray, d: np.ndarray, rng: np.random.Generator
) -> Tuple[np.ndarray, int]:
    # 거리 d의 껍질에서 균등 추출, 비어 있으면 d 아래의 가장 먼 껍질로 clamp
    rows = space.distances[origins]
    realized = np.where(rows <= d[:, None], rows, -1).max(axis=1)
    keys = rng.random(rows.shape)
    keys[rows != realized[:, None]] = -1.0
    return keys.argmax(axis=1), int(np.count_nonzero(realized != d))


def _two_tower_samples(
    N: int,
    runs: Sequence[ObservedRun],
    profile: CapabilityProfile,
    rng: np.random.Generator,
    *,
    task_id: str,
    estimated: bool,
    execute: bool,
) -> ReturnSamples:
    _validate(N, runs, profile, task_id)
    blocks, H, r_pi = _heights_matrix(runs)
    space = configuration_space(blocks)
    C = len(space)
    chunk = max(1, _CHUNK_ELEMENTS // C)

    r_star = np.empty(N)
    r_zero = np.empty(N)
    clamped = 0
    for start in range(0, N, chunk):
        size = min(chunk, N - start)
        rows = np.arange(size)

        h = H[rng.integers(len(runs), size=size)]
        lowest = space.lowest_heights(h)
        if estimated:
            eps = rng.choice(profile.estimation_errors, size=h.shape)
            believed = space.lowest_heights(h + eps)
        else:
            believed = lowest

        # 떠올린 구성 m개: 비복원 균등 추출
        m = rng.choice(profile.config_counts, size=size).astype(int)
        clamped += int(np.count_nonzero(m > C))
        m = np.clip(m, 1, C)
        ranks = rng.random((size, C)).argsort(axis=1).argsort(axis=1)
        conceived = ranks < m[:, None]

        errors = rng.choice(profile.evaluation_errors, size=(size, C))
        scores = np.where(conceived, believed + errors, -np.inf)
        preferred = scores.argmax(axis=1)

        d = rng.choice(profile.selection_distances, size=size).astype(int)
        chosen, c = _shell_sample(space, preferred, d, rng)
        clamped += c

        r_zero[start:start + size] = lowest[rows, rng.integers(C, size=size)]

        if execute:
            d_exec = rng.choice(profile.execution_distances, size=size).astype(int)
            chosen, c = _shell_sample(space, chosen, d_exec, rng)
            clamped += c

        r_star[start:start + size] = lowest[rows, chosen]

    if clamped:
        logger.debug("%s: clamp %d회 (블록 %d개)", task_id, clamped, len(blocks))
    return ReturnSamples(r_pi, r_star, r_zero, len(blocks), N, task_id, clamped)


def simulate_cognitive_effort(
    N: int, runs: Sequence[ObservedRun], profile: CapabilityProfile, rng: np.random.Generator
) -> ReturnSamples:
    """
    인지 노력 작업: 구성 m개를 떠올리고, 평가 오차를 더해 고른 뒤, 선택 거리만큼 옮긴 구성의 가장 낮은 탑 높이
    """
    return _two_tower_samples(N, runs, profile, rng, task_id=COGNITIVE_EFFORT, estimated=False, execute=False)


def simulate_plan_execute(
    N: int, runs: Sequence[ObservedRun], profile: CapabilityProfile, rng: np.random.Generator
) -> ReturnSamples:
    """인지 노력 파이프라인 뒤에 실행 거리만큼 한 번 더 옮깁니다."""
    return _two_tower_samples(N, runs, profile, rng, task_id=PLAN_AND_EXECUTE, estimated=False, execute=True)


def simulate_combined(
    N: int, runs: Sequence[ObservedRun], profile: CapabilityProfile, rng: np.random.Generator
) -> ReturnSamples:
    """
    통합 작업: 구성 평가가 추정 블록 높이 위에서 이루어지고, 보상은 항상 실제 높이로 계산합니다.
    """
    return _two_tower_samples(N, runs, profile, rng, task_id=COMBINED, estimated=True, execute=True)


_SIMULATORS = {
    INFORMATION_GATHERING: simulate_info_gathering,
    STEPPING_INFORMATION_GATHERING: simulate_info_gathering,
    COGNITIVE_EFFORT: simulate_cognitive_effort,
    PLAN_AND_EXECUTE: simulate_plan_execute,
    COMBINED: simulate_combined,
    STEPPING_COMBINED: simulate_combined,
}


def simulate(
    task_id: str,
    N: int,
    runs: Sequence[ObservedRun],
    profile: CapabilityProfile,
    rng: np.random.Generator,
) -> ReturnSamples:
    """
    작업에 맞는 시뮬레이터를 실행합니다.

    Raises:
        ConfigurationError: 분석 대상이 아닌 작업일 때 발생
    """
    try:
        simulator = _SIMULATORS[task_id]
    except KeyError:
        raise ConfigurationError(f"몬테카를로 추정을 지원하지 않는 작업입니다: {task_id}") from None
    samples = simulator(N, runs, profile, rng)
    samples.task_id = task_id
    return samples
