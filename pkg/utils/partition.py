"""
두 탑 구성(configuration)의 조합론 모듈

구성 열거, 가장 낮은 탑을 최대화하는 전수 탐색, 구성 간 거리, 거리 조건부 무작위 추출을 제공합니다.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from utils.errors import PartitionError


@dataclass(frozen=True)
class Configuration:
    """
    블록을 비어 있지 않은 두 탑으로 나눈 구성

    두 탑은 순서가 없으며, 정렬했을 때 사전순으로 작은 쪽이 first가 됩니다.
    """

    first: FrozenSet[str]
    second: FrozenSet[str]

    def __post_init__(self):
        if not self.first or not self.second:
            raise PartitionError("두 탑 모두 비어 있지 않아야 합니다.")
        if self.first & self.second:
            raise PartitionError(f"두 탑이 블록을 공유합니다: {sorted(self.first & self.second)}")
        if tuple(sorted(self.second)) < tuple(sorted(self.first)):
            first, second = self.second, self.first
            object.__setattr__(self, "first", first)
            object.__setattr__(self, "second", second)

    @classmethod
    def of(cls, a: Iterable[str], b: Iterable[str]) -> "Configuration":
        return cls(frozenset(a), frozenset(b))

    @classmethod
    def from_towers(cls, towers: Sequence[Sequence[str]]) -> "Configuration":
        """
        스택 목록에서 구성을 만듭니다.

        Raises:
            PartitionError: 비어 있지 않은 스택이 정확히 두 개가 아닐 때 발생
        """
        stacks = [s for s in towers if len(s) > 0]
        if len(stacks) != 2:
            raise PartitionError(f"두 개의 탑이 필요하지만 {len(stacks)}개가 있습니다.")
        return cls.of(stacks[0], stacks[1])

    @property
    def blocks(self) -> FrozenSet[str]:
        return self.first | self.second

    @property
    def towers(self) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
        return tuple(sorted(self.first)), tuple(sorted(self.second))

    def tower_heights(self, heights: Mapping[str, float]) -> Tuple[float, float]:
        return (
            float(sum(heights[b] for b in self.first)),
            float(sum(heights[b] for b in self.second)),
        )

    def lowest(self, heights: Mapping[str, float]) -> float:
        return min(self.tower_heights(heights))

    def highest(self, heights: Mapping[str, float]) -> float:
        return max(self.tower_heights(heights))

    def __str__(self) -> str:
        a, b = self.towers
        return f"[{', '.join(a)}]; [{', '.join(b)}]"


@lru_cache(maxsize=None)
def _enumerate(blocks: Tuple[str, ...]) -> Tuple[Configuration, ...]:
    anchor, rest = blocks[0], blocks[1:]
    configurations = []
    # 첫 블록을 고정하고 나머지 블록의 소속을 비트마스크로 표현 (모두 같은 쪽인 경우 제외)
    for mask in range((1 << len(rest)) - 1):
        side = {anchor} | {b for i, b in enumerate(rest) if mask >> i & 1}
        configurations.append(Configuration.of(side, set(blocks) - side))
    return tuple(configurations)


def enumerate_configurations(blocks: Iterable[str]) -> List[Configuration]:
    """
    모든 두 탑 구성을 결정적 순서로 열거합니다. 개수는 2^(n-1) - 1 입니다.

    Args:
        blocks (Iterable[str]): 블록 id 집합

    Returns:
        List[Configuration]: 구성 목록

    Raises:
        PartitionError: 블록이 2개 미만일 때 발생
    """
    ordered = tuple(sorted(set(blocks)))
    if len(ordered) < 2:
        raise PartitionError(f"두 탑을 만들려면 블록이 2개 이상 필요합니다: {len(ordered)}개")
    return list(_enumerate(ordered))


def two_tower_return(config: Optional[Configuration], heights: Mapping[str, float]) -> float:
    """가장 낮은 탑의 실제 높이. 구성이 없으면 0을 반환합니다."""
    if config is None:
        return 0.0
    return config.lowest(heights)


def best_configuration(heights: Mapping[str, float]) -> Tuple[Configuration, float]:
    """
    가장 낮은 탑이 가장 높은 구성을 전수 탐색으로 찾습니다.

    동점이면 열거 순서상 먼저 나온 구성이 선택됩니다.

    Args:
        heights (Mapping[str, float]): 블록 id -> 높이

    Returns:
        Tuple[Configuration, float]: 최적 구성과 그 값
    """
    if len(heights) > settings.EXHAUSTIVE_BLOCK_LIMIT:
        raise PartitionError(
            f"전수 탐색은 블록 {settings.EXHAUSTIVE_BLOCK_LIMIT}개까지만 지원합니다: {len(heights)}개"
        )
    best, best_value = None, -np.inf
    for config in enumerate_configurations(heights):
        value = config.lowest(heights)
        if value > best_value:
            best, best_value = config, value
    return best, float(best_value)


def optimal_configurations(heights: Mapping[str, float], tol: float = 1e-9) -> List[Configuration]:
    """최적값과 tol 이내로 같은 값을 갖는 모든 구성 (동점 처리용)"""
    _, value = best_configuration(heights)
    return [c for c in enumerate_configurations(heights) if c.lowest(heights) >= value - tol]


def distance(a: Configuration, b: Configuration) -> int:
    """
    a를 b로 바꾸는 데 필요한 최소 블록 이동 수 (두 탑의 대응 방식 중 최솟값)

    Raises:
        PartitionError: 두 구성의 블록 집합이 다를 때 발생
    """
    if a.blocks != b.blocks:
        raise PartitionError("블록 집합이 다른 구성 사이의 거리는 정의되지 않습니다.")
    straight = len(a.first - b.first) + len(a.second - b.second)
    crossed = len(a.first - b.second) + len(a.second - b.first)
    return min(straight, crossed)


def distance_to_stacks(config: Configuration, stacks: Sequence[Iterable[str]]) -> int:
    """
    요청한 구성과 실제로 쌓인 스택들 사이의 거리

    스택 수가 2가 아니어도 됩니다. 요청한 두 탑을 서로 다른 스택에 대응시켰을 때
    제자리에 있는 블록 수의 최댓값을 전체 블록 수에서 뺀 값입니다.
    """
    parts = [frozenset(s) for s in stacks if s]
    placed = frozenset().union(*parts) if parts else frozenset()
    if placed != config.blocks:
        raise PartitionError("쌓인 블록과 요청한 구성의 블록 집합이 다릅니다.")
    first, second = config.first, config.second
    overlap_first = [len(first & p) for p in parts]
    overlap_second = [len(second & p) for p in parts]
    best = max(max(overlap_first), max(overlap_second))
    for i, x in enumerate(overlap_first):
        for j, y in enumerate(overlap_second):
            if i != j:
                best = max(best, x + y)
    return len(config.blocks) - best


@dataclass(frozen=True)
class ShellDraw:
    """거리 조건부 추출 결과"""

    configuration: Configuration
    distance: int
    clamped: bool


class ConfigurationSpace:
    """
    블록 집합 하나에 대한 구성 열거, 인덱스, 거리 행렬 캐시

    몬테카를로 반복에서 구성을 인덱스로 다루기 위해 사용합니다.
    """

    def __init__(self, blocks: Sequence[str]):
        self.blocks: Tuple[str, ...] = tuple(sorted(blocks))
        self.configurations: Tuple[Configuration, ...] = tuple(enumerate_configurations(self.blocks))
        self.index: Dict[Configuration, int] = {c: i for i, c in enumerate(self.configurations)}
        # membership[i, j] = 1 이면 블록 j가 구성 i의 first 탑에 속함
        self.membership = np.array(
            [[1.0 if b in c.first else 0.0 for b in self.blocks] for c in self.configurations]
        )
        size = len(self.configurations)
        self.distances = np.zeros((size, size), dtype=np.int64)
        for i, a in enumerate(self.configurations):
            for j in range(i + 1, size):
                self.distances[i, j] = self.distances[j, i] = distance(a, self.configurations[j])

    def __len__(self) -> int:
        return len(self.configurations)

    def height_vector(self, heights: Mapping[str, float]) -> np.ndarray:
        return np.array([heights[b] for b in self.blocks], dtype=float)

    def lowest_heights(self, heights: np.ndarray) -> np.ndarray:
        """
        모든 구성의 가장 낮은 탑 높이를 한 번에 계산합니다.

        Args:
            heights (np.ndarray): 블록 순서(self.blocks)의 높이. (n,) 또는 (N, n)

        Returns:
            np.ndarray: (C,) 또는 (N, C)
        """
        first = heights @ self.membership.T
        second = np.sum(heights, axis=-1, keepdims=True) - first
        return np.minimum(first, second)

    def shell(self, origin: int, d: int) -> np.ndarray:
        return np.flatnonzero(self.distances[origin] == d)

    def realized_distance(self, origin: int, d: int) -> int:
        """d 이하에서 비어 있지 않은 가장 먼 거리"""
        row = self.distances[origin]
        return int(row[row <= d].max())

    def sample_index(self, origin: int, d: int, rng: np.random.Generator) -> Tuple[int, int, bool]:
        """
        origin에서 거리 d인 구성 인덱스를 균등하게 추출합니다.

        Returns:
            Tuple[int, int, bool]: (구성 인덱스, 실제 거리, clamp 여부)
        """
        if d < 0:
            raise PartitionError(f"거리는 음수일 수 없습니다: {d}")
        realized = self.realized_distance(origin, int(d))
        candidates = self.shell(origin, realized)
        choice = int(candidates[int(rng.integers(len(candidates)))])
        return choice, realized, realized != d


@lru_cache(maxsize=64)
def configuration_space(blocks: Tuple[str, ...]) -> ConfigurationSpace:
    """블록 튜플별로 캐시된 ConfigurationSpace"""
    return ConfigurationSpace(blocks)


def sample_at_distance(origin: Configuration, d: int, rng: np.random.Generator) -> ShellDraw:
    """
    origin에서 정확히 거리 d인 구성을 균등하게 추출합니다.

    그런 구성이 없으면 d보다 작은 가장 가까운 비어 있지 않은 거리로 내려가며 clamped=True로 보고합니다.

    Args:
        origin (Configuration): 기준 구성
        d (int): 목표 거리 (0 이상)
        rng (np.random.Generator): 난수 생성기

    Returns:
        ShellDraw: 추출된 구성, 실제 거리, clamp 여부
    """
    space = configuration_space(tuple(sorted(origin.blocks)))
    index, realized, clamped = space.sample_index(space.index[origin], d, rng)
    return ShellDraw(space.configurations[index], realized, clamped)
