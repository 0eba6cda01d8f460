"""
목표 지향성(GD) 점 추정과 층화 부트스트랩 신뢰구간
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from config.settings import settings
from utils.errors import ConfigurationError, UndefinedGDError
from utils.logger import get_logger
from utils.mc_estimator import ReturnSamples

logger = get_logger(__name__)

_CHUNK_ELEMENTS = 2_000_000


@dataclass
class GDEstimate:
    """작업 하나의 GD 추정 결과"""

    task_id: str
    per_stratum: Dict[int, float]
    aggregate: float
    ci_low: float = math.nan
    ci_high: float = math.nan
    alpha: float = settings.CONFIDENCE_ALPHA
    replicates: int = 0
    bootstrap_mean: float = math.nan
    sample_sizes: Dict[int, Dict[str, int]] = field(default_factory=dict)
    dropped: List[int] = field(default_factory=list)
    stratum_ci: Dict[int, Tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "per_stratum": {str(n): v for n, v in self.per_stratum.items()},
            "aggregate": self.aggregate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "alpha": self.alpha,
            "replicates": self.replicates,
            "bootstrap_mean": self.bootstrap_mean,
            "sample_sizes": {str(n): v for n, v in self.sample_sizes.items()},
            "dropped": list(self.dropped),
            "stratum_ci": {str(n): list(v) for n, v in self.stratum_ci.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "GDEstimate":
        return cls(
            task_id=data["task_id"],
            per_stratum={int(n): v for n, v in data["per_stratum"].items()},
            aggregate=data["aggregate"],
            ci_low=data["ci_low"],
            ci_high=data["ci_high"],
            alpha=data["alpha"],
            replicates=data["replicates"],
            bootstrap_mean=data["bootstrap_mean"],
            sample_sizes={int(n): v for n, v in data["sample_sizes"].items()},
            dropped=list(data["dropped"]),
            stratum_ci={int(n): tuple(v) for n, v in data["stratum_ci"].items()},
        )


def gd_from_means(r_pi: float, r_star: float, r_zero: float, n_blocks: Optional[int] = None) -> float:
    """
    GD = (E[R_pi] - E[R_pi0]) / (E[R_pi*c] - E[R_pi0])

    값은 [0, 1]로 자르지 않습니다.

    Raises:
        UndefinedGDError: 분모의 절댓값이 GD_EPSILON보다 작을 때 발생
    """
    denominator = r_star - r_zero
    if abs(denominator) < settings.GD_EPSILON:
        raise UndefinedGDError({"r_star": r_star, "r_zero": r_zero}, n_blocks)
    return (r_pi - r_zero) / denominator


def gd(samples: ReturnSamples) -> float:
    """
    층 하나의 GD 점 추정값을 계산합니다.

    Raises:
        ConfigurationError: 보상 표본이 비어 있을 때 발생
        UndefinedGDError: 분모가 0에 가까울 때 발생
    """
    if not (len(samples.r_pi) and len(samples.r_star) and len(samples.r_zero)):
        raise ConfigurationError(f"보상 표본이 비어 있습니다 (블록 {samples.n_blocks}개)")
    means = samples.means
    return gd_from_means(means["r_pi"], means["r_star"], means["r_zero"], samples.n_blocks)


def aggregate_gd(per_stratum: Mapping[int, ReturnSamples], task_id: str = "") -> GDEstimate:
    """
    층별 GD를 계산하고 가중치 없는 평균으로 집계합니다.

    GD를 정의할 수 없는 층은 경고와 함께 집계에서 빠지고 dropped에 기록됩니다.

    Args:
        per_stratum (Mapping[int, ReturnSamples]): 블록 수 -> 보상 표본
        task_id (str): 작업 id

    Returns:
        GDEstimate: 신뢰구간이 비어 있는 추정 결과
    """
    if not per_stratum:
        raise ConfigurationError(f"'{task_id}' 작업에 층이 없습니다")

    values: Dict[int, float] = {}
    dropped: List[int] = []
    for n_blocks, samples in sorted(per_stratum.items()):
        try:
            values[n_blocks] = gd(samples)
        except UndefinedGDError as e:
            logger.warning("'%s' GD 정의 불가, 층을 제외합니다: %s", task_id, str(e))
            dropped.append(n_blocks)

    aggregate = float(np.mean(list(values.values()))) if values else math.nan
    if not values:
        logger.warning("'%s' 작업의 모든 층에서 GD를 정의할 수 없습니다", task_id)
    sizes = {
        n: {"r_pi": len(s.r_pi), "r_star": len(s.r_star), "r_zero": len(s.r_zero)}
        for n, s in sorted(per_stratum.items())
    }
    return GDEstimate(task_id, values, aggregate, sample_sizes=sizes, dropped=dropped)


def _resampled_means(values: np.ndarray, B: int, rng: np.random.Generator) -> np.ndarray:
    n = len(values)
    chunk = max(1, _CHUNK_ELEMENTS // n)
    means = np.empty(B)
    for start in range(0, B, chunk):
        size = min(chunk, B - start)
        means[start:start + size] = values[rng.integers(n, size=(size, n))].mean(axis=1)
    return means


def bootstrap_replicates(
    per_stratum: Mapping[int, ReturnSamples], B: int, rng: np.random.Generator
) -> Tuple[np.ndarray, Dict[int, np.ndarray]]:
    """
    층 안에서 세 보상 표본을 각각 독립적으로 복원 추출한 부트스트랩 복제값을 만듭니다.

    Returns:
        Tuple[np.ndarray, Dict[int, np.ndarray]]: 집계 GD 복제값 (B,)과 층별 복제값.
        분모가 0에 가까운 복제값은 NaN입니다. 점 추정에서 GD를 정의할 수 없는 층은
        aggregate_gd와 같이 집계 복제값에서 빠집니다 (층별 복제값은 그대로 남음).
    """
    strata: Dict[int, np.ndarray] = {}
    aggregated: List[int] = []
    for n_blocks, samples in sorted(per_stratum.items()):
        r_pi = _resampled_means(np.asarray(samples.r_pi, dtype=float), B, rng)
        r_star = _resampled_means(np.asarray(samples.r_star, dtype=float), B, rng)
        r_zero = _resampled_means(np.asarray(samples.r_zero, dtype=float), B, rng)
        denominator = r_star - r_zero
        valid = np.abs(denominator) >= settings.GD_EPSILON
        strata[n_blocks] = np.where(valid, (r_pi - r_zero) / np.where(valid, denominator, 1.0), np.nan)
        means = samples.means
        if abs(means["r_star"] - means["r_zero"]) >= settings.GD_EPSILON:
            aggregated.append(n_blocks)

    if not aggregated:
        return np.full(B, np.nan), strata
    stacked = np.vstack([strata[n] for n in aggregated])
    finite = ~np.isnan(stacked)
    counts = finite.sum(axis=0)
    sums = np.where(finite, stacked, 0.0).sum(axis=0)
    aggregate = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return aggregate, strata


def _percentile_interval(replicates: np.ndarray, alpha: float) -> Tuple[float, float]:
    kept = replicates[~np.isnan(replicates)]
    if kept.size == 0:
        return math.nan, math.nan
    low = float(np.quantile(kept, alpha / 2, method="lower"))
    high = float(np.quantile(kept, 1 - alpha / 2, method="higher"))
    return low, high


def bootstrap_ci(
    per_stratum: Mapping[int, ReturnSamples],
    B: int = settings.BOOTSTRAP_REPLICATES,
    alpha: float = settings.CONFIDENCE_ALPHA,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, float]:
    """
    집계 GD의 퍼센타일 부트스트랩 신뢰구간을 계산합니다.

    Args:
        per_stratum (Mapping[int, ReturnSamples]): 블록 수 -> 보상 표본
        B (int): 부트스트랩 반복 수 (1000 이상)
        alpha (float): 유의 수준
        rng (np.random.Generator, optional): 난수 생성기

    Returns:
        Tuple[float, float]: (하한, 상한)
    """
    _check_bootstrap_args(B, alpha)
    aggregate, _ = bootstrap_replicates(per_stratum, B, rng or np.random.default_rng())
    return _percentile_interval(aggregate, alpha)


def _check_bootstrap_args(B: int, alpha: float) -> None:
    if B < 1000:
        raise ConfigurationError(f"부트스트랩 반복 수는 1000 이상이어야 합니다: {B}")
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha는 (0, 1) 범위여야 합니다: {alpha}")


def estimate_gd(
    per_stratum: Mapping[int, ReturnSamples],
    B: int = settings.BOOTSTRAP_REPLICATES,
    alpha: float = settings.CONFIDENCE_ALPHA,
    rng: Optional[np.random.Generator] = None,
    task_id: str = "",
) -> GDEstimate:
    """
    점 추정, 층화 부트스트랩 신뢰구간, 부트스트랩 평균과 층별 구간을 함께 계산합니다.
    """
    _check_bootstrap_args(B, alpha)
    estimate = aggregate_gd(per_stratum, task_id)
    aggregate, strata = bootstrap_replicates(per_stratum, B, rng or np.random.default_rng())

    nan_count = int(np.isnan(aggregate).sum())
    if nan_count:
        logger.warning("'%s' 부트스트랩 복제값 %d개를 제외했습니다 (GD 정의 불가)", task_id, nan_count)

    estimate.ci_low, estimate.ci_high = _percentile_interval(aggregate, alpha)
    estimate.alpha = alpha
    estimate.replicates = B - nan_count
    kept = aggregate[~np.isnan(aggregate)]
    estimate.bootstrap_mean = float(kept.mean()) if kept.size else math.nan
    estimate.stratum_ci = {n: _percentile_interval(reps, alpha) for n, reps in strata.items()}
    return estimate
