"""
실험 매트릭스 실행, 분석, 보고서 생성 모듈

run은 (작업 x 블록 수 x 시드) 셀을 제한된 작업자 풀에서 실행하고 셀마다 트랜스크립트와 RunRecord를 저장합니다.
analyze는 저장된 RunRecord만으로 능력 프로필, 몬테카를로 보상 표본, GD 추정, 후회(regret) 표를 계산합니다.
"""
from __future__ import annotations

import hashlib
import json
import math
import zlib
from collections import Counter
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from config.run_config import AgentSpec, RunConfig
from config.settings import settings
from utils.agents import (
    AgentHandle,
    RandomAgent,
    ReplayAgent,
    make_noisy_agent,
    make_oracle_agent,
    shared_rate_limiter,
)
from utils.blocksworld import ActionKind, EpisodeStreams, load_distraction_corpus, sample_heights
from utils.episode import run_episode
from utils.errors import AuthenticationError, ConfigurationError, MissingSubtaskError
from utils.file_handler import FileHandler, load_records, load_transcript, write_atomic
from utils.gd_stats import GDEstimate, estimate_gd
from utils.logger import get_logger
from utils.mc_estimator import (
    CapabilityProfile,
    ReturnSamples,
    build_capability_profiles,
    observed_runs,
    simulate,
)
from utils.partition import best_configuration, two_tower_return
from utils.tasks import (
    ANALYZED_TASKS,
    FALLING_TOWER,
    HEIGHT_ESTIMATION,
    INFORMATION_GATHERING,
    STEPPING_INFORMATION_GATHERING,
    PromptLibrary,
    RunRecord,
    RunStatus,
    block_count_for,
    get_task,
)

logger = get_logger(__name__)

GD_COLUMNS = ["task", "n_blocks", "gd", "ci_low", "ci_high", "n_runs", "n_excluded"]
REGRET_COLUMNS = ["task", "n_blocks", "mean_r_pi", "mean_r_star", "mean_r_zero", "regret", "clamped"]
CAPABILITY_COLUMNS = ["n_blocks", "capability", "n_samples", "mean", "median", "regret"]
AUX_COLUMNS = ["task", "n_blocks", "metric", "value"]

_CAPABILITY_REGRETS = {
    "estimation_errors": "mean_abs_error",
    "config_counts": "fraction_missed",
    "evaluation_errors": "mean_abs_error",
    "selection_distances": "mean_distance",
    "execution_distances": "mean_distance",
}

Cell = Tuple[str, int, int]


@dataclass
class ResultsBundle:
    """
    분석 결과 묶음

    input_hashes는 작업별로 추정에 쓰인 RunRecord 내용의 sha256입니다.
    """

    records: List[RunRecord] = field(default_factory=list)
    profiles: Dict[int, CapabilityProfile] = field(default_factory=dict)
    samples: Dict[str, Dict[int, ReturnSamples]] = field(default_factory=dict)
    estimates: Dict[str, GDEstimate] = field(default_factory=dict)
    exclusions: List[dict] = field(default_factory=list)
    aux: List[dict] = field(default_factory=list)
    gaps: List[str] = field(default_factory=list)
    input_hashes: Dict[str, str] = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)

    def exclusion_counts(self, task_id: str, n_blocks: int) -> Tuple[int, int]:
        for row in self.exclusions:
            if row["task"] == task_id and row["n_blocks"] == n_blocks:
                return row["n_runs"], row["n_excluded"]
        return 0, 0


# ---------------------------------------------------------------------------
# 실행


def make_agent(spec: AgentSpec, task_id: str, n_blocks: int, seed: int) -> AgentHandle:
    """
    셀 하나에 쓸 새 에이전트 인스턴스를 만듭니다.

    Raises:
        ConfigurationError: 원격 에이전트의 API 키가 없거나 재생할 트랜스크립트가 없을 때 발생
    """
    if spec.kind == "random":
        agent: AgentHandle = RandomAgent(spec.id or "random", seed=spec.seed)
    elif spec.kind == "oracle":
        agent = make_oracle_agent(spec.k)
    elif spec.kind == "noisy":
        agent = make_noisy_agent(spec.profile, spec.laziness)
    elif spec.kind == "gemini":
        from utils.gemini_api import GeminiChatAgent

        agent = GeminiChatAgent(
            settings.get_api_key(spec.key_env),
            model=spec.model,
            temperature=spec.temperature,
            rate_limiter=shared_rate_limiter("gemini", spec.requests_per_minute),
        )
    elif spec.kind == "chat":
        from utils.chat_api import ChatCompletionAgent

        agent = ChatCompletionAgent(
            spec.endpoint,
            spec.model or "default",
            settings.get_api_key(spec.key_env),
            temperature=spec.temperature,
            rate_limiter=shared_rate_limiter(spec.endpoint, spec.requests_per_minute),
        )
    else:
        path = FileHandler(spec.replay_from).transcript_path(task_id, block_count_for(task_id, n_blocks), seed)
        if not path.exists():
            raise ConfigurationError(f"재생할 트랜스크립트가 없습니다: {path}")
        agent = ReplayAgent(load_transcript(path))
    if spec.id:
        agent.id = spec.id
    return agent


def matrix_cells(config: RunConfig) -> List[Cell]:
    """설정의 (작업, 블록 수, 시드) 셀 목록. Falling Tower는 블록 수와 관계없이 한 층입니다."""
    cells: List[Cell] = []
    for task_id in config.tasks:
        counts = sorted({block_count_for(task_id, n) for n in config.block_counts})
        cells.extend((task_id, n, seed) for n in counts for seed in config.seed_list)
    return cells


def _needs_corpus(config: RunConfig) -> bool:
    overrides = config.noise.as_overrides()
    for task_id in config.tasks:
        noise = get_task(task_id).noise
        if noise.distraction_prob > 0 and overrides.get("distraction_prob", noise.distraction_prob) > 0:
            return True
    return False


def run_cell(
    config: RunConfig,
    handler: FileHandler,
    prompts: PromptLibrary,
    corpus: Sequence[str],
    cell: Cell,
) -> RunRecord:
    """셀 하나를 실행하고 트랜스크립트, RunRecord 순으로 저장합니다."""
    task_id, n_blocks, seed = cell
    agent = make_agent(config.agent, task_id, n_blocks, seed)
    request_log = handler.request_logger(task_id, n_blocks, seed) if agent.kind == "remote" else None
    transcript_path = handler.transcript_path(task_id, n_blocks, seed)
    record, transcript = run_episode(
        task_id,
        n_blocks,
        seed,
        agent,
        prompts=prompts,
        corpus=corpus,
        prompt_variant=config.prompt_variant,
        noise_overrides=config.noise.as_overrides(),
        threshold=config.falling_threshold,
        max_steps=config.steps_for(task_id),
        request_log=request_log,
        transcript_name=transcript_path.name,
    )
    handler.save_transcript(transcript, task_id, n_blocks, seed)
    handler.save_record(record)
    return record


def failed_record(config: RunConfig, cell: Cell, error: BaseException) -> RunRecord:
    """
    에피소드를 끝내지 못한 셀의 FAILED 기록을 만듭니다.

    높이는 같은 시드의 높이 스트림에서 다시 뽑으므로 정상 실행과 같은 값입니다.
    """
    task_id, n_blocks, seed = cell
    n_blocks = block_count_for(task_id, n_blocks)
    heights = sample_heights(n_blocks, EpisodeStreams.from_seed(seed, n_blocks).heights)
    return RunRecord(
        task_id=task_id,
        n_blocks=n_blocks,
        seed=seed,
        agent_id=config.agent.id or config.agent.kind,
        prompt_variant=config.prompt_variant,
        heights=heights,
        status=RunStatus.FAILED,
        excluded_reason=f"harness-error: {type(error).__name__}",
    )


def run(config: RunConfig) -> ResultsBundle:
    """
    실험 매트릭스를 실행하고 분석 결과를 반환합니다.

    이미 RunRecord가 있는 셀은 건너뛰므로 중단 후 다시 실행하면 이어서 진행합니다.
    실행 중 예외가 난 셀은 FAILED 기록을 남기고, 다음 실행에서 다시 시도합니다.

    Args:
        config (RunConfig): 실행 설정

    Returns:
        ResultsBundle: 분석 결과 (빠진 하위 작업은 gaps에 기록)

    Raises:
        AuthenticationError: 원격 API 인증 실패 시 남은 셀을 취소하고 발생
    """
    if config.agent.remote:
        settings.get_api_key(config.agent.key_env)

    handler = FileHandler(config.output_dir)
    write_atomic(handler.root / "run_config.json", config.model_dump_json(indent=2))
    prompts = PromptLibrary()
    corpus = load_distraction_corpus(config.corpus_path) if _needs_corpus(config) else ()

    cells = matrix_cells(config)
    pending = [cell for cell in cells if not handler.is_complete(*cell)]
    logger.info("셀 %d개 중 %d개 실행 (%d개는 이미 완료)", len(cells), len(pending), len(cells) - len(pending))

    pool = ThreadPoolExecutor(max_workers=config.workers)
    try:
        futures = {pool.submit(run_cell, config, handler, prompts, corpus, cell): cell for cell in pending}
        for future in tqdm(as_completed(futures), total=len(futures), desc="에피소드", disable=not pending):
            cell = futures[future]
            try:
                future.result()
            except AuthenticationError:
                logger.error("원격 API 인증 실패로 매트릭스를 중단합니다 (셀 %s)", cell)
                raise
            except Exception as e:
                logger.error("셀 %s 실행 실패, 다음 실행에서 다시 시도합니다: %s", cell, str(e))
                handler.save_record(failed_record(config, cell, e))
    finally:
        pool.shutdown(wait=True, cancel_futures=True)

    return analyze(
        config.output_dir,
        mc_iterations=config.mc_iterations,
        bootstrap=config.bootstrap,
        alpha=config.alpha,
        seed=config.analysis_seed,
        strict=False,
        out_dir=config.output_dir,
    )


# ---------------------------------------------------------------------------
# 분석


def _records_hash(records: Sequence[RunRecord]) -> str:
    digest = hashlib.sha256()
    for record in sorted(records, key=lambda r: r.cell):
        digest.update(record.model_dump_json().encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def _stream_key(task_id: str) -> int:
    return zlib.crc32(task_id.encode("utf-8"))


def _exclusion_rows(records: Sequence[RunRecord]) -> List[dict]:
    cells: Dict[Tuple[str, int], List[RunRecord]] = {}
    for record in records:
        cells.setdefault((record.task_id, record.n_blocks), []).append(record)
    rows = []
    for (task_id, n_blocks), group in sorted(cells.items()):
        reasons = Counter(r.excluded_reason or r.status.value for r in group if not r.included)
        rows.append(
            {
                "task": task_id,
                "n_blocks": n_blocks,
                "n_runs": sum(r.included for r in group),
                "n_excluded": sum(not r.included for r in group),
                "reasons": dict(sorted(reasons.items())),
            }
        )
    return rows


def _instance_optimum(record: RunRecord) -> float:
    heights = record.heights
    if record.task_id in (INFORMATION_GATHERING, STEPPING_INFORMATION_GATHERING):
        return float(sum(sorted(heights.values())[-2:]))
    config, _ = best_configuration(heights)
    return two_tower_return(config, heights)


def _auxiliary_rows(records: Sequence[RunRecord]) -> List[dict]:
    rows: List[dict] = []

    def add(task_id: str, n_blocks: int, metric: str, values: Sequence[float]) -> None:
        if len(values):
            rows.append({"task": task_id, "n_blocks": n_blocks, "metric": f"{metric}_mean", "value": float(np.mean(values))})
            rows.append({"task": task_id, "n_blocks": n_blocks, "metric": f"{metric}_median", "value": float(np.median(values))})

    groups: Dict[Tuple[str, int], List[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.task_id, record.n_blocks), []).append(record)

    for (task_id, n_blocks), group in sorted(groups.items()):
        total = len(group)
        included = [r for r in group if r.included]
        rows.append(
            {"task": task_id, "n_blocks": n_blocks, "metric": "exclusion_rate", "value": (total - len(included)) / total}
        )

        # 진행 비율 척도: 블록당 측정 횟수
        if ActionKind.MEASURE in get_task(task_id).allowed:
            counts: List[float] = []
            for r in included:
                if task_id == HEIGHT_ESTIMATION:
                    counts.append(r.measurement_counts.get(r.target_block, 0))
                else:
                    counts.extend(r.measurement_counts.get(b, 0) for b in sorted(r.heights))
            add(task_id, n_blocks, "measurements_per_block", counts)

        if task_id == FALLING_TOWER:
            add(task_id, n_blocks, "final_height", [r.return_value for r in included])
            add(task_id, n_blocks, "rebuilds", [r.rebuilds for r in included])
            add(task_id, n_blocks, "collapses", [r.collapses for r in included])

        if task_id in ANALYZED_TASKS:
            add(task_id, n_blocks, "instance_regret", [_instance_optimum(r) - r.return_value for r in included])
    return rows


def analyze(
    records_dir: Union[str, Path],
    *,
    mc_iterations: int = settings.MC_ITERATIONS,
    bootstrap: int = settings.BOOTSTRAP_REPLICATES,
    alpha: float = settings.CONFIDENCE_ALPHA,
    seed: int = 0,
    capabilities_from: Optional[Union[str, Path]] = None,
    strict: bool = True,
    out_dir: Optional[Union[str, Path]] = None,
) -> ResultsBundle:
    """
    저장된 RunRecord로 GD 추정과 보조 지표를 계산합니다.

    Args:
        records_dir (str | Path): 실행 결과 디렉토리 (또는 records 디렉토리)
        mc_iterations (int): 몬테카를로 반복 수 N
        bootstrap (int): 부트스트랩 반복 수 B
        alpha (float): 신뢰구간 유의 수준
        seed (int): 분석 난수 시드
        capabilities_from (str | Path, optional): 능력 프로필을 만들 다른 실행 디렉토리 (기준선 보정용)
        strict (bool): True면 빠진 하위 작업이 있을 때 예외 발생, False면 gaps에 기록
        out_dir (str | Path, optional): 지정하면 보고서 파일을 씁니다

    Returns:
        ResultsBundle: 분석 결과

    Raises:
        MissingSubtaskError: strict이고 필요한 하위 작업 층이 없을 때 발생 (빠진 작업과 층 명시)
    """
    records = load_records(records_dir)
    capability_records = load_records(capabilities_from) if capabilities_from is not None else records
    profiles = build_capability_profiles(capability_records)

    bundle = ResultsBundle(
        records=records,
        profiles=profiles,
        exclusions=_exclusion_rows(records),
        aux=_auxiliary_rows(records),
        parameters={
            "mc_iterations": mc_iterations,
            "bootstrap": bootstrap,
            "alpha": alpha,
            "seed": seed,
            "capabilities_from": str(capabilities_from) if capabilities_from is not None else None,
            "prompt_version": settings.PROMPT_VERSION,
        },
    )

    present = {r.task_id for r in records}
    for task_id in [t for t in ANALYZED_TASKS if t in present]:
        strata: Dict[int, ReturnSamples] = {}
        for n_blocks in sorted({r.n_blocks for r in records if r.task_id == task_id}):
            runs = observed_runs(records, task_id, n_blocks)
            if not runs:
                bundle.gaps.append(f"'{task_id}' 블록 {n_blocks}개: 포함된 에피소드가 없습니다")
                continue
            profile = profiles.get(n_blocks, CapabilityProfile(n_blocks))
            try:
                profile.require(task_id)
            except MissingSubtaskError as e:
                if strict:
                    raise
                logger.warning(str(e))
                bundle.gaps.append(str(e))
                continue
            rng = np.random.default_rng([seed, _stream_key(task_id), n_blocks])
            strata[n_blocks] = simulate(task_id, mc_iterations, runs, profile, rng)

        if not strata:
            continue
        bundle.samples[task_id] = strata
        rng = np.random.default_rng([seed, _stream_key(task_id), 0])
        bundle.estimates[task_id] = estimate_gd(strata, bootstrap, alpha, rng, task_id)
        used = [r for r in records if r.task_id == task_id and r.n_blocks in strata]
        used += [r for r in capability_records if r.n_blocks in strata and r.task_id != task_id]
        bundle.input_hashes[task_id] = _records_hash(used)
        logger.info(
            "%s: GD %.3f [%.3f, %.3f]",
            task_id,
            bundle.estimates[task_id].aggregate,
            bundle.estimates[task_id].ci_low,
            bundle.estimates[task_id].ci_high,
        )

    if out_dir is not None:
        report(bundle, out_dir)
    return bundle


# ---------------------------------------------------------------------------
# 보고서


def _finite(value: float) -> Optional[float]:
    return None if value is None or not math.isfinite(value) else float(value)


def gd_table(bundle: ResultsBundle) -> pd.DataFrame:
    """작업마다 층별 행과 집계("all") 행"""
    rows = []
    for task_id, estimate in bundle.estimates.items():
        total_runs = total_excluded = 0
        for n_blocks in sorted(bundle.samples[task_id]):
            n_runs, n_excluded = bundle.exclusion_counts(task_id, n_blocks)
            total_runs += n_runs
            total_excluded += n_excluded
            low, high = estimate.stratum_ci.get(n_blocks, (math.nan, math.nan))
            rows.append([task_id, str(n_blocks), estimate.per_stratum.get(n_blocks, math.nan), low, high, n_runs, n_excluded])
        rows.append([task_id, "all", estimate.aggregate, estimate.ci_low, estimate.ci_high, total_runs, total_excluded])
    return pd.DataFrame(rows, columns=GD_COLUMNS)


def regret_table(bundle: ResultsBundle) -> pd.DataFrame:
    """regret = mean(r_star) - mean(r_pi)"""
    rows = []
    for task_id, strata in bundle.samples.items():
        for n_blocks, samples in sorted(strata.items()):
            means = samples.means
            rows.append(
                [
                    task_id,
                    n_blocks,
                    means["r_pi"],
                    means["r_star"],
                    means["r_zero"],
                    means["r_star"] - means["r_pi"],
                    samples.clamped,
                ]
            )
    return pd.DataFrame(rows, columns=REGRET_COLUMNS)


def capability_table(bundle: ResultsBundle) -> pd.DataFrame:
    rows = []
    for n_blocks, profile in sorted(bundle.profiles.items()):
        total_configurations = 2 ** (n_blocks - 1) - 1
        for name, regret_kind in _CAPABILITY_REGRETS.items():
            values = getattr(profile, name)
            if values.size == 0:
                continue
            if regret_kind == "fraction_missed":
                regret = 1.0 - float(np.mean(np.minimum(values, total_configurations))) / total_configurations
            else:
                regret = float(np.mean(np.abs(values)))
            rows.append([n_blocks, name, int(values.size), float(np.mean(values)), float(np.median(values)), regret])
    return pd.DataFrame(rows, columns=CAPABILITY_COLUMNS)


def aux_table(bundle: ResultsBundle) -> pd.DataFrame:
    return pd.DataFrame(bundle.aux, columns=AUX_COLUMNS)


def plot_data(bundle: ResultsBundle) -> dict:
    """외부 도구로 그릴 수 있는 계열(series)과 오차 막대"""
    data: dict = {"gd": {}, "regret": {}}
    for task_id, estimate in bundle.estimates.items():
        x = [str(n) for n in sorted(bundle.samples[task_id])] + ["all"]
        values = [estimate.per_stratum.get(int(n), math.nan) for n in x[:-1]] + [estimate.aggregate]
        bounds = [estimate.stratum_ci.get(int(n), (math.nan, math.nan)) for n in x[:-1]]
        bounds.append((estimate.ci_low, estimate.ci_high))
        data["gd"][task_id] = {
            "x": x,
            "y": [_finite(v) for v in values],
            "ci_low": [_finite(low) for low, _ in bounds],
            "ci_high": [_finite(high) for _, high in bounds],
        }
    for task_id, strata in bundle.samples.items():
        data["regret"][task_id] = {
            "x": [str(n) for n in sorted(strata)],
            "y": [_finite(s.means["r_star"] - s.means["r_pi"]) for _, s in sorted(strata.items())],
        }
    measurement = [row for row in bundle.aux if row["metric"].startswith("measurements_per_block")]
    data["measurements_per_block"] = [{**row, "value": _finite(row["value"])} for row in measurement]
    return data


def _json_safe(value):
    if isinstance(value, float):
        return _finite(value)
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _bundle_document(bundle: ResultsBundle) -> dict:
    return {
        "parameters": bundle.parameters,
        "profiles": {str(n): p.to_dict() for n, p in sorted(bundle.profiles.items())},
        "estimates": {t: e.to_dict() for t, e in bundle.estimates.items()},
        "samples": {
            t: {str(n): {"iterations": s.iterations, "clamped": s.clamped} for n, s in sorted(strata.items())}
            for t, strata in bundle.samples.items()
        },
        "exclusions": bundle.exclusions,
        "aux": bundle.aux,
        "gaps": bundle.gaps,
        "input_hashes": bundle.input_hashes,
    }


def report(bundle: ResultsBundle, out_dir: Union[str, Path]) -> List[Path]:
    """
    보고서 파일을 씁니다: gd.csv, regret.csv, capabilities.csv, aux.csv, plot_data.json, bundle.json, samples.npz

    결과가 비어 있으면 헤더만 있는 CSV를 씁니다.

    Returns:
        List[Path]: 작성한 파일 경로
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    for name, table in (
        ("gd.csv", gd_table(bundle)),
        ("regret.csv", regret_table(bundle)),
        ("capabilities.csv", capability_table(bundle)),
        ("aux.csv", aux_table(bundle)),
    ):
        path = out / name
        write_atomic(path, table.to_csv(index=False, float_format="%.6f"))
        written.append(path)

    for name, document in (("plot_data.json", plot_data(bundle)), ("bundle.json", _bundle_document(bundle))):
        path = out / name
        write_atomic(path, json.dumps(_json_safe(document), ensure_ascii=False, indent=2, sort_keys=True))
        written.append(path)

    arrays = {
        f"{task_id}|{n_blocks}|{kind}": getattr(samples, kind)
        for task_id, strata in bundle.samples.items()
        for n_blocks, samples in strata.items()
        for kind in ("r_pi", "r_star", "r_zero")
    }
    path = out / "samples.npz"
    np.savez_compressed(path, **arrays)
    written.append(path)

    logger.info("보고서를 작성했습니다: %s", out)
    return written


def load_bundle(directory: Union[str, Path]) -> ResultsBundle:
    """
    bundle.json과 samples.npz로 ResultsBundle을 복원합니다. records 디렉토리가 있으면 RunRecord도 읽습니다.

    Raises:
        ConfigurationError: bundle.json이 없을 때 발생
    """
    directory = Path(directory)
    path = directory / "bundle.json"
    if not path.exists():
        raise ConfigurationError(f"bundle.json이 없습니다: {directory}")
    document = json.loads(path.read_text(encoding="utf-8"))

    def nan_if_none(value):
        return math.nan if value is None else value

    samples: Dict[str, Dict[int, ReturnSamples]] = {}
    with np.load(directory / "samples.npz") as arrays:
        for task_id, strata in document["samples"].items():
            for n, meta in strata.items():
                n_blocks = int(n)
                samples.setdefault(task_id, {})[n_blocks] = ReturnSamples(
                    r_pi=arrays[f"{task_id}|{n_blocks}|r_pi"],
                    r_star=arrays[f"{task_id}|{n_blocks}|r_star"],
                    r_zero=arrays[f"{task_id}|{n_blocks}|r_zero"],
                    n_blocks=n_blocks,
                    iterations=meta["iterations"],
                    task_id=task_id,
                    clamped=meta["clamped"],
                )

    estimates = {}
    for task_id, data in document["estimates"].items():
        data = dict(data)
        for key in ("aggregate", "ci_low", "ci_high", "bootstrap_mean"):
            data[key] = nan_if_none(data[key])
        data["per_stratum"] = {n: nan_if_none(v) for n, v in data["per_stratum"].items()}
        data["stratum_ci"] = {n: [nan_if_none(v) for v in pair] for n, pair in data["stratum_ci"].items()}
        estimates[task_id] = GDEstimate.from_dict(data)

    records = load_records(directory) if (directory / FileHandler.RECORDS).is_dir() else []
    return ResultsBundle(
        records=records,
        profiles={int(n): CapabilityProfile.from_dict(p) for n, p in document["profiles"].items()},
        samples=samples,
        estimates=estimates,
        exclusions=document["exclusions"],
        aux=[{**row, "value": nan_if_none(row["value"])} for row in document["aux"]],
        gaps=document["gaps"],
        input_hashes=document["input_hashes"],
        parameters=document["parameters"],
    )
