"""
실험 매트릭스 실행 설정 (TOML 파일 + CLI 덮어쓰기)
"""
from pathlib import Path
from typing import List, Literal, Optional, Union

import toml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config.settings import settings
from utils.agents import NoisyProfile
from utils.errors import ConfigurationError

AgentKind = Literal["random", "oracle", "noisy", "gemini", "chat", "replay"]
REMOTE_KINDS = ("gemini", "chat")


class AgentSpec(BaseModel):
    """
    에이전트 지정

    kind에 따라 사용하는 필드가 다릅니다:
    oracle은 k, noisy는 profile과 laziness, gemini/chat은 model과 api_key_env,
    replay는 replay_from(트랜스크립트가 있는 실행 디렉토리)을 사용합니다.
    """

    model_config = ConfigDict(extra="forbid")

    kind: AgentKind = "random"
    id: Optional[str] = None
    seed: Optional[int] = None
    k: int = Field(default=20, ge=1)
    profile: NoisyProfile = Field(default_factory=NoisyProfile)
    laziness: float = Field(default=1.0, ge=1.0)
    model: Optional[str] = None
    temperature: Optional[float] = None
    endpoint: Optional[str] = None
    api_key_env: Optional[str] = None
    requests_per_minute: float = Field(default=settings.REQUESTS_PER_MINUTE, gt=0)
    replay_from: Optional[Path] = None

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "AgentSpec":
        if self.kind == "chat" and not self.endpoint:
            raise ValueError("chat 에이전트에는 endpoint가 필요합니다")
        if self.kind == "replay" and self.replay_from is None:
            raise ValueError("replay 에이전트에는 replay_from이 필요합니다")
        return self

    @property
    def remote(self) -> bool:
        return self.kind in REMOTE_KINDS

    @property
    def key_env(self) -> str:
        return self.api_key_env or ("GEMINI_API_KEY" if self.kind == "gemini" else "OPENAI_API_KEY")

    @classmethod
    def parse(cls, text: str) -> "AgentSpec":
        """
        CLI 축약형을 해석합니다: random, random:7, oracle:20, noisy:2 (게으름 계수), gemini:<model>
        """
        kind, _, arg = text.partition(":")
        try:
            if kind == "random":
                return cls(kind="random", seed=int(arg) if arg else None)
            if kind == "oracle":
                return cls(kind="oracle", k=int(arg) if arg else 20)
            if kind == "noisy":
                return cls(kind="noisy", laziness=float(arg) if arg else 1.0)
            if kind == "gemini":
                return cls(kind="gemini", model=arg or None)
        except (ValueError, ValidationError) as e:
            raise ConfigurationError(f"에이전트 지정을 해석할 수 없습니다: {text} ({e})") from e
        raise ConfigurationError(f"CLI에서 지정할 수 없는 에이전트입니다: {text} (설정 파일을 사용하세요)")


class NoiseOverrides(BaseModel):
    """작업 기본 잡음 덮어쓰기. None이면 작업 기본값을 사용합니다."""

    model_config = ConfigDict(extra="forbid")

    measurement_noise: Optional[float] = Field(default=None, ge=0.0)
    perturbation_prob: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    distraction_prob: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    def as_overrides(self) -> dict:
        return self.model_dump(exclude_none=True)


class RunConfig(BaseModel):
    """
    실험 매트릭스 (작업 x 블록 수 x 시드) 설정
    """

    model_config = ConfigDict(extra="forbid")

    tasks: List[str]
    block_counts: List[int] = Field(default_factory=lambda: list(settings.DEFAULT_BLOCK_COUNTS))
    seeds: Union[int, List[int]] = settings.DEFAULT_SEEDS
    agent: AgentSpec = Field(default_factory=AgentSpec)
    prompt_variant: str = "neutral"
    noise: NoiseOverrides = Field(default_factory=NoiseOverrides)
    max_steps: Optional[int] = Field(default=None, ge=1)
    max_steps_per_task: dict = Field(default_factory=dict)
    falling_threshold: Optional[float] = Field(default=None, gt=0)
    mc_iterations: int = Field(default=settings.MC_ITERATIONS, ge=1)
    bootstrap: int = Field(default=settings.BOOTSTRAP_REPLICATES, ge=1000)
    alpha: float = Field(default=settings.CONFIDENCE_ALPHA, gt=0.0, lt=1.0)
    analysis_seed: int = 0
    workers: int = Field(default=1, ge=1)
    corpus_path: Path = settings.DISTRACTION_CORPUS
    output_dir: Path = settings.OUTPUT_DIR

    @field_validator("tasks")
    @classmethod
    def _known_tasks(cls, tasks: List[str]) -> List[str]:
        if not tasks:
            raise ValueError("작업이 하나 이상 필요합니다")
        unknown = [t for t in tasks if t not in settings.KNOWN_TASKS]
        if unknown:
            raise ValueError(f"알 수 없는 작업: {', '.join(unknown)}")
        return tasks

    @field_validator("block_counts")
    @classmethod
    def _block_range(cls, counts: List[int]) -> List[int]:
        if not counts:
            raise ValueError("블록 수가 하나 이상 필요합니다")
        for n in counts:
            if not settings.MIN_BLOCKS <= n <= settings.MAX_BLOCKS:
                raise ValueError(f"블록 수는 {settings.MIN_BLOCKS}~{settings.MAX_BLOCKS} 범위여야 합니다: {n}")
        return sorted(set(counts))

    @field_validator("seeds")
    @classmethod
    def _positive_seeds(cls, seeds: Union[int, List[int]]) -> Union[int, List[int]]:
        if isinstance(seeds, int) and seeds < 1:
            raise ValueError(f"시드 수는 1 이상이어야 합니다: {seeds}")
        if isinstance(seeds, list) and not seeds:
            raise ValueError("시드 목록이 비어 있습니다")
        return seeds

    @field_validator("prompt_variant")
    @classmethod
    def _known_variant(cls, variant: str) -> str:
        if variant not in settings.PROMPT_VARIANTS:
            raise ValueError(f"프롬프트 변형은 {', '.join(settings.PROMPT_VARIANTS)} 중 하나여야 합니다: {variant}")
        return variant

    @property
    def seed_list(self) -> List[int]:
        return list(range(self.seeds)) if isinstance(self.seeds, int) else list(self.seeds)

    def steps_for(self, task_id: str) -> Optional[int]:
        return self.max_steps_per_task.get(task_id, self.max_steps)


def load_run_config(path: Optional[Union[str, Path]] = None, **overrides) -> RunConfig:
    """
    TOML 설정 파일을 읽고 CLI 값을 덮어써 RunConfig를 만듭니다.

    Args:
        path (str | Path, optional): TOML 파일 경로. None이면 덮어쓰기 값만 사용
        **overrides: None이 아닌 값만 적용

    Returns:
        RunConfig: 검증된 설정

    Raises:
        ConfigurationError: 파일을 읽을 수 없거나 값이 유효하지 않을 때 발생
    """
    data: dict = {}
    if path is not None:
        try:
            data = toml.load(path)
        except (OSError, toml.TomlDecodeError) as e:
            raise ConfigurationError(f"설정 파일을 읽을 수 없습니다: {path} ({e})") from e
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"설정이 올바르지 않습니다:\n{e}") from e
