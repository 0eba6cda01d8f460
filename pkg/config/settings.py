"""
GD-Bench 애플리케이션의 설정 모듈
"""
import logging
import os
from pathlib import Path
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# .env 파일 로드 (로컬 개발용)
load_dotenv()

# 기본 설정
class Settings:
    # 애플리케이션 정보
    APP_NAME = "GD-Bench"
    APP_DESCRIPTION = "Blocksworld 환경에서 에이전트의 목표 지향성(goal-directedness)을 측정하는 평가 도구"
    APP_VERSION = "1.0.0"

    # 블록 설정 (cm)
    BLOCK_MIN_HEIGHT = 5.0
    BLOCK_MAX_HEIGHT = 10.0
    MIN_BLOCKS = 3
    MAX_BLOCKS = 15
    MEASUREMENT_NOISE = 0.1  # 표준편차 = 0.1 * 실제 높이
    MEASUREMENT_DECIMALS = 2

    # 노이즈 채널 기본값 (Plan and Execute 계열 작업)
    PERTURBATION_PROB = 0.2
    DISTRACTION_PROB = 0.2

    # 에피소드 설정
    DEFAULT_MAX_STEPS = 100
    FALLING_TOWER_MAX_STEPS = 300
    FALLING_TOWER_BLOCKS = 15
    FALLING_THRESHOLD_RANGE = (30.0, 60.0)
    FORMAT_REMINDERS = 3  # 형식 오류 시 재시도 횟수
    MAX_WASTED_STEPS = 3  # 이 횟수만큼 형식 오류로 스텝을 낭비하면 에피소드 제외
    HALLUCINATION_TAG_LIMIT = 3

    # 작업 id (utils.tasks.TASKS 와 같은 순서)
    KNOWN_TASKS = [
        "information-gathering",
        "cognitive-effort",
        "plan-and-execute",
        "combined",
        "height-estimation",
        "generate-configurations",
        "evaluate-configuration",
        "select-configuration",
        "execution",
        "falling-tower",
        "stepping-information-gathering",
        "stepping-combined",
    ]
    PROMPT_VARIANTS = ["neutral", "motivated", "demotivated"]

    # 실험 매트릭스 기본값
    DEFAULT_BLOCK_COUNTS = [3, 4, 5]
    DEFAULT_SEEDS = 30
    MC_ITERATIONS = 10000
    BOOTSTRAP_REPLICATES = 2000
    CONFIDENCE_ALPHA = 0.05
    GD_EPSILON = 1e-9
    EXHAUSTIVE_BLOCK_LIMIT = 20

    # 원격 에이전트 설정
    DEFAULT_MODEL = "gemini-2.0-flash"
    REMOTE_MAX_TRIES = 3
    REQUESTS_PER_MINUTE = 60
    REQUEST_TIMEOUT_SECONDS = 120

    # API 키 (환경 변수 이름 -> 값)
    API_KEYS: dict = {}
    KNOWN_KEY_NAMES = ["GEMINI_API_KEY", "OPENAI_API_KEY"]

    # 경로 설정
    BASE_DIR = Path(__file__).resolve().parent.parent
    ASSETS_DIR = BASE_DIR / "assets"
    PROMPT_VERSION = "v1"
    PROMPTS_DIR = ASSETS_DIR / "prompts" / PROMPT_VERSION
    DISTRACTION_CORPUS = ASSETS_DIR / "distractions.txt"
    OUTPUT_DIR = BASE_DIR / "results"

    @classmethod
    def get_api_key(cls, env_name: str) -> str:
        """
        원격 에이전트용 API 키를 반환합니다. 우선순위:
        1. initialize()에서 로드한 값
        2. 환경 변수

        Args:
            env_name (str): API 키가 담긴 환경 변수 이름

        Returns:
            str: API 키

        Raises:
            ConfigurationError: API 키가 설정되지 않았을 때 발생
        """
        from utils.errors import ConfigurationError

        key = cls.API_KEYS.get(env_name) or os.getenv(env_name, "")
        if not key:
            raise ConfigurationError(
                f"API 키가 설정되지 않았습니다: {env_name}. "
                ".env 파일 또는 환경 변수에 API 키를 설정하세요."
            )
        return key

    @classmethod
    def initialize(cls) -> None:
        """
        애플리케이션 초기화를 수행합니다.
        """
        for name in cls.KNOWN_KEY_NAMES:
            value = os.getenv(name, "")
            if value:
                cls.API_KEYS[name] = value
                logger.info("환경 변수에서 %s 를 로드했습니다.", name)

# 설정 인스턴스
settings = Settings()
