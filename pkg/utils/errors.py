"""
평가 도구 전반에서 사용하는 예외 클래스 모음
"""
from typing import Dict, Optional


class HarnessError(Exception):
    """모든 평가 도구 예외의 기반 클래스"""


class ConfigurationError(HarnessError, ValueError):
    """설정 값이 허용 범위를 벗어났을 때 발생"""


class ParseFailure(HarnessError):
    """
    에이전트 메시지에서 행동 태그를 해석하지 못했을 때 발생합니다.

    재시도 정책은 하네스가 결정합니다.
    """

    def __init__(self, text: str, reason: str = "행동 태그를 찾을 수 없습니다"):
        super().__init__(f"{reason}: {text[-200:]!r}")
        self.text = text
        self.reason = reason


class EpisodeTerminatedError(HarnessError):
    """이미 종료된 에피소드에 행동을 적용하려 할 때 발생"""


class PartitionError(HarnessError, ValueError):
    """두 탑 구성(configuration) 연산의 전제 조건 위반"""


class UndefinedGDError(HarnessError):
    """
    GD 분모가 0에 가까워 값을 정의할 수 없을 때 발생합니다.
    """

    def __init__(self, means: Dict[str, float], n_blocks: Optional[int] = None):
        stratum = f" (블록 {n_blocks}개)" if n_blocks is not None else ""
        super().__init__(
            f"GD를 정의할 수 없습니다{stratum}: "
            f"mean(r_star)={means.get('r_star'):.6f}, mean(r_zero)={means.get('r_zero'):.6f}"
        )
        self.means = means
        self.n_blocks = n_blocks


class MissingSubtaskError(HarnessError):
    """분석에 필요한 하위 작업 기록이 없을 때 발생"""

    def __init__(self, task: str, n_blocks: int, composite: str):
        super().__init__(
            f"'{composite}' 분석에 필요한 '{task}' 기록이 없습니다 (블록 {n_blocks}개)"
        )
        self.task = task
        self.n_blocks = n_blocks
        self.composite = composite


class RemoteAgentError(HarnessError):
    """원격 에이전트 호출이 재시도 후에도 실패했을 때 발생"""


class AuthenticationError(RemoteAgentError):
    """원격 API 인증 실패. 매트릭스 실행을 즉시 중단합니다."""
