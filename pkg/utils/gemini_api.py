"""
Google Gemini API와 인터페이스하는 에이전트 어댑터 모듈
"""
from typing import Dict, List, Optional, Tuple

import backoff
import google.generativeai as genai
from google.api_core import exceptions as google_exceptions

from config.settings import settings
from utils.agents import RateLimiter, RemoteAgent
from utils.errors import AuthenticationError, RemoteAgentError
from utils.logger import get_logger

logger = get_logger(__name__)

# 재시도할 만한 일시적 오류
TRANSIENT_ERRORS = (
    google_exceptions.ResourceExhausted,
    google_exceptions.ServiceUnavailable,
    google_exceptions.DeadlineExceeded,
    google_exceptions.InternalServerError,
    ConnectionError,
    TimeoutError,
)

# 재시도하지 않고 매트릭스를 중단하는 인증 오류
AUTH_ERRORS = (
    google_exceptions.Unauthenticated,
    google_exceptions.PermissionDenied,
)


class GeminiChatAgent(RemoteAgent):
    """
    Google Gemini 모델을 블록 월드 에이전트로 사용하는 클래스
    """

    def __init__(
        self,
        api_key: str,
        model: Optional[str] = None,
        temperature: Optional[float] = None,
        rate_limiter: Optional[RateLimiter] = None,
        agent_id: Optional[str] = None,
    ):
        """
        Gemini 에이전트를 초기화합니다.

        Args:
            api_key (str): Google Gemini API 키
            model (str, optional): 모델 이름. 기본값은 settings.DEFAULT_MODEL
            temperature (float, optional): 샘플링 온도. None이면 공급자 기본값 사용
            rate_limiter (RateLimiter, optional): 공유 요청 속도 제한기
            agent_id (str, optional): 에이전트 id
        """
        model = model or settings.DEFAULT_MODEL
        super().__init__(agent_id or f"gemini:{model}", model, temperature, rate_limiter, {"provider": "gemini"})
        self.api_key = api_key
        genai.configure(api_key=api_key)

    def build_request(self, messages: List[Dict[str, str]]) -> dict:
        """
        채팅 메시지 목록을 Gemini 요청 형식으로 변환합니다.

        시스템 메시지는 system_instruction으로, assistant 역할은 model 역할로 바뀝니다.
        """
        system = "\n\n".join(m["content"] for m in messages if m["role"] == "system")
        contents = [
            {"role": "model" if m["role"] == "assistant" else "user", "parts": [m["content"]]}
            for m in messages
            if m["role"] != "system"
        ]
        generation_config = {}
        if self.temperature is not None:
            generation_config["temperature"] = self.temperature
        return {
            "model": self.model,
            "system_instruction": system,
            "contents": contents,
            "generation_config": generation_config,
        }

    def send(self, request: dict) -> Tuple[str, Optional[dict]]:
        try:
            return self._generate(request)
        except AUTH_ERRORS as e:
            raise AuthenticationError(f"Gemini API 인증 실패: {str(e)}") from e
        except TRANSIENT_ERRORS as e:
            raise RemoteAgentError(
                f"Gemini API 호출이 {settings.REMOTE_MAX_TRIES}회 시도 후에도 실패했습니다: {str(e)}"
            ) from e
        except google_exceptions.GoogleAPIError as e:
            raise RemoteAgentError(f"Gemini API 오류: {str(e)}") from e

    @backoff.on_exception(backoff.expo, TRANSIENT_ERRORS, max_tries=settings.REMOTE_MAX_TRIES)
    def _generate(self, request: dict) -> Tuple[str, Optional[dict]]:
        model = genai.GenerativeModel(
            request["model"],
            system_instruction=request["system_instruction"] or None,
            generation_config=request["generation_config"] or None,
        )
        response = model.generate_content(
            request["contents"],
            request_options={"timeout": settings.REQUEST_TIMEOUT_SECONDS},
        )

        # 안전 필터 등으로 텍스트가 없으면 빈 메시지로 처리 (형식 안내 후 재시도됨)
        try:
            text = response.text
        except ValueError:
            logger.warning("Gemini 응답에 텍스트가 없습니다: %s", getattr(response, "prompt_feedback", None))
            text = ""

        usage = None
        metadata = getattr(response, "usage_metadata", None)
        if metadata is not None:
            usage = {
                "prompt_tokens": getattr(metadata, "prompt_token_count", None),
                "completion_tokens": getattr(metadata, "candidates_token_count", None),
            }
        return text, usage
