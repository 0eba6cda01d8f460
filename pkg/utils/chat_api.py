"""
범용 chat-completion HTTP API 에이전트 어댑터 모듈

엔드포인트 URL, 환경 변수로 받은 인증 토큰, JSON messages 배열만 가정합니다.
"""
from typing import Dict, List, Optional, Tuple

import backoff
import requests

from config.settings import settings
from utils.agents import RateLimiter, RemoteAgent
from utils.errors import AuthenticationError, RemoteAgentError
from utils.logger import get_logger

logger = get_logger(__name__)


class TransientHTTPError(RemoteAgentError):
    """재시도할 수 있는 HTTP 오류 (429, 5xx, 연결 오류)"""


class ChatCompletionAgent(RemoteAgent):
    """
    OpenAI 호환 chat-completion 엔드포인트를 사용하는 에이전트
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str,
        temperature: Optional[float] = None,
        rate_limiter: Optional[RateLimiter] = None,
        agent_id: Optional[str] = None,
        timeout: float = settings.REQUEST_TIMEOUT_SECONDS,
        session: Optional[requests.Session] = None,
    ):
        """
        Args:
            endpoint (str): chat-completion 엔드포인트 URL
            model (str): 모델 이름
            api_key (str): Bearer 인증 토큰
            temperature (float, optional): 샘플링 온도. None이면 요청에 넣지 않음
            rate_limiter (RateLimiter, optional): 공유 요청 속도 제한기
            agent_id (str, optional): 에이전트 id
            timeout (float): 요청 제한 시간 (초)
            session (requests.Session, optional): HTTP 세션
        """
        super().__init__(agent_id or f"chat:{model}", model, temperature, rate_limiter, {"endpoint": endpoint})
        self.endpoint = endpoint
        self.timeout = timeout
        self.session = session or requests.Session()
        self.session.headers.update(
            {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}
        )

    def build_request(self, messages: List[Dict[str, str]]) -> dict:
        body = {"model": self.model, "messages": messages}
        if self.temperature is not None:
            body["temperature"] = self.temperature
        return body

    def send(self, request: dict) -> Tuple[str, Optional[dict]]:
        try:
            return self._post(request)
        except TransientHTTPError as e:
            raise RemoteAgentError(
                f"chat-completion 호출이 {settings.REMOTE_MAX_TRIES}회 시도 후에도 실패했습니다: {str(e)}"
            ) from e

    @backoff.on_exception(backoff.expo, TransientHTTPError, max_tries=settings.REMOTE_MAX_TRIES)
    def _post(self, request: dict) -> Tuple[str, Optional[dict]]:
        try:
            response = self.session.post(self.endpoint, json=request, timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout, requests.exceptions.ChunkedEncodingError) as e:
            logger.warning("chat-completion 연결 오류, 재시도합니다: %s", str(e))
            raise TransientHTTPError(str(e)) from e
        except requests.RequestException as e:
            raise RemoteAgentError(f"chat-completion 요청 실패: {str(e)}") from e

        if response.status_code in (401, 403):
            raise AuthenticationError(
                f"chat-completion 인증 실패 (HTTP {response.status_code}): {response.text[:200]}"
            )
        if response.status_code == 429 or response.status_code >= 500:
            logger.warning("chat-completion 일시 오류 (HTTP %d), 재시도합니다.", response.status_code)
            raise TransientHTTPError(f"HTTP {response.status_code}")
        if response.status_code >= 400:
            raise RemoteAgentError(f"chat-completion 요청 오류 (HTTP {response.status_code}): {response.text[:200]}")

        try:
            data = response.json()
        except ValueError as e:
            raise RemoteAgentError(f"chat-completion 응답이 JSON이 아닙니다: {response.text[:200]}") from e
        try:
            text = data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as e:
            raise RemoteAgentError(f"chat-completion 응답 형식이 올바르지 않습니다: {str(data)[:200]}") from e
        return text, data.get("usage")
