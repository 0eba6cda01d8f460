"""
로깅 설정 유틸리티 모듈
"""
import logging
import os

_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
_configured = False


def get_logger(name: str) -> logging.Logger:
    """
    모듈 이름으로 로거를 반환합니다. 최초 호출 시 루트 핸들러를 구성합니다.

    Args:
        name (str): 로거 이름 (보통 __name__)

    Returns:
        logging.Logger: 구성된 로거
    """
    global _configured
    if not _configured:
        level = os.getenv("GD_LOG_LEVEL", "INFO").upper()
        logging.basicConfig(level=level, format=_FORMAT)
        _configured = True
    return logging.getLogger(name)
