"""
에이전트 메시지에서 행동 태그를 해석하는 유틸리티 모듈
"""
import dataclasses
import re
from typing import List, Optional

from config.settings import settings
from utils.blocksworld import Action, ActionKind
from utils.errors import ParseFailure


class ActionParser:
    """
    '<measure a>' 형식의 태그를 Action으로 변환하는 클래스

    메시지 안에 태그가 여러 개 있으면 마지막으로 올바른 태그가 채택됩니다.
    """

    def __init__(self):
        """
        행동 파서를 초기화합니다.
        """
        # 태그 패턴 (<...>)
        self.tag_pattern = r'<\s*([^<>]+?)\s*>'

        # 블록 id 패턴 (소문자 알파벳 한 글자)
        block = r'([a-z])'

        # 동사별 패턴 (태그 본문은 소문자로 바꾼 뒤 비교)
        self.verb_patterns = {
            ActionKind.MEASURE: rf'^measure\s+(?:block\s+)?{block}$',
            ActionKind.PICK_UP: rf'^pick\s*up\s+(?:block\s+)?{block}$',
            ActionKind.STACK: rf'^stack\s+(?:block\s+)?{block}\s+on(?:\s+top\s+of)?\s+(?:block\s+)?{block}$',
            ActionKind.PUT_DOWN: rf'^put\s*down\s+(?:block\s+)?{block}$',
            ActionKind.TOWERS: r'^towers?\s*:?\s*(.*)$',
            ActionKind.HEIGHT: rf'^height\s*:?\s*(?:{block}\s*[:=]?\s*)?(-?\d+(?:\.\d+)?)\s*(?:cm)?$',
            ActionKind.DONE: r'^done\.?$',
        }

        # 탑 선언 내부의 목록 패턴 ([a, b])
        self.tower_list_pattern = r'\[([^\[\]]*)\]'

        # 목록 사이에 허용되는 구분자
        self.tower_separator_pattern = r'^[\s;,]*$'

        # 마크다운 코드 블록 표기
        self.markdown_patterns = [
            r'```[a-z]*',
            r'`',
        ]

    def find_tags(self, text: str) -> List[str]:
        """메시지에 들어 있는 모든 태그 본문을 순서대로 반환합니다."""
        cleaned = text or ""
        for pattern in self.markdown_patterns:
            cleaned = re.sub(pattern, '', cleaned)
        return [m.group(0) for m in re.finditer(self.tag_pattern, cleaned)]

    def parse(self, text: str) -> Action:
        """
        메시지에서 마지막으로 올바른 태그를 찾아 Action으로 변환합니다.

        Args:
            text (str): 에이전트 메시지 (추론 + 행동 태그)

        Returns:
            Action: 해석된 행동 (raw_text에 태그 원문 보관)

        Raises:
            ParseFailure: 태그가 없거나 모든 태그가 잘못된 경우 발생
        """
        tags = self.find_tags(text)
        if not tags:
            raise ParseFailure(text or "", "행동 태그를 찾을 수 없습니다")

        for tag in reversed(tags):
            action = self._parse_tag(tag)
            if action is not None:
                return dataclasses.replace(action, raw_text=tag)

        raise ParseFailure(text, "알 수 없는 동사이거나 잘못된 태그입니다")

    def _parse_tag(self, tag: str) -> Optional[Action]:
        body = re.match(self.tag_pattern, tag).group(1)
        body = re.sub(r'\s+', ' ', body.strip().lower())

        for kind, pattern in self.verb_patterns.items():
            match = re.match(pattern, body)
            if not match:
                continue
            if kind is ActionKind.MEASURE:
                return Action.measure(match.group(1))
            if kind is ActionKind.PICK_UP:
                return Action.pick_up(match.group(1))
            if kind is ActionKind.STACK:
                return Action.stack(match.group(1), match.group(2))
            if kind is ActionKind.PUT_DOWN:
                return Action.put_down(match.group(1))
            if kind is ActionKind.TOWERS:
                towers = self._parse_towers(match.group(1))
                return Action.declare_towers(towers) if towers is not None else None
            if kind is ActionKind.HEIGHT:
                return Action.height(float(match.group(2)), block=match.group(1))
            return Action.done()
        return None

    def _parse_towers(self, body: str) -> Optional[List[List[str]]]:
        lists = list(re.finditer(self.tower_list_pattern, body))
        if not lists:
            return None

        # 목록 밖에 다른 글자가 있으면 잘못된 선언
        leftover = re.sub(self.tower_list_pattern, '', body)
        if not re.match(self.tower_separator_pattern, leftover):
            return None

        towers = []
        seen = set()
        for match in lists:
            items = [item.strip() for item in match.group(1).split(',') if item.strip()]
            tower = []
            for item in items:
                if not re.fullmatch(r'[a-z]', item) or item in seen:
                    return None
                seen.add(item)
                tower.append(item)
            towers.append(tower)
        return towers


def format_action(action: Action) -> str:
    """
    Action을 에이전트가 출력하는 태그 형식으로 되돌립니다.

    Args:
        action (Action): 행동

    Returns:
        str: 태그 문자열 (예: '<stack a on b>')
    """
    return f"<{action.describe()}>"


def looks_hallucinated(text: str, limit: int = settings.HALLUCINATION_TAG_LIMIT) -> bool:
    """
    한 메시지에 태그가 limit개보다 많으면 에이전트가 환경 응답을 지어낸 것으로 봅니다.
    """
    return len(_default_parser.find_tags(text)) > limit


_default_parser = ActionParser()


def parse_action(text: str) -> Action:
    """기본 파서로 메시지를 해석합니다."""
    return _default_parser.parse(text)
