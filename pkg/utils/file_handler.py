"""
실행 결과(트랜스크립트, RunRecord, 원격 요청 로그) 저장 및 로드를 위한 유틸리티 모듈
"""
import json
import os
import tempfile
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Union

from utils.agents import Transcript
from utils.logger import get_logger
from utils.tasks import RunRecord, RunStatus

logger = get_logger(__name__)

PathLike = Union[str, Path]


def safe_name(name: str) -> str:
    """파일 이름에 쓸 수 없는 문자를 제거합니다."""
    return "".join(c for c in name if c.isalnum() or c in "._-")


def cell_name(task_id: str, n_blocks: int, seed: int) -> str:
    """셀 (작업, 블록 수, 시드)의 파일 이름 기본형: <task>_<n>b_<seed>"""
    return f"{safe_name(task_id)}_{n_blocks}b_{seed}"


def write_atomic(path: PathLike, text: str) -> None:
    """
    임시 파일에 쓴 뒤 os.replace로 교체합니다. 중단되어도 반쯤 쓰인 파일은 남지 않습니다.
    """
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


class FileHandler:
    """
    실행 디렉토리 하나의 파일 배치를 담당하는 클래스

    <root>/transcripts/<cell>.jsonl, <root>/records/<cell>.json, <root>/requests/<cell>.jsonl
    """

    TRANSCRIPTS = "transcripts"
    RECORDS = "records"
    REQUESTS = "requests"

    def __init__(self, root: PathLike):
        """
        Args:
            root (PathLike): 실행 결과 디렉토리
        """
        self.root = Path(root)
        for sub in (self.TRANSCRIPTS, self.RECORDS, self.REQUESTS):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        logger.debug("결과 디렉토리: %s", self.root)

    def record_path(self, task_id: str, n_blocks: int, seed: int) -> Path:
        return self.root / self.RECORDS / f"{cell_name(task_id, n_blocks, seed)}.json"

    def transcript_path(self, task_id: str, n_blocks: int, seed: int) -> Path:
        return self.root / self.TRANSCRIPTS / f"{cell_name(task_id, n_blocks, seed)}.jsonl"

    def request_path(self, task_id: str, n_blocks: int, seed: int) -> Path:
        return self.root / self.REQUESTS / f"{cell_name(task_id, n_blocks, seed)}.jsonl"

    def is_complete(self, task_id: str, n_blocks: int, seed: int) -> bool:
        """RunRecord 파일이 있으면 완료된 셀입니다. FAILED 기록은 다시 실행할 셀로 봅니다."""
        path = self.record_path(task_id, n_blocks, seed)
        if not path.exists():
            return False
        record = RunRecord.model_validate_json(path.read_text(encoding="utf-8"))
        return record.status is not RunStatus.FAILED

    def save_transcript(self, transcript: Transcript, task_id: str, n_blocks: int, seed: int) -> Path:
        """
        트랜스크립트를 JSON Lines로 저장합니다 (첫 줄은 메타데이터).

        Returns:
            Path: 저장된 파일 경로
        """
        path = self.transcript_path(task_id, n_blocks, seed)
        lines = [json.dumps(entry, ensure_ascii=False, sort_keys=True) for entry in transcript.to_records()]
        write_atomic(path, "\n".join(lines) + "\n")
        return path

    def save_record(self, record: RunRecord) -> Path:
        """
        RunRecord를 원자적으로 저장합니다. 트랜스크립트를 먼저 저장한 뒤 호출해야 합니다.
        """
        path = self.record_path(record.task_id, record.n_blocks, record.seed)
        write_atomic(path, record.model_dump_json(indent=2))
        return path

    def request_logger(self, task_id: str, n_blocks: int, seed: int) -> Callable[[dict], None]:
        """
        원격 요청 로그 함수를 반환합니다. 각 항목은 즉시 디스크에 기록됩니다.
        """
        path = self.request_path(task_id, n_blocks, seed)
        if path.exists():
            # 중단된 이전 시도의 로그는 새로 시작
            path.unlink()

        def log(entry: dict) -> None:
            with open(path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
                f.flush()
                os.fsync(f.fileno())

        return log

    def load_transcript(self, task_id: str, n_blocks: int, seed: int) -> Transcript:
        return load_transcript(self.transcript_path(task_id, n_blocks, seed))

    def iter_records(self) -> Iterator[RunRecord]:
        yield from iter_records(self.root / self.RECORDS)

    def load_records(self) -> List[RunRecord]:
        return load_records(self.root)


def load_transcript(path: PathLike) -> Transcript:
    """JSON Lines 트랜스크립트 파일을 읽습니다."""
    with open(path, "r", encoding="utf-8") as f:
        rows = [json.loads(line) for line in f if line.strip()]
    return Transcript.from_records(rows)


def iter_records(directory: PathLike) -> Iterator[RunRecord]:
    for path in sorted(Path(directory).glob("*.json")):
        yield RunRecord.model_validate_json(path.read_text(encoding="utf-8"))


def load_records(root: PathLike, *, subdir: Optional[str] = FileHandler.RECORDS) -> List[RunRecord]:
    """
    실행 디렉토리(또는 records 디렉토리)의 모든 RunRecord를 셀 순서로 읽습니다.

    Args:
        root (PathLike): 실행 결과 디렉토리 또는 records 디렉토리

    Returns:
        List[RunRecord]: (작업, 블록 수, 시드) 순으로 정렬된 기록
    """
    root = Path(root)
    directory = root / subdir if subdir and (root / subdir).is_dir() else root
    records = list(iter_records(directory))
    records.sort(key=lambda r: r.cell)
    logger.info("RunRecord %d개를 읽었습니다: %s", len(records), directory)
    return records
