"""
GD-Bench: Blocksworld 작업으로 에이전트의 목표 지향성(goal-directedness)을 측정하는 명령줄 도구

사용 예:
    python app.py run --config configs/oracle.toml --blocks 3,4,5 --seeds 30
    python app.py analyze --in results/oracle
    python app.py report --in results/oracle
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from config.run_config import AgentSpec, load_run_config
from config.settings import settings
from utils.errors import AuthenticationError, ConfigurationError, MissingSubtaskError
from utils.harness import ResultsBundle, analyze, gd_table, load_bundle, report, run
from utils.logger import get_logger

logger = get_logger(__name__)

# 종료 코드
EXIT_CONFIGURATION = 2
EXIT_AUTHENTICATION = 3
EXIT_MISSING_SUBTASK = 4


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"쉼표로 구분된 정수 목록이 필요합니다: {text}") from None


def _seeds(text: str):
    # "30" -> 시드 30개, "1,5,9" -> 명시적 시드 목록
    values = _int_list(text)
    return values[0] if len(values) == 1 and "," not in text else values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gd-bench", description=settings.APP_DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="실험 매트릭스 실행 후 분석")
    run_parser.add_argument("--config", type=Path, help="TOML 실행 설정 파일")
    run_parser.add_argument("--agent", help="에이전트 축약형 (random, random:7, oracle:20, noisy:2, gemini:<model>)")
    run_parser.add_argument("--tasks", nargs="+", help="작업 id 목록")
    run_parser.add_argument("--blocks", type=_int_list, help="블록 수 목록 (예: 3,4,5)")
    run_parser.add_argument("--seeds", type=_seeds, help="시드 수 또는 쉼표로 구분된 시드 목록")
    run_parser.add_argument("--prompt", choices=settings.PROMPT_VARIANTS, help="프롬프트 동기 부여 변형")
    run_parser.add_argument("--workers", type=int, help="동시 실행 에피소드 수")
    run_parser.add_argument("--out", type=Path, help="결과 디렉토리")

    analyze_parser = sub.add_parser("analyze", help="저장된 RunRecord 분석")
    analyze_parser.add_argument("--in", dest="input", type=Path, required=True, help="실행 결과 디렉토리")
    analyze_parser.add_argument("--out", type=Path, help="보고서 디렉토리 (기본값: --in)")
    analyze_parser.add_argument("--mc-iterations", type=int, default=settings.MC_ITERATIONS)
    analyze_parser.add_argument("--bootstrap", type=int, default=settings.BOOTSTRAP_REPLICATES)
    analyze_parser.add_argument("--alpha", type=float, default=settings.CONFIDENCE_ALPHA)
    analyze_parser.add_argument("--seed", type=int, default=0, help="분석 난수 시드")
    analyze_parser.add_argument(
        "--capabilities-from", type=Path, help="능력 프로필을 가져올 다른 실행 디렉토리 (기준선 보정)"
    )
    analyze_parser.add_argument(
        "--allow-gaps", action="store_true", help="빠진 하위 작업이 있어도 가능한 작업만 분석"
    )

    report_parser = sub.add_parser("report", help="저장된 분석 결과로 보고서 다시 작성")
    report_parser.add_argument("--in", dest="input", type=Path, required=True, help="bundle.json이 있는 디렉토리")
    report_parser.add_argument("--out", type=Path, help="보고서 디렉토리 (기본값: --in)")
    return parser


def print_summary(bundle: ResultsBundle) -> None:
    """GD 표와 빠진 항목을 콘솔에 출력합니다."""
    table = gd_table(bundle)
    if table.empty:
        print("분석할 복합 작업 결과가 없습니다.")
    else:
        print(table.to_string(index=False, float_format=lambda v: f"{v:.3f}"))
    for gap in bundle.gaps:
        print(f"[누락] {gap}")


def command_run(args: argparse.Namespace) -> ResultsBundle:
    overrides = {
        "tasks": args.tasks,
        "block_counts": args.blocks,
        "seeds": args.seeds,
        "prompt_variant": args.prompt,
        "workers": args.workers,
        "output_dir": args.out,
        "agent": AgentSpec.parse(args.agent) if args.agent else None,
    }
    config = load_run_config(args.config, **overrides)
    logger.info(
        "실행: 작업 %s, 블록 %s, 시드 %d개, 에이전트 %s",
        ", ".join(config.tasks), config.block_counts, len(config.seed_list), config.agent.kind,
    )
    return run(config)


def command_analyze(args: argparse.Namespace) -> ResultsBundle:
    return analyze(
        args.input,
        mc_iterations=args.mc_iterations,
        bootstrap=args.bootstrap,
        alpha=args.alpha,
        seed=args.seed,
        capabilities_from=args.capabilities_from,
        strict=not args.allow_gaps,
        out_dir=args.out or args.input,
    )


def command_report(args: argparse.Namespace) -> ResultsBundle:
    bundle = load_bundle(args.input)
    report(bundle, args.out or args.input)
    return bundle


COMMANDS = {"run": command_run, "analyze": command_analyze, "report": command_report}


def main(argv: Optional[List[str]] = None) -> int:
    """
    명령줄 진입점

    Returns:
        int: 종료 코드
    """
    args = build_parser().parse_args(argv)
    settings.initialize()
    try:
        bundle = COMMANDS[args.command](args)
    except AuthenticationError as e:
        logger.error("인증 오류: %s", str(e))
        return EXIT_AUTHENTICATION
    except MissingSubtaskError as e:
        logger.error("%s (--allow-gaps로 가능한 작업만 분석할 수 있습니다)", str(e))
        return EXIT_MISSING_SUBTASK
    except ConfigurationError as e:
        logger.error("설정 오류: %s", str(e))
        return EXIT_CONFIGURATION
    print_summary(bundle)
    return 0


if __name__ == "__main__":
    sys.exit(main())
