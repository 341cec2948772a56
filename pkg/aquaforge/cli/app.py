"""
aquaforge 명령행 진입점

Usage:
    python -m aquaforge <subcommand> [options]

Subcommands:
    build-dataset, degrade, train-classifier, train-enhancer, enhance, evaluate,
    eval-classifier, params, histogram, reproduce-tables, end-to-end

종료 코드:
    0 성공 / 1 수용 기준 미달 또는 실행 실패 / 2 사용법·설정 오류
"""

import argparse
import logging

from pydantic import ValidationError

from .commands import setup_commands
from .. import __version__
from ..errors import AquaforgeError, ConfigError, GateFailure
from ..settings import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='aquaforge', description='반복 열화 인식 수중 영상 개선')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', help='로그 레벨 (기본: AQUAFORGE_LOG_LEVEL)')
    subparsers = parser.add_subparsers(dest='command', required=True)
    setup_commands(subparsers)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level.upper() if args.log_level else None)

    try:
        return args.func(args)
    except GateFailure as e:
        logger.error(f"[{args.command}] {e}")
        return EXIT_FAILURE
    except (ValidationError, ConfigError) as e:
        logger.error(f"[{args.command}] 설정 오류: {e}")
        return EXIT_USAGE
    except AquaforgeError as e:
        logger.error(f"[{args.command}] {type(e).__name__}: {e}", exc_info=True)
        return EXIT_FAILURE
    except ValueError as e:
        # 잘못된 slug, id 등 인자 값
        logger.error(f"[{args.command}] 잘못된 인자: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.info("중단됨")
        return EXIT_FAILURE
