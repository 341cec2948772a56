"""
환경 변수 기반 설정
"""

import os
import logging

from dotenv import load_dotenv

# 환경 변수 로드
load_dotenv()

# 실행 설정
RUNTIME_CONFIG = {
    'threads': int(os.getenv('AQUAFORGE_THREADS', os.cpu_count() or 1)),
    'log_level': os.getenv('AQUAFORGE_LOG_LEVEL', 'INFO').upper(),
    'input_side': int(os.getenv('AQUAFORGE_INPUT_SIDE', 32)),
    'seed': int(os.getenv('AQUAFORGE_SEED', 0)),
}

LOG_FORMAT = "[%(asctime)s] %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def worker_count() -> int:
    """병렬 작업자 수 (최소 1)"""
    return max(1, RUNTIME_CONFIG['threads'])


def configure_logging(level: str = None) -> None:
    """루트 로거 설정 (CLI 진입 시 한 번만 호출)"""
    logging.basicConfig(
        level=getattr(logging, level or RUNTIME_CONFIG['log_level'], logging.INFO),
        format=LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
    )
