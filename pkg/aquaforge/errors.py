"""
도메인 예외 정의

모든 예외는 AquaforgeError를 상속합니다. 입력 검증 오류는 ValueError도 함께 상속합니다.
"""


class AquaforgeError(Exception):
    """최상위 예외"""


class ConfigError(AquaforgeError, ValueError):
    """설정 파일/인자 오류 (CLI 종료 코드 2)"""


class ImageFormatError(AquaforgeError, ValueError):
    """읽을 수 없는 파일, 지원하지 않는 비트 깊이"""


class ShapeMismatchError(AquaforgeError, ValueError):
    """영상/텐서 크기 불일치"""


class ImageTooSmallError(AquaforgeError, ValueError):
    """윈도우보다 작은 영상"""


class DegradationError(AquaforgeError, ValueError):
    """잘못된 열화 파라미터"""


class DatasetError(AquaforgeError):
    """데이터셋 구축/조회 실패"""


class NetworkDefinitionError(AquaforgeError, ValueError):
    """잘못된 네트워크 그래프"""


class TrainingDivergedError(AquaforgeError):
    """학습 손실이 유한하지 않음"""


class CheckpointError(AquaforgeError):
    """체크포인트 파일 오류"""


class IncompleteSuiteError(AquaforgeError):
    """복원 네트워크 체크포인트 누락"""


class MetricError(AquaforgeError, ValueError):
    """유한하지 않은 지표 값"""


class GateFailure(AquaforgeError):
    """수용 기준(gate) 미달 (CLI 종료 코드 1)"""
