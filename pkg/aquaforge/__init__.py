"""
수중 영상 화질 개선 시스템 (AquaForge)

지배적 열화(dominant degradation)를 분류하고, 열화 유형별 복원 네트워크로
반복 개선한 뒤, 수중 IQA 지표로 결과를 평가합니다.
"""

__version__ = "1.0.0"
