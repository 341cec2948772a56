"""
지배적 열화 분류기 (9클래스, Winner-Take-All)

구조:
    Conv3×3 3→128 + LeakyReLU
    → [Conv1×1 128→64 ∥ Conv3×3 128→64] (각 LeakyReLU) → concat → Conv1×1 128→128 + LeakyReLU
    → 블록 입력과 잔차 합 (블록 2개 연속)
    → WeightedGlobalAvgPool → Flatten → Dense 128→9 (logits)

파라미터 수: 블록 2개 201,993 / 블록 1개(ablation) 103,433 (입력 크기와 무관)
"""

from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union
import logging

import numpy as np
from sklearn.metrics import accuracy_score, confusion_matrix, f1_score

from .tensors import fit_side, load_arrays, to_batch
from ..degradation.dataset import records_for_split
from ..errors import NetworkDefinitionError
from ..imaging.core import ImageF
from ..models import (
    NUM_CLASSES,
    ClassifierOutput,
    DatasetManifest,
    DegradationClass,
    EvalSummary,
    TrainConfig,
)
from ..nn.checkpoint import Checkpoint, load_checkpoint
from ..nn.engine import Network
from ..nn.graph import GraphBuilder, NetworkDef
from ..nn.training import softmax, train

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

STEM_CHANNELS = 128
BRANCH_CHANNELS = 64
MIN_SIDE = 16
EVAL_BATCH = 64


def build_classifier(input_side: int = 32, blocks: int = 2) -> NetworkDef:
    """
    분류기 그래프

    Args:
        input_side: 입력 한 변 (16 이상)
        blocks: 잔차 모듈 수 (2: 최종 모델, 1: ablation 변형)
    """
    if input_side < MIN_SIDE:
        raise NetworkDefinitionError(f"분류기 입력 크기는 {MIN_SIDE} 이상이어야 합니다: {input_side}")
    if blocks < 1:
        raise NetworkDefinitionError(f"잔차 모듈은 1개 이상이어야 합니다: {blocks}")

    g = GraphBuilder('classifier', (3, input_side, input_side))
    g.conv(3, STEM_CHANNELS, 3, padding=1, name='stem')
    trunk = g.leaky_relu(name='stem_act')

    for b in range(1, blocks + 1):
        g.conv(STEM_CHANNELS, BRANCH_CHANNELS, 1, inputs=[trunk], name=f'block{b}_1x1')
        left = g.leaky_relu(name=f'block{b}_1x1_act')
        g.conv(STEM_CHANNELS, BRANCH_CHANNELS, 3, padding=1, inputs=[trunk], name=f'block{b}_3x3')
        right = g.leaky_relu(name=f'block{b}_3x3_act')
        g.add('Concat', inputs=[left, right], name=f'block{b}_concat')
        g.conv(2 * BRANCH_CHANNELS, STEM_CHANNELS, 1, name=f'block{b}_fuse')
        fused = g.leaky_relu(name=f'block{b}_fuse_act')
        trunk = g.add('Add', inputs=[fused, trunk], name=f'block{b}_residual')

    g.add('WeightedGlobalAvgPool', in_channels=STEM_CHANNELS, name='pool')
    g.flatten(name='flatten')
    g.dense(STEM_CHANNELS, NUM_CLASSES, init='xavier', name='logits')
    return g.build()


# ==================== 추론 ====================

def output_from_logits(logits: Sequence[float]) -> ClassifierOutput:
    """Winner-Take-All (동점이면 가장 작은 클래스 코드)"""
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    probs = softmax(logits[None, :])[0]
    predicted = int(np.argmax(logits))
    return ClassifierOutput(
        logits=[float(v) for v in logits],
        predicted=DegradationClass(predicted),
        confidence=float(probs[predicted]),
    )


class DegradationClassifier:
    """체크포인트 기반 분류기 (호출 가능 객체)"""

    def __init__(self, checkpoint: Checkpoint):
        self.checkpoint = checkpoint
        self.network: Network = checkpoint.network
        self.input_side = int(self.network.definition.input_shape[-1])

    @classmethod
    def from_file(cls, path: PathLike) -> "DegradationClassifier":
        return cls(load_checkpoint(path))

    def logits(self, images: Sequence[ImageF]) -> np.ndarray:
        batch = to_batch([fit_side(img, self.input_side) for img in images])
        return np.concatenate([
            self.network.forward(batch[start:start + EVAL_BATCH])
            for start in range(0, len(batch), EVAL_BATCH)
        ])

    def __call__(self, img: ImageF) -> ClassifierOutput:
        return output_from_logits(self.logits([img])[0])


def classify(checkpoint: Union[Checkpoint, PathLike], img: ImageF) -> ClassifierOutput:
    if not isinstance(checkpoint, Checkpoint):
        checkpoint = load_checkpoint(checkpoint)
    return DegradationClassifier(checkpoint)(img)


# ==================== 학습 / 평가 ====================

def train_classifier(
    manifest: DatasetManifest,
    config: TrainConfig,
    input_side: int = 32,
    blocks: int = 2,
    progress: bool = True,
) -> Checkpoint:
    """train 분할 전체(NoDegradation 포함)로 softmax-cross-entropy 학습"""
    records = records_for_split(manifest, 'train')
    inputs, labels = load_arrays(records, input_side)
    logger.info(f"분류기 학습 데이터: {len(records)}장, 클래스별 {np.bincount(labels, minlength=NUM_CLASSES).tolist()}")

    network = Network(build_classifier(input_side, blocks), seed=config.seed)
    config = config.model_copy(update={'loss': 'cross_entropy'})
    return train(network, inputs, labels, config, kind='classifier', progress=progress)


def summarize_predictions(y_true: Iterable[int], y_pred: Iterable[int]) -> EvalSummary:
    """정확도, 클래스별 F1(정의되지 않으면 0), 혼동 행렬"""
    y_true = np.asarray(list(y_true), dtype=np.int64)
    y_pred = np.asarray(list(y_pred), dtype=np.int64)
    labels = list(range(NUM_CLASSES))

    f1 = f1_score(y_true, y_pred, labels=labels, average=None, zero_division=0)
    confusion = confusion_matrix(y_true, y_pred, labels=labels)
    return EvalSummary(
        accuracy=float(accuracy_score(y_true, y_pred)),
        f1=[float(v) for v in f1],
        macro_f1=float(np.mean(f1)),
        confusion=confusion.tolist(),
        support=confusion.sum(axis=1).tolist(),
    )


def evaluate(
    checkpoint: Union[Checkpoint, PathLike],
    manifest: DatasetManifest,
    split: str = 'test',
) -> EvalSummary:
    if not isinstance(checkpoint, Checkpoint):
        checkpoint = load_checkpoint(checkpoint)
    classifier = DegradationClassifier(checkpoint)

    records = records_for_split(manifest, split)
    inputs, labels = load_arrays(records, classifier.input_side)
    predictions: List[int] = []
    for start in range(0, len(inputs), EVAL_BATCH):
        logits = classifier.network.forward(inputs[start:start + EVAL_BATCH])
        predictions.extend(int(np.argmax(row)) for row in logits)

    summary = summarize_predictions(labels, predictions)
    logger.info(f"분류기 평가 ({split}, {len(records)}장): 정확도 {summary.accuracy:.4f}, macro-F1 {summary.macro_f1:.4f}")
    return summary
