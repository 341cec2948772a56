"""
학습 루프 (Adam, MSE / softmax-cross-entropy)

- 배치 순서는 seed로부터 유도 (같은 seed → 비트 단위 동일한 가중치)
- 손실이 유한하지 않으면 TrainingDivergedError
- 학습 종료 후 파라미터를 float32 표현 값으로 고정
"""

from typing import Dict, Optional, Sequence, Tuple
import logging

import numpy as np
from tqdm import tqdm

from .checkpoint import Checkpoint
from .engine import Network, Params
from ..errors import DatasetError, TrainingDivergedError
from ..models import TrainConfig
from ..rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

LOSS_TAIL = 20


# ==================== 손실 ====================

def mse_loss(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """평균 제곱 오차와 출력 기울기"""
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Returns:
        (평균 손실, (p - onehot)/N)
    """
    n = logits.shape[0]
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    probs = softmax(logits)
    loss = -np.mean(np.log(np.maximum(probs[np.arange(n), labels], 1e-300)))
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n


LOSSES = {
    'mse': mse_loss,
    'cross_entropy': softmax_cross_entropy,
}


# ==================== Adam ====================

class Adam:
    """Adam 최적화기 (β1=0.9, β2=0.999, ε=1e-8 기본)"""

    def __init__(self, network: Network, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.network = network
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Params = {n: {k: np.zeros_like(v) for k, v in g.items()} for n, g in network.params.items()}
        self.v: Params = {n: {k: np.zeros_like(v) for k, v in g.items()} for n, g in network.params.items()}

    def step(self, grads: Params) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name, key, param in self.network.parameters():
            g = grads[name][key]
            m = self.m[name][key]
            v = self.v[name][key]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            param -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


# ==================== 학습 ====================

def train(
    network: Network,
    inputs: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
    kind: str = 'network',
    serves: Optional[Sequence[str]] = None,
    progress: bool = True,
) -> Checkpoint:
    """
    네트워크 학습

    Args:
        network: 초기화된 네트워크 (제자리에서 갱신)
        inputs: (N, ...) 입력 배열
        targets: (N, ...) 목표 배열 (cross_entropy는 (N,) 정수 라벨)
        config: 학습 설정
        kind: 체크포인트 종류 (예: 'classifier', 'DN')
        serves: 담당 열화 유형 slug 목록 (복원 네트워크)

    Returns:
        Checkpoint (metadata: epochs, loss_curve_tail, seed, serves, kind)
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets)
    n = inputs.shape[0]
    if n == 0:
        raise DatasetError("학습 데이터가 비어 있습니다")
    if targets.shape[0] != n:
        raise DatasetError(f"입력/목표 개수가 다릅니다: {n} != {targets.shape[0]}")

    loss_fn = LOSSES[config.loss]
    optimizer = Adam(network, config.lr, config.beta1, config.beta2, config.eps)
    order_rng = make_rng(derive_seed(config.seed, 'batch-order'))
    history = []

    logger.info(f"[{kind}] 학습 시작: 표본 {n}개, 에폭 {config.epochs}, 배치 {config.batch_size}, lr {config.lr}")

    for epoch in tqdm(range(1, config.epochs + 1), desc=f"train {kind}", disable=not progress):
        order = order_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            pred, cache = network.forward_with_cache(inputs[batch])
            loss, grad = loss_fn(pred, targets[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"[{kind}] 에폭 {epoch}에서 손실이 발산했습니다: {loss}")
            optimizer.step(network.backward(cache, grad))
            total += loss * len(batch)

        epoch_loss = total / n
        history.append(epoch_loss)
        logger.info(f"[{kind}] epoch {epoch}/{config.epochs} loss={epoch_loss:.6f}")

    network.snap()
    metadata: Dict = {
        'epochs': config.epochs,
        'loss_curve_tail': history[-LOSS_TAIL:],
        'seed': config.seed,
        'serves': list(serves or []),
        'kind': kind,
    }
    return Checkpoint(network=network, metadata=metadata, history=history)
