from .tensors import fit_side, to_batch, to_image, load_arrays
from .classifier import (
    build_classifier,
    output_from_logits,
    DegradationClassifier,
    classify,
    train_classifier,
    summarize_predictions,
    evaluate,
)
from .enhancers import (
    BUILDERS,
    build_ic,
    build_cb,
    build_db,
    build_dhce,
    build_dn,
    build_enhancer,
    enhancer_for,
    train_enhancer,
    EnhancerBank,
    load_suite,
    enhance,
    enhance_batch,
)
from .ablation import ABLATION_MODELS, build_ablation

__all__ = [
    'fit_side', 'to_batch', 'to_image', 'load_arrays',
    'build_classifier', 'output_from_logits', 'DegradationClassifier', 'classify',
    'train_classifier', 'summarize_predictions', 'evaluate',
    'BUILDERS', 'build_ic', 'build_cb', 'build_db', 'build_dhce', 'build_dn',
    'build_enhancer', 'enhancer_for', 'train_enhancer', 'EnhancerBank', 'load_suite',
    'enhance', 'enhance_batch',
    'ABLATION_MODELS', 'build_ablation',
]
