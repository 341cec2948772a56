from .iqa import (
    BlockStats,
    block_stats,
    mse,
    psnr,
    rmse,
    ssim,
    entropy,
    eme,
    emee,
    uicm,
    uism,
    uiconm,
    uiqm,
    uiqm_components,
    uciqe,
    uciqe_components,
    pcqi,
    average_gradient,
    fr_auxiliary,
    sseq_features,
    no_reference_metrics,
    full_reference_metrics,
    compute_metrics,
    ALL_METRICS,
)
from .report import (
    write_metric_csv,
    write_metric_jsonl,
    write_table_csv,
    write_json,
    summarize,
    channel_histogram,
    write_histogram_csv,
)

__all__ = [
    'BlockStats', 'block_stats', 'mse', 'psnr', 'rmse', 'ssim', 'entropy', 'eme',
    'emee', 'uicm', 'uism', 'uiconm', 'uiqm', 'uiqm_components', 'uciqe',
    'uciqe_components', 'pcqi', 'average_gradient', 'fr_auxiliary', 'sseq_features',
    'no_reference_metrics', 'full_reference_metrics', 'compute_metrics', 'ALL_METRICS',
    'write_metric_csv', 'write_metric_jsonl', 'write_table_csv', 'write_json', 'summarize',
    'channel_histogram', 'write_histogram_csv',
]
