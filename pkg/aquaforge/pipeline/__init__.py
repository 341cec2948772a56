from .ida import (
    PipelineResult,
    BatchItem,
    BatchSummary,
    FailureCase,
    FailureScan,
    IterativeEnhancer,
    items_from_records,
    iteration_proportions,
    write_batch_reports,
    write_trace,
    psnr_curve,
    failure_scan,
    load_pipeline,
    run,
    run_batch,
)

__all__ = [
    'PipelineResult', 'BatchItem', 'BatchSummary', 'FailureCase', 'FailureScan',
    'IterativeEnhancer', 'items_from_records', 'iteration_proportions',
    'write_batch_reports', 'write_trace', 'psnr_curve', 'failure_scan',
    'load_pipeline', 'run', 'run_batch',
]
