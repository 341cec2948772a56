from .synth import (
    DEFAULT_TIER_RANGES,
    build_tier_table,
    sample_spec,
    validate_spec,
    derive_seed,
    make_rng,
    degrade_illumination,
    degrade_contrast,
    degrade_haze,
    degrade_blur,
    degrade_noise,
    degrade_tint,
    apply,
    apply_chain,
)
from .dataset import (
    discover_references,
    assign_tiers,
    build_dataset,
    read_manifest,
    write_manifest,
    load_pair,
    split_of,
    records_for_split,
    record_id,
    MANIFEST_NAME,
)

__all__ = [
    'DEFAULT_TIER_RANGES', 'build_tier_table', 'sample_spec', 'validate_spec',
    'derive_seed', 'make_rng', 'degrade_illumination', 'degrade_contrast',
    'degrade_haze', 'degrade_blur', 'degrade_noise', 'degrade_tint', 'apply',
    'apply_chain', 'discover_references', 'assign_tiers', 'build_dataset',
    'read_manifest', 'write_manifest', 'load_pair', 'split_of',
    'records_for_split', 'record_id', 'MANIFEST_NAME',
]
