"""
CLI 서브커맨드 정의
"""

from pathlib import Path
import json
import logging
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from tqdm import tqdm

from . import bench
from ..degradation.dataset import build_dataset, read_manifest, records_for_split
from ..degradation.synth import apply_chain, build_tier_table, sample_spec
from ..errors import ConfigError
from ..imaging.core import load_image, save_image
from ..metrics.iqa import ALL_METRICS, compute_metrics
from ..metrics.report import write_histogram_csv, write_json, write_metric_csv, write_metric_jsonl, write_table_csv
from ..models import (
    DegradationClass,
    EnhancerId,
    MetricReport,
    PipelineConfig,
    RunConfig,
    SeverityTier,
    TrainConfig,
)
from ..networks.ablation import build_ablation
from ..networks.classifier import build_classifier, evaluate, train_classifier
from ..networks.enhancers import build_enhancer, enhancer_for, train_enhancer
from ..nn.accounting import count_macs, count_params
from ..nn.checkpoint import save_checkpoint
from ..pipeline.ida import failure_scan, items_from_records, load_pipeline, write_trace
from ..rng import derive_seed
from ..settings import RUNTIME_CONFIG

logger = logging.getLogger(__name__)


# ==================== 공통 ====================

def read_config_file(path) -> dict:
    """JSON 또는 TOML(.toml) 파일"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"설정 파일이 없습니다: {path}")
    text = path.read_text(encoding='utf-8')
    try:
        return tomllib.loads(text) if path.suffix.lower() == '.toml' else json.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"설정 파일을 해석할 수 없습니다: {path} ({e})") from e


def load_config(path, model):
    """설정 파일 → pydantic 모델 (검증 실패는 ValidationError)"""
    return model.model_validate(read_config_file(path))


def _train_config(args) -> TrainConfig:
    """--config 파일 위에 명령행 값을 덮어씀"""
    base = load_config(args.config, TrainConfig) if args.config else TrainConfig(seed=RUNTIME_CONFIG['seed'])
    overrides = {
        key: getattr(args, key)
        for key in ('epochs', 'batch_size', 'lr', 'seed')
        if getattr(args, key) is not None
    }
    return TrainConfig.model_validate({**base.model_dump(), **overrides})


def _add_train_options(parser) -> None:
    parser.add_argument('--manifest', required=True, help='매니페스트 파일 또는 데이터셋 폴더')
    parser.add_argument('--out', required=True, help='체크포인트 저장 경로 (.aqfn)')
    parser.add_argument('--config', help='TrainConfig JSON/TOML')
    parser.add_argument('--epochs', type=int)
    parser.add_argument('--batch-size', type=int)
    parser.add_argument('--lr', type=float)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--side', type=int, default=RUNTIME_CONFIG['input_side'], help='입력 한 변')


def _resolve_enhancer(value: str) -> EnhancerId:
    """'DN' 같은 네트워크 id 또는 'noisy' 같은 열화 유형"""
    try:
        return EnhancerId(value.upper())
    except ValueError:
        return enhancer_for(DegradationClass.from_slug(value))


def _load_ranges(path):
    return build_tier_table(read_config_file(path)) if path else None


# ==================== 데이터셋 ====================

def cmd_build_dataset(args) -> int:
    classes = [DegradationClass.from_slug(s) for s in args.classes] if args.classes else None
    manifest = build_dataset(
        args.refs, args.out,
        master_seed=args.seed,
        tiers_per_class=args.tiers,
        side=args.side,
        include_clean=not args.no_clean,
        classes=classes,
        ranges=_load_ranges(args.ranges),
    )
    print(json.dumps({
        'records': len(manifest.records),
        'degraded': manifest.degraded_count(),
        'tiers': {
            c.slug: manifest.tier_counts(c)
            for c in (classes or list(DegradationClass)[1:])
        },
    }, ensure_ascii=False, indent=2))
    return 0


def cmd_degrade(args) -> int:
    tiers = args.tier or ['B']
    if len(tiers) not in (1, len(args.cls)):
        raise ConfigError("--tier는 1개이거나 --class 개수와 같아야 합니다")
    tiers = tiers * len(args.cls) if len(tiers) == 1 else tiers

    ranges = _load_ranges(args.ranges)
    specs = []
    for i, (slug, tier) in enumerate(zip(args.cls, tiers)):
        degradation = DegradationClass.from_slug(slug)
        tier = SeverityTier(tier.upper())
        specs.append(sample_spec(degradation, tier, derive_seed(args.seed, i, degradation.slug, tier.value), ranges))

    save_image(apply_chain(load_image(args.input), specs), args.out)
    if args.spec_out:
        write_json([s.model_dump(mode='json') for s in specs], args.spec_out)
    logger.info(f"열화 적용: {' → '.join(s.degradation.slug for s in specs)} → {args.out}")
    return 0


# ==================== 학습 ====================

def cmd_train_classifier(args) -> int:
    manifest = read_manifest(args.manifest)
    checkpoint = train_classifier(manifest, _train_config(args), args.side, blocks=args.blocks)
    save_checkpoint(checkpoint, args.out)
    return 0


def cmd_train_enhancer(args) -> int:
    enhancer = _resolve_enhancer(args.cls)
    manifest = read_manifest(args.manifest)
    checkpoint = train_enhancer(enhancer, manifest, _train_config(args), args.side)
    save_checkpoint(checkpoint, args.out)
    return 0


# ==================== 추론 / 평가 ====================

def cmd_enhance(args) -> int:
    config = load_config(args.config, PipelineConfig)
    pipeline = load_pipeline(config)

    if args.manifest:
        records = records_for_split(read_manifest(args.manifest), args.split)
        if args.limit:
            records = records[:args.limit]
        items = items_from_records(records)
        summary = pipeline.run_batch(items, args.report_dir)

        scan = failure_scan(summary.results, summary.references())
        write_json(scan.as_dict(), Path(args.report_dir) / 'failure_scan.json')
        return 0

    if not (args.input and args.out):
        raise ConfigError("--in과 --out이 필요합니다 (또는 --manifest)")
    reference = load_image(args.reference) if args.reference else None
    result = pipeline.run(load_image(args.input), reference, image_id=Path(args.input).stem)
    save_image(result.image, args.out)
    if args.trace:
        write_trace(result.trace, args.trace)
    logger.info(f"종료 사유: {result.trace.stop_reason.value}, 반복 {len(result.trace.iterations)}회")
    return 0


def cmd_evaluate(args) -> int:
    """영상 1장(또는 쌍) 또는 매니페스트 쌍 전체의 지표"""
    unknown = [m for m in (args.metrics or []) if m not in ALL_METRICS]
    if unknown:
        raise ConfigError(f"알 수 없는 지표: {', '.join(unknown)}")

    if args.manifest:
        records = records_for_split(read_manifest(args.manifest), args.split)
        jobs = [(r.id, r.degraded_path, r.reference_path) for r in records]
    elif args.input:
        jobs = [(Path(args.input).stem, args.input, args.reference)]
    else:
        raise ConfigError("--in 또는 --manifest가 필요합니다")

    reports = []
    for image_id, path, reference in tqdm(jobs, desc='evaluate', disable=len(jobs) < 2):
        ref = load_image(reference) if reference else None
        values = compute_metrics(load_image(path), ref, args.metrics)
        reports.append(MetricReport(image_id=image_id, pair_id=image_id if ref is not None else None, values=values))

    write_metric_csv(reports, args.out, args.metrics)
    write_metric_jsonl(reports, Path(args.out).with_suffix('.jsonl'))
    return 0


def cmd_eval_classifier(args) -> int:
    summary = evaluate(args.model, read_manifest(args.manifest), args.split)
    write_json(summary.model_dump(), args.report)
    if args.f1_csv:
        rows = [[name, value] for name, value in summary.f1_table().items()]
        write_table_csv(bench.F1_HEADER, rows, args.f1_csv)
    return 0


# ==================== 표 / 보고서 ====================

def _definition_for(arch: str, side: int):
    arch = arch.lower()
    if arch == 'classifier':
        return build_classifier(side)
    if arch == 'classifier-ablation':
        return build_classifier(side, blocks=1)
    if arch.startswith('ablation-'):
        try:
            k = int(arch.split('-', 1)[1])
        except ValueError:
            raise ConfigError(f"ablation 모델 번호가 잘못되었습니다: {arch}")
        return build_ablation(k, side)
    aliases = {'cb': EnhancerId.CB_R}
    return build_enhancer(aliases.get(arch) or EnhancerId(arch.upper()), side)


def cmd_params(args) -> int:
    try:
        definition = _definition_for(args.arch, args.side)
    except ValueError as e:
        raise ConfigError(f"알 수 없는 구조입니다: {args.arch} ({e})") from e
    params = count_params(definition)
    macs = count_macs(definition)
    print(json.dumps({
        'arch': args.arch,
        'side': args.side,
        'params': params,
        'params_m': round(params / 1e6, 4),
        'macs': macs,
        'gflops': round(macs / 1e9, 5),
    }, ensure_ascii=False, indent=2))
    return 0


def cmd_histogram(args) -> int:
    images = [load_image(args.input)]
    if args.compare:
        images.append(load_image(args.compare))
    write_histogram_csv(images, args.out)
    return 0


def cmd_reproduce_tables(args) -> int:
    manifest = read_manifest(args.manifest) if args.manifest else None
    bench.reproduce_tables(args.out, args.accounting_only, args.models, manifest, args.side)
    return 0


def cmd_end_to_end(args) -> int:
    config = load_config(args.config, RunConfig)
    result = bench.run_end_to_end(config)
    print(json.dumps({'passed': result['passed']}, ensure_ascii=False))
    return 0


# ==================== 등록 ====================

def setup_commands(subparsers) -> None:
    """argparse 서브파서에 커맨드 등록"""

    p = subparsers.add_parser('build-dataset', help='참조 영상으로 열화 데이터셋 구축')
    p.add_argument('--refs', required=True, help='참조 영상 폴더')
    p.add_argument('--out', required=True, help='출력 폴더')
    p.add_argument('--seed', type=int, default=RUNTIME_CONFIG['seed'])
    p.add_argument('--tiers', type=int, default=3, help='강도 단계 수 (1-3)')
    p.add_argument('--side', type=int, help='정사각형 크기로 축소 (예: 32)')
    p.add_argument('--no-clean', action='store_true', help='NoDegradation 레코드 제외')
    p.add_argument('--classes', nargs='+', help='열화 유형 slug (기본: 전부)')
    p.add_argument('--ranges', help='단계 범위 재정의 JSON/TOML {slug: {tier: [low, high]}}')
    p.set_defaults(func=cmd_build_dataset)

    p = subparsers.add_parser('degrade', help='영상 1장에 열화 연쇄 적용')
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--class', dest='cls', action='append', required=True, help='열화 유형 (반복 가능, 순서대로 적용)')
    p.add_argument('--tier', action='append', help='A/B/C (1개 또는 --class 개수만큼)')
    p.add_argument('--seed', type=int, default=RUNTIME_CONFIG['seed'])
    p.add_argument('--ranges', help='단계 범위 재정의 JSON/TOML')
    p.add_argument('--spec-out', help='적용한 파라미터 JSON 저장 경로')
    p.set_defaults(func=cmd_degrade)

    p = subparsers.add_parser('train-classifier', help='열화 분류기 학습')
    _add_train_options(p)
    p.add_argument('--blocks', type=int, default=2, help='잔차 모듈 수 (1: ablation 변형)')
    p.set_defaults(func=cmd_train_classifier)

    p = subparsers.add_parser('train-enhancer', help='복원 네트워크 학습')
    p.add_argument('--class', dest='cls', required=True, help='열화 유형 slug 또는 네트워크 id (예: noisy, DN)')
    _add_train_options(p)
    p.set_defaults(func=cmd_train_enhancer)

    p = subparsers.add_parser('enhance', help='반복 개선 파이프라인 실행')
    p.add_argument('--config', required=True, help='PipelineConfig JSON/TOML')
    p.add_argument('--in', dest='input')
    p.add_argument('--out')
    p.add_argument('--trace', help='반복 기록 JSON 저장 경로')
    p.add_argument('--reference', help='참조 영상 (지표 기록용)')
    p.add_argument('--manifest', help='일괄 실행할 매니페스트')
    p.add_argument('--split', default='test')
    p.add_argument('--limit', type=int)
    p.add_argument('--report-dir', default='reports/pipeline')
    p.set_defaults(func=cmd_enhance)

    p = subparsers.add_parser('evaluate', help='영상 품질 지표 계산')
    p.add_argument('--in', dest='input')
    p.add_argument('--reference')
    p.add_argument('--manifest')
    p.add_argument('--split', default='test')
    p.add_argument('--metrics', nargs='+', help='지표 이름 (기본: 계산 가능한 전부)')
    p.add_argument('--out', required=True, help='CSV 경로 (같은 이름의 .jsonl도 기록)')
    p.set_defaults(func=cmd_evaluate)

    p = subparsers.add_parser('eval-classifier', help='분류기 평가 (정확도, F1, 혼동 행렬)')
    p.add_argument('--model', required=True)
    p.add_argument('--manifest', required=True)
    p.add_argument('--split', default='test')
    p.add_argument('--report', required=True, help='EvalSummary JSON 저장 경로')
    p.add_argument('--f1-csv', help='degradation,f1 CSV 저장 경로')
    p.set_defaults(func=cmd_eval_classifier)

    p = subparsers.add_parser('params', help='파라미터 수 / GFLOPs')
    p.add_argument('--arch', required=True, help='ic, cb, db, dhce, dn, classifier, classifier-ablation, ablation-k')
    p.add_argument('--side', type=int, default=bench.ACCOUNTING_SIDE)
    p.set_defaults(func=cmd_params)

    p = subparsers.add_parser('histogram', help='채널별 256구간 히스토그램 CSV')
    p.add_argument('--in', dest='input', required=True)
    p.add_argument('--compare', help='나란히 비교할 두 번째 영상')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_histogram)

    p = subparsers.add_parser('reproduce-tables', help='복원 네트워크 표 / 분류기 F1 표 재현')
    p.add_argument('--out', required=True, help='출력 폴더')
    p.add_argument('--accounting-only', action='store_true', help='학습 없이 파라미터/GFLOPs만')
    p.add_argument('--models', help='체크포인트 폴더 (classifier.aqfn, {ID}.aqfn)')
    p.add_argument('--manifest')
    p.add_argument('--side', type=int, default=bench.ACCOUNTING_SIDE, help='연산량 계산 기준 크기')
    p.set_defaults(func=cmd_reproduce_tables)

    p = subparsers.add_parser('end-to-end', help='전체 재현 실행 + 수용 기준 판정')
    p.add_argument('--config', required=True, help='RunConfig JSON/TOML')
    p.set_defaults(func=cmd_end_to_end)
