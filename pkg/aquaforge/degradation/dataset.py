"""
합성 열화 데이터셋 구축 (UIEB-D8 / EUVP-X-D8 형태)

- 참조 영상 1장 × 열화 유형 8개 = 열화 영상 8장
- 유형마다 참조 영상을 시드 기반으로 섞은 뒤 A/B/C 단계에 ⌊N/3⌋, ⌊N/3⌋, 나머지로 배정
- 영상별 시드 = hash(master_seed, 영상 id, 유형, 단계) → 스레드 수와 무관하게 재현 가능
- 매니페스트는 id 정렬 후 임시 파일 → 교체 방식으로 기록
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
import hashlib
import logging
import os

from tqdm import tqdm

from .synth import TierTable, apply, sample_spec
from ..errors import DatasetError, ImageFormatError
from ..imaging.core import ImageF, load_image, resize_image, save_image
from ..rng import derive_seed, make_rng
from ..models import (
    DEGRADED_CLASSES,
    DatasetManifest,
    DegradationClass,
    ManifestRecord,
    SeverityTier,
)
from ..settings import worker_count

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

IMAGE_EXTENSIONS = {'.png', '.jpg', '.jpeg', '.bmp', '.ppm', '.tif', '.tiff'}

# 쌍 데이터셋에서 정답(참조) 영상이 들어 있는 폴더 이름
EUVP_REFERENCE_DIRS = ('trainB', 'GTr')

MANIFEST_NAME = 'manifest.jsonl'

# 테스트 분할 비율 (%)
TEST_PERCENT = 20


# ==================== 참조 영상 탐색 ====================

def _image_files(folder: Path) -> List[Path]:
    return sorted(p for p in folder.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS)


def discover_references(reference_dir: PathLike) -> List[Tuple[str, Path]]:
    """
    참조 영상 목록 탐색

    지원 형태:
    - 평평한 폴더 (영상 파일이 바로 들어 있음)
    - UIEB 형태 (reference-890/ 등 'reference*' 하위 폴더)
    - EUVP 쌍 형태 (trainB/ 또는 GTr/ 하위 폴더)

    Returns:
        (영상 id, 경로) 목록 - id 기준 정렬, 같은 파일명은 _2, _3 접미사로 구분
    """
    root = Path(reference_dir)
    if not root.is_dir():
        raise DatasetError(f"참조 폴더가 없습니다: {root}")

    folders = sorted(d for d in root.iterdir() if d.is_dir() and d.name.lower().startswith('reference'))
    if not folders:
        folders = sorted(d for d in root.rglob('*') if d.is_dir() and d.name in EUVP_REFERENCE_DIRS)
    if not folders:
        folders = [root]

    files = [p for folder in folders for p in _image_files(folder)]

    seen: Dict[str, int] = {}
    refs = []
    for path in files:
        stem = path.stem
        seen[stem] = seen.get(stem, 0) + 1
        ref_id = stem if seen[stem] == 1 else f"{stem}_{seen[stem]}"
        refs.append((ref_id, path))

    refs.sort(key=lambda item: item[0])
    logger.info(f"참조 영상 {len(refs)}장 발견 ({', '.join(str(f) for f in folders)})")
    return refs


# ==================== 단계 배정 / 분할 ====================

def record_id(ref_id: str, degradation: DegradationClass, tier: SeverityTier) -> str:
    if degradation == DegradationClass.NO_DEGRADATION:
        return f"{ref_id}__clean"
    return f"{ref_id}__{degradation.slug}_{tier.value.lower()}"


def assign_tiers(
    ref_ids: Sequence[str],
    degradation: DegradationClass,
    master_seed: int,
    tiers_per_class: int = 3,
) -> Dict[str, SeverityTier]:
    """
    유형 내 참조 영상의 단계 배정

    (master_seed, 유형)으로 섞은 순서에서 앞 ⌊N/k⌋장씩 A, B, ...에 배정하고 나머지는 마지막 단계로.
    N=890 → 296/296/298
    """
    tiers = list(SeverityTier)[:tiers_per_class]
    n = len(ref_ids)
    block = n // len(tiers)
    order = make_rng(derive_seed(master_seed, degradation.slug)).permutation(n)

    assignment = {}
    for position, index in enumerate(order):
        slot = min(position // block, len(tiers) - 1) if block else len(tiers) - 1
        assignment[ref_ids[index]] = tiers[slot]
    return assignment


def split_of(ref_id: str) -> str:
    """참조 영상 id의 분할 ('train' / 'test') - 같은 참조의 레코드는 항상 같은 분할"""
    digest = hashlib.blake2b(ref_id.encode('utf-8'), digest_size=8).digest()
    return 'test' if int.from_bytes(digest, 'little') % 100 < TEST_PERCENT else 'train'


def records_for_split(
    manifest: DatasetManifest,
    split: str,
    classes: Optional[Iterable[DegradationClass]] = None,
) -> List[ManifestRecord]:
    """분할(과 유형)에 해당하는 레코드 목록, 비어 있으면 DatasetError"""
    wanted = set(classes) if classes is not None else None
    records = [
        r for r in manifest.records
        if split_of(r.reference_id) == split and (wanted is None or r.degradation in wanted)
    ]
    if not records:
        raise DatasetError(f"'{split}' 분할에 해당하는 레코드가 없습니다")
    return records


# ==================== 매니페스트 입출력 ====================

def write_manifest(manifest: DatasetManifest, path: PathLike) -> Path:
    """id 정렬 JSON-lines 기록 (임시 파일 → os.replace)"""
    path = Path(path)
    tmp = path.with_name(path.name + '.tmp')
    records = sorted(manifest.records, key=lambda r: r.id)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, 'w', encoding='utf-8') as f:
            for record in records:
                f.write(record.model_dump_json() + '\n')
        os.replace(tmp, path)
    except OSError as e:
        raise DatasetError(f"매니페스트를 쓸 수 없습니다: {path} ({e})") from e
    return path


def read_manifest(path: PathLike) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise DatasetError(f"매니페스트가 없습니다: {path}")

    with open(path, encoding='utf-8') as f:
        records = [ManifestRecord.model_validate_json(line) for line in f if line.strip()]
    return DatasetManifest(records=records)


def load_pair(record: ManifestRecord) -> Tuple[ImageF, ImageF]:
    """(열화 영상, 참조 영상)"""
    return load_image(record.degraded_path), load_image(record.reference_path)


# ==================== 구축 ====================

def _prepare_reference(ref_id: str, path: Path, out_dir: Path, side: Optional[int]) -> Tuple[ImageF, Path]:
    img = load_image(path)
    if img.channels != 3:
        raise ImageFormatError(f"RGB 영상이 아닙니다: {path}")
    if side is None:
        return img, path

    img = resize_image(img, side)
    prepared = out_dir / 'reference' / f"{ref_id}.png"
    save_image(img, prepared)
    return img, prepared


def _build_one(
    ref_id: str,
    path: Path,
    out_dir: Path,
    plan: List[Tuple[DegradationClass, SeverityTier]],
    master_seed: int,
    side: Optional[int],
    include_clean: bool,
    ranges: Optional[TierTable],
) -> List[ManifestRecord]:
    """참조 영상 1장의 열화 영상 생성"""
    img, reference_path = _prepare_reference(ref_id, path, out_dir, side)
    records = []

    if include_clean:
        records.append(ManifestRecord(
            id=record_id(ref_id, DegradationClass.NO_DEGRADATION, SeverityTier.A),
            reference_path=str(reference_path),
            degraded_path=str(reference_path),
            class_code=int(DegradationClass.NO_DEGRADATION),
            tier=SeverityTier.A,
            params={},
            seed=0,
        ))

    for degradation, tier in plan:
        seed = derive_seed(master_seed, ref_id, degradation.slug, tier.value)
        spec = sample_spec(degradation, tier, seed, ranges)
        degraded_path = out_dir / 'degraded' / degradation.slug / tier.value / f"{ref_id}.png"
        save_image(apply(img, spec), degraded_path)

        records.append(ManifestRecord(
            id=record_id(ref_id, degradation, tier),
            reference_path=str(reference_path),
            degraded_path=str(degraded_path),
            class_code=int(degradation),
            tier=tier,
            params=spec.params,
            seed=seed,
        ))
    return records


def build_dataset(
    reference_dir: PathLike,
    out_dir: PathLike,
    master_seed: int = 0,
    tiers_per_class: int = 3,
    side: Optional[int] = None,
    include_clean: bool = True,
    classes: Optional[Iterable[DegradationClass]] = None,
    ranges: Optional[TierTable] = None,
    threads: Optional[int] = None,
) -> DatasetManifest:
    """
    열화 데이터셋 구축

    Args:
        reference_dir: 참조 영상 폴더
        out_dir: 출력 폴더 (degraded/, reference/, manifest.jsonl)
        master_seed: 마스터 시드
        tiers_per_class: 사용할 강도 단계 수 (1-3)
        side: 지정 시 정사각형 중앙 자르기 후 side×side로 축소
        include_clean: NoDegradation 레코드 포함 여부
        classes: 열화 유형 (기본: 8개 전부)
        ranges: 단계 범위 표 (기본: DEFAULT_TIER_RANGES)
        threads: 병렬 작업자 수 (기본: AQUAFORGE_THREADS)
    """
    if not 1 <= tiers_per_class <= len(SeverityTier):
        raise DatasetError(f"tiers_per_class는 1-3이어야 합니다: {tiers_per_class}")

    refs = discover_references(reference_dir)
    if not refs:
        raise DatasetError(f"참조 영상이 없습니다: {reference_dir}")

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DatasetError(f"출력 폴더를 만들 수 없습니다: {out_dir} ({e})") from e

    classes = [DegradationClass(c) for c in (classes or DEGRADED_CLASSES)]
    ref_ids = [ref_id for ref_id, _ in refs]
    assignments = {c: assign_tiers(ref_ids, c, master_seed, tiers_per_class) for c in classes}

    records: List[ManifestRecord] = []
    skipped = 0

    with ThreadPoolExecutor(max_workers=threads or worker_count()) as executor:
        futures = {
            executor.submit(
                _build_one, ref_id, path, out_dir,
                [(c, assignments[c][ref_id]) for c in classes],
                master_seed, side, include_clean, ranges,
            ): ref_id
            for ref_id, path in refs
        }
        for future in tqdm(as_completed(futures), total=len(futures), desc="build-dataset"):
            ref_id = futures[future]
            try:
                records.extend(future.result())
            except ImageFormatError:
                skipped += 1
                logger.error(f"참조 영상 건너뜀: {ref_id}", exc_info=True)
            except OSError as e:
                raise DatasetError(f"열화 영상을 쓸 수 없습니다: {out_dir} ({e})") from e

    if not records:
        raise DatasetError(f"읽을 수 있는 참조 영상이 없습니다: {reference_dir}")

    manifest = DatasetManifest(records=sorted(records, key=lambda r: r.id))
    write_manifest(manifest, out_dir / MANIFEST_NAME)

    logger.info(
        f"데이터셋 구축 완료: 참조 {len(refs) - skipped}장, 열화 영상 {manifest.degraded_count()}장"
        + (f", 건너뜀 {skipped}장" if skipped else "")
    )
    return manifest
