"""
실행 매니페스트 관리
- 파일/텍스트 해시
- YAML 매니페스트 저장/로드
- 리포트 입력 간 체인 검증
"""

import hashlib
import os
from datetime import datetime
from typing import Any, Dict, Iterable, Optional

import yaml

from utils.errors import InputError, ManifestMismatchError
from utils.logger import get_logger

logger = get_logger("manifest")

MANIFEST_SUFFIX = ".manifest.yaml"
RUN_MANIFEST = "manifest.yaml"


def file_sha256(path: str, chunk_size: int = 1 << 20) -> str:
    """파일 SHA-256"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        while True:
            chunk = f.read(chunk_size)
            if not chunk:
                break
            digest.update(chunk)
    return digest.hexdigest()


def text_sha256(text: str) -> str:
    """텍스트 SHA-256 (설정 파일 내용 해시용)"""
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def sidecar_path(path: str) -> str:
    """데이터 파일 옆에 놓이는 매니페스트 경로"""
    return path + MANIFEST_SUFFIX


def write_manifest(path: str, data: Dict[str, Any]) -> str:
    """
    매니페스트 저장

    Args:
        path: 저장 경로 (.yaml)
        data: 기록할 내용 (created_at 자동 추가)
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    payload = dict(data)
    payload.setdefault('created_at', datetime.now().isoformat(timespec='seconds'))

    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(payload, f, allow_unicode=True, sort_keys=False)

    logger.debug(f"매니페스트 저장: {path}")
    return path


def read_manifest(path: str) -> Dict[str, Any]:
    """매니페스트 로드"""
    if not os.path.exists(path):
        raise InputError(f"매니페스트가 없습니다: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f)
    return data or {}


def read_run_manifest(run_dir: str) -> Dict[str, Any]:
    """실행 디렉토리의 manifest.yaml 로드"""
    return read_manifest(os.path.join(run_dir, RUN_MANIFEST))


def check_chain(
    manifests: Dict[str, Dict[str, Any]],
    keys: Iterable[str],
    exempt: Optional[Dict[str, Iterable[str]]] = None
) -> None:
    """
    매니페스트 체인 검증

    Args:
        manifests: {라벨: 매니페스트}
        keys: 모두 같아야 하는 필드 (예: log_sha256, tiling_hash, spec_hash)
        exempt: {라벨: 면제 필드} (bias-only 기준선의 tiling_hash 등)

    Raises:
        ManifestMismatchError: 값이 하나라도 다를 때
    """
    exempt = exempt or {}
    for key in keys:
        seen: Dict[Any, str] = {}
        for label, manifest in manifests.items():
            if key in set(exempt.get(label, ())):
                continue
            if key not in manifest:
                raise ManifestMismatchError(f"[{label}] 매니페스트에 '{key}' 항목이 없습니다")
            value = manifest[key]
            if seen and value not in seen:
                other = next(iter(seen.values()))
                raise ManifestMismatchError(
                    f"매니페스트 불일치: '{key}' 값이 [{label}]와 [{other}]에서 다릅니다"
                )
            seen.setdefault(value, label)
