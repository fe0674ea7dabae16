"""
가중치 체크포인트

디렉토리 형식 (버전 1):
    ids.npy                    int64 (k,)     예측 id
    theta.npy                  float64 (k, n) 예측별 가중치
    checkpoint.manifest.yaml   format/version, k, n, 라벨, 파일 해시, 추가 메타데이터

.npy는 타임스탬프가 없어 같은 가중치 → 같은 바이트.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from utils.errors import InputError, ManifestMismatchError
from utils.manifest import file_sha256, read_manifest, write_manifest

logger = logging.getLogger("nexting.checkpoint")

FORMAT_NAME = 'nexting-weights'
FORMAT_VERSION = 1
MANIFEST_NAME = 'checkpoint.manifest.yaml'


@dataclass
class Checkpoint:
    ids: np.ndarray
    theta: np.ndarray
    labels: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.theta.shape[1])

    def weights(self, prediction_id: int) -> np.ndarray:
        rows = np.flatnonzero(self.ids == prediction_id)
        if not len(rows):
            raise InputError(f"체크포인트에 예측 id {prediction_id}가 없습니다")
        return self.theta[rows[0]]


def save_checkpoint(
    directory: str,
    ids: Sequence[int],
    theta: np.ndarray,
    labels: Optional[Sequence[str]] = None,
    metadata: Optional[Dict[str, Any]] = None
) -> str:
    """
    체크포인트 저장

    Returns:
        매니페스트 경로
    """
    ids = np.asarray(ids, dtype=np.int64)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[0] != len(ids):
        raise InputError(f"가중치 행렬 모양이 id 수와 맞지 않습니다: {theta.shape} vs {len(ids)}")

    os.makedirs(directory, exist_ok=True)
    ids_path = os.path.join(directory, 'ids.npy')
    theta_path = os.path.join(directory, 'theta.npy')
    np.save(ids_path, ids)
    np.save(theta_path, theta)

    manifest = {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'k': int(len(ids)),
        'n': int(theta.shape[1]),
        'ids_sha256': file_sha256(ids_path),
        'theta_sha256': file_sha256(theta_path),
        'labels': list(labels) if labels is not None else [],
    }
    manifest.update(metadata or {})
    path = write_manifest(os.path.join(directory, MANIFEST_NAME), manifest)
    logger.info(f"체크포인트 저장: {directory} (k={len(ids):,}, n={theta.shape[1]:,})")
    return path


def load_checkpoint(directory: str, verify: bool = True) -> Checkpoint:
    """
    체크포인트 로드

    Raises:
        InputError: 파일 누락, 형식 불일치
        ManifestMismatchError: 해시 불일치
    """
    manifest = read_manifest(os.path.join(directory, MANIFEST_NAME))
    if manifest.get('format') != FORMAT_NAME or manifest.get('version') != FORMAT_VERSION:
        raise InputError(f"지원하지 않는 체크포인트 형식: {manifest.get('format')} v{manifest.get('version')}")

    ids_path = os.path.join(directory, 'ids.npy')
    theta_path = os.path.join(directory, 'theta.npy')
    for path in (ids_path, theta_path):
        if not os.path.exists(path):
            raise InputError(f"체크포인트 파일이 없습니다: {path}")

    if verify:
        if file_sha256(ids_path) != manifest.get('ids_sha256') or file_sha256(theta_path) != manifest.get('theta_sha256'):
            raise ManifestMismatchError(f"체크포인트 해시가 매니페스트와 다릅니다: {directory}")

    ids = np.load(ids_path)
    theta = np.load(theta_path)
    if theta.shape != (manifest['k'], manifest['n']):
        raise InputError(f"체크포인트 모양 불일치: {theta.shape}")

    reserved = {'format', 'version', 'k', 'n', 'ids_sha256', 'theta_sha256', 'labels'}
    metadata = {key: value for key, value in manifest.items() if key not in reserved}
    return Checkpoint(ids=ids, theta=theta, labels=list(manifest.get('labels') or []), metadata=metadata)
