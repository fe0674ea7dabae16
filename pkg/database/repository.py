"""
실행 기록 저장소 (Repository Pattern)
"""

import logging
from typing import Dict, List, Optional

import pandas as pd
import yaml
from sqlalchemy.orm import Session

from .models import ProbeMetric, RunRecord, init_db, get_session

logger = logging.getLogger("nexting.repository")


class RunRepository:
    """실행 기록 저장소"""

    def __init__(self, session: Session):
        self.session = session

    def record(self, command: str, output_dir: str, manifest: Dict, label: Optional[str] = None) -> RunRecord:
        """매니페스트에서 실행 기록 생성"""
        cycle = manifest.get('cycle_stats') or {}
        run = RunRecord(
            command=command,
            output_dir=output_dir,
            label=label or manifest.get('label'),
            log_sha256=manifest.get('log_sha256'),
            tiling_hash=manifest.get('tiling_hash'),
            spec_hash=manifest.get('spec_hash'),
            steps=manifest.get('steps'),
            n_features=manifest.get('n'),
            n_predictions=manifest.get('k'),
            median_cycle_ms=cycle.get('median_ms'),
            p99_cycle_ms=cycle.get('p99_ms'),
            elapsed_seconds=manifest.get('elapsed_seconds'),
            params=yaml.safe_dump(manifest.get('params') or {}, allow_unicode=True, sort_keys=False),
        )
        self.session.add(run)
        self.session.flush()
        return run

    def add_metrics(self, run: RunRecord, metrics: Dict[str, Dict[str, float]]) -> int:
        """{프로브: {지표: 값}} 추가"""
        count = 0
        for probe, values in metrics.items():
            for name, value in values.items():
                run.metrics.append(ProbeMetric(probe=probe, metric=name, value=float(value)))
                count += 1
        self.session.flush()
        return count

    def recent(self, limit: int = 20, command: Optional[str] = None) -> List[RunRecord]:
        query = self.session.query(RunRecord)
        if command:
            query = query.filter_by(command=command)
        return query.order_by(RunRecord.id.desc()).limit(limit).all()

    def to_frame(self, limit: int = 20, command: Optional[str] = None) -> pd.DataFrame:
        runs = self.recent(limit, command)
        if not runs:
            return pd.DataFrame()
        return pd.DataFrame([{
            'id': r.id,
            'command': r.command,
            'label': r.label,
            'steps': r.steps,
            'n': r.n_features,
            'k': r.n_predictions,
            'median_ms': r.median_cycle_ms,
            'p99_ms': r.p99_cycle_ms,
            'output_dir': r.output_dir,
            'created_at': r.created_at,
        } for r in runs])

    def metrics_frame(self, run_id: int) -> pd.DataFrame:
        rows = self.session.query(ProbeMetric).filter_by(run_id=run_id).all()
        return pd.DataFrame([{'probe': m.probe, 'metric': m.metric, 'value': m.value} for m in rows])


class DatabaseManager:
    """데이터베이스 매니저 (Facade)"""

    def __init__(self, db_path: str = 'outputs/nexting.db'):
        self.engine = init_db(db_path)
        self.session = get_session(self.engine)
        self.runs = RunRepository(self.session)

    def commit(self):
        """커밋"""
        self.session.commit()

    def rollback(self):
        """롤백"""
        self.session.rollback()

    def close(self):
        """세션 종료"""
        self.session.close()
