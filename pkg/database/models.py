"""
SQLAlchemy 실행 기록 모델
- 실행(simulate/learn/solve/report) 기록
- 프로브별 평가 지표
"""

import os
from datetime import datetime

from sqlalchemy import (
    create_engine, Column, Integer, Float, String, Text, DateTime,
    ForeignKey, UniqueConstraint, Index
)
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

Base = declarative_base()


class RunRecord(Base):
    """실행 기록"""
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String(20), nullable=False)    # simulate/learn/solve/report
    output_dir = Column(String(500), nullable=False)
    label = Column(String(100))                     # 예: td-lambda, bias-only
    log_sha256 = Column(String(64))
    tiling_hash = Column(String(64))
    spec_hash = Column(String(64))
    steps = Column(Integer)
    n_features = Column(Integer)
    n_predictions = Column(Integer)
    median_cycle_ms = Column(Float)
    p99_cycle_ms = Column(Float)
    elapsed_seconds = Column(Float)
    params = Column(Text)                           # YAML 파라미터
    created_at = Column(DateTime, default=datetime.now)

    metrics = relationship('ProbeMetric', back_populates='run', cascade='all, delete-orphan')

    __table_args__ = (
        Index('idx_run_command', 'command'),
    )


class ProbeMetric(Base):
    """프로브별 지표 (정규화 RMSE, θ* 잔차 등)"""
    __tablename__ = 'probe_metrics'

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey('runs.id'), nullable=False)
    probe = Column(String(200), nullable=False)     # 대상|할인 라벨
    metric = Column(String(50), nullable=False)     # final_rmse_normalized, residual_rmse ...
    value = Column(Float)

    run = relationship('RunRecord', back_populates='metrics')

    __table_args__ = (
        UniqueConstraint('run_id', 'probe', 'metric'),
        Index('idx_metric_probe', 'probe'),
    )


def init_db(db_path: str = 'outputs/nexting.db'):
    """데이터베이스 및 테이블 생성"""
    directory = os.path.dirname(db_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    engine = create_engine(f'sqlite:///{db_path}', echo=False)
    Base.metadata.create_all(engine)
    return engine


def get_session(engine):
    """세션 생성"""
    Session = sessionmaker(bind=engine)
    return Session()
