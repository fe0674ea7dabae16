#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
다중 시간척도 센서 예측 (nexting) 실험 도구
메인 실행 파일

특징:
- 펜 시뮬레이터 센서 로그 생성 (재현 가능)
- 타일 코딩 + 수천 개 TD(λ) 예측 병렬 학습
- 이상적 리턴 / 오프라인 최소제곱 θ* 계산
- 학습 곡선, 이벤트 정렬 평균 리포트

사용법:
    python main.py simulate --steps 120000 --seed 7 --out outputs/sensor_log.csv
    python main.py learn --log outputs/sensor_log.csv --out outputs/td_lambda
    python main.py learn --log outputs/sensor_log.csv --lambda 0 --label td0 --out outputs/td0
    python main.py learn --log outputs/sensor_log.csv --tiling config/tiling_bias_only.cfg --label bias-only --out outputs/bias
    python main.py solve --log outputs/sensor_log.csv --out outputs/solve
    python main.py report --run td-lambda=outputs/td_lambda --run td0=outputs/td0 \\
                          --baseline bias-only=outputs/bias --solve outputs/solve --out outputs/report
    python main.py history
"""

import os
import sys
import argparse
import time
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from colorama import Fore, Style
from colorama import init as colorama_init

# 프로젝트 루트
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from utils import get_logger, setup_logger, NextingError, ConfigurationError, InputError, ManifestMismatchError
from utils.progress_tracker import ProgressTracker
from utils.manifest import (
    RUN_MANIFEST, check_chain, file_sha256, read_manifest, read_run_manifest,
    sidecar_path, write_manifest
)
from config.experiment_config import (
    RunConfig, load_settings, load_sim_params, policy_params_from_dict, sim_params_from_dict
)

CHAIN_KEYS = ('log_sha256', 'tiling_hash', 'spec_hash')
BASELINE_EXEMPT = ('tiling_hash', 'spec_hash')
EARLY_STEPS = 18000   # 30분

logger = get_logger("main")


def main(argv: Optional[List[str]] = None) -> int:
    """메인 실행"""
    colorama_init()
    args = parse_args(argv)
    settings = load_settings(args.settings)

    log_settings = settings.get('logging') or {}
    setup_logger(
        log_dir=log_settings.get('directory', 'logs'),
        level=args.log_level or log_settings.get('level', 'INFO'),
    )

    commands = {
        'simulate': cmd_simulate,
        'learn': cmd_learn,
        'solve': cmd_solve,
        'report': cmd_report,
        'history': cmd_history,
    }

    try:
        commands[args.command](args, settings)
    except NextingError as e:
        logger.debug("명령 실패", exc_info=True)
        print(f"{Fore.RED}❌ {type(e).__name__}: {e}{Style.RESET_ALL}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.debug("입출력 실패", exc_info=True)
        print(f"{Fore.RED}❌ 입출력 오류: {e}{Style.RESET_ALL}", file=sys.stderr)
        return 1
    return 0


# =====================================
# simulate
# =====================================
def cmd_simulate(args, settings: Dict) -> str:
    """시뮬레이터 로그 생성"""
    from collectors import PenSimulator, write_log
    from analyzers.evaluation import detect_events

    if args.steps is None or args.steps < 1:
        raise ConfigurationError(f"스텝 수는 1 이상이어야 합니다: {args.steps}")

    if args.params:
        sim_params, policy = load_sim_params(args.params)
    else:
        sim_params = sim_params_from_dict(settings.get('simulator'))
        policy = policy_params_from_dict(settings.get('policy'))
    seed = args.seed if args.seed is not None else sim_params.seed
    evaluation = settings.get('evaluation') or {}

    tracker = ProgressTracker(total_steps=2, title="시뮬레이션", quiet=args.quiet)
    started = time.time()

    tracker.start_step("펜 시뮬레이션", args.steps)
    simulator = PenSimulator(sim_params, policy, seed=seed)
    log = simulator.collect(args.steps, progress=tracker.iterate)
    tracker.finish_step(f"{len(log):,} 스텝")

    tracker.start_step("로그 저장", 1)
    path = write_log(log, args.out)
    events = detect_events(
        log.channel('light'),
        evaluation.get('saturation_threshold', 0.99),
        evaluation.get('refractory_steps', 100),
    )
    params = sim_params.to_dict()
    params['seed'] = seed
    write_manifest(sidecar_path(path), {
        'command': 'simulate',
        'log_path': path,
        'rows': len(log),
        'file_size': os.path.getsize(path),
        'sha256': file_sha256(path),
        'channel_names': log.channel_names,
        'params': params,
        'policy': {
            'random_action_prob': policy.random_action_prob,
            'side_distance_band': list(policy.side_distance_band),
            'front_obstacle_threshold': policy.front_obstacle_threshold,
        },
        'random_actions': simulator.world.random_actions,
        'pause_intervals': [list(p) for p in simulator.pause_intervals()],
        'saturation_events': len(events),
        'elapsed_seconds': round(time.time() - started, 3),
    })
    tracker.finish_step(f"저장: {path}")
    tracker.show_summary()

    _register(args, settings, 'simulate', os.path.dirname(path) or '.', {
        'log_sha256': file_sha256(path), 'steps': len(log), 'params': params,
    })
    return path


# =====================================
# learn / solve 공통 준비
# =====================================
def _prepare(config: RunConfig):
    """로그, 타일 코더, 예측 스펙, 프로브 준비 (config.steps가 있으면 앞부분만)"""
    from collectors import load_log
    from processors import build_tile_coder, load_tiling_config
    from analyzers.horde import default_probe_ids, default_specs, load_spec_file, select_probes

    if not config.log_path:
        raise ConfigurationError("--log 이 필요합니다")
    log = load_log(config.log_path)
    steps = config.steps
    if steps is not None and steps < len(log):
        log = type(log)(log.channel_names, log.steps[:steps], log.actions[:steps], log.channels[:steps])
    if len(log) < 2:
        raise InputError(f"로그가 너무 짧습니다: {len(log)}행")

    names = log.channel_names
    coder = build_tile_coder(load_tiling_config(config.tiling_path, names), n_channels=len(names))

    learning = config.learning
    if config.spec_path:
        specs = load_spec_file(config.spec_path, names, coder.active_per_step)
    else:
        specs = default_specs(
            names, coder.n,
            alpha=learning.resolve_alpha(coder.active_per_step, config.alpha),
            lam=learning.lam,
            discounts=learning.discounts,
            feature_targets=learning.feature_targets,
            feature_seed=learning.feature_seed,
            throttle=(learning.power_gamma, learning.power_throttled_gamma, learning.power_threshold),
            light_channel=learning.power_channel,
        )

    if config.probes:
        probe_ids = select_probes(specs, config.probes, names)
    else:
        probe_ids = default_probe_ids(specs, names, learning.power_channel)

    return log, coder, specs, probe_ids


def _base_manifest(config: RunConfig, log, coder, specs, probe_ids) -> Dict:
    from analyzers.horde import spec_hash

    names = log.channel_names
    by_id = {s.id: s for s in specs}
    manifest = {
        'log_path': config.log_path,
        'log_sha256': file_sha256(config.log_path),
        'tiling_path': config.tiling_path,
        'tiling_hash': coder.config_hash,
        'spec_path': config.spec_path,
        'spec_hash': spec_hash(specs),
        'steps': len(log),
        'n': coder.n,
        'active_per_step': coder.active_per_step,
        'k': len(specs),
        'feature_seed': config.learning.feature_seed,
        'feature_targets': sorted({s.target.feature_index for s in specs if s.target.kind == 'feature'}),
        'probes': [{'id': i, 'label': by_id[i].label(names)} for i in probe_ids],
        'tiling_layout': coder.describe(),
    }
    log_manifest = sidecar_path(config.log_path)
    if os.path.exists(log_manifest):
        manifest['pause_intervals'] = read_manifest(log_manifest).get('pause_intervals', [])
    return manifest


def _encoded_rows(coder, channels: np.ndarray, chunk_rows: int = 2048):
    """청크 단위로 인코딩한 활성 인덱스를 한 행씩"""
    for lo in range(0, len(channels), chunk_rows):
        block = coder.encode_batch(channels[lo:lo + chunk_rows])
        for row in block:
            yield row


def _predictions_frame(values: np.ndarray, labels: List[str]) -> pd.DataFrame:
    df = pd.DataFrame(values, columns=labels)
    df.insert(0, 'step', np.arange(len(values)))
    return df


# =====================================
# learn
# =====================================
def cmd_learn(args, settings: Dict) -> str:
    """예측 뱅크 온라인 학습"""
    from analyzers.horde import build_bank, write_spec_file
    from exporters import save_checkpoint, write_csv

    config = RunConfig.from_args(args, settings)
    tracker = ProgressTracker(total_steps=3, title="학습", quiet=args.quiet)
    started = time.time()

    tracker.start_step("입력 준비", 1)
    log, coder, specs, probe_ids = _prepare(config)
    names = log.channel_names
    if not probe_ids:
        logger.warning("프로브가 없어 스텝별 예측을 저장하지 않습니다")
    tracker.finish_step(f"n={coder.n:,}, active={coder.active_per_step}, 예측 {len(specs):,}개")

    tracker.start_step("TD(λ) 학습", len(log) - 1)
    channels = log.channels
    probe_rows = np.array(probe_ids, dtype=np.int64)
    probe_predictions = np.zeros((len(log), len(probe_rows)))

    scale_alpha = config.learning.scales_alpha(config.alpha)
    with build_bank(specs, coder.n, n_channels=len(names), workers=config.workers,
                    lambda_override=config.lambda_override, trace_mode=config.learning.trace_mode,
                    scale_alpha=scale_alpha) as bank:
        rows = _encoded_rows(coder, channels)
        prev = next(rows)
        probe_predictions[0] = bank.predict(prev)[probe_rows]

        for t in tracker.iterate(range(1, len(log)), total=len(log) - 1):
            nxt = next(rows)
            predictions = bank.step(prev, nxt, channels[t - 1], channels[t], step=t)
            probe_predictions[t] = predictions[probe_rows]
            prev = nxt

        bank.check_finite(step=len(log) - 1)
        cycle = bank.cycle_summary()
        effective_alpha = sorted({round(float(a), 12) for a in bank.alpha})
        folds = bank.folds
        tracker.finish_step(f"median {cycle.get('median_ms', 0):.1f}ms / p99 {cycle.get('p99_ms', 0):.1f}ms")

        tracker.start_step("결과 저장", 1)
        os.makedirs(config.output_dir, exist_ok=True)
        labels = [s.label(names) for s in bank.specs]
        save_checkpoint(
            os.path.join(config.output_dir, 'checkpoint'), bank.ids, bank.theta, labels=labels,
            metadata={'lambda_override': config.lambda_override},
        )

    by_id = {s.id: s for s in specs}
    write_csv(
        _predictions_frame(probe_predictions, [by_id[i].label(names) for i in probe_ids]),
        os.path.join(config.output_dir, 'predictions.csv'),
    )
    write_spec_file(specs, os.path.join(config.output_dir, 'specs.txt'), names)

    manifest = _base_manifest(config, log, coder, specs, probe_ids)
    manifest.update({
        'command': 'learn',
        'label': args.label or _default_label(config.lambda_override),
        'lambda_override': config.lambda_override,
        'alpha_scaled': bool(scale_alpha and config.lambda_override is not None),
        'alpha_values': effective_alpha,
        'trace_mode': config.learning.trace_mode,
        'trace_folds': folds,
        'workers': config.workers,
        'cycle_stats': cycle,
        'elapsed_seconds': round(time.time() - started, 3),
    })
    write_manifest(os.path.join(config.output_dir, RUN_MANIFEST), manifest)
    tracker.finish_step(f"저장: {config.output_dir}")
    tracker.show_summary()

    _register(args, settings, 'learn', config.output_dir, manifest)
    return config.output_dir


def _default_label(lambda_override: Optional[float]) -> str:
    if lambda_override is None:
        return 'td-lambda'
    if lambda_override in (0.0, 1.0):
        return f"td{int(lambda_override)}"
    return f"td-{lambda_override:g}"


# =====================================
# solve
# =====================================
def cmd_solve(args, settings: Dict) -> str:
    """프로브별 리턴과 θ* 계산"""
    from processors import encode_log
    from analyzers.horde import gamma_series, target_series
    from analyzers.offline_oracle import compute_returns, solve_many
    from exporters import export_returns, safe_name, save_checkpoint, write_csv

    config = RunConfig.from_args(args, settings)
    evaluation = config.evaluation
    eps = args.eps if args.eps is not None else evaluation.return_eps
    tracker = ProgressTracker(total_steps=3, title="오프라인 풀이", quiet=args.quiet)
    started = time.time()

    tracker.start_step("입력 준비", 1)
    log, coder, specs, probe_ids = _prepare(config)
    if not probe_ids:
        raise InputError("프로브가 없습니다")
    names = log.channel_names
    idx = encode_log(coder, log)
    by_id = {s.id: s for s in specs}
    tracker.finish_step(f"프로브 {len(probe_ids)}개")

    tracker.start_step("리턴 계산", len(probe_ids))
    returns = []
    for pid in probe_ids:
        spec = by_id[pid]
        series = compute_returns(
            target_series(spec.target, log.channels, idx),
            gamma_series(spec.discount, log.channels),
            eps,
        )
        returns.append(series)
        export_returns(series, os.path.join(config.output_dir, 'returns', f"{safe_name(spec.label(names))}.csv"))
    tracker.finish_step()

    tracker.start_step("θ* 최소제곱 풀이", len(probe_ids))
    solutions = solve_many(idx, [r.values for r in returns], coder.n,
                           ridge=args.ridge, ridge_factor=evaluation.ridge_factor)

    labels = [by_id[pid].label(names) for pid in probe_ids]
    theta = np.vstack([s.theta_star for s in solutions])
    save_checkpoint(os.path.join(config.output_dir, 'solution'), probe_ids, theta, labels=labels)

    residuals = pd.DataFrame([{
        'probe': label,
        'rows': sol.rows,
        'horizon': ret.horizon,
        'ridge': sol.ridge,
        'features_used': sol.features_used,
        'residual_rmse': sol.residual_rmse,
    } for label, sol, ret in zip(labels, solutions, returns)])
    write_csv(residuals, os.path.join(config.output_dir, 'residuals.csv'))

    per_step = np.column_stack([theta[i][idx].sum(axis=1) for i in range(len(probe_ids))])
    write_csv(_predictions_frame(per_step, labels), os.path.join(config.output_dir, 'predictions.csv'))

    manifest = _base_manifest(config, log, coder, specs, probe_ids)
    manifest.update({
        'command': 'solve',
        'label': 'theta-star',
        'eps': eps,
        'residuals': {label: float(sol.residual_rmse) for label, sol in zip(labels, solutions)},
        'elapsed_seconds': round(time.time() - started, 3),
    })
    write_manifest(os.path.join(config.output_dir, RUN_MANIFEST), manifest)
    tracker.finish_step(f"저장: {config.output_dir}")
    tracker.show_summary()

    _register(args, settings, 'solve', config.output_dir, manifest,
              metrics={label: {'residual_rmse': sol.residual_rmse} for label, sol in zip(labels, solutions)})
    return config.output_dir


# =====================================
# report
# =====================================
def _labelled_dirs(values: Optional[List[str]], option: str) -> List[Tuple[str, str]]:
    pairs = []
    for value in values or []:
        label, sep, path = value.partition('=')
        if not sep or not label or not path:
            raise ConfigurationError(f"{option} 형식은 LABEL=DIR 입니다: '{value}'")
        pairs.append((label, path))
    return pairs


def cmd_report(args, settings: Dict) -> str:
    """학습 곡선 / 이벤트 정렬 리포트"""
    from collectors import load_log
    from processors import build_tile_coder, encode_log, load_tiling_config
    from analyzers.horde import gamma_series, parse_label, target_series
    from analyzers.offline_oracle import compute_returns
    from analyzers.evaluation import align_events, detect_events, final_fraction_rmse, normalized_rmse
    from exporters import ReportWorkbook, export_alignment, export_curve, safe_name, write_csv

    config = RunConfig.from_args(args, settings)
    evaluation = config.evaluation
    bin_size = args.bin_size or evaluation.bin_size
    window = (evaluation.window_before, evaluation.window_after)
    if args.window is not None:
        window = (args.window, args.window)

    runs = _labelled_dirs(args.run, '--run')
    baselines = _labelled_dirs(args.baseline, '--baseline')
    if args.solve:
        runs.append(('theta-star', args.solve))
    if not runs and not baselines:
        raise ConfigurationError("--run, --baseline, --solve 중 하나 이상이 필요합니다")

    tracker = ProgressTracker(total_steps=4, title="리포트", quiet=args.quiet)

    # 1. 매니페스트 체인 검증
    tracker.start_step("매니페스트 검증", len(runs) + len(baselines))
    manifests = {label: read_run_manifest(path) for label, path in runs + baselines}
    check_chain(manifests, CHAIN_KEYS, exempt={label: BASELINE_EXEMPT for label, _ in baselines})

    first = next(iter(manifests.values()))
    log_path = args.log or first['log_path']
    if file_sha256(log_path) != first['log_sha256']:
        raise ManifestMismatchError(f"로그 파일이 매니페스트와 다릅니다: {log_path}")
    log = load_log(log_path)
    names = log.channel_names

    # 공통 프로브
    probe_sets = [[p['label'] for p in m.get('probes', [])] for m in manifests.values()]
    probes = [label for label in probe_sets[0] if all(label in s for s in probe_sets[1:])]
    if config.probes:
        missing = [p for p in config.probes if p not in probes]
        if missing:
            raise ConfigurationError(f"모든 실행에 공통인 프로브가 아닙니다: {missing}")
        probes = list(config.probes)
    if not probes:
        raise InputError("리포트할 프로브가 없습니다")
    tracker.finish_step(f"실행 {len(manifests)}개, 프로브 {len(probes)}개")

    # 2. 리턴 계산
    tracker.start_step("리턴 계산", len(probes))
    parsed = {label: parse_label(label, names) for label in probes}
    idx = None
    if any(target.kind == 'feature' for target, _ in parsed.values()):
        tiling = next(m['tiling_path'] for label, m in manifests.items()
                      if label not in dict(baselines))
        coder = build_tile_coder(load_tiling_config(tiling, names), n_channels=len(names))
        idx = encode_log(coder, log)
    returns = {}
    for label, (target, discount) in parsed.items():
        returns[label] = compute_returns(
            target_series(target, log.channels, idx),
            gamma_series(discount, log.channels),
            evaluation.return_eps,
        )
    tracker.finish_step()

    # 3. 곡선 / 정렬
    tracker.start_step("학습 곡선 / 이벤트 정렬", len(manifests) * len(probes))
    light = log.channel(args.event_channel)
    onsets = detect_events(light, evaluation.saturation_threshold, evaluation.refractory_steps)
    logger.info(f"포화 시작 이벤트 {len(onsets)}개")

    rows = []
    metrics: Dict[str, Dict[str, Dict[str, float]]] = {}
    for run_label, run_dir in runs + baselines:
        predictions = pd.read_csv(os.path.join(run_dir, 'predictions.csv'))
        metrics[run_label] = {}
        for label in probes:
            discount = parsed[label][1]
            gamma = discount.gamma
            series = returns[label].values
            pred = predictions[label].to_numpy(dtype=np.float64)

            curve = normalized_rmse(pred, series, gamma, bin_size)
            export_curve(curve, os.path.join(config.output_dir, 'curves', f"{run_label}__{safe_name(label)}.csv"))

            final = final_fraction_rmse(pred, series, gamma, evaluation.final_fraction)
            early_bin = min(EARLY_STEPS // bin_size, len(curve.values) - 1)
            row = {
                'run': run_label,
                'probe': label,
                'final_rmse_normalized': final,
                'early_rmse_normalized': float(curve.values[early_bin]),
                'curve_bins': len(curve.values),
            }

            if onsets:
                try:
                    aligned = align_events(onsets, window, {'signal': light, 'return': series, 'prediction': pred})
                except InputError as e:
                    logger.warning(f"[{run_label}] {label}: {e}")
                else:
                    export_alignment(
                        aligned, os.path.join(config.output_dir, 'alignment', f"{run_label}__{safe_name(label)}.csv")
                    )
                    row['aligned_events'] = aligned.event_count

            rows.append(row)
            metrics[run_label][label] = {
                'final_rmse_normalized': final, 'early_rmse_normalized': row['early_rmse_normalized'],
            }
    tracker.finish_step(f"곡선 {len(rows)}개")

    # 4. 요약
    tracker.start_step("요약 저장", 1)
    summary = pd.DataFrame(rows)
    write_csv(summary, os.path.join(config.output_dir, 'summary.csv'))

    workbook = ReportWorkbook(output_dir=config.output_dir)
    workbook.add_summary_sheet({
        '로그': log_path,
        '로그 sha256': first['log_sha256'],
        '스텝 수': len(log),
        '실행': ', '.join(label for label, _ in runs),
        '기준선': ', '.join(label for label, _ in baselines) or '-',
        '프로브 수': len(probes),
        '포화 이벤트 수': len(onsets),
        '구간 크기': bin_size,
    })
    workbook.add_table_sheet("📈 정규화 RMSE", summary)
    for run_label, run_dir in runs + baselines:
        cycle = manifests[run_label].get('cycle_stats')
        if cycle:
            workbook.add_table_sheet(f"⏱️ {run_label}"[:31], pd.DataFrame([cycle]))
    xlsx = workbook.save('report.xlsx')

    write_manifest(os.path.join(config.output_dir, RUN_MANIFEST), {
        'command': 'report',
        'log_path': log_path,
        'log_sha256': first['log_sha256'],
        'runs': {label: path for label, path in runs + baselines},
        'probes': probes,
        'events': len(onsets),
        'bin_size': bin_size,
        'window': list(window),
    })
    tracker.finish_step(f"저장: {xlsx}")
    tracker.show_summary()

    flat = {f"{run_label}/{probe}": values
            for run_label, probes in metrics.items() for probe, values in probes.items()}
    _register(args, settings, 'report', config.output_dir,
              {'log_sha256': first['log_sha256'], 'steps': len(log)}, metrics=flat)
    return config.output_dir


# =====================================
# history
# =====================================
def cmd_history(args, settings: Dict) -> None:
    """실행 기록 조회"""
    from database import DatabaseManager

    config = RunConfig.from_args(args, settings)
    db = DatabaseManager(config.registry)
    try:
        df = db.runs.to_frame(limit=args.limit, command=args.filter)
        if df.empty:
            print("기록된 실행이 없습니다")
            return
        print(df.to_string(index=False))
        if args.metrics is not None:
            metrics = db.runs.metrics_frame(args.metrics)
            print()
            print(metrics.to_string(index=False) if not metrics.empty else "지표 없음")
    finally:
        db.close()


# =====================================
# 실행 기록
# =====================================
def _register(args, settings: Dict, command: str, output_dir: str, manifest: Dict,
              metrics: Optional[Dict[str, Dict[str, float]]] = None) -> Optional[int]:
    """레지스트리에 실행 기록 (실패해도 명령은 성공)"""
    if getattr(args, 'no_registry', False):
        return None
    from database import DatabaseManager

    registry = getattr(args, 'registry', None) or (settings.get('output') or {}).get('registry', 'outputs/nexting.db')
    db = None
    try:
        db = DatabaseManager(registry)
        run = db.runs.record(command, output_dir, manifest)
        if metrics:
            db.runs.add_metrics(run, metrics)
        db.commit()
        return run.id
    except Exception as e:
        if db is not None:
            db.rollback()
        logger.warning(f"실행 기록 실패: {e}")
        return None
    finally:
        if db is not None:
            db.close()



# =====================================
# 인자
# =====================================
def parse_args(argv: Optional[List[str]] = None):
    """명령줄 파싱"""
    parser = argparse.ArgumentParser(
        description='다중 시간척도 센서 예측 (nexting) 실험 도구',
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument('--settings', type=str, default=None, help='설정 파일 (기본: config/settings.yaml)')
    parser.add_argument('--log-level', type=str, default=None, help='로깅 레벨 (DEBUG/INFO/WARNING)')
    parser.add_argument('--registry', type=str, default=None, help='실행 기록 DB 경로')
    parser.add_argument('--no-registry', action='store_true', help='실행 기록 안 함')
    parser.add_argument('--quiet', action='store_true', help='진행 표시 끄기')

    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', help='시뮬레이터 센서 로그 생성')
    p.add_argument('--steps', type=int, default=120000, help='스텝 수 (기본: 120000)')
    p.add_argument('--seed', type=int, default=None, help='난수 seed')
    p.add_argument('--params', type=str, default=None, help='시뮬레이터 파라미터 YAML')
    p.add_argument('--out', type=str, default='outputs/sensor_log.csv', help='출력 CSV 경로')

    for name, help_text in (('learn', 'TD(λ) 예측 뱅크 학습'), ('solve', '리턴 / θ* 계산')):
        p = sub.add_parser(name, help=help_text)
        p.add_argument('--log', type=str, required=True, help='센서 로그 CSV')
        p.add_argument('--tiling', type=str, default=None, help='타일링 설정 파일')
        p.add_argument('--specs', type=str, default=None, help='예측 스펙 파일 (기본: 자동 생성)')
        p.add_argument('--alpha', type=str, default=None, help="step size ('auto' = 0.1/active)")
        p.add_argument('--probe', action='append', default=None, help='프로브 (id 또는 대상|할인 라벨)')
        p.add_argument('--max-steps', type=int, default=None, help='앞부분 스텝만 사용')
        p.add_argument('--out', type=str, required=True, help='출력 디렉토리')
        if name == 'learn':
            p.add_argument('--lambda', dest='lam', type=float, default=None, help='λ 덮어쓰기 (TD(0)/TD(1))')
            p.add_argument('--workers', type=int, default=None, help='작업자 스레드 수')
            p.add_argument('--label', type=str, default=None, help='실행 라벨')
        else:
            p.add_argument('--eps', type=float, default=None, help='리턴 절단 허용오차')
            p.add_argument('--ridge', type=float, default=None, help='ridge (기본: 1e-8 x trace(A)/n)')

    p = sub.add_parser('report', help='평가 리포트')
    p.add_argument('--run', action='append', default=None, help='LABEL=DIR (learn 출력)')
    p.add_argument('--baseline', action='append', default=None, help='LABEL=DIR (bias-only 기준선)')
    p.add_argument('--solve', type=str, default=None, help='solve 출력 디렉토리')
    p.add_argument('--log', type=str, default=None, help='센서 로그 (기본: 매니페스트 경로)')
    p.add_argument('--probe', action='append', default=None, help='리포트할 프로브 라벨')
    p.add_argument('--bin-size', type=int, default=None, help='학습 곡선 구간 크기')
    p.add_argument('--window', type=int, default=None, help='정렬 창 (± 스텝)')
    p.add_argument('--event-channel', type=str, default='light', help='이벤트 검출 채널')
    p.add_argument('--out', type=str, required=True, help='출력 디렉토리')

    p = sub.add_parser('history', help='실행 기록 조회')
    p.add_argument('--limit', type=int, default=20)
    p.add_argument('--filter', type=str, default=None, help='명령 이름으로 거르기')
    p.add_argument('--metrics', type=int, default=None, help='지표를 볼 실행 id')

    return parser.parse_args(argv)


if __name__ == "__main__":
    sys.exit(main())
