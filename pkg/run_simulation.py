"""
Simulation Runner Script
시뮬레이션 실행 스크립트

Entry point for bandit experiments:
    run         one environment cell from a YAML config
    sweep       every cell of a grid config
    illustrate  strategy illustration on a ten-arm Beta(1, 9) bandit
    selftest    fast invariant checks
밴딧 실험 실행을 위한 진입점
"""

import os
import sys
import argparse
import logging
from typing import List, Optional

from dotenv import load_dotenv

from bandits.config import environment_cells, load_config, with_overrides
from bandits.core import BanditError, InvalidConfig
from bandits.illustration import STRATEGIES, illustrate, illustration_sweep, save_illustration
from bandits.selftest import run_selftest
from simulator import Simulator

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger(__name__)


def setup_logging(log_file: Optional[str] = None):
    """
    Console logging at INFO, plus a DEBUG file handler when log_file is given
    콘솔 INFO 로깅, 지정 시 DEBUG 파일 로깅 추가
    """
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    if log_file:
        directory = os.path.dirname(os.path.abspath(log_file))
        os.makedirs(directory, exist_ok=True)
        file_handler = logging.FileHandler(log_file, mode='a')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root_logger = logging.getLogger()
        root_logger.setLevel(logging.DEBUG)
        for handler in root_logger.handlers:
            if not isinstance(handler, logging.FileHandler):
                handler.setLevel(logging.INFO)
        root_logger.addHandler(file_handler)


def _nonnegative(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return number


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def _env_int(name: str) -> Optional[int]:
    value = os.getenv(name)
    return int(value) if value not in (None, '') else None


def build_parser() -> argparse.ArgumentParser:
    """
    Command line parser; defaults come from BANDIT_GM_* environment variables
    명령줄 파서 (기본값은 환경 변수)
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--seed',
        type=_nonnegative,
        default=None,
        help='Base seed (BANDIT_GM_SEED overrides this flag when set)'
    )
    common.add_argument(
        '--out',
        type=str,
        default=os.getenv('BANDIT_GM_OUTPUT_DIR', 'simulation_results'),
        help='Output directory (default: simulation_results)'
    )
    common.add_argument(
        '--log-file',
        type=str,
        default=None,
        help='Also write DEBUG logs to this file'
    )

    experiment = argparse.ArgumentParser(add_help=False)
    experiment.add_argument('--config', type=str, required=True, help='YAML experiment file')
    experiment.add_argument(
        '--reps',
        type=_positive,
        default=_env_int('BANDIT_GM_REPS'),
        help='Repetitions per config (default: from the config file)'
    )
    experiment.add_argument('--horizon', type=_positive, default=None, help='Override the horizon T')
    experiment.add_argument(
        '--parallel',
        type=_positive,
        default=_env_int('BANDIT_GM_PARALLEL') or 1,
        help='Worker processes for repetitions (default: 1)'
    )
    experiment.add_argument('--save-traces', action='store_true', help='Write one CSV per repetition')
    experiment.add_argument('--no-progress', action='store_true', help='Hide the progress bar')

    parser = argparse.ArgumentParser(description='Reward-conditioned bandit simulations')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('run', parents=[common, experiment], help='Run a single environment cell')
    sub.add_parser('sweep', parents=[common, experiment], help='Run every cell of a grid config')
    illustrate_parser = sub.add_parser('illustrate', parents=[common], help='Strategy illustration')
    illustrate_parser.add_argument(
        '--n-seeds',
        type=_positive,
        default=1,
        help='Also average the illustration over this many consecutive seeds'
    )
    sub.add_parser('selftest', parents=[common], help='Invariant checks')
    return parser


def resolve_seed(flag: Optional[int]) -> Optional[int]:
    """BANDIT_GM_SEED wins over --seed"""
    env_seed = _env_int('BANDIT_GM_SEED')
    if env_seed is not None:
        if env_seed < 0:
            raise InvalidConfig(f"BANDIT_GM_SEED must be nonnegative, got {env_seed}")
        return env_seed
    return flag


def run_experiments(args, seed: Optional[int]) -> int:
    configs = with_overrides(load_config(args.config), seed=seed, repetitions=args.reps, horizon=args.horizon)
    cells = environment_cells(configs)
    if args.command == 'run' and len(cells) > 1:
        raise InvalidConfig(f"{args.config}: 'run' takes one environment cell, got {len(cells)}; use 'sweep'")

    # Display simulation configuration / 시뮬레이션 설정 표시
    logger.info("=" * 80)
    logger.info("SIMULATION CONFIGURATION")
    logger.info("시뮬레이션 설정")
    logger.info("=" * 80)
    logger.info(f"Config: {args.config}")
    logger.info(f"Environment cells: {len(cells)}")
    logger.info(f"Policies per cell: {len(configs) // len(cells)}")
    logger.info(f"Horizon: {configs[0].horizon}")
    logger.info(f"Repetitions: {configs[0].repetitions}")
    logger.info(f"Seed: {configs[0].seed}")
    logger.info(f"Parallel: {args.parallel}")
    logger.info(f"Output Directory: {args.out}")
    logger.info("=" * 80)

    simulator = Simulator(configs, parallel=args.parallel, progress=not args.no_progress, save_traces=args.save_traces)

    logger.info("\n🚀 Starting simulation...\n")
    metrics = simulator.run()

    # Display results / 결과 표시
    logger.info("\n" + "=" * 80)
    logger.info("SIMULATION RESULTS")
    logger.info("시뮬레이션 결과")
    logger.info("=" * 80)
    for cell in cells:
        logger.info(cell.label)
        for config in simulator.configs_for(cell):
            m = metrics[config.label]
            logger.info(
                f"  {m['policy']:<28} final {m['mode']} {m['final_mean']:10.2f} "
                f"[{m['final_lo']:.2f}, {m['final_hi']:.2f}]"
            )
        logger.info("-" * 80)

    logger.info(f"\n💾 Saving results to {args.out}...")
    simulator.save_results(output_dir=args.out)

    logger.info("\n✅ Simulation completed successfully!")
    logger.info(f"📊 Check the {args.out} directory for curves, metrics and the report")
    return 0


def run_illustration(args, seed: Optional[int]) -> int:
    seed = 0 if seed is None else seed
    result = illustrate(seed)
    sweep = illustration_sweep(range(seed, seed + args.n_seeds)) if args.n_seeds > 1 else None

    logger.info("=" * 80)
    logger.info(f"STRATEGY ILLUSTRATION (seed {seed})")
    logger.info("=" * 80)
    logger.info(f"Best arm value: {result.best_value:.4f}")
    logger.info(f"Lambda bounds: [{result.bounds.lower:.4f}, {result.bounds.upper:.4f}], chosen {result.lam:.4f}")
    for name in STRATEGIES:
        line = f"  {name:<12} {result.expected_rewards[name]:.4f}"
        if sweep is not None:
            line += f"   (mean over {len(sweep)} seeds {sweep[name].mean():.4f})"
        logger.info(line)
    logger.info("=" * 80)

    save_illustration(result, args.out, sweep)
    logger.info(f"\n✅ Illustration saved to {args.out}")
    return 0


def run_checks(args, seed: Optional[int]) -> int:
    results = run_selftest(0 if seed is None else seed)
    failed = [r for r in results if not r.passed]
    logger.info("=" * 80)
    if failed:
        logger.error(f"❌ {len(failed)} of {len(results)} checks failed: {', '.join(r.name for r in failed)}")
        return 1
    logger.info(f"✅ All {len(results)} checks passed")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main function to run simulations
    시뮬레이션 실행 메인 함수

    Returns:
        Process exit code (0 on success, 1 on configuration or IO errors)
    """
    # Load environment variables / 환경 변수 로드
    load_dotenv()

    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_file)

    try:
        seed = resolve_seed(args.seed)
        if args.command in ('run', 'sweep'):
            return run_experiments(args, seed)
        if args.command == 'illustrate':
            return run_illustration(args, seed)
        return run_checks(args, seed)

    except BanditError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1

    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
