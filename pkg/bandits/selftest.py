"""
Invariant Self-Test
불변식 자체 검사

Fast in-process checks run by `run_simulation.py selftest`: the lambda bound
solver against a brute-force grid scan, linearity and dominance of the
importance-sampling objective, finite-difference gradient checks of every
differentiable layer, delay-buffer conservation and normalize idempotence.
"""

import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import torch

from .core import EMPTY_CONTEXT, Observation, Reward, derive_seed, make_rng, normalize
from .envs import DelayBuffer
from .gm import is_coefficient, is_estimate, lambda_bounds, optimal_lambda
from .neural import (
    DTYPE,
    Cvae,
    DenseNet,
    InjectionLayer,
    check_parameter_gradients,
    gaussian_kl,
    gradient_check,
    make_generator,
)

logger = logging.getLogger(__name__)

GRID_STEP = 1e-4
GRID_RANGE = 10.0
BOUND_TOLERANCE = 1e-9
LINEARITY_TOLERANCE = 1e-9
DOMINANCE_TOLERANCE = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ''
    seconds: float = 0.0


def _random_pair(rng: np.random.Generator, n_actions: int):
    return normalize(rng.dirichlet(np.ones(n_actions))), normalize(rng.dirichlet(np.ones(n_actions)))


def check_lambda_oracle(seed: int = 0, n_pairs: int = 1000) -> CheckResult:
    """
    lambda_bounds versus a feasibility scan on a 1e-4 grid over [-10, 10]
    격자 탐색과 lambda 경계 비교
    """
    rng = make_rng(derive_seed(seed, 101))
    grid = np.round(np.arange(-GRID_RANGE, GRID_RANGE + GRID_STEP / 2, GRID_STEP), 10)
    for trial in range(n_pairs):
        k = int(rng.integers(2, 11))
        p0, p1 = _random_pair(rng, k)
        bounds = lambda_bounds(p0, p1)

        lowest = np.full(grid.shape, np.inf)
        for a, b in zip(p0.probs, p1.probs):
            np.minimum(lowest, a + grid * (b - a), out=lowest)
        feasible = grid[lowest >= 0.0]

        for bound, scanned in ((bounds.lower, feasible.min()), (bounds.upper, feasible.max())):
            if not np.isfinite(bound):
                continue
            raw = (1.0 - bound) * p0.probs + bound * p1.probs
            if not -BOUND_TOLERANCE <= raw.min() <= BOUND_TOLERANCE:
                return CheckResult('lambda-oracle', False, f"pair {trial}: mix at {bound} has min {raw.min():.3e}")
            if abs(bound) < GRID_RANGE and abs(bound - scanned) > GRID_STEP * (1.0 + 1e-6):
                return CheckResult('lambda-oracle', False, f"pair {trial}: bound {bound} vs grid {scanned}")
    return CheckResult('lambda-oracle', True, f"{n_pairs} pairs")


def synthetic_dataset(rng: np.random.Generator, n_actions: int, n_rows: int) -> List[Observation]:
    """Binary-reward logs from a random logging policy"""
    logging_policy = normalize(rng.dirichlet(np.ones(n_actions)) + 1e-3)
    means = rng.random(n_actions)
    data = []
    for _ in range(n_rows):
        action = int(rng.choice(n_actions, p=logging_policy.probs))
        reward = Reward(float(rng.random() < means[action]))
        data.append(Observation(EMPTY_CONTEXT, action, reward, logging_policy[action]))
    return data


def check_is_objective(seed: int = 0, n_datasets: int = 100) -> CheckResult:
    """
    The IS estimate is linear in lambda and the chosen bound dominates 0 and 1
    중요도 샘플링 추정치의 선형성과 최적 경계의 우월성
    """
    rng = make_rng(derive_seed(seed, 102))
    for trial in range(n_datasets):
        k = int(rng.integers(2, 11))
        p0, p1 = _random_pair(rng, k)
        data = synthetic_dataset(rng, k, int(rng.integers(20, 200)))

        v0, v_half, v1 = (is_estimate(data, lam, p0, p1) for lam in (0.0, 0.5, 1.0))
        if abs(v_half - 0.5 * (v0 + v1)) > LINEARITY_TOLERANCE:
            return CheckResult('is-objective', False, f"dataset {trial}: not collinear")

        lam = optimal_lambda(lambda_bounds(p0, p1), is_coefficient(data, p0, p1))
        best = is_estimate(data, lam, p0, p1)
        if best < v0 - DOMINANCE_TOLERANCE or best < v1 - DOMINANCE_TOLERANCE:
            return CheckResult('is-objective', False, f"dataset {trial}: lambda {lam} loses to an endpoint")
    return CheckResult('is-objective', True, f"{n_datasets} datasets")


def check_gradients(seed: int = 0) -> CheckResult:
    """Finite-difference checks of DenseNet, InjectionLayer, the KL term and the CVAE loss"""
    generator = make_generator(seed)
    x = torch.randn(3, 4, generator=generator, dtype=DTYPE)
    r = torch.tensor([[0.0], [1.0], [1.0]], dtype=DTYPE)
    failures = []

    net = DenseNet(4, (5,), 2, activation='tanh', generator=generator)
    if not gradient_check(lambda inp: net(inp), [x]):
        failures.append('dense-input')
    if not check_parameter_gradients(net, (x,)):
        failures.append('dense-params')

    for mode in ('multiplicative', 'additive'):
        layer = InjectionLayer(4, mode, generator=generator)
        if not gradient_check(lambda h: layer(h, r), [x]):
            failures.append(f'injection-{mode}')
        if not check_parameter_gradients(layer, (x, r)):
            failures.append(f'injection-{mode}-params')

    mu = torch.randn(3, 2, generator=generator, dtype=DTYPE)
    sigma = torch.rand(3, 2, generator=generator, dtype=DTYPE) + 0.5
    if not gradient_check(gaussian_kl, [mu, sigma]):
        failures.append('kl')

    cvae = Cvae((2, 3), context_dim=2, latent_dim=2, hidden_width=4, n_hidden=2, generator=generator)
    actions = torch.tensor([[0, 2], [1, 0], [1, 1]])
    contexts = torch.randn(3, 2, generator=generator, dtype=DTYPE)
    eps = torch.randn(3, 2, generator=generator, dtype=DTYPE)
    if not check_parameter_gradients(cvae, (actions, contexts, r, eps, 0.5)):
        failures.append('cvae-elbo')

    if failures:
        return CheckResult('gradients', False, f"failed: {', '.join(failures)}")
    return CheckResult('gradients', True, 'dense, injection, kl, cvae')


def check_buffer_conservation(seed: int = 0, n_pushes: int = 1037, capacity: int = 100) -> CheckResult:
    """Every pushed observation is either released exactly once or still pending"""
    rng = make_rng(derive_seed(seed, 104))
    buffer = DelayBuffer(capacity)
    released = 0
    for _ in range(n_pushes):
        buffer.push(Observation(EMPTY_CONTEXT, 0, Reward(float(rng.random() < 0.5)), 1.0))
        batch = buffer.poll()
        if batch and len(batch) != capacity:
            return CheckResult('buffer', False, f"released a batch of {len(batch)}")
        released += len(batch)
    ok = released + len(buffer) == n_pushes == buffer.total_pushed and released == buffer.total_released
    return CheckResult('buffer', ok, f"{released} released, {len(buffer)} pending")


def check_normalize(seed: int = 0, n_vectors: int = 200) -> CheckResult:
    """normalize(normalize(w)) == normalize(w) exactly"""
    rng = make_rng(derive_seed(seed, 105))
    for _ in range(n_vectors):
        w = rng.random(int(rng.integers(1, 50))) * 10.0 ** rng.integers(-5, 5)
        once = normalize(w)
        if normalize(once) != once:
            return CheckResult('normalize', False, 'not idempotent')
        # Renormalizing the raw array moves entries by rounding only
        if np.max(np.abs(normalize(once.probs).probs - once.probs)) > 1e-15:
            return CheckResult('normalize', False, 'renormalized array drifted')
    return CheckResult('normalize', True, f"{n_vectors} vectors")


CHECKS: List[Callable[[int], CheckResult]] = [
    check_lambda_oracle,
    check_is_objective,
    check_gradients,
    check_buffer_conservation,
    check_normalize,
]


def run_selftest(seed: int = 0, checks: Optional[List[Callable[[int], CheckResult]]] = None) -> List[CheckResult]:
    """
    Run every check, timing each; failures are logged, never raised
    모든 검사를 실행하고 결과 반환
    """
    results = []
    for check in checks or CHECKS:
        start = time.perf_counter()
        try:
            result = check(seed)
        except Exception as e:
            logger.error(f"Self-test {check.__name__} raised: {e}")
            result = CheckResult(check.__name__, False, f"{type(e).__name__}: {e}")
        result.seconds = time.perf_counter() - start
        status = 'PASS' if result.passed else 'FAIL'
        logger.info(f"[{status}] {result.name:<15} {result.detail} ({result.seconds:.2f}s)")
        results.append(result)
    return results
