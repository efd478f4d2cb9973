"""
Experiment Configuration
실험 설정

Experiment documents are YAML files. List-valued environment and policy
fields expand into a Cartesian grid, and every policy in `policies:` is run
against every environment cell.
YAML 실험 문서를 읽고 리스트 값 필드를 그리드로 확장
"""

import itertools
import logging
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .core import InvalidConfig, RewardDomain
from .envs import EnvironmentSpec
from .gm import Strategy
from .neural import TrainConfig

logger = logging.getLogger(__name__)

POLICY_KINDS = (
    'random',
    'eps-greedy',
    'ucb1',
    'ts-beta',
    'neural-ts',
    'neural-eps-greedy',
    'oracle',
    'rcp',
)
BACKENDS = ('counting', 'cvae')

# Fields whose single value is itself a list / 값 자체가 리스트인 필드
PAIR_KEYS = ('prior', 'slot_sizes')
# Policy prior keyword for the environment's own Beta prior
TRUE_PRIOR = 'true'

EXPERIMENT_KEYS = ('name', 'horizon', 'repetitions', 'seed', 'environment', 'policy', 'policies')


@dataclass(frozen=True)
class PolicySpec:
    """
    Algorithm and hyperparameters of one policy
    정책 하나의 알고리즘과 하이퍼파라미터

    Args:
        kind: One of POLICY_KINDS
        name: Display label (derived when omitted)
        epsilon: Exploration rate of the epsilon-greedy variants
        prior: Beta prior (a, b) of ts-beta; None uses the environment's prior
        backend: 'counting' or 'cvae' for reward-conditioned policies
        strategy: Generalized-marginalization strategy
        smoothing: Counting pseudo-count alpha_s
        n_latent_samples: Latent samples N_z per CVAE policy query
        reward_domain: Reward domain tag; non-binary domains pick the condition
            rewards from the reward history on every release
        q0, q1: Condition-reward percentiles for non-binary rewards
        train: Network training schedule
    """
    kind: str = 'rcp'
    name: Optional[str] = None
    epsilon: float = 0.1
    prior: Optional[Tuple[float, float]] = (1.0, 1.0)
    backend: str = 'counting'
    strategy: str = 'submax'
    smoothing: float = 1.0
    n_latent_samples: int = 5
    reward_domain: str = 'binary'
    q0: float = 10.0
    q1: float = 90.0
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidConfig(f"Unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.backend not in BACKENDS:
            raise InvalidConfig(f"Unknown RCP backend {self.backend!r}; expected one of {BACKENDS}")
        try:
            Strategy(self.strategy)
        except ValueError:
            raise InvalidConfig(
                f"Unknown strategy {self.strategy!r}; expected one of {[s.value for s in Strategy]}"
            ) from None
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidConfig(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.prior is not None:
            prior = tuple(float(p) for p in self.prior)
            if len(prior) != 2 or min(prior) <= 0:
                raise InvalidConfig(f"prior must be two positive numbers, got {self.prior}")
            object.__setattr__(self, 'prior', prior)
        if self.smoothing < 0:
            raise InvalidConfig(f"smoothing must be >= 0, got {self.smoothing}")
        if self.n_latent_samples < 1:
            raise InvalidConfig(f"n_latent_samples must be >= 1, got {self.n_latent_samples}")
        try:
            RewardDomain(self.reward_domain)
        except ValueError:
            raise InvalidConfig(
                f"Unknown reward domain {self.reward_domain!r}; expected one of {[d.value for d in RewardDomain]}"
            ) from None
        if not 0.0 < self.q0 < self.q1 < 100.0:
            raise InvalidConfig(f"Quantiles must satisfy 0 < q0 < q1 < 100, got ({self.q0}, {self.q1})")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == 'rcp':
            return f"rcp-{self.backend}-{self.strategy}"
        if self.kind in ('eps-greedy', 'neural-eps-greedy'):
            return f"{self.kind}({self.epsilon:g})"
        if self.kind == 'ts-beta':
            if self.prior is None:
                return "ts-beta(true)"
            return f"ts-beta({self.prior[0]:g},{self.prior[1]:g})"
        return self.kind


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One environment cell paired with one policy
    환경 셀 하나와 정책 하나의 조합
    """
    name: str
    environment: EnvironmentSpec
    policy: PolicySpec
    horizon: int = 5000
    repetitions: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidConfig(f"horizon must be >= 1, got {self.horizon}")
        if self.repetitions < 1:
            raise InvalidConfig(f"repetitions must be >= 1, got {self.repetitions}")
        if self.seed < 0:
            raise InvalidConfig(f"seed must be nonnegative, got {self.seed}")
        check_compatible(self.environment, self.policy)

    @property
    def label(self) -> str:
        return f"{self.environment.label}__{self.policy.label}"


def check_compatible(env: EnvironmentSpec, policy: PolicySpec):
    """Raise InvalidConfig when the policy cannot run on the environment family"""
    tabular = ('eps-greedy', 'ucb1', 'ts-beta')
    if policy.kind in tabular and env.family != 'bernoulli':
        raise InvalidConfig(f"{policy.kind} needs a non-contextual environment, got {env.family}")
    if policy.kind in ('neural-ts', 'neural-eps-greedy') and env.family != 'contextual':
        raise InvalidConfig(f"{policy.kind} needs the contextual environment, got {env.family}")
    if policy.kind == 'oracle' and env.family == 'combinatorial':
        raise InvalidConfig("The oracle policy is not available for the combinatorial environment")
    if policy.kind == 'rcp' and policy.backend == 'counting' and env.family != 'bernoulli':
        raise InvalidConfig(f"The counting backend needs a non-contextual environment, got {env.family}")


# ==================== Grid expansion / 그리드 확장 ====================

def _options(key: str, value: Any) -> List[Any]:
    # Pair-valued keys only expand when given a list of lists
    if key in PAIR_KEYS:
        if isinstance(value, list) and value and all(isinstance(v, (list, str, bool)) or v is None for v in value):
            return list(value)
        return [value]
    if isinstance(value, list):
        if not value:
            raise InvalidConfig(f"Empty list for {key!r}")
        return list(value)
    return [value]


def expand_grid(document: Dict[str, Any]) -> List[Dict[str, Any]]:
    """
    Cartesian product over list-valued fields
    리스트 값 필드의 데카르트 곱

    Example:
        {'n_arms': [10, 100], 'delay': 100} ->
        [{'n_arms': 10, 'delay': 100}, {'n_arms': 100, 'delay': 100}]
    """
    keys = list(document.keys())
    grids = [_options(key, document[key]) for key in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*grids)]


def _known(cls, values: Dict[str, Any], what: str) -> Dict[str, Any]:
    names = {f.name for f in fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise InvalidConfig(f"Unknown {what} field(s): {sorted(unknown)}")
    return values


def parse_environment(cell: Dict[str, Any]) -> EnvironmentSpec:
    cell = dict(cell)
    prior = cell.pop('prior', None)
    if prior is not None:
        if not isinstance(prior, (list, tuple)) or len(prior) != 2:
            raise InvalidConfig(f"Environment prior must be [alpha, beta], got {prior!r}")
        cell['alpha'], cell['beta'] = float(prior[0]), float(prior[1])
    if 'slot_sizes' in cell:
        cell['slot_sizes'] = tuple(int(s) for s in cell['slot_sizes'])
    try:
        return EnvironmentSpec(**_known(EnvironmentSpec, cell, 'environment'))
    except TypeError as e:
        raise InvalidConfig(f"Bad environment entry: {e}") from e


def parse_policy(cell: Dict[str, Any]) -> PolicySpec:
    cell = dict(cell)
    if cell.get('prior') == TRUE_PRIOR or cell.get('prior') is True:
        cell['prior'] = None
    if 'train' in cell:
        train = cell['train'] or {}
        try:
            cell['train'] = TrainConfig(**_known(TrainConfig, train, 'train'))
        except TypeError as e:
            raise InvalidConfig(f"Bad train entry: {e}") from e
    try:
        return PolicySpec(**_known(PolicySpec, cell, 'policy'))
    except TypeError as e:
        raise InvalidConfig(f"Bad policy entry: {e}") from e


def parse_config(document: Dict[str, Any], source: str = '<config>') -> List[ExperimentConfig]:
    """
    Expand an experiment document into ExperimentConfig cells
    실험 문서를 ExperimentConfig 목록으로 확장
    """
    if not isinstance(document, dict):
        raise InvalidConfig(f"{source}: expected a mapping at the top level")
    unknown = set(document) - set(EXPERIMENT_KEYS)
    if unknown:
        raise InvalidConfig(f"{source}: unknown key(s) {sorted(unknown)}")
    if 'environment' not in document:
        raise InvalidConfig(f"{source}: missing 'environment'")

    policies = document.get('policies')
    if policies is None:
        policies = [document.get('policy', {})]
    if not isinstance(policies, list) or not policies:
        raise InvalidConfig(f"{source}: 'policies' must be a nonempty list")

    if not isinstance(document['environment'], dict):
        raise InvalidConfig(f"{source}: 'environment' must be a mapping")
    environments = [parse_environment(cell) for cell in expand_grid(dict(document['environment']))]
    policy_specs = []
    for entry in policies:
        if not isinstance(entry, dict):
            raise InvalidConfig(f"{source}: each policy must be a mapping, got {entry!r}")
        train = entry.get('train')
        body = {k: v for k, v in entry.items() if k != 'train'}
        for cell in expand_grid(body):
            if train is not None:
                cell['train'] = train
            policy_specs.append(parse_policy(cell))

    labels = [p.label for p in policy_specs]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise InvalidConfig(f"{source}: duplicate policy labels {duplicates}; set 'name' to tell them apart")

    name = str(document.get('name', os.path.splitext(os.path.basename(source))[0]))
    configs = [
        ExperimentConfig(
            name=name,
            environment=env,
            policy=policy,
            horizon=int(document.get('horizon', 5000)),
            repetitions=int(document.get('repetitions', 20)),
            seed=int(document.get('seed', 0))
        )
        for env in environments
        for policy in policy_specs
    ]
    logger.debug(f"{source}: {len(environments)} environment cell(s) x {len(policy_specs)} policies")
    return configs


def load_config(path: str) -> List[ExperimentConfig]:
    """
    Read and expand a YAML experiment document

    Raises:
        InvalidConfig: missing, unreadable or invalid file (message names the path)
    """
    if not os.path.isfile(path):
        raise InvalidConfig(f"Config file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise InvalidConfig(f"Cannot read config {path}: {e}") from e
    try:
        return parse_config(document, source=path)
    except InvalidConfig as e:
        message = str(e)
        if path not in message:
            message = f"{path}: {message}"
        raise InvalidConfig(message) from e


def with_overrides(
    configs: List[ExperimentConfig],
    seed: Optional[int] = None,
    repetitions: Optional[int] = None,
    horizon: Optional[int] = None
) -> List[ExperimentConfig]:
    """Apply command-line overrides to every cell"""
    changes = {
        key: value
        for key, value in (('seed', seed), ('repetitions', repetitions), ('horizon', horizon))
        if value is not None
    }
    return [replace(config, **changes) for config in configs] if changes else list(configs)


def environment_cells(configs: List[ExperimentConfig]) -> List[EnvironmentSpec]:
    """Distinct environment specs in first-seen order"""
    seen: List[EnvironmentSpec] = []
    for config in configs:
        if config.environment not in seen:
            seen.append(config.environment)
    return seen
