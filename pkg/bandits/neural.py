"""
Neural Components for Reward-Conditioned Bandits
보상 조건부 밴딧 신경망 구성요소

Dense networks with MC dropout, multiplicative reward injection, the CVAE
policy model, ELBO training with a KL weight, value-model fitting for neural
Thompson sampling and finite-difference gradient checks. Everything runs on
CPU in float64.
MC 드롭아웃 신경망, 곱셈형 보상 주입, CVAE, ELBO 학습, 가치 모델 학습, 기울기 검증
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.func import functional_call

from .core import InvalidConfig, NoData, ShapeError, TrainingDiverged

logger = logging.getLogger(__name__)

DTYPE = torch.float64

ACTIVATIONS: Dict[str, Callable[[torch.Tensor], torch.Tensor]] = {
    'tanh': torch.tanh,
    'relu': torch.relu,
    'identity': lambda x: x,
}

DROPOUT_MODES = ('off', 'sample')
INJECTION_MODES = ('multiplicative', 'additive')


@dataclass(frozen=True)
class TrainConfig:
    """
    Training schedule and architecture knobs
    학습 일정 및 구조 설정

    Args:
        steps: Optimizer steps per (re)training round
        batch_size: Minibatch size, sampled with replacement
        learning_rate: Adam learning rate
        kl_weight: Weight beta on the KL term of the ELBO
        dropout_rate: Dropout rate of value models (MC dropout)
        seed: Parameter / minibatch seed
        hidden_width: Width of every hidden layer
        n_hidden: Number of hidden layers (one injection site per layer)
        latent_dim: CVAE latent dimension
        injection: 'multiplicative' (default) or 'additive'
        holdout_fraction: Share of data held out for the ELBO progress check
    """
    steps: int = 3000
    batch_size: int = 128
    learning_rate: float = 1e-3
    kl_weight: float = 0.5
    dropout_rate: float = 0.1
    seed: int = 0
    hidden_width: int = 64
    n_hidden: int = 2
    latent_dim: int = 8
    injection: str = 'multiplicative'
    holdout_fraction: float = 0.1

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidConfig(f"steps must be >= 1, got {self.steps}")
        if self.batch_size < 1:
            raise InvalidConfig(f"batch_size must be >= 1, got {self.batch_size}")
        if self.kl_weight < 0:
            raise InvalidConfig(f"kl_weight must be >= 0, got {self.kl_weight}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidConfig(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.injection not in INJECTION_MODES:
            raise InvalidConfig(f"injection must be one of {INJECTION_MODES}, got {self.injection!r}")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise InvalidConfig(f"holdout_fraction must lie in [0, 1), got {self.holdout_fraction}")


def make_generator(seed: int) -> torch.Generator:
    """Explicit torch random source / 명시적 torch 난수원"""
    generator = torch.Generator()
    generator.manual_seed(int(seed) % (2**63 - 1))
    return generator


def _init_linear(layer: nn.Linear, generator: torch.Generator):
    # Gaussian weights scaled by 1/sqrt(fan-in), zero bias
    fan_in = layer.in_features
    with torch.no_grad():
        weight = torch.randn(layer.weight.shape, generator=generator, dtype=DTYPE)
        layer.weight.copy_(weight / math.sqrt(max(fan_in, 1)))
        layer.bias.zero_()


def _dropout(h: torch.Tensor, rate: float, generator: Optional[torch.Generator]) -> torch.Tensor:
    # Inverted dropout with an explicit generator for reproducible masks
    keep = 1.0 - rate
    mask = torch.bernoulli(torch.full_like(h, keep), generator=generator)
    return h * mask / keep


class DenseNet(nn.Module):
    """
    Feedforward network with optional MC dropout
    선택적 MC 드롭아웃이 있는 순전파 신경망
    """

    def __init__(
        self,
        input_dim: int,
        hidden_widths: Sequence[int],
        output_dim: int,
        activation: str = 'tanh',
        dropout_rate: float = 0.0,
        generator: Optional[torch.Generator] = None
    ):
        """
        Args:
            input_dim: Input width
            hidden_widths: Width of each hidden layer
            output_dim: Output width
            activation: Hidden activation name ('tanh', 'relu', 'identity')
            dropout_rate: Dropout rate applied after every hidden layer
            generator: Parameter initialization source
        """
        super().__init__()
        if activation not in ACTIVATIONS:
            raise InvalidConfig(f"Unknown activation: {activation}")
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self.activation = activation
        self.dropout_rate = float(dropout_rate)

        widths = [self.input_dim, *[int(w) for w in hidden_widths], self.output_dim]
        self.layers = nn.ModuleList(
            nn.Linear(w_in, w_out, dtype=DTYPE) for w_in, w_out in zip(widths[:-1], widths[1:])
        )
        generator = generator if generator is not None else make_generator(0)
        for layer in self.layers:
            _init_linear(layer, generator)

    def forward(
        self,
        x: torch.Tensor,
        dropout_mode: str = 'off',
        generator: Optional[torch.Generator] = None
    ) -> torch.Tensor:
        if dropout_mode not in DROPOUT_MODES:
            raise ValueError(f"dropout_mode must be one of {DROPOUT_MODES}")
        if x.shape[-1] != self.input_dim:
            raise ShapeError(f"Expected input width {self.input_dim}, got {x.shape[-1]}")

        act = ACTIVATIONS[self.activation]
        h = x
        for layer in self.layers[:-1]:
            h = act(layer(h))
            if dropout_mode == 'sample' and self.dropout_rate > 0.0:
                h = _dropout(h, self.dropout_rate, generator)
        return self.layers[-1](h)


class InjectionLayer(nn.Module):
    """
    Reward injection site: hidden * (1 + tanh(W r + b)), or hidden + (W r + b)
    보상 주입 레이어 (곱셈형 기본, 덧셈형 선택)
    """

    def __init__(
        self,
        width: int,
        mode: str = 'multiplicative',
        condition_dim: int = 1,
        generator: Optional[torch.Generator] = None
    ):
        super().__init__()
        if mode not in INJECTION_MODES:
            raise InvalidConfig(f"Unknown injection mode: {mode}")
        self.width = int(width)
        self.mode = mode
        self.condition_dim = int(condition_dim)
        self.linear = nn.Linear(self.condition_dim, self.width, dtype=DTYPE)
        _init_linear(self.linear, generator if generator is not None else make_generator(0))

    def forward(self, hidden: torch.Tensor, r: torch.Tensor) -> torch.Tensor:
        if hidden.shape[-1] != self.width:
            raise ShapeError(f"Injection width {self.width} does not match hidden width {hidden.shape[-1]}")
        r = r.reshape(-1, self.condition_dim).to(DTYPE)
        pre = self.linear(r)
        if self.mode == 'multiplicative':
            return hidden * (1.0 + torch.tanh(pre))
        return hidden + pre


def inject(trunk_hidden: torch.Tensor, r: torch.Tensor, layer: InjectionLayer) -> torch.Tensor:
    """Modulate trunk activations by the conditioning reward"""
    return layer(trunk_hidden, r)


class InjectedTrunk(nn.Module):
    """Tanh trunk with one reward injection site after each hidden layer"""

    def __init__(
        self,
        input_dim: int,
        width: int,
        n_hidden: int,
        injection: str,
        generator: torch.Generator
    ):
        super().__init__()
        self.input_dim = int(input_dim)
        widths = [self.input_dim] + [int(width)] * int(n_hidden)
        self.layers = nn.ModuleList(
            nn.Linear(w_in, w_out, dtype=DTYPE) for w_in, w_out in zip(widths[:-1], widths[1:])
        )
        for layer in self.layers:
            _init_linear(layer, generator)
        self.injections = nn.ModuleList(
            InjectionLayer(width, injection, generator=generator) for _ in range(int(n_hidden))
        )

    def forward(self, x: torch.Tensor, r: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.input_dim:
            raise ShapeError(f"Expected trunk input width {self.input_dim}, got {x.shape[-1]}")
        h = x
        for layer, injection in zip(self.layers, self.injections):
            h = inject(torch.tanh(layer(h)), r, injection)
        return h


def gaussian_kl(mu: torch.Tensor, sigma: torch.Tensor) -> torch.Tensor:
    """
    KL(N(mu, sigma^2) || N(0, 1)) summed over the last axis
    표준 정규 사전분포에 대한 KL 발산
    """
    return 0.5 * torch.sum(sigma ** 2 + mu ** 2 - 1.0 - 2.0 * torch.log(sigma), dim=-1)


class Cvae(nn.Module):
    """
    Conditional VAE policy model
    조건부 VAE 정책 모델

    Inference network q(z | a, c, r) and generative network p(a | c, r, z)
    with one categorical head per action slot (a single head for flat
    action spaces). Both trunks condition on r through injection layers.
    """

    def __init__(
        self,
        slot_sizes: Sequence[int],
        context_dim: int,
        latent_dim: int = 8,
        hidden_width: int = 64,
        n_hidden: int = 2,
        injection: str = 'multiplicative',
        generator: Optional[torch.Generator] = None
    ):
        super().__init__()
        generator = generator if generator is not None else make_generator(0)
        self.slot_sizes = [int(s) for s in slot_sizes]
        self.context_dim = int(context_dim)
        self.latent_dim = int(latent_dim)

        self.encoder = InjectedTrunk(
            sum(self.slot_sizes) + self.context_dim, hidden_width, n_hidden, injection, generator
        )
        self.mu_head = nn.Linear(hidden_width, self.latent_dim, dtype=DTYPE)
        self.sigma_head = nn.Linear(hidden_width, self.latent_dim, dtype=DTYPE)
        self.decoder = InjectedTrunk(
            self.context_dim + self.latent_dim, hidden_width, n_hidden, injection, generator
        )
        self.heads = nn.ModuleList(nn.Linear(hidden_width, s, dtype=DTYPE) for s in self.slot_sizes)
        for layer in [self.mu_head, self.sigma_head, *self.heads]:
            _init_linear(layer, generator)

    def one_hot(self, actions: torch.Tensor) -> torch.Tensor:
        """(N, n_slots) integer choices -> concatenated one-hot rows"""
        actions = actions.reshape(-1, len(self.slot_sizes))
        parts = [
            F.one_hot(actions[:, i], num_classes=size).to(DTYPE)
            for i, size in enumerate(self.slot_sizes)
        ]
        return torch.cat(parts, dim=-1)

    def encode(
        self,
        actions: torch.Tensor,
        contexts: torch.Tensor,
        rewards: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Variational posterior parameters (mu, sigma)"""
        h = self.encoder(torch.cat([self.one_hot(actions), contexts], dim=-1), rewards)
        mu = self.mu_head(h)
        sigma = F.softplus(self.sigma_head(h)) + 1e-6
        return mu, sigma

    def decode_logits(
        self,
        contexts: torch.Tensor,
        rewards: torch.Tensor,
        z: torch.Tensor
    ) -> List[torch.Tensor]:
        """Unnormalized head outputs, one tensor per slot"""
        h = self.decoder(torch.cat([contexts, z], dim=-1), rewards)
        return [head(h) for head in self.heads]

    def head_probs(
        self,
        contexts: torch.Tensor,
        rewards: torch.Tensor,
        z: torch.Tensor
    ) -> List[torch.Tensor]:
        """Softmax probability vectors per slot"""
        return [torch.softmax(logits, dim=-1) for logits in self.decode_logits(contexts, rewards, z)]

    def elbo_terms(
        self,
        actions: torch.Tensor,
        contexts: torch.Tensor,
        rewards: torch.Tensor,
        eps: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """Per-row log-likelihood and KL with z = mu + sigma * eps"""
        mu, sigma = self.encode(actions, contexts, rewards)
        z = mu + sigma * eps
        logits = self.decode_logits(contexts, rewards, z)
        actions = actions.reshape(-1, len(self.slot_sizes))
        log_lik = torch.zeros(actions.shape[0], dtype=DTYPE)
        for i, slot_logits in enumerate(logits):
            log_probs = torch.log_softmax(slot_logits, dim=-1)
            log_lik = log_lik + log_probs.gather(1, actions[:, i:i + 1]).squeeze(1)
        return log_lik, gaussian_kl(mu, sigma)

    def forward(
        self,
        actions: torch.Tensor,
        contexts: torch.Tensor,
        rewards: torch.Tensor,
        eps: torch.Tensor,
        kl_weight: float = 0.5
    ) -> torch.Tensor:
        """Negative weighted ELBO averaged over the batch"""
        log_lik, kl = self.elbo_terms(actions, contexts, rewards, eps)
        return -(log_lik - kl_weight * kl).mean()


@dataclass
class CvaeBatch:
    """Tensors for CVAE training: actions (N, slots), contexts (N, d), rewards (N, 1)"""
    actions: torch.Tensor
    contexts: torch.Tensor
    rewards: torch.Tensor

    def __len__(self) -> int:
        return int(self.actions.shape[0])

    def subset(self, index: torch.Tensor) -> 'CvaeBatch':
        return CvaeBatch(self.actions[index], self.contexts[index], self.rewards[index])


@dataclass
class ElboResult:
    """ELBO evaluation on one batch"""
    loss: torch.Tensor
    log_likelihood: float
    kl: float


def elbo(
    model: Cvae,
    batch: CvaeBatch,
    generator: Optional[torch.Generator],
    kl_weight: float = 0.5
) -> ElboResult:
    """
    Reparameterized negative ELBO on a batch
    재매개변수화된 음의 ELBO 계산

    Args:
        model: CVAE
        batch: Training tensors
        generator: Source of the reparameterization noise
        kl_weight: Weight beta on the KL term

    Returns:
        ElboResult with the differentiable loss and the two terms
    """
    eps = torch.randn((len(batch), model.latent_dim), generator=generator, dtype=DTYPE)
    log_lik, kl = model.elbo_terms(batch.actions, batch.contexts, batch.rewards, eps)
    loss = -(log_lik - kl_weight * kl).mean()
    return ElboResult(loss=loss, log_likelihood=float(log_lik.detach().mean()), kl=float(kl.detach().mean()))


def elbo_gradients(
    model: Cvae,
    batch: CvaeBatch,
    eps: torch.Tensor,
    kl_weight: float = 0.5
) -> Tuple[float, Dict[str, torch.Tensor]]:
    """Loss and gradients for every named parameter at fixed noise eps"""
    names, params = zip(*model.named_parameters())
    loss = model(batch.actions, batch.contexts, batch.rewards, eps, kl_weight)
    grads = torch.autograd.grad(loss, params)
    return float(loss.detach()), dict(zip(names, grads))


def make_optimizer(parameters, learning_rate: float) -> torch.optim.Adam:
    """Adam with beta1=0.9, beta2=0.999, eps=1e-8"""
    return torch.optim.Adam(parameters, lr=learning_rate, betas=(0.9, 0.999), eps=1e-8)


def adam_step(optimizer: torch.optim.Optimizer):
    """
    One Adam update, refusing non-finite gradients
    비유한 기울기를 거부하는 Adam 단계

    Raises:
        TrainingDiverged: any gradient entry is NaN or infinite
    """
    for group in optimizer.param_groups:
        for param in group['params']:
            if param.grad is not None and not torch.all(torch.isfinite(param.grad)):
                raise TrainingDiverged("Non-finite gradient encountered")
    optimizer.step()


@dataclass
class TrainingHistory:
    """Loss trace of one training round"""
    losses: List[float] = field(default_factory=list)
    initial_holdout_elbo: float = float('nan')
    final_holdout_elbo: float = float('nan')

    def smoothed(self, window: int = 100) -> np.ndarray:
        losses = np.asarray(self.losses)
        if losses.size < window:
            return losses
        kernel = np.ones(window) / window
        return np.convolve(losses, kernel, mode='valid')


def _holdout_split(n: int, fraction: float, generator: torch.Generator) -> Tuple[torch.Tensor, torch.Tensor]:
    # Seeded permutation split; tiny datasets evaluate on the training rows
    order = torch.randperm(n, generator=generator)
    n_holdout = int(n * fraction)
    if n_holdout == 0 or n_holdout == n:
        return order, order
    return order[n_holdout:], order[:n_holdout]


def train_cvae(model: Cvae, batch: CvaeBatch, config: TrainConfig, generator: torch.Generator) -> TrainingHistory:
    """
    Train a CVAE for config.steps Adam steps on minibatches of the data
    CVAE 학습

    Args:
        model: Freshly initialized CVAE
        batch: Full training data
        config: Training schedule
        generator: Minibatch / noise source

    Returns:
        TrainingHistory with per-step losses and held-out ELBO before/after
    """
    if len(batch) == 0:
        raise NoData("Cannot train on an empty dataset")

    train_idx, holdout_idx = _holdout_split(len(batch), config.holdout_fraction, generator)
    train, holdout = batch.subset(train_idx), batch.subset(holdout_idx)
    holdout_eps = torch.randn((len(holdout), model.latent_dim), generator=generator, dtype=DTYPE)

    def holdout_elbo() -> float:
        with torch.no_grad():
            loss = model(holdout.actions, holdout.contexts, holdout.rewards, holdout_eps, config.kl_weight)
        return -float(loss)

    history = TrainingHistory(initial_holdout_elbo=holdout_elbo())
    optimizer = make_optimizer(model.parameters(), config.learning_rate)

    for step in range(config.steps):
        index = torch.randint(len(train), (config.batch_size,), generator=generator)
        result = elbo(model, train.subset(index), generator, config.kl_weight)
        optimizer.zero_grad()
        result.loss.backward()
        adam_step(optimizer)
        history.losses.append(float(result.loss.detach()))
        if step % 500 == 0:
            logger.debug(f"CVAE step {step}: loss {history.losses[-1]:.4f}")

    history.final_holdout_elbo = holdout_elbo()
    logger.debug(
        f"CVAE trained on {len(batch)} rows: held-out ELBO "
        f"{history.initial_holdout_elbo:.4f} -> {history.final_holdout_elbo:.4f}"
    )
    return history


class ValueModel:
    """
    Fitted value network R(a | c) for neural Thompson sampling
    신경망 톰슨 샘플링용 가치 모델

    Input is the action one-hot concatenated with the context; output is the
    success logit.
    """

    def __init__(self, n_actions: int, context_dim: int, config: TrainConfig):
        self.n_actions = int(n_actions)
        self.context_dim = int(context_dim)
        self.config = config
        self.net = DenseNet(
            self.n_actions + self.context_dim,
            [config.hidden_width] * config.n_hidden,
            1,
            activation='tanh',
            dropout_rate=config.dropout_rate,
            generator=make_generator(config.seed)
        )
        self.history = TrainingHistory()

    def encode(self, contexts: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        actions = actions.reshape(-1)
        one_hot = F.one_hot(actions, num_classes=self.n_actions).to(DTYPE)
        return torch.cat([one_hot, contexts.reshape(actions.numel(), self.context_dim)], dim=-1)

    def values(
        self,
        context: np.ndarray,
        dropout_mode: str = 'off',
        generator: Optional[torch.Generator] = None
    ) -> np.ndarray:
        """Predicted success probability of every action under one context"""
        contexts = torch.as_tensor(np.array(context, dtype=np.float64)).reshape(1, self.context_dim)
        contexts = contexts.expand(self.n_actions, self.context_dim)
        actions = torch.arange(self.n_actions)
        with torch.no_grad():
            logits = self.net(self.encode(contexts, actions), dropout_mode, generator)
        return torch.sigmoid(logits).reshape(-1).numpy()

    def loss(self, contexts: torch.Tensor, actions: torch.Tensor, rewards: torch.Tensor) -> float:
        """Full-data binary cross-entropy with dropout off"""
        with torch.no_grad():
            logits = self.net(self.encode(contexts, actions)).reshape(-1)
            return float(F.binary_cross_entropy_with_logits(logits, rewards.reshape(-1)))


def fit_value_model(
    contexts: np.ndarray,
    actions: np.ndarray,
    rewards: np.ndarray,
    n_actions: int,
    config: TrainConfig
) -> ValueModel:
    """
    Fit a value network by binary cross-entropy
    이진 교차 엔트로피로 가치 모델 학습

    Args:
        contexts: (N, d) contexts (d may be 0)
        actions: (N,) action indices
        rewards: (N,) binary rewards
        n_actions: Number of arms K
        config: Training schedule (dropout stays on during training)

    Returns:
        Fitted ValueModel
    """
    actions = np.asarray(actions, dtype=np.int64).reshape(-1)
    if actions.size == 0:
        raise NoData("Cannot fit a value model on an empty dataset")
    contexts = np.array(contexts, dtype=np.float64)
    contexts = contexts.reshape(actions.size, -1) if contexts.size else np.zeros((actions.size, 0))

    model = ValueModel(n_actions, contexts.shape[1], config)
    generator = make_generator(config.seed + 1)
    c = torch.as_tensor(contexts)
    a = torch.as_tensor(actions)
    r = torch.as_tensor(np.asarray(rewards, dtype=np.float64).reshape(-1))
    inputs = model.encode(c, a)
    optimizer = make_optimizer(model.net.parameters(), config.learning_rate)

    for step in range(config.steps):
        index = torch.randint(actions.size, (config.batch_size,), generator=generator)
        logits = model.net(inputs[index], 'sample', generator).reshape(-1)
        loss = F.binary_cross_entropy_with_logits(logits, r[index])
        optimizer.zero_grad()
        loss.backward()
        adam_step(optimizer)
        model.history.losses.append(float(loss.detach()))

    logger.debug(f"Value model fitted on {actions.size} rows, final loss {model.history.losses[-1]:.4f}")
    return model


# ==================== Gradient checks / 기울기 검증 ====================

def gradient_check(
    fn: Callable[..., torch.Tensor],
    inputs: Sequence[torch.Tensor],
    eps: float = 1e-5,
    rtol: float = 1e-4,
    atol: float = 1e-7
) -> bool:
    """Central finite-difference check of fn's gradient w.r.t. float64 inputs"""
    inputs = tuple(x.detach().clone().to(DTYPE).requires_grad_(True) for x in inputs)
    return torch.autograd.gradcheck(fn, inputs, eps=eps, atol=atol, rtol=rtol, raise_exception=False)


def check_parameter_gradients(
    model: nn.Module,
    args: Sequence,
    eps: float = 1e-5,
    rtol: float = 1e-4,
    atol: float = 1e-7
) -> bool:
    """
    Finite-difference check of every parameter gradient of a scalar-valued model
    모델의 모든 파라미터 기울기를 유한 차분으로 검증

    Args:
        model: Module whose forward(*args) returns a scalar (or reducible) tensor
        args: Positional forward arguments
    """
    names = [name for name, _ in model.named_parameters()]
    params = [p for _, p in model.named_parameters()]

    def fn(*tensors):
        out = functional_call(model, dict(zip(names, tensors)), tuple(args))
        return out.sum()

    return gradient_check(fn, params, eps=eps, rtol=rtol, atol=atol)
