"""FedAvg training engine over a pluggable uplink transport.

The model is multinomial logistic regression on flat features: parameters
are a weight matrix W (n_classes x n_features, row-major) followed by a
bias vector, flattened into a single vector of dimension
``n_classes * (n_features + 1)`` (4010 for 20 x 20 MNIST).

Each round: sample K of M clients without replacement, broadcast the global
model, let every client run E local mini-batch SGD steps and form the
differential x_k = w_t - w_local.  The transport turns the K differentials
into one sum estimate; the server truncates, de-normalizes, and applies

    w_{t+1} = w_t - (1 / K) * x~

so the noiseless update is exactly the average of the local models.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import privacy, transport as tp
from .data import Dataset
from .streams import derive_rng


@dataclass
class FLConfig:
    """Knobs of the federated loop itself (transport configured separately)."""

    m_clients: int = 20
    k_clients: int = 20
    rounds: int = 200
    local_steps: int = 1
    batch_size: int = 50
    lr: float = 0.005
    reg: float = 0.01
    partition: str = "iid"

    def validate(self):
        errors = []
        if self.k_clients > self.m_clients:
            errors.append(f"k_clients {self.k_clients} exceeds m_clients {self.m_clients}")
        if self.local_steps < 1:
            errors.append("local_steps must be >= 1")
        if self.lr <= 0:
            errors.append("lr must be > 0")
        if self.batch_size < 1:
            errors.append("batch_size must be >= 1")
        if self.rounds < 1:
            errors.append("rounds must be >= 1")
        if self.reg < 0:
            errors.append("reg must be >= 0")
        return errors


def init_params(n_features: int, n_classes: int = 10) -> np.ndarray:
    return np.zeros(n_classes * (n_features + 1))


def _unpack(w: np.ndarray, n_features: int):
    n_classes = w.size // (n_features + 1)
    if n_classes * (n_features + 1) != w.size:
        raise ValueError(
            f"parameter vector of size {w.size} does not fit {n_features} features")
    mat = w[:n_classes * n_features].reshape(n_classes, n_features)
    bias = w[n_classes * n_features:]
    return mat, bias


def loss_and_grad(w: np.ndarray, images: np.ndarray, labels: np.ndarray,
                  reg: float = 0.0):
    """Softmax cross-entropy averaged over the batch plus reg * ||w||^2.

    The gradient is computed in closed form; the softmax subtracts the row
    max so large logits cannot overflow.
    """
    n, n_features = images.shape
    mat, bias = _unpack(w, n_features)
    logits = images @ mat.T + bias
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    probs = exp / exp.sum(axis=1, keepdims=True)
    nll = -np.mean(np.log(probs[np.arange(n), labels] + 1e-300))
    loss = nll + reg * float(w @ w)

    delta = probs
    delta[np.arange(n), labels] -= 1.0
    grad_mat = delta.T @ images / n
    grad_bias = delta.mean(axis=0)
    grad = np.concatenate([grad_mat.ravel(), grad_bias]) + 2.0 * reg * w
    return loss, grad


def accuracy(w: np.ndarray, data: Dataset) -> float:
    mat, bias = _unpack(w, data.images.shape[1])
    pred = np.argmax(data.images @ mat.T + bias, axis=1)
    return float(np.mean(pred == data.labels))


def local_sgd(w_global: np.ndarray, shard: Dataset, local_steps: int,
              batch_size: int, lr: float, reg: float,
              rng: np.random.Generator) -> np.ndarray:
    """E local steps on fresh uniform mini-batches; returns x = w_t - w_local.

    A batch size above the shard size falls back to the full shard.
    """
    if len(shard) == 0:
        raise ValueError("client shard is empty")
    w = w_global.copy()
    n = len(shard)
    take = min(batch_size, n)
    for _ in range(local_steps):
        idx = rng.choice(n, size=take, replace=False)
        _, grad = loss_and_grad(w, shard.images[idx], shard.labels[idx], reg)
        w -= lr * grad
    return w_global - w


@dataclass
class RoundMetrics:
    round: int
    train_loss: float
    test_accuracy: float
    epsilon_item: float
    epsilon_client: float
    n_contributing: int
    skipped: bool = False


@dataclass
class TrainingResult:
    metrics: list[RoundMetrics] = field(default_factory=list)
    final_params: np.ndarray | None = None


def _ledger_epsilons(transport, config: FLConfig, shard_size: int,
                     t: int, delta: float):
    """Composed (eps, delta) guarantees after t rounds, inf if no noise gap."""
    gap = None
    if hasattr(transport, "gap_for"):
        gap = transport.gap_for(config.k_clients)
    if not gap or gap <= 0:
        return math.inf, math.inf
    q = min(config.batch_size, shard_size) / shard_size
    item = privacy.compose_renyi(
        t, delta, privacy.per_round_log_term(q, transport.clip_norm, gap))
    client = privacy.compose_client_level(t, delta, transport.clip_norm, gap)
    return item, client


def run_training(config: FLConfig, transport, shards: list[Dataset],
                 train_eval: Dataset, test_eval: Dataset, master_seed: int,
                 trial: int = 0, delta: float = 1e-5) -> TrainingResult:
    """Run one trial of the federated loop and record per-round metrics.

    All randomness is drawn from streams derived from (master_seed, trial,
    round, purpose), so runs are reproducible and clients can be simulated
    in any order.
    """
    errors = config.validate()
    if errors:
        raise ValueError("invalid FLConfig: " + "; ".join(errors))
    if len(shards) != config.m_clients:
        raise ValueError(f"need {config.m_clients} shards, got {len(shards)}")

    n_features = train_eval.images.shape[1]
    n_classes = int(train_eval.labels.max()) + 1
    w = init_params(n_features, n_classes)
    result = TrainingResult()
    shard_size = len(shards[0])

    for t in range(1, config.rounds + 1):
        sel_rng = derive_rng(master_seed, "select", trial, t)
        chosen = sel_rng.choice(config.m_clients, size=config.k_clients,
                                replace=False)

        diffs = np.empty((config.k_clients, w.size))
        norm_params = []
        for slot, client in enumerate(chosen):
            local_rng = derive_rng(master_seed, "local", trial, t, int(client))
            diff = local_sgd(w, shards[client], config.local_steps,
                             config.batch_size, config.lr, config.reg, local_rng)
            if transport.uses_normalization:
                diff, params = tp.normalize_differential(diff, transport.clip_norm)
                norm_params.append(params)
            diffs[slot] = diff

        chan_rng = derive_rng(master_seed, "channel", trial, t)
        agg = transport.aggregate(diffs, round_id=t, rng=chan_rng)

        skipped = agg.estimate is None
        if not skipped:
            estimate = agg.estimate
            if transport.trunc_bound is not None:
                estimate = tp.truncate(estimate, transport.trunc_bound)
            if transport.uses_normalization:
                estimate = tp.denormalize_sum(estimate, norm_params,
                                              transport.clip_norm)
            w = w - estimate / config.k_clients

        train_loss, _ = loss_and_grad(w, train_eval.images, train_eval.labels,
                                      config.reg)
        eps_item, eps_client = _ledger_epsilons(transport, config, shard_size,
                                                t, delta)
        result.metrics.append(RoundMetrics(
            round=t,
            train_loss=float(train_loss),
            test_accuracy=accuracy(w, test_eval),
            epsilon_item=eps_item,
            epsilon_client=eps_client,
            n_contributing=agg.n_contributing,
            skipped=skipped,
        ))

    result.final_params = w
    return result
