"""Training loop: chronological split, MSE, Adam, early stopping, grad check."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InsufficientDataError
from .features import WindowedDataset
from .neural import LstmNetwork, backward, forward


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int = 10
    validation_fraction: float = 0.1
    # Validation must improve by at least this much to reset patience;
    # guards against float noise keeping training alive.
    min_improvement: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.patience <= 0:
            raise ContractError("epochs, batch_size, patience must be positive")
        # lr = 0 is allowed as a degenerate no-op update (useful in tests).
        if self.learning_rate < 0:
            raise ContractError("learning rate must be non-negative")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ContractError("validation fraction must be in [0, 1)")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_network(cls, network: LstmNetwork) -> "AdamState":
        return cls(m={n: np.zeros_like(p) for n, p in network.parameters()},
                   v={n: np.zeros_like(p) for n, p in network.parameters()})


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_loss"]
        for e, (tr, va) in enumerate(zip(self.train_loss, self.val_loss), start=1):
            lines.append(f"{e},{tr!r},{va!r}")
        return "\n".join(lines) + "\n"


@dataclass
class EarlyStopping:
    """Patience rule on validation loss. `update` returns True when training
    should stop; `best_epoch` tracks where the restorable optimum sits."""

    patience: int
    min_improvement: float = 1e-12
    best: float = float("inf")
    best_epoch: int = 0
    stale: int = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        if val_loss < self.best - self.min_improvement:
            self.best = val_loss
            self.best_epoch = epoch
            self.stale = 0
            return False
        self.stale += 1
        return self.stale >= self.patience


def split_train_test(dataset: WindowedDataset,
                     ratio: float = 0.8) -> tuple[WindowedDataset, WindowedDataset]:
    """Chronological split: first floor(n*ratio) samples train, rest test."""
    if not 0.0 < ratio < 1.0:
        raise ContractError("split ratio must be in (0, 1)")
    n = len(dataset)
    cut = int(n * ratio)
    if cut == 0 or cut == n:
        raise InsufficientDataError(f"split {ratio} leaves an empty side for n={n}")

    def slice_ds(lo: int, hi: int) -> WindowedDataset:
        return WindowedDataset(X=dataset.X[lo:hi], y=dataset.y[lo:hi],
                               window_size=dataset.window_size,
                               feature_names=dataset.feature_names,
                               target_dates=dataset.target_dates[lo:hi])

    return slice_ds(0, cut), slice_ds(cut, n)


def mse_loss(pred: float, target: float) -> tuple[float, float]:
    """Squared error and its gradient wrt the prediction."""
    diff = pred - target
    return diff * diff, 2.0 * diff


def adam_step(network: LstmNetwork, grads: dict[str, np.ndarray],
              state: AdamState, config: TrainConfig) -> None:
    """Standard bias-corrected Adam update, in place."""
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    b1c = 1.0 - b1 ** state.t
    b2c = 1.0 - b2 ** state.t
    for name, param in network.parameters():
        g = grads[name]
        if g.shape != param.shape:
            raise ContractError(f"gradient shape mismatch for {name}")
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / b1c
        v_hat = state.v[name] / b2c
        param -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)


def _epoch_loss(network: LstmNetwork, X: np.ndarray, y: np.ndarray) -> float:
    total = 0.0
    for sample, target in zip(X, y):
        z, _ = forward(network, sample, mode="infer")
        total += (z - target) ** 2
    return total / len(y)


def _snapshot(network: LstmNetwork) -> dict[str, np.ndarray]:
    return {n: p.copy() for n, p in network.parameters()}


def _restore(network: LstmNetwork, snap: dict[str, np.ndarray]) -> None:
    for n, p in network.parameters():
        p[...] = snap[n]


def train(network: LstmNetwork, dataset: WindowedDataset,
          config: TrainConfig) -> tuple[LstmNetwork, TrainHistory, AdamState]:
    """Mini-batch training with patience-based early stopping.

    The validation slice is carved chronologically from the tail of `dataset`
    (assumed to be the training split). Batches run in chronological order and
    the final short batch is kept. Returns the parameters of the best
    validation epoch.
    """
    n = len(dataset)
    n_val = int(n * config.validation_fraction)
    if n_val == 0:
        raise ContractError("validation slice is empty; lower patience needs or "
                            "grow the dataset")
    if n - n_val == 0:
        raise InsufficientDataError("no training samples left after validation carve-out")
    X_tr, y_tr = dataset.X[:n - n_val], dataset.y[:n - n_val]
    X_val, y_val = dataset.X[n - n_val:], dataset.y[n - n_val:]

    rng = np.random.default_rng(config.seed)
    adam = AdamState.for_network(network)
    history = TrainHistory()
    stopper = EarlyStopping(patience=config.patience,
                            min_improvement=config.min_improvement)
    best_params = _snapshot(network)

    for epoch in range(1, config.epochs + 1):
        epoch_total = 0.0
        for start in range(0, len(y_tr), config.batch_size):
            bx = X_tr[start:start + config.batch_size]
            by = y_tr[start:start + config.batch_size]
            grads_sum: dict[str, np.ndarray] | None = None
            for sample, target in zip(bx, by):
                z, caches = forward(network, sample, mode="train", rng=rng)
                loss, dloss = mse_loss(z, target)
                epoch_total += loss
                g = backward(network, caches, dloss / len(by))
                if grads_sum is None:
                    grads_sum = g
                else:
                    for k in grads_sum:
                        grads_sum[k] += g[k]
            adam_step(network, grads_sum, adam, config)

        history.train_loss.append(epoch_total / len(y_tr))
        val = _epoch_loss(network, X_val, y_val)
        history.val_loss.append(val)

        stop = stopper.update(epoch, val)
        if stopper.best_epoch == epoch:
            best_params = _snapshot(network)
        if stop:
            history.stopped_epoch = epoch
            break
    else:
        history.stopped_epoch = config.epochs

    history.best_epoch = stopper.best_epoch
    _restore(network, best_params)
    return network, history, adam


def grad_check(network: LstmNetwork, sample: np.ndarray, target: float,
               epsilon: float = 1e-5) -> float:
    """Max relative error between BPTT and central finite differences.

    The denominator is floored at 1e-5 so near-zero gradients are compared
    absolutely instead of blowing up on finite-difference round-off.
    """
    if epsilon <= 0:
        raise ContractError("epsilon must be positive")
    z, caches = forward(network, sample, mode="infer")
    _, dloss = mse_loss(z, target)
    analytic = backward(network, caches, dloss)

    worst = 0.0
    for name, param in network.parameters():
        flat = param.reshape(-1)
        ga = analytic[name].reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + epsilon
            lp, _ = mse_loss(forward(network, sample, mode="infer")[0], target)
            flat[idx] = orig - epsilon
            lm, _ = mse_loss(forward(network, sample, mode="infer")[0], target)
            flat[idx] = orig
            gn = (lp - lm) / (2.0 * epsilon)
            if max(abs(ga[idx]), abs(gn)) < 1e-8:
                continue  # both sides effectively zero; fd noise only
            denom = max(abs(ga[idx]), abs(gn), 1e-5)
            worst = max(worst, abs(ga[idx] - gn) / denom)
    return worst
