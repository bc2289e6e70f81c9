"""The two forecast branches and their training loop.

The daily-total branch is an MLP that predicts a *residual* on top of a
recency-weighted estimate of the daily-total distribution; its scale output
is squashed into (0, sigma_max) so hard days cannot hide behind arbitrarily
wide distributions. The intraday branch is a pair of conv stacks over hourly
consumption/temperature-forecast history that emits 24 unitless hourly
distributions whose targets are renormalized to sum 24.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .distributions import LOG_SQRT_2PI
from .errors import TrainingDivergedError
from .optim import Adam
from .pipeline import SampleWindow
from .util import child_rng
from .weighting import DECAY_INIT, weighted_estimate_graph

N_HOURS = 24
CALENDAR_FEATURES = 7
DAILY_INPUT_SIZE = 14 + 14 + CALENDAR_FEATURES
KERNEL = 5
POOL = 3
POOL_STRIDE = 2


@dataclass
class BranchAConfig:
    hidden_width: int = 200
    hidden_layers: int = 4
    leaky_slope: float = 0.3
    sigma_max: float = 3.0
    decay_init: float = DECAY_INIT


@dataclass
class BranchBConfig:
    conv_channels: int = 16
    head_channels: int = 8
    leaky_slope: float = 0.3


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0


def _uniform_init(rng, shape, fan_in):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _param(data, name):
    return ad.Tensor(np.asarray(data, dtype=np.float64), requires_grad=True, name=name)


def _pool_out(length):
    return (length - POOL) // POOL_STRIDE + 1


class BranchA:
    """Daily-total distribution: weighted prior + MLP residual."""

    def __init__(self, config: BranchAConfig = None, seed: int = 0):
        self.config = config or BranchAConfig()
        self.seed = seed
        c = self.config
        rng = child_rng(seed, "branch-a-init")
        self.layers = []
        n_in = DAILY_INPUT_SIZE
        for i in range(c.hidden_layers):
            w = _param(_uniform_init(rng, (n_in, c.hidden_width), n_in), f"a.w{i}")
            b = _param(_uniform_init(rng, (c.hidden_width,), n_in), f"a.b{i}")
            self.layers.append((w, b))
            n_in = c.hidden_width
        # zero head: at initialization the branch output equals the
        # (range-constrained) weighted prior
        self.head_w = _param(np.zeros((n_in, 2)), "a.head_w")
        self.head_b = _param(np.zeros(2), "a.head_b")
        self.lambda_mu = _param([c.decay_init], "a.lambda_mu")
        self.lambda_sigma = _param([c.decay_init], "a.lambda_sigma")
        # day lags of the history vector, oldest entry first
        self.lags = np.arange(13, -1, -1).astype(np.float64)

    def params(self):
        out = []
        for w, b in self.layers:
            out.extend([w, b])
        out.extend([self.head_w, self.head_b, self.lambda_mu, self.lambda_sigma])
        return out

    def post_step(self):
        # decay rates are defined nonnegative; project after each update
        self.lambda_mu.data = np.maximum(self.lambda_mu.data, 0.0)
        self.lambda_sigma.data = np.maximum(self.lambda_sigma.data, 0.0)

    def decay_params(self):
        return float(self.lambda_mu.data[0]), float(self.lambda_sigma.data[0])

    def forward(self, features: np.ndarray, history_totals: np.ndarray):
        """-> (mu, sigma) tensors of shape (batch, 1)."""
        c = self.config
        h = ad.Tensor(features)
        for w, b in self.layers:
            h = ad.leaky_relu(ad.dense(h, w, b), c.leaky_slope)
        delta = ad.dense(h, self.head_w, self.head_b)
        d_mu = ad.narrow(delta, 1, 0, 1)
        d_sigma = ad.narrow(delta, 1, 1, 1)
        mu_prior, sigma_prior = weighted_estimate_graph(
            np.log(history_totals), self.lags, self.lambda_mu, self.lambda_sigma
        )
        mu = ad.add(mu_prior, d_mu)
        sigma = ad.softrange(ad.add(sigma_prior, d_sigma), 0.0, c.sigma_max)
        return mu, sigma

    def prepare(self, windows: list[SampleWindow]):
        features = np.stack(
            [np.concatenate([w.daily_means, w.daily_mean_tempfc, w.calendar]) for w in windows]
        )
        history = np.stack([w.history_totals for w in windows])
        targets = None
        if windows and windows[0].target_total is not None:
            targets = np.array([[w.target_total] for w in windows])
        return features, history, targets

    def batch_loss(self, arrays, idx) -> ad.Tensor:
        features, history, targets = arrays
        mu, sigma = self.forward(features[idx], history[idx])
        return lognormal_nll_loss(mu, sigma, targets[idx])

    def predict(self, windows: list[SampleWindow]):
        features, history, _ = self.prepare(windows)
        mu, sigma = self.forward(features, history)
        return mu.data[:, 0].copy(), sigma.data[:, 0].copy()


class BranchB:
    """Unitless intraday curve: conv stacks + calendar, 24 output distributions."""

    def __init__(self, config: BranchBConfig = None, seed: int = 0):
        self.config = config or BranchBConfig()
        c = self.config
        rng = child_rng(seed, "branch-b-init")
        self.cons_stack = self._make_stack(rng, "cons", c.conv_channels)
        self.temp_stack = self._make_stack(rng, "temp", c.conv_channels)
        cons_len = 168
        temp_len = 72
        for _ in range(3):
            cons_len = _pool_out(cons_len)
            temp_len = _pool_out(temp_len)
        n_flat = c.conv_channels * (cons_len + temp_len) + CALENDAR_FEATURES
        dense_width = 2 * N_HOURS
        self.dense_w = _param(_uniform_init(rng, (n_flat, dense_width), n_flat), "b.dense_w")
        self.dense_b = _param(_uniform_init(rng, (dense_width,), n_flat), "b.dense_b")
        fan = 2 * KERNEL
        self.head1_k = _param(_uniform_init(rng, (c.head_channels, 2, KERNEL), fan), "b.head1_k")
        self.head1_b = _param(_uniform_init(rng, (c.head_channels,), fan), "b.head1_b")
        fan = c.head_channels * KERNEL
        self.head2_k = _param(_uniform_init(rng, (2, c.head_channels, KERNEL), fan), "b.head2_k")
        self.head2_b = _param(_uniform_init(rng, (2,), fan), "b.head2_b")

    def _make_stack(self, rng, tag, channels):
        stack = []
        c_in = 1
        for i in range(3):
            fan = c_in * KERNEL
            k = _param(_uniform_init(rng, (channels, c_in, KERNEL), fan), f"b.{tag}{i}_k")
            b = _param(_uniform_init(rng, (channels,), fan), f"b.{tag}{i}_b")
            stack.append((k, b))
            c_in = channels
        return stack

    def params(self):
        out = []
        for stack in (self.cons_stack, self.temp_stack):
            for k, b in stack:
                out.extend([k, b])
        out.extend([self.dense_w, self.dense_b,
                    self.head1_k, self.head1_b, self.head2_k, self.head2_b])
        return out

    def post_step(self):
        pass

    def _run_stack(self, x, stack, slope):
        for k, b in stack:
            x = ad.maxpool1d(ad.leaky_relu(ad.conv1d(x, k, b), slope), POOL, POOL_STRIDE)
        return x

    def forward(self, cons: np.ndarray, tempfc: np.ndarray, calendar: np.ndarray):
        """-> (mu, sigma) tensors of shape (batch, 24)."""
        c = self.config
        batch = cons.shape[0]
        xc = ad.reshape(ad.Tensor(cons), (batch, 1, cons.shape[1]))
        xt = ad.reshape(ad.Tensor(tempfc), (batch, 1, tempfc.shape[1]))
        xc = self._run_stack(xc, self.cons_stack, c.leaky_slope)
        xt = self._run_stack(xt, self.temp_stack, c.leaky_slope)
        z = ad.concat([ad.flatten(xc), ad.flatten(xt), ad.Tensor(calendar)], axis=1)
        z = ad.leaky_relu(ad.dense(z, self.dense_w, self.dense_b), c.leaky_slope)
        z = ad.reshape(z, (batch, 2, N_HOURS))
        z = ad.leaky_relu(ad.conv1d(z, self.head1_k, self.head1_b), c.leaky_slope)
        z = ad.conv1d(z, self.head2_k, self.head2_b)
        mu = ad.reshape(ad.narrow(z, 1, 0, 1), (batch, N_HOURS))
        sigma = ad.softplus(ad.reshape(ad.narrow(z, 1, 1, 1), (batch, N_HOURS)))
        return mu, sigma

    def prepare(self, windows: list[SampleWindow]):
        cons = np.stack([w.hourly_consumption for w in windows])
        tempfc = np.stack([w.hourly_tempfc for w in windows])
        calendar = np.stack([w.calendar for w in windows])
        targets = None
        if windows and windows[0].target_curve is not None:
            targets = np.stack([w.target_curve for w in windows])
        return cons, tempfc, calendar, targets

    def batch_loss(self, arrays, idx) -> ad.Tensor:
        cons, tempfc, calendar, targets = arrays
        mu, sigma = self.forward(cons[idx], tempfc[idx], calendar[idx])
        return lognormal_nll_loss(mu, sigma, targets[idx])

    def predict(self, windows: list[SampleWindow]):
        cons, tempfc, calendar, _ = self.prepare(windows)
        mu, sigma = self.forward(cons, tempfc, calendar)
        return mu.data.copy(), sigma.data.copy()


def lognormal_nll_loss(mu: ad.Tensor, sigma: ad.Tensor, targets: np.ndarray) -> ad.Tensor:
    """Mean over the batch of the summed per-output negative log-likelihood."""
    ln_y = np.log(targets)
    diff = ad.add(ad.neg(mu), ln_y)
    quad = ad.div(ad.mul(diff, diff), ad.mul(ad.mul(sigma, sigma), 2.0))
    per = ad.add(ad.add(ad.log(sigma), quad), LOG_SQRT_2PI + ln_y)
    return ad.mul(ad.tsum(per), 1.0 / targets.shape[0])


def _eval_nll(model, arrays, batch_size=4096) -> float:
    n = arrays[0].shape[0]
    total = 0.0
    for lo in range(0, n, batch_size):
        idx = np.arange(lo, min(lo + batch_size, n))
        total += float(model.batch_loss(arrays, idx).data) * idx.size
    return total / n


def train_branch(model, train_windows, eval_windows, config: TrainConfig = None):
    """Mini-batch NLL training with early stopping on the eval split.

    Returns a per-epoch history; the model keeps the weights of its best
    eval epoch.
    """
    config = config or TrainConfig()
    train_arrays = model.prepare(train_windows)
    eval_arrays = model.prepare(eval_windows) if eval_windows else None
    n = train_arrays[0].shape[0]
    if n == 0:
        raise TrainingDivergedError("empty training set")

    optimizer = Adam(model.params(), lr=config.learning_rate)
    history = []
    best_nll = math.inf
    best_state = [p.data.copy() for p in model.params()]
    stale = 0
    for epoch in range(config.max_epochs):
        order = child_rng(config.seed, "batch-order", epoch).permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            loss = model.batch_loss(train_arrays, idx)
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, samples {lo}..{lo + idx.size}"
                )
            loss.backward()
            optimizer.step()
            model.post_step()
            epoch_loss += value * idx.size
        entry = {"epoch": epoch, "train_nll": epoch_loss / n}
        if eval_arrays is not None:
            entry["eval_nll"] = _eval_nll(model, eval_arrays)
            if entry["eval_nll"] < best_nll:
                best_nll = entry["eval_nll"]
                best_state = [p.data.copy() for p in model.params()]
                stale = 0
            else:
                stale += 1
        history.append(entry)
        if eval_arrays is not None and stale > config.patience:
            break
    if eval_arrays is not None:
        for p, data in zip(model.params(), best_state):
            p.data = data
    return history
