"""End-to-end pilot + reconstruction network with manual backprop.

Architecture: a bias-free pilot layer shared across the Re/Im rows, a
bias-free dense coarse estimator, N_re refining units (3x3 conv -> batch
norm -> leaky ReLU, unit n emitting 2^n channels), a final linear 3x3
convolution back to 2 channels, and a residual connection adding the
coarse estimate to the conv-stack output.

Backprop is hand-derived for this fixed graph; there is no generic
autograd. Training runs in float32, gradient checks in float64.
"""

from dataclasses import dataclass, field

import numpy as np

from .measurement import PilotMatrix, SnrSpec, add_awgn, measurement_power
from .numerics import DimensionError, RngStream


class NumericError(FloatingPointError):
    """Non-finite value encountered in a forward pass or optimizer step."""


@dataclass(frozen=True)
class HyperParams:
    n_h: int
    n_v: int
    m: int
    n_re: int
    leaky_slope: float = 0.3
    bn_epsilon: float = 1e-3
    bn_momentum: float = 0.99

    @property
    def n_bs(self):
        return self.n_h * self.n_v


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 128
    epochs: int = 300
    snr_db: float | None = None  # None trains noiseless
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("invalid training configuration")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)


class Param:
    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = value
        self.grad = np.zeros_like(value)


class MacCounter:
    """Counts multiply-accumulates per layer kind during a forward pass."""

    def __init__(self):
        self.by_kind = {}

    def add(self, kind, macs):
        self.by_kind[kind] = self.by_kind.get(kind, 0) + int(macs)

    @property
    def total(self):
        return sum(self.by_kind.values())


def _uniform_init(rng, shape, fan_in, fan_out, dtype):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    n = int(np.prod(shape))
    return rng.draw_uniform(-bound, bound, n).reshape(shape).astype(dtype)


def leaky_relu(x, slope):
    """f(x) = x for x >= 0 else slope*x; derivative at 0 is taken as 1."""
    return np.where(x >= 0, x, slope * x)


def leaky_relu_grad(x, slope):
    return np.where(x >= 0, 1.0, slope).astype(x.dtype)


class PilotLayer:
    """Shared real weight X~ applied to both Re/Im rows of each sample."""

    def __init__(self, n_bs, m, rng, dtype=np.float32):
        self.w = Param(_uniform_init(rng, (n_bs, m), n_bs, m, dtype))
        self._x = None

    def forward(self, x, counter=None):
        if x.shape[-1] != self.w.value.shape[0]:
            raise DimensionError("sample/pilot size mismatch")
        self._x = x
        if counter is not None:
            counter.add("fc_pilot", x.shape[0] * 2 * self.w.value.size)
        return x @ self.w.value

    def backward(self, g):
        self.w.grad += np.einsum("brn,brm->nm", self._x, g)
        return g @ self.w.value.T


class Dense:
    """Bias-free linear map on flattened measurements."""

    def __init__(self, n_in, n_out, rng, dtype=np.float32):
        self.w = Param(_uniform_init(rng, (n_in, n_out), n_in, n_out, dtype))
        self._x = None

    def forward(self, x, counter=None):
        self._x = x
        if counter is not None:
            counter.add("fc_coarse", x.shape[0] * self.w.value.size)
        return x @ self.w.value

    def backward(self, g):
        self.w.grad += self._x.T @ g
        return g @ self.w.value.T


def _im2col3x3(x):
    """(C, B, H, W) -> (C*9, B*H*W) patches with zero padding 1."""
    c, b, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    cols = np.empty((c, 9, b, h, w), dtype=x.dtype)
    k = 0
    for di in range(3):
        for dj in range(3):
            cols[:, k] = xp[:, :, di:di + h, dj:dj + w]
            k += 1
    return cols.reshape(c * 9, b * h * w)


def _col2im3x3(dcols, shape):
    c, b, h, w = shape
    dxp = np.zeros((c, b, h + 2, w + 2), dtype=dcols.dtype)
    dcols = dcols.reshape(c, 9, b, h, w)
    k = 0
    for di in range(3):
        for dj in range(3):
            dxp[:, :, di:di + h, dj:dj + w] += dcols[:, k]
            k += 1
    return dxp[:, :, 1:h + 1, 1:w + 1]


class Conv2d:
    """3x3 cross-correlation, stride 1, zero padding 1 (shape preserving).

    Activations flow through the conv stack channel-first, (C, B, H, W),
    so the im2col matmuls run on contiguous arrays.
    """

    def __init__(self, c_in, c_out, rng, dtype=np.float32, kind="conv"):
        self.w = Param(_uniform_init(rng, (c_out, c_in, 3, 3),
                                     c_in * 9, c_out * 9, dtype))
        self.kind = kind
        self._cols = None
        self._shape = None

    def forward(self, x, counter=None):
        if x.shape[0] != self.w.value.shape[1]:
            raise DimensionError("conv channel mismatch")
        self._shape = x.shape
        c, b, h, w = x.shape
        self._cols = _im2col3x3(x)
        c_out = self.w.value.shape[0]
        wm = self.w.value.reshape(c_out, -1)
        if counter is not None:
            counter.add(self.kind, b * h * w * self.w.value.size)
        return (wm @ self._cols).reshape(c_out, b, h, w)

    def backward(self, g):
        c_out = g.shape[0]
        _, b, h, w = self._shape
        gm = g.reshape(c_out, b * h * w)
        self.w.grad += (gm @ self._cols.T).reshape(self.w.value.shape)
        wm = self.w.value.reshape(c_out, -1)
        return _col2im3x3(wm.T @ gm, self._shape)


class BatchNorm2d:
    """Per-channel batch normalization over (batch, height, width).

    Train mode uses biased batch statistics and updates the running
    stats with momentum; infer mode normalizes with the running stats.
    """

    def __init__(self, channels, epsilon=1e-3, momentum=0.99, dtype=np.float32):
        self.gamma = Param(np.ones(channels, dtype=dtype))
        self.beta = Param(np.zeros(channels, dtype=dtype))
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.epsilon = epsilon
        self.momentum = momentum
        self._cache = None

    def forward(self, x, mode="train"):
        """x is channel-first, (C, B, H, W); statistics reduce over
        batch and spatial axes."""
        g = self.gamma.value[:, None, None, None]
        b = self.beta.value[:, None, None, None]
        if mode == "train":
            if x.shape[1] < 2:
                raise ValueError("batch norm needs batch size >= 2 in train mode")
            mu = x.mean(axis=(1, 2, 3))
            var = x.var(axis=(1, 2, 3))
            inv_std = 1.0 / np.sqrt(var + self.epsilon)
            xhat = (x - mu[:, None, None, None]) * inv_std[:, None, None, None]
            self.running_mean = (self.momentum * self.running_mean
                                 + (1 - self.momentum) * mu).astype(x.dtype)
            self.running_var = (self.momentum * self.running_var
                                + (1 - self.momentum) * var).astype(x.dtype)
            self._cache = (xhat, inv_std)
            return g * xhat + b
        inv_std = 1.0 / np.sqrt(self.running_var + self.epsilon)
        xhat = (x - self.running_mean[:, None, None, None]) \
            * inv_std[:, None, None, None]
        self._cache = (xhat, inv_std)
        return g * xhat + b

    def backward(self, grad, mode="train"):
        xhat, inv_std = self._cache
        self.gamma.grad += np.sum(grad * xhat, axis=(1, 2, 3))
        self.beta.grad += np.sum(grad, axis=(1, 2, 3))
        dxhat = grad * self.gamma.value[:, None, None, None]
        if mode != "train":
            return dxhat * inv_std[:, None, None, None]
        n = grad.shape[1] * grad.shape[2] * grad.shape[3]
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(1, 2, 3)).reshape(-1, 1, 1, 1)
        sum_dxhat = dxhat.sum(axis=(1, 2, 3)).reshape(-1, 1, 1, 1)
        return (inv_std[:, None, None, None] / n) * (
            n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat
        )


@dataclass
class ModelParams:
    """Trainable state of the end-to-end network."""

    hyper: HyperParams
    pilot: PilotLayer
    coarse: Dense
    conv_stack: list  # (Conv2d, BatchNorm2d) per refining unit
    output_conv: Conv2d

    def parameter_list(self):
        """All Param objects in the fixed checkpoint order."""
        ps = [self.pilot.w, self.coarse.w]
        for conv, bn in self.conv_stack:
            ps.extend([conv.w, bn.gamma, bn.beta])
        ps.append(self.output_conv.w)
        return ps

    def state_tensors(self):
        """Ordered (name, array) pairs covering every persistent tensor."""
        out = [("x_tilde", self.pilot.w.value), ("x_prime", self.coarse.w.value)]
        for i, (conv, bn) in enumerate(self.conv_stack, start=1):
            out += [
                (f"unit{i}.kernels", conv.w.value),
                (f"unit{i}.bn_gamma", bn.gamma.value),
                (f"unit{i}.bn_beta", bn.beta.value),
                (f"unit{i}.bn_running_mean", bn.running_mean),
                (f"unit{i}.bn_running_var", bn.running_var),
            ]
        out.append(("output_conv.kernels", self.output_conv.w.value))
        return out

    def load_state_tensors(self, arrays):
        names = [n for n, _ in self.state_tensors()]
        if len(arrays) != len(names):
            raise ValueError("checkpoint tensor count mismatch")
        it = iter(arrays)
        self.pilot.w.value = next(it)
        self.coarse.w.value = next(it)
        for conv, bn in self.conv_stack:
            conv.w.value = next(it)
            bn.gamma.value = next(it)
            bn.beta.value = next(it)
            bn.running_mean = next(it)
            bn.running_var = next(it)
        self.output_conv.w.value = next(it)

    def zero_grads(self):
        for p in self.parameter_list():
            p.grad = np.zeros_like(p.value)

    def assert_finite(self):
        for p in self.parameter_list():
            if not np.all(np.isfinite(p.value)):
                raise NumericError("non-finite parameter after update")


def init_params(hyper: HyperParams, rng: RngStream, dtype=np.float32) -> ModelParams:
    """Uniform fan-based init for weights; BN starts at identity stats."""
    pilot = PilotLayer(hyper.n_bs, hyper.m, rng, dtype)
    coarse = Dense(2 * hyper.m, 2 * hyper.n_bs, rng, dtype)
    stack = []
    c_in = 2
    for n in range(1, hyper.n_re + 1):
        c_out = 2 ** n
        conv = Conv2d(c_in, c_out, rng, dtype)
        bn = BatchNorm2d(c_out, hyper.bn_epsilon, hyper.bn_momentum, dtype)
        stack.append((conv, bn))
        c_in = c_out
    out_conv = Conv2d(c_in, 2, rng, dtype, kind="output_conv")
    return ModelParams(hyper, pilot, coarse, stack, out_conv)


def coarse_estimate(y_flat, x_prime):
    """Linear coarse stage on flattened measurements -> (B, 2, N_BS)."""
    out = y_flat @ x_prime
    return out.reshape(out.shape[0], 2, -1)


def _resolve_noise(noise, meas):
    """A float noise argument means an SNR target calibrated on this batch."""
    if noise is None or isinstance(noise, SnrSpec):
        return noise
    return SnrSpec.from_reference_power(float(noise), measurement_power(meas))


def model_forward(params: ModelParams, sample, noise=None, rng=None,
                  mode="train", counter=None):
    """Forward pass over a batch (B, 2, N_BS) -> estimates (B, 2, N_BS).

    noise may be an SnrSpec, an SNR in dB (calibrated on this batch's
    noiseless measurements), or None. Caches activations for backward.
    """
    hp = params.hyper
    x = np.asarray(sample)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[1:] != (2, hp.n_bs):
        raise DimensionError(f"expected samples of shape (2, {hp.n_bs})")

    y = params.pilot.forward(x, counter)
    spec = _resolve_noise(noise, y)
    if spec is not None:
        if rng is None:
            raise ValueError("noise injection requires an rng stream")
        # noise is treated as a constant in backprop
        y = add_awgn(y, spec, rng)
    b = x.shape[0]
    y_flat = y.reshape(b, 2 * hp.m)
    c = params.coarse.forward(y_flat, counter)
    # channel-first through the conv stack: (2, B, n_h, n_v)
    c_map = np.ascontiguousarray(
        c.reshape(b, 2, hp.n_h, hp.n_v).transpose(1, 0, 2, 3)
    )

    z = c_map
    cache = []
    for conv, bn in params.conv_stack:
        z = conv.forward(z, counter)
        z = bn.forward(z, mode)
        cache.append(z)
        z = leaky_relu(z, hp.leaky_slope)
    z = params.output_conv.forward(z, counter)
    out = z + c_map

    params._cache = (x.shape, cache, mode)
    result = out.transpose(1, 0, 2, 3).reshape(b, 2, hp.n_bs)
    if not np.all(np.isfinite(result)):
        raise NumericError("non-finite activations in forward pass")
    return result[0] if single else result


def model_backward(params: ModelParams, grad_out):
    """Backprop a loss gradient w.r.t. the output; accumulates into .grad."""
    hp = params.hyper
    shape, cache, mode = params._cache
    g = np.asarray(grad_out)
    if g.ndim == 2:
        g = g[None]
    b = g.shape[0]
    g_map = np.ascontiguousarray(
        g.reshape(b, 2, hp.n_h, hp.n_v).transpose(1, 0, 2, 3)
    )

    dz = params.output_conv.backward(g_map)
    for (conv, bn), pre_act in zip(reversed(params.conv_stack), reversed(cache)):
        dz = dz * leaky_relu_grad(pre_act, hp.leaky_slope)
        dz = bn.backward(dz, mode)
        dz = conv.backward(dz)
    dc_map = dz + g_map  # residual path
    dy_flat = params.coarse.backward(
        dc_map.transpose(1, 0, 2, 3).reshape(b, 2 * hp.n_bs)
    )
    dy = dy_flat.reshape(b, 2, hp.m)
    return params.pilot.backward(dy)


def mse_loss(predictions, targets):
    """Batch-mean squared Frobenius error (sum over sample entries)."""
    predictions = np.asarray(predictions)
    targets = np.asarray(targets)
    if predictions.shape != targets.shape:
        raise DimensionError("prediction/target shape mismatch")
    diff = predictions - targets
    batch = diff.shape[0] if diff.ndim == 3 else 1
    return float(np.sum(diff.astype(np.float64) ** 2) / batch)


def mse_loss_grad(predictions, targets):
    diff = predictions - targets
    batch = diff.shape[0] if diff.ndim == 3 else 1
    return (2.0 / batch) * diff


class AdamState:
    def __init__(self, params: ModelParams):
        plist = params.parameter_list()
        self.m = [np.zeros_like(p.value) for p in plist]
        self.v = [np.zeros_like(p.value) for p in plist]
        self.t = 0


def adam_step(params: ModelParams, state: AdamState, cfg: TrainConfig):
    """Standard Adam with bias correction; refuses non-finite gradients."""
    plist = params.parameter_list()
    for p in plist:
        if not np.all(np.isfinite(p.grad)):
            raise NumericError("non-finite gradient; step refused")
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    for i, p in enumerate(plist):
        state.m[i] = b1 * state.m[i] + (1 - b1) * p.grad
        state.v[i] = b2 * state.v[i] + (1 - b2) * p.grad ** 2
        m_hat = state.m[i] / (1 - b1 ** state.t)
        v_hat = state.v[i] / (1 - b2 ** state.t)
        p.value = p.value - cfg.learning_rate * m_hat / (np.sqrt(v_hat)
                                                         + cfg.adam_epsilon)
    params.assert_finite()


def _dataset_array(ds):
    arr = np.asarray(getattr(ds, "samples", ds))
    if arr.size == 0:
        raise ValueError("empty dataset")
    return arr


def evaluate_loss(params, samples, noise=None, rng=None, batch_size=512):
    """Mean per-sample loss with BN in infer mode."""
    total = 0.0
    n = samples.shape[0]
    for i in range(0, n, batch_size):
        batch = samples[i:i + batch_size]
        pred = model_forward(params, batch, noise, rng, mode="infer")
        total += mse_loss(pred, batch) * batch.shape[0]
    return total / n


def train(train_set, val_set, hyper: HyperParams, cfg: TrainConfig,
          dtype=np.float32, params=None, callback=None):
    """Train the end-to-end network; returns (ModelParams, TrainHistory).

    Input samples double as targets (the network autoencodes the channel
    through the noisy compression). Deterministic for a fixed seed in
    this sequential implementation. Trailing batches of size 1 are
    skipped because BN needs at least two samples.
    """
    tr = _dataset_array(train_set).astype(dtype, copy=False)
    va = _dataset_array(val_set).astype(dtype, copy=False) if val_set is not None else None
    if cfg.batch_size > tr.shape[0]:
        raise ValueError("batch size exceeds training set")

    base = RngStream(cfg.seed)
    if params is None:
        params = init_params(hyper, base.substream(0), dtype)
    shuffle_rng = base.substream(1)
    noise_rng = base.substream(2)
    val_rng = base.substream(3)
    state = AdamState(params)
    history = TrainHistory()

    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(tr.shape[0])
        epoch_loss, seen = 0.0, 0
        for i in range(0, tr.shape[0], cfg.batch_size):
            batch = tr[order[i:i + cfg.batch_size]]
            if batch.shape[0] < 2:
                continue
            params.zero_grads()
            pred = model_forward(params, batch, cfg.snr_db, noise_rng, "train")
            loss = mse_loss(pred, batch)
            model_backward(params, mse_loss_grad(pred, batch))
            adam_step(params, state, cfg)
            epoch_loss += loss * batch.shape[0]
            seen += batch.shape[0]
        history.train_loss.append(epoch_loss / max(seen, 1))
        if va is not None:
            history.val_loss.append(
                evaluate_loss(params, va, cfg.snr_db, val_rng)
            )
        if callback is not None:
            callback(epoch, params, history)
    return params, history


def extract_pilot(params: ModelParams) -> PilotMatrix:
    """The learned dimensionality-reduction weights, usable as pilots."""
    return PilotMatrix(params.pilot.w.value.copy())
