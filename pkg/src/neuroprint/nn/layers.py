"""Layers of the compact temporal-spectral-spatial CNN.

All activations flow as float64 arrays shaped (N, maps, height, time); the
input enters as (N, 1, C, T).  Convolutions are 1-D in time or collapse the
height axis, so each layer implements its own exact backward pass.  Time-axis
correlations run through real FFTs, which is exact to rounding and avoids
materializing im2col buffers.
"""

from __future__ import annotations

import numpy as np
from scipy.fft import next_fast_len

from ..errors import ConfigError


def _fan_in_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base layer: named parameters, gradients, persistent buffers."""

    name = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool, rng) -> np.ndarray:
        raise NotImplementedError

    def backward(self, gy: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class TemporalConv(Layer):
    """Same-padded 1-D convolution along time, one kernel bank, no bias.

    (N, 1, C, T) -> (N, F, C, T); every channel row is filtered by each of
    the F kernels independently, mimicking a bank of learned band-pass
    filters.
    """

    name = "temporal_conv"

    def __init__(self, n_filters: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        self.kernel = kernel
        self.pad_left = (kernel - 1) // 2
        self.pad_right = kernel // 2
        self.params["w"] = _fan_in_uniform(rng, (n_filters, kernel), kernel)

    def forward(self, x, train, rng):
        n, maps, c, t = x.shape
        if maps != 1:
            raise ConfigError(f"temporal conv expects a single input map, got {maps}")
        w = self.params["w"]
        xp = np.pad(x[:, 0], ((0, 0), (0, 0), (self.pad_left, self.pad_right)))
        lfft = next_fast_len(t + self.kernel - 1)
        xf = np.fft.rfft(xp, n=lfft, axis=-1)            # (N, C, L)
        wf = np.fft.rfft(w, n=lfft, axis=-1)             # (F, L)
        yf = xf[:, None, :, :] * np.conj(wf)[None, :, None, :]
        y = np.fft.irfft(yf, n=lfft, axis=-1)[..., :t]
        self._cache = (xf, wf, x.shape, lfft)
        return y

    def backward(self, gy):
        xf, wf, x_shape, lfft = self._cache
        n, _, c, t = x_shape
        gf = np.fft.rfft(gy, n=lfft, axis=-1)            # (N, F, C, L)
        # weight gradient: correlate padded input with the output gradient
        zw = np.einsum("ncl,nfcl->fl", xf, np.conj(gf), optimize=True)
        self.grads["w"] = np.fft.irfft(zw, n=lfft, axis=-1)[:, : self.kernel]
        # input gradient: full convolution of gy with the kernels
        zx = np.einsum("nfcl,fl->ncl", gf, wf, optimize=True)
        gxp = np.fft.irfft(zx, n=lfft, axis=-1)[..., : t + self.kernel - 1]
        gx = gxp[..., self.pad_left : self.pad_left + t]
        return gx[:, None, :, :]


class DepthwiseSpatialConv(Layer):
    """Full-height (C x 1) depthwise convolution with depth multiplier D.

    (N, F, C, T) -> (N, F * D, 1, T); each of the D filters per input map
    learns a weighting across channels.  With C = 1 this degenerates to a
    learned per-map scaling, which keeps single-channel datasets valid.
    """

    name = "spatial_conv"

    def __init__(self, in_maps: int, n_channels: int, depth_mult: int,
                 rng: np.random.Generator):
        super().__init__()
        self.params["w"] = _fan_in_uniform(
            rng, (in_maps, depth_mult, n_channels), n_channels
        )

    def forward(self, x, train, rng):
        w = self.params["w"]
        y = np.einsum("nfct,fdc->nfdt", x, w, optimize=True)
        n, f, d, t = y.shape
        self._cache = x
        return y.reshape(n, f * d, 1, t)

    def backward(self, gy):
        x = self._cache
        w = self.params["w"]
        f, d, c = w.shape
        n, _, _, t = gy.shape
        g = gy.reshape(n, f, d, t)
        self.grads["w"] = np.einsum("nfdt,nfct->fdc", g, x, optimize=True)
        return np.einsum("nfdt,fdc->nfct", g, w, optimize=True)


class SeparableConv(Layer):
    """Depthwise temporal convolution followed by a pointwise projection.

    (N, M, 1, T) -> (N, F2, 1, T); equivalent to a full convolution with the
    rank-factored kernel pw[o, m] * dw[m, k].  No bias.
    """

    name = "sep_conv"

    def __init__(self, in_maps: int, out_maps: int, kernel: int,
                 rng: np.random.Generator):
        super().__init__()
        self.kernel = kernel
        self.pad_left = (kernel - 1) // 2
        self.pad_right = kernel // 2
        self.params["dw"] = _fan_in_uniform(rng, (in_maps, kernel), kernel)
        self.params["pw"] = _fan_in_uniform(rng, (out_maps, in_maps), in_maps)

    def _depthwise(self, x2, t):
        # x2: (N, M, T) -> matched-map correlation via FFT
        xp = np.pad(x2, ((0, 0), (0, 0), (self.pad_left, self.pad_right)))
        lfft = next_fast_len(t + self.kernel - 1)
        xf = np.fft.rfft(xp, n=lfft, axis=-1)
        df = np.fft.rfft(self.params["dw"], n=lfft, axis=-1)
        h = np.fft.irfft(xf * np.conj(df)[None], n=lfft, axis=-1)[..., :t]
        return h, xf, df, lfft

    def forward(self, x, train, rng):
        n, m, one, t = x.shape
        h, xf, df, lfft = self._depthwise(x[:, :, 0, :], t)
        y = np.einsum("om,nmt->not", self.params["pw"], h, optimize=True)
        self._cache = (h, xf, df, lfft, t)
        return y[:, :, None, :]

    def backward(self, gy):
        h, xf, df, lfft, t = self._cache
        g = gy[:, :, 0, :]                               # (N, O, T)
        pw = self.params["pw"]
        self.grads["pw"] = np.einsum("not,nmt->om", g, h, optimize=True)
        gh = np.einsum("not,om->nmt", g, pw, optimize=True)             # gradient at depthwise out
        ghf = np.fft.rfft(gh, n=lfft, axis=-1)
        zd = np.einsum("nml,nml->ml", xf, np.conj(ghf), optimize=True)
        self.grads["dw"] = np.fft.irfft(zd, n=lfft, axis=-1)[:, : self.kernel]
        gxp = np.fft.irfft(ghf * df[None], n=lfft, axis=-1)[..., : t + self.kernel - 1]
        gx = gxp[..., self.pad_left : self.pad_left + t]
        return gx[:, :, None, :]

    def materialized_kernel(self) -> np.ndarray:
        """The equivalent full kernel pw[o, m] * dw[m, k], (O, M, K)."""
        return np.einsum("om,mk->omk", self.params["pw"], self.params["dw"])


class BatchNorm(Layer):
    """Per-map batch normalization over the (N, height, time) axes."""

    name = "batch_norm"

    def __init__(self, n_maps: int, momentum: float = 0.9, eps: float = 1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(n_maps)
        self.params["beta"] = np.zeros(n_maps)
        self.buffers["running_mean"] = np.zeros(n_maps)
        self.buffers["running_var"] = np.ones(n_maps)

    @staticmethod
    def _shape(v):
        return v.reshape(1, -1, 1, 1)

    def forward(self, x, train, rng):
        axes = (0, 2, 3)
        if train:
            mean = x.mean(axis=axes)
            xm = x - self._shape(mean)
            var = np.einsum("nmht,nmht->m", xm, xm) / (
                x.shape[0] * x.shape[2] * x.shape[3]
            )
            mom = self.momentum
            self.buffers["running_mean"] = (
                mom * self.buffers["running_mean"] + (1 - mom) * mean
            )
            self.buffers["running_var"] = (
                mom * self.buffers["running_var"] + (1 - mom) * var
            )
        else:
            mean = self.buffers["running_mean"]
            var = self.buffers["running_var"]
            xm = x - self._shape(mean)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = xm
        xhat *= self._shape(inv_std)
        self._cache = (xhat, inv_std, train)
        return self._shape(self.params["gamma"]) * xhat + self._shape(
            self.params["beta"]
        )

    def backward(self, gy):
        xhat, inv_std, train = self._cache
        axes = (0, 2, 3)
        self.grads["gamma"] = np.einsum("nmht,nmht->m", gy, xhat)
        self.grads["beta"] = gy.sum(axis=axes)
        gamma_inv = self._shape(self.params["gamma"] * inv_std)
        if not train:
            return gy * gamma_inv
        m = gy.shape[0] * gy.shape[2] * gy.shape[3]
        gx = gy - self._shape(self.grads["beta"] / m)
        gx -= xhat * self._shape(self.grads["gamma"] / m)
        gx *= gamma_inv
        return gx


class Elu(Layer):
    """Exponential linear unit, alpha = 1."""

    name = "elu"

    def forward(self, x, train, rng):
        negative = x < 0
        y = x.copy()
        y[negative] = np.expm1(x[negative])
        self._cache = (negative, y)
        return y

    def backward(self, gy):
        negative, y = self._cache
        deriv = np.ones_like(y)
        deriv[negative] = y[negative] + 1.0
        return gy * deriv


class AvgPool(Layer):
    """Non-overlapping (1 x p) average pooling along time."""

    def __init__(self, pool: int):
        super().__init__()
        self.pool = pool
        self.name = f"avg_pool{pool}"

    def forward(self, x, train, rng):
        p = self.pool
        t_out = x.shape[-1] // p
        if t_out < 1:
            raise ConfigError(
                f"temporal dimension underflow: {x.shape[-1]} samples cannot be "
                f"pooled by {p}"
            )
        self._cache = x.shape
        y = x[..., : t_out * p].reshape(*x.shape[:-1], t_out, p).mean(axis=-1)
        return y

    def backward(self, gy):
        x_shape = self._cache
        p = self.pool
        gx = np.zeros(x_shape)
        t_out = gy.shape[-1]
        gx[..., : t_out * p] = np.repeat(gy / p, p, axis=-1)
        return gx


class Dropout(Layer):
    """Inverted dropout; identity in eval mode or when p = 0."""

    name = "dropout"

    def __init__(self, p: float):
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p

    def forward(self, x, train, rng):
        if not train or self.p == 0.0:
            self._cache = None
            return x
        mask = (rng.random(x.shape) >= self.p) / (1.0 - self.p)
        self._cache = mask
        return x * mask

    def backward(self, gy):
        mask = self._cache
        return gy if mask is None else gy * mask


class Flatten(Layer):
    name = "flatten"

    def forward(self, x, train, rng):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, gy):
        return gy.reshape(self._cache)


class Dense(Layer):
    """Fully connected map to class scores."""

    name = "dense"

    def __init__(self, in_features: int, out_features: int,
                 rng: np.random.Generator):
        super().__init__()
        self.params["w"] = _fan_in_uniform(
            rng, (in_features, out_features), in_features
        )
        self.params["b"] = np.zeros(out_features)

    def forward(self, x, train, rng):
        self._cache = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, gy):
        x = self._cache
        self.grads["w"] = x.T @ gy
        self.grads["b"] = gy.sum(axis=0)
        return gy @ self.params["w"].T
