"""2-D temporal convolutional network with regression and reconstruction heads.

The feature extractor is a stack of residual blocks whose convolutions are
dilated exponentially along depth and undilated along the trace axis. Its
features feed a regression head (property trace at the patch centre) and a
reconstruction head (the whole input patch).
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import Tensor


class ConfigError(ValueError):
    """Invalid model or training configuration."""


@dataclass
class ModelConfig:
    n_blocks: int = 5
    channels: int = 8
    kernel: tuple = (5, 3)
    dilations: tuple = (1, 2, 4, 8, 16)
    patch_width: int = 7
    in_channels: int = 1

    def __post_init__(self):
        self.kernel = tuple(int(k) for k in self.kernel)
        self.dilations = tuple(int(d) for d in self.dilations)
        self.validate()

    def validate(self):
        if self.n_blocks < 1 or self.channels < 1 or self.in_channels < 1:
            raise ConfigError("n_blocks, channels and in_channels must be positive")
        if len(self.kernel) != 2 or min(self.kernel) < 1:
            raise ConfigError(f"kernel must be two positive sizes, got {self.kernel}")
        if len(self.dilations) != self.n_blocks:
            raise ConfigError(f"{self.n_blocks} blocks need {self.n_blocks} dilations, got {len(self.dilations)}")
        for i, d in enumerate(self.dilations):
            if d < 1 or d & (d - 1):
                raise ConfigError(f"dilation {d} is not a power of two")
            if i and d <= self.dilations[i - 1]:
                raise ConfigError("dilations must be strictly increasing")
        if self.patch_width < 1 or self.patch_width % 2 == 0:
            raise ConfigError(f"patch_width must be odd, got {self.patch_width}")

    def to_dict(self):
        d = asdict(self)
        d["kernel"] = list(self.kernel)
        d["dilations"] = list(self.dilations)
        return d

    def receptive_field(self):
        """Depth samples that can influence one output sample."""
        return 1 + sum(2 * d * (self.kernel[0] - 1) for d in self.dilations)


@dataclass
class Conv:
    weight: Tensor
    bias: Tensor
    dilation: tuple = (1, 1)

    def __call__(self, x):
        return ag.conv2d(x, self.weight, self.bias, self.dilation)


@dataclass
class TemporalBlock2D:
    conv1: Conv
    conv2: Conv
    proj: Conv = None

    def __call__(self, x):
        h = ag.relu(self.conv2(ag.relu(self.conv1(x))))
        skip = self.proj(x) if self.proj is not None else x
        return ag.add(h, skip)


@dataclass
class Network:
    config: ModelConfig
    blocks: list
    regression_head: Conv
    reconstruction_head: Conv
    layer_names: list = field(default_factory=list)

    def weights(self):
        """All trainable tensors in a fixed, architecture-defined order."""
        out = []
        for blk in self.blocks:
            for conv in (blk.conv1, blk.conv2, blk.proj):
                if conv is not None:
                    out += [conv.weight, conv.bias]
        for head in (self.regression_head, self.reconstruction_head):
            out += [head.weight, head.bias]
        return out

    def kernel_mask(self):
        """True for convolution kernels, False for biases."""
        return [w.data.ndim == 4 for w in self.weights()]

    def forward(self, x):
        return forward(self, x)

    def copy(self):
        clone = build_network(self.config, 0)
        for dst, src in zip(clone.weights(), self.weights()):
            dst.data[...] = src.data
        return clone

    def n_params(self):
        return sum(w.size for w in self.weights())


def network_weights(net):
    return net.weights()


def _uniform_conv(rng, c_out, c_in, kh, kw, dilation, name):
    bound = np.sqrt(6.0 / (c_in * kh * kw))
    w = rng.uniform(-bound, bound, size=(c_out, c_in, kh, kw))
    return Conv(Tensor(w, requires_grad=True, name=f"{name}.weight"),
                Tensor(np.zeros(c_out), requires_grad=True, name=f"{name}.bias"),
                dilation)


def build_network(cfg, rng_seed):
    """Build a network with He-uniform kernels and zero biases.

    Kernels are drawn in ``weights()`` order from a Philox generator, so the
    same (cfg, seed) always yields bit-identical weights.
    """
    cfg.validate()
    rng = np.random.Generator(np.random.Philox(int(rng_seed)))
    kh, kw = cfg.kernel
    c = cfg.channels
    blocks = []
    c_in = cfg.in_channels
    for i, dil in enumerate(cfg.dilations):
        conv1 = _uniform_conv(rng, c, c_in, kh, kw, (dil, 1), f"block{i}.conv1")
        conv2 = _uniform_conv(rng, c, c, kh, kw, (dil, 1), f"block{i}.conv2")
        proj = _uniform_conv(rng, c, c_in, 1, 1, (1, 1), f"block{i}.proj") if c_in != c else None
        blocks.append(TemporalBlock2D(conv1, conv2, proj))
        c_in = c
    reg = _uniform_conv(rng, 1, c, 1, 1, (1, 1), "regression")
    rec = _uniform_conv(rng, cfg.in_channels, c, 1, 1, (1, 1), "reconstruction")
    net = Network(cfg, blocks, reg, rec)
    net.layer_names = [w.name for w in net.weights()]
    return net


def forward(net, x):
    """Run the network on one patch [C, d, m] or a batch [N, C, d, m].

    Returns ``(y_hat, x_hat)``: the property trace at the centre column
    ([d] or [N, d]) and the reconstructed patch (same shape as ``x``).
    """
    x = x if isinstance(x, Tensor) else Tensor(x)
    m = net.config.patch_width
    if x.data.ndim not in (3, 4):
        raise ag.ShapeError(f"expected [C, d, m] or [N, C, d, m], got {x.shape}")
    if x.shape[-1] != m:
        raise ag.ShapeError(f"patch width {x.shape[-1]} does not match configured {m}")
    if x.shape[-3] != net.config.in_channels:
        raise ag.ShapeError(f"expected {net.config.in_channels} input channel(s), got {x.shape[-3]}")
    h = x
    for blk in net.blocks:
        h = blk(h)
    # regression head output is [.., 1, d, m]; keep the centre trace
    reg = net.regression_head(h)
    reg = ag.select_column(reg, (m - 1) // 2)
    y_hat = ag.reshape(reg, reg.shape[:-2] + (reg.shape[-1],))
    x_hat = net.reconstruction_head(h)
    return y_hat, x_hat
