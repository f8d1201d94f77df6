"""Network construction from a ModelConfig, exact parameter counting,
ResNet18/34 presets, forward pass, and binary checkpoints.

Structure produced by :func:`build_model` (all convolutions bias-free):

* stem: conv K=7, 1 -> input_filters, stride 2; batch norm; ReLU.
* group i (width f_i, b_i blocks): block 1 expands the layout with the
  first 'c' mapping C_in -> f_i at stride 2 (later 'c's are f_i -> f_i,
  stride 1; each 'n' normalizes the channel count live at that point);
  its skip is a strided 1x1 projection C_in -> f_i without norm. Blocks
  2..b_i repeat the layout at stride 1 with identity skips. Block output
  is main + skip with no activation after the addition.
* head: global average pooling, then dense f_last -> 2 with bias.

The ResNet18/34 presets differ only in their first group, which keeps
stride 1 and identity skips as in the classic architecture.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig, format_config, parse_config, validate
from .nn import ops
from .nn.tensor import ShapeError, Tensor, no_grad

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
N_CLASSES = 2

PRESETS = {
    "ResNet18": ((64, 128, 256, 512), (2, 2, 2, 2)),
    "ResNet34": ((64, 128, 256, 512), (3, 4, 6, 3)),
}

CHECKPOINT_MAGIC = b"RSB1"
CHECKPOINT_VERSION = 1
_DTYPE_TAGS = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_META_NAMES = ("_meta.bn_eps", "_meta.bn_momentum")


class CheckpointError(ValueError):
    """Unreadable or inconsistent checkpoint file."""


@dataclass
class LayerPlan:
    kind: str  # conv | norm | act | pool | dense
    name: str
    kernel: int = 0
    stride: int = 1
    in_channels: int = 0
    out_channels: int = 0
    group: int = 0
    block: int = 0
    branch: str = "main"


@dataclass
class BlockPlan:
    group: int
    block: int
    main: list[LayerPlan]
    skip: LayerPlan | None  # None = identity shortcut


@dataclass
class Network:
    config_text: str
    stem: list[LayerPlan] = field(default_factory=list)
    blocks: list[BlockPlan] = field(default_factory=list)
    head: list[LayerPlan] = field(default_factory=list)
    params: dict[str, Tensor] = field(default_factory=dict)
    running: dict[str, np.ndarray] = field(default_factory=dict)
    mode: str = "train"
    input_channels: int = 1
    bn_eps: float = BN_EPS
    bn_momentum: float = BN_MOMENTUM

    def train(self):
        self.mode = "train"
        return self

    def eval(self):
        self.mode = "eval"
        return self

    def layers(self):
        """All layer descriptors in execution order."""
        yield from self.stem
        for blk in self.blocks:
            yield from blk.main
            if blk.skip is not None:
                yield blk.skip
        yield from self.head

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def gradients(self) -> dict[str, np.ndarray]:
        return {k: p.grad for k, p in self.params.items() if p.grad is not None}


def _expand_layout(layout: str, prefix: str, c_in: int, width: int, stride: int,
                   group: int, block: int) -> list[LayerPlan]:
    """One block's main branch. The first 'c' carries the stride and the
    channel change; 'n' tracks whatever channel count is live."""
    plans = []
    channels = c_in
    first_conv_seen = False
    for idx, sym in enumerate(layout):
        name = f"{prefix}.{sym}{idx}"
        if sym == "c":
            if not first_conv_seen:
                plans.append(LayerPlan("conv", name, 3, stride, channels, width,
                                       group, block))
                channels = width
                first_conv_seen = True
            else:
                plans.append(LayerPlan("conv", name, 3, 1, width, width,
                                       group, block))
        elif sym == "n":
            plans.append(LayerPlan("norm", name, 0, 1, channels, channels,
                                   group, block))
        else:
            plans.append(LayerPlan("act", name, 0, 1, channels, channels,
                                   group, block))
    return plans


def _plan_blocks(layout, filters, blocks, c_in, downsample_first_group=True):
    plans = []
    for gi, (width, n_blocks) in enumerate(zip(filters, blocks), start=1):
        for bi in range(1, n_blocks + 1):
            prefix = f"g{gi}.b{bi}"
            first = bi == 1
            downsample = first and (downsample_first_group or gi > 1)
            stride = 2 if downsample else 1
            block_in = c_in if first else width
            main = _expand_layout(layout, prefix, block_in, width, stride, gi, bi)
            if first and (downsample or block_in != width):
                skip = LayerPlan("conv", f"{prefix}.skip", 1, stride,
                                 block_in, width, gi, bi, branch="skip")
            else:
                skip = None
            plans.append(BlockPlan(gi, bi, main, skip))
        c_in = width
    return plans


def _plan_network(config_text, input_filters, layout, filters, blocks,
                  downsample_first_group=True) -> Network:
    stem = [
        LayerPlan("conv", "stem.conv", 7, 2, 1, input_filters),
        LayerPlan("norm", "stem.norm", 0, 1, input_filters, input_filters),
        LayerPlan("act", "stem.act", 0, 1, input_filters, input_filters),
    ]
    body = _plan_blocks(layout, filters, blocks, input_filters,
                        downsample_first_group)
    head = [
        LayerPlan("pool", "head.pool", 0, 1, filters[-1], filters[-1]),
        LayerPlan("dense", "head.dense", 0, 1, filters[-1], N_CLASSES),
    ]
    return Network(config_text, stem, body, head)


def _init_params(net: Network, seed: int):
    rng = np.random.default_rng(seed)
    for lp in net.layers():
        if lp.kind == "conv":
            fan_in = lp.in_channels * lp.kernel
            bound = np.sqrt(1.0 / fan_in)
            w = rng.uniform(-bound, bound, (lp.out_channels, lp.in_channels, lp.kernel))
            net.params[f"{lp.name}.weight"] = Tensor(w, requires_grad=True)
        elif lp.kind == "norm":
            c = lp.out_channels
            net.params[f"{lp.name}.gamma"] = Tensor(np.ones(c), requires_grad=True)
            net.params[f"{lp.name}.beta"] = Tensor(np.zeros(c), requires_grad=True)
            net.running[f"{lp.name}.running_mean"] = np.zeros(c)
            net.running[f"{lp.name}.running_var"] = np.ones(c)
        elif lp.kind == "dense":
            bound = np.sqrt(1.0 / lp.in_channels)
            w = rng.uniform(-bound, bound, (lp.in_channels, lp.out_channels))
            net.params[f"{lp.name}.weight"] = Tensor(w, requires_grad=True)
            net.params[f"{lp.name}.bias"] = Tensor(
                np.zeros(lp.out_channels), requires_grad=True
            )


def build_model(cfg: ModelConfig, seed: int = 0) -> Network:
    """Build an initialized Network for a configuration."""
    violations = validate(cfg)
    if violations:
        from .config import ConfigValidationError

        raise ConfigValidationError(violations)
    net = _plan_network(format_config(cfg), cfg.input_filters, cfg.layout,
                        cfg.filters, cfg.blocks)
    _init_params(net, seed)
    return net


def preset(name: str, seed: int = 0) -> Network:
    """1D ResNet18 / ResNet34 (two 3-tap convolutions per block, classic
    group widths, no max-pool stage)."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    widths, blocks = PRESETS[name]
    net = _plan_network(name, widths[0], "cnacna", widths, blocks,
                        downsample_first_group=False)
    _init_params(net, seed)
    return net


def resolve_model(text: str, seed: int = 0) -> Network:
    """Build from a preset name or a configuration string."""
    text = text.strip()
    if text in PRESETS:
        return preset(text, seed)
    return build_model(parse_config(text), seed)


def analytic_param_count(cfg) -> int:
    """Closed-form trainable parameter count; accepts a ModelConfig or a
    preset name. Matches the structural count of the built network."""
    if isinstance(cfg, str):
        name = cfg.strip()
        if name in PRESETS:
            return _preset_param_count(*PRESETS[name])
        cfg = parse_config(name)
    layout = cfg.layout
    n_conv = layout.count("c")
    first_c = layout.index("c")
    n_before = layout[:first_c].count("n")
    n_after = layout[first_c:].count("n")
    total = 7 * cfg.input_filters + 2 * cfg.input_filters
    c_in = cfg.input_filters
    for width, n_blocks in zip(cfg.filters, cfg.blocks):
        total += (
            3 * c_in * width                  # first conv, strided
            + 3 * width * width * (n_conv - 1)  # remaining convs
            + 2 * width * n_after             # norms after the first conv
            + 2 * c_in * n_before             # norms before it see C_in
            + c_in * width                    # 1x1 skip projection
        )
        total += (n_blocks - 1) * (
            3 * width * width * n_conv + 2 * width * (n_after + n_before)
        )
        c_in = width
    total += N_CLASSES * cfg.filters[-1] + N_CLASSES
    return total


def _preset_param_count(widths, blocks) -> int:
    total = 7 * widths[0] + 2 * widths[0]
    c_in = widths[0]
    for gi, (width, n_blocks) in enumerate(zip(widths, blocks)):
        plain = 6 * width * width + 4 * width  # two convs + two norms
        if gi == 0:
            total += n_blocks * plain
        else:
            total += 3 * c_in * width + 3 * width * width + 4 * width + c_in * width
            total += (n_blocks - 1) * plain
        c_in = width
    total += N_CLASSES * widths[-1] + N_CLASSES
    return total


def count_parameters(net: Network) -> int:
    """Structural count: total elements of trainable tensors (running
    statistics excluded)."""
    return sum(p.size for p in net.params.values())


def _apply(net: Network, lp: LayerPlan, x: Tensor, mode: str) -> Tensor:
    if lp.kind == "conv":
        return ops.conv1d(x, net.params[f"{lp.name}.weight"],
                          stride=lp.stride, padding=lp.kernel // 2)
    if lp.kind == "norm":
        try:
            return ops.batchnorm(
                x,
                net.params[f"{lp.name}.gamma"],
                net.params[f"{lp.name}.beta"],
                net.running[f"{lp.name}.running_mean"],
                net.running[f"{lp.name}.running_var"],
                mode=mode,
                eps=net.bn_eps,
                momentum=net.bn_momentum,
            )
        except ShapeError as exc:
            raise ShapeError(f"{exc} (stage {lp.name})") from None
    if lp.kind == "act":
        return ops.relu(x)
    raise ValueError(f"cannot apply layer kind {lp.kind!r}")


def forward_features(net: Network, batch: Tensor, mode: str | None = None) -> Tensor:
    """Run stem and residual blocks; returns the pre-pool feature map."""
    mode = mode or net.mode
    h = batch
    for lp in net.stem:
        h = _apply(net, lp, h, mode)
    for blk in net.blocks:
        main = h
        for lp in blk.main:
            main = _apply(net, lp, main, mode)
        shortcut = _apply(net, blk.skip, h, mode) if blk.skip is not None else h
        h = ops.add(main, shortcut)
    return h


def forward(net: Network, batch: Tensor, mode: str | None = None) -> Tensor:
    """Logits [B, 2] for a batch [B, 1, L]. Eval mode records no graph and
    touches no state; train mode updates batch-norm running statistics."""
    mode = mode or net.mode
    if not isinstance(batch, Tensor):
        batch = Tensor(batch)
    if batch.data.ndim != 3 or batch.data.shape[1] != net.input_channels:
        raise ShapeError(
            f"expected input [B, {net.input_channels}, L], got {batch.data.shape}"
        )

    def run():
        h = forward_features(net, batch, mode)
        h = ops.global_avg_pool(h)
        return ops.dense(h, net.params["head.dense.weight"],
                         net.params["head.dense.bias"])

    if mode == "eval":
        with no_grad():
            return run()
    return run()


def stage_lengths(net: Network, input_len: int) -> list[int]:
    """Temporal length after the stem and after each group, applying the
    conv output-length formula layer by layer."""
    conv0 = net.stem[0]
    length = (input_len + 2 * (conv0.kernel // 2) - conv0.kernel) // conv0.stride + 1
    lengths = [length]
    last_block = {blk.group: blk.block for blk in net.blocks}
    for blk in net.blocks:
        for lp in blk.main:
            if lp.kind == "conv":
                length = (length + 2 * (lp.kernel // 2) - lp.kernel) // lp.stride + 1
        if blk.block == last_block[blk.group]:
            lengths.append(length)
    return lengths


# --- checkpoints ------------------------------------------------------------

def _checkpoint_entries(net: Network):
    """(name, array) pairs in a stable order: each norm layer's running
    statistics directly follow its parameters; metadata scalars last."""
    for name, param in net.params.items():
        yield name, param.data
        if name.endswith(".beta"):
            base = name.rsplit(".", 1)[0]
            mean_key = f"{base}.running_mean"
            if mean_key in net.running:
                yield mean_key, net.running[mean_key]
                yield f"{base}.running_var", net.running[f"{base}.running_var"]
    yield "_meta.bn_eps", np.float64(net.bn_eps)
    yield "_meta.bn_momentum", np.float64(net.bn_momentum)


def save_checkpoint(net: Network, path, dtype: str = "f64"):
    """Write the checkpoint file (little-endian, see README for the layout).

    ``dtype`` selects the value storage: "f64" (lossless round trip, the
    default) or "f32" (compact).
    """
    if dtype not in ("f32", "f64"):
        raise ValueError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    tag = 1 if dtype == "f64" else 0
    entries = list(_checkpoint_entries(net))
    cfg_bytes = net.config_text.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(cfg_bytes)))
        fh.write(cfg_bytes)
        fh.write(struct.pack("<I", len(entries)))
        for name, arr in entries:
            arr = np.asarray(arr)
            name_bytes = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<BB", tag, arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPE_TAGS[tag]).tobytes())


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint file")
    return data


def load_checkpoint(path) -> Network:
    """Rebuild a Network from a checkpoint; the stored configuration string
    (grammar string or preset name) determines the structure."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != CHECKPOINT_MAGIC:
            raise CheckpointError("bad magic: not a checkpoint file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (cfg_len,) = struct.unpack("<I", _read_exact(fh, 4))
        config_text = _read_exact(fh, cfg_len).decode("utf-8")
        net = resolve_model(config_text, seed=0)
        (count,) = struct.unpack("<I", _read_exact(fh, 4))
        expected = {name: arr for name, arr in _checkpoint_entries(net)}
        seen = set()
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4))
            name = _read_exact(fh, name_len).decode("utf-8")
            tag, rank = struct.unpack("<BB", _read_exact(fh, 2))
            if tag not in _DTYPE_TAGS:
                raise CheckpointError(f"unknown dtype tag {tag}")
            dims = tuple(
                struct.unpack("<I", _read_exact(fh, 4))[0] for _ in range(rank)
            )
            dt = _DTYPE_TAGS[tag]
            n_values = int(np.prod(dims, dtype=np.int64)) if rank else 1
            raw = _read_exact(fh, n_values * dt.itemsize)
            values = np.frombuffer(raw, dtype=dt).astype(np.float64).reshape(dims)
            if name not in expected:
                raise CheckpointError(f"unknown tensor name {name!r}")
            if name == "_meta.bn_eps":
                net.bn_eps = float(values)
            elif name == "_meta.bn_momentum":
                net.bn_momentum = float(values)
            elif name in net.params:
                if net.params[name].data.shape != dims:
                    raise CheckpointError(
                        f"shape mismatch for {name!r}: file {dims}, "
                        f"model {net.params[name].data.shape}"
                    )
                net.params[name].data = values
            else:
                net.running[name][...] = values
            seen.add(name)
        missing = set(expected) - seen
        if missing:
            raise CheckpointError(f"missing tensors: {sorted(missing)[:3]}")
    return net
