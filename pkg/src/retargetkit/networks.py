"""Skeleton-aware convolutional networks.

Features live on topology nodes as (B, C, T) arrays, one per node.  A
skeletal convolution runs a temporal 1-D convolution per node over the
concatenated channels of its graph neighborhood N_d, so information flows
along the skeleton at a rate set by d.  Pooling averages degree-2 chain
groups down to the primal topology, where the translator swaps the latent
onto the other skeleton via the primal-node correspondence.

Four networks are built from these pieces: the pose translator (motion in
one domain to poses + root transforms in the other), its inverse, a set of
per-joint pose critics plus one global pose critic, and a patch-wise
temporal motion critic.  All are pure functions of (parameters, input).
"""

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import topology as topo
from .errors import ShapeError, ValidationError


@dataclass(frozen=True)
class ArchConfig:
    """Architecture knobs shared by all networks."""

    hidden_channels: int = 64
    neighborhood: int = 2
    kernel: int = 15
    encoder_layers: int = 2
    decoder_layers: int = 2
    leaky_slope: float = 0.2
    critic_hidden: int = 64
    critic_layers: int = 2
    motion_channels: int = 32
    motion_layers: int = 3
    motion_stride: int = 2
    motion_kernel: int = 7


def _param_nodes(params):
    return {k: (v if isinstance(v, ad.DiffNode) else ad.leaf(v))
            for k, v in params.items()}


def n_parameters(params):
    return int(sum(np.size(v.value if isinstance(v, ad.DiffNode) else v)
                   for v in params.values()))


# ---------------------------------------------------------------------------
# feature packing


def motion_to_features(arr, topology):
    """Split a motion array node (B, T, 6(J+1)+3) into per-node (B, C, T) features.

    Channel layout follows the flattened motion convention: 6 per joint in
    joint order, then 6 armature orientation + 3 root velocity channels.
    """
    arr = arr if isinstance(arr, ad.DiffNode) else ad.leaf(arr)
    if arr.value.ndim != 3:
        raise ShapeError(f"expected (B, T, D) input, got {arr.value.shape}")
    expected = sum(topology.channels)
    if arr.value.shape[-1] != expected:
        raise ShapeError(
            f"input has {arr.value.shape[-1]} channels, topology needs {expected}")
    swapped = ad.transpose(arr, (0, 2, 1))  # (B, D, T)
    feats = []
    start = 0
    for c in topology.channels:
        feats.append(ad.take_slice(
            swapped, (slice(None), slice(start, start + c))))
        start += c
    return feats


def features_to_motion(feats, topology):
    """Inverse of motion_to_features: per-node (B, C, T) lists to (B, T, D)."""
    stacked = ad.concat(feats, axis=1)
    return ad.transpose(stacked, (0, 2, 1))


# ---------------------------------------------------------------------------
# layers


class SkeletalConv:
    """Per-node temporal convolution over the N_d neighborhood's channels."""

    def __init__(self, name, topology, in_channels, out_channels, *,
                 d, kernel, stride=1, padding="same", slope=None):
        if len(in_channels) != topology.n_nodes:
            raise ShapeError(
                f"{name}: {len(in_channels)} channel counts for "
                f"{topology.n_nodes} nodes")
        self.name = name
        self.topology = topology
        self.in_channels = tuple(in_channels)
        out = ((out_channels,) * topology.n_nodes
               if np.isscalar(out_channels) else tuple(out_channels))
        self.out_channels = out
        self.neighborhood = topology.neighborhoods(d)
        self.kernel = kernel
        self.stride = stride
        self.padding = padding
        self.slope = slope  # None = linear layer

    def param_shapes(self):
        shapes = {}
        for j, nbhd in enumerate(self.neighborhood):
            c_in = sum(self.in_channels[k] for k in nbhd)
            shapes[f"{self.name}.n{j}.w"] = (self.out_channels[j], c_in, self.kernel)
            shapes[f"{self.name}.n{j}.b"] = (self.out_channels[j],)
        return shapes

    def init(self, rng):
        params = {}
        for key, shape in self.param_shapes().items():
            if key.endswith(".b"):
                params[key] = np.zeros(shape)
            else:
                fan_in = shape[1] * shape[2]
                params[key] = rng.normal(size=shape) * np.sqrt(2.0 / fan_in)
        return params

    def apply(self, params, feats):
        if len(feats) != self.topology.n_nodes:
            raise ShapeError(
                f"{self.name}: got {len(feats)} feature nodes, "
                f"topology has {self.topology.n_nodes}")
        out = []
        for j, nbhd in enumerate(self.neighborhood):
            x = (feats[nbhd[0]] if len(nbhd) == 1
                 else ad.concat([feats[k] for k in nbhd], axis=1))
            y = ad.temporal_conv1d(x, params[f"{self.name}.n{j}.w"],
                                   params[f"{self.name}.n{j}.b"],
                                   stride=self.stride, padding=self.padding)
            if self.slope is not None:
                y = ad.leaky_relu(y, self.slope)
            out.append(y)
        return out


class SkeletalPool:
    """Channel-mean over degree-2 chain merge groups; unpool duplicates back."""

    def __init__(self, topology):
        self.topology = topology
        self.pooled_topology, self.groups = topo.pool_topology(topology)

    def apply(self, feats):
        out = []
        for group in self.groups:
            if len(group) == 1:
                out.append(feats[group[0]])
            else:
                acc = feats[group[0]]
                for m in group[1:]:
                    acc = ad.add(acc, feats[m])
                out.append(ad.scale(acc, 1.0 / len(group)))
        return out

    def unpool(self, pooled_feats):
        feats = [None] * self.topology.n_nodes
        for k, group in enumerate(self.groups):
            for m in group:
                feats[m] = pooled_feats[k]
        return feats


def pooling_cascade(topology):
    """Pool layers from the full topology down to its primal fixed point."""
    layers = []
    current = topology
    while True:
        layer = SkeletalPool(current)
        if layer.pooled_topology.n_nodes == current.n_nodes:
            return layers, current
        layers.append(layer)
        current = layer.pooled_topology


# ---------------------------------------------------------------------------
# translator (used for both directions of the cycle)


class SkeletalTranslator:
    """Motion in the input domain to poses + root transforms in the output domain.

    Encoder convolutions and pooling run on the input skeleton's topology;
    the latent lands on its primal topology, is relabeled onto the output
    skeleton's primal topology via the end-effector-preserving matching, and
    decoded through unpooling and convolutions on the output topology.
    """

    def __init__(self, name, in_topology, out_topology, config):
        self.name = name
        self.in_topology = in_topology
        self.out_topology = out_topology
        self.config = config
        h = config.hidden_channels

        self.enc_pools, in_primal = pooling_cascade(in_topology)
        self.dec_pools, out_primal = pooling_cascade(out_topology)
        self.correspondence = topo.primal_correspondence(in_primal, out_primal)

        self.enc_convs = []
        channels = in_topology.channels
        current = in_topology
        for i in range(config.encoder_layers):
            self.enc_convs.append(SkeletalConv(
                f"{name}.enc{i}", current, channels, h,
                d=config.neighborhood, kernel=config.kernel,
                slope=config.leaky_slope))
            channels = (h,) * current.n_nodes
        self.latent_conv = SkeletalConv(
            f"{name}.latent", in_primal, (h,) * in_primal.n_nodes, h,
            d=config.neighborhood, kernel=config.kernel,
            slope=config.leaky_slope)

        self.dec_convs = []
        for i in range(config.decoder_layers):
            self.dec_convs.append(SkeletalConv(
                f"{name}.dec{i}", out_topology, (h,) * out_topology.n_nodes, h,
                d=config.neighborhood, kernel=config.kernel,
                slope=config.leaky_slope))
        self.head = SkeletalConv(
            f"{name}.head", out_topology, (h,) * out_topology.n_nodes,
            out_topology.channels, d=config.neighborhood,
            kernel=config.kernel, slope=None)
        self.layers = (self.enc_convs + [self.latent_conv]
                       + self.dec_convs + [self.head])

    def init(self, rng):
        params = {}
        for layer in self.layers:
            params.update(layer.init(rng))
        return params

    def apply(self, params, arr):
        """arr: (B, T, 6(J_in+1)+3) node or array; returns (B, T, 6(J_out+1)+3)."""
        params = _param_nodes(params)
        feats = motion_to_features(arr, self.in_topology)
        for conv in self.enc_convs:
            feats = conv.apply(params, feats)
        for pool in self.enc_pools:
            feats = pool.apply(feats)
        feats = self.latent_conv.apply(params, feats)

        relabeled = [None] * len(feats)
        for src, dst in self.correspondence.items():
            relabeled[dst] = feats[src]
        feats = relabeled
        for pool in reversed(self.dec_pools):
            feats = pool.unpool(feats)
        for conv in self.dec_convs:
            feats = conv.apply(params, feats)
        feats = self.head.apply(params, feats)
        return features_to_motion(feats, self.out_topology)


@dataclass(frozen=True)
class GeneratorOutput:
    poses: ad.DiffNode  # (B, T, 6 J_out)
    roots: ad.DiffNode  # (B, T, 9)


def split_generator_output(arr, out_topology):
    """Split a translated motion array into pose and root-transform heads."""
    n_pose = 6 * (out_topology.n_nodes - 1)
    poses = ad.take_slice(arr, (slice(None), slice(None), slice(0, n_pose)))
    roots = ad.take_slice(arr, (slice(None), slice(None), slice(n_pose, n_pose + 9)))
    return GeneratorOutput(poses, roots)


# ---------------------------------------------------------------------------
# critics


class PoseCritic:
    """J per-joint Wasserstein critics plus one critic over the whole pose.

    Input (N, 6J); output (N, J+1) unbounded scores.  Critic j < J sees only
    joint j's 6 channels; the last score sees the concatenation.
    """

    def __init__(self, name, n_joints, config):
        self.name = name
        self.n_joints = n_joints
        self.config = config

    def _mlp_shapes(self, c_in):
        h = self.config.critic_hidden
        dims = [c_in] + [h] * self.config.critic_layers + [1]
        return list(zip(dims[:-1], dims[1:]))

    def init(self, rng):
        params = {}
        for j in range(self.n_joints + 1):
            c_in = 6 if j < self.n_joints else 6 * self.n_joints
            for i, (a, b) in enumerate(self._mlp_shapes(c_in)):
                params[f"{self.name}.c{j}.w{i}"] = rng.normal(size=(a, b)) * np.sqrt(2.0 / a)
                params[f"{self.name}.c{j}.b{i}"] = np.zeros(b)
        return params

    def apply(self, params, poses):
        params = _param_nodes(params)
        poses = poses if isinstance(poses, ad.DiffNode) else ad.leaf(poses)
        if poses.value.ndim != 2 or poses.value.shape[1] != 6 * self.n_joints:
            raise ShapeError(
                f"pose critic expects (N, {6 * self.n_joints}), got {poses.value.shape}")
        scores = []
        for j in range(self.n_joints + 1):
            if j < self.n_joints:
                x = ad.take_slice(poses, (slice(None), slice(6 * j, 6 * j + 6)))
            else:
                x = poses
            n_layers = len(self._mlp_shapes(x.value.shape[1]))
            for i in range(n_layers):
                x = ad.add(ad.matmul(x, params[f"{self.name}.c{j}.w{i}"]),
                           params[f"{self.name}.c{j}.b{i}"])
                if i < n_layers - 1:
                    x = ad.leaky_relu(x, self.config.leaky_slope)
            scores.append(x)
        return ad.concat(scores, axis=1)


class MotionCritic:
    """Patch-wise temporal critic over source-domain motion windows.

    Strided skeletal convolutions shrink time; the last layer maps each node
    to one channel and node scores are averaged, giving one unbounded score
    per temporal patch: (B, T') with T' = ceil(T / stride^layers).
    """

    def __init__(self, name, topology, config):
        self.name = name
        self.topology = topology
        self.config = config
        c = config.motion_channels
        self.convs = []
        channels = topology.channels
        for i in range(config.motion_layers):
            self.convs.append(SkeletalConv(
                f"{name}.conv{i}", topology, channels, c,
                d=config.neighborhood, kernel=config.motion_kernel,
                stride=config.motion_stride, slope=config.leaky_slope))
            channels = (c,) * topology.n_nodes
        self.head = SkeletalConv(
            f"{name}.head", topology, channels, 1,
            d=config.neighborhood, kernel=config.motion_kernel,
            stride=1, slope=None)

    def init(self, rng):
        params = {}
        for layer in self.convs + [self.head]:
            params.update(layer.init(rng))
        return params

    def n_patches(self, t):
        for _ in range(self.config.motion_layers):
            t = ad.conv1d_output_length(t, self.config.motion_kernel,
                                        self.config.motion_stride, "same")
        return t

    def apply(self, params, arr):
        params = _param_nodes(params)
        feats = motion_to_features(arr, self.topology)
        for conv in self.convs:
            feats = conv.apply(params, feats)
        feats = self.head.apply(params, feats)
        stacked = ad.concat(feats, axis=1)  # (B, n_nodes, T')
        return ad.mean(stacked, axis=1)  # (B, T')


def patch_receptive_field(config):
    """Input frames covered by one motion-critic patch score."""
    rf, jump = 1, 1
    for _ in range(config.motion_layers):
        rf += (config.motion_kernel - 1) * jump
        jump *= config.motion_stride
    rf += (config.motion_kernel - 1) * jump  # head layer, stride 1
    # skeletal convs with d>0 mix nodes but not time, so only kernels count
    return rf
