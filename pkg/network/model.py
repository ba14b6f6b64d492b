import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from app.core.errors import ShapeError, StaleCacheError
from network.heads import LogitHead, make_head
from network.layers import DenseLayer, Parameter, relu, relu_backward
from schemas.data_schemas import HeadKind, NetworkSpec

logger = logging.getLogger(__name__)


class Network:
    """ReLU trunk -> feature layer (x̂) -> logit head.

    ``version`` is bumped by every optimizer step so caches from an earlier
    forward pass can be detected.
    """

    def __init__(self, hidden: list[DenseLayer], feature_layer: DenseLayer, head: LogitHead):
        dims = [layer.d_out for layer in hidden]
        for prev, layer in zip([None, *hidden], [*hidden, feature_layer]):
            if prev is not None and prev.d_out != layer.d_in:
                raise ShapeError(f"layer dims do not chain: {prev.d_out} -> {layer.d_in}")
        if feature_layer.d_out != head.feature_dim:
            raise ShapeError(f"feature layer emits {feature_layer.d_out} dims, head expects {head.feature_dim}")
        self.hidden = hidden
        self.feature_layer = feature_layer
        self.head = head
        self.version = 0
        logger.debug(f"Network {self.input_dim} -> {dims} -> {self.feature_dim} -> {head.kind.value}")

    @property
    def input_dim(self) -> int:
        return (self.hidden[0] if self.hidden else self.feature_layer).d_in

    @property
    def feature_dim(self) -> int:
        return self.feature_layer.d_out

    @property
    def num_classes(self) -> int:
        return self.head.num_classes

    def parameters(self) -> list[Parameter]:
        params = [p for layer in self.hidden for p in layer.parameters()]
        params += self.feature_layer.parameters()
        params += self.head.parameters()
        return params

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


@dataclass
class ForwardCache:
    net_id: int
    version: int
    inputs: list[np.ndarray] = field(default_factory=list)
    pre_activations: list[np.ndarray] = field(default_factory=list)
    features: np.ndarray | None = None


class ForwardResult(NamedTuple):
    features: np.ndarray
    logits: np.ndarray
    cache: ForwardCache


def build_network(input_dim: int, num_classes: int, head_kind: HeadKind, spec: NetworkSpec,
                  rho: float, seed: int) -> Network:
    rng = np.random.default_rng(seed)
    feature_dim = spec.feature_dim if spec.feature_dim is not None else num_classes - 1
    hidden = []
    d_in = input_dim
    for i, width in enumerate(spec.hidden_dims):
        hidden.append(DenseLayer(d_in, width, rng, name=f"hidden{i}"))
        d_in = width
    feature_layer = DenseLayer(d_in, feature_dim, rng, name="features")
    head = make_head(head_kind, feature_dim, num_classes, rho, rng)
    return Network(hidden, feature_layer, head)


def forward(net: Network, batch: np.ndarray) -> ForwardResult:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ShapeError(f"batch must have shape (N, {net.input_dim}), got {x.shape}")
    cache = ForwardCache(net_id=id(net), version=net.version)
    for layer in net.hidden:
        cache.inputs.append(x)
        z = layer.forward(x)
        cache.pre_activations.append(z)
        x = relu(z)
    cache.inputs.append(x)
    z = net.feature_layer.forward(x)
    cache.pre_activations.append(z)
    features = relu(z) if net.head.rectified_input else z
    cache.features = features
    logits = net.head.forward(features)
    return ForwardResult(features, logits, cache)


def backward(net: Network, cache: ForwardCache, grad_logits: np.ndarray) -> None:
    """Accumulates gradients into every learnable parameter of ``net``."""
    if cache.net_id != id(net) or cache.version != net.version or cache.features is None:
        raise StaleCacheError("forward cache does not belong to the current network state")
    grad_logits = np.asarray(grad_logits, dtype=np.float64)
    expected = (cache.features.shape[0], net.num_classes)
    if grad_logits.shape != expected:
        raise ShapeError(f"grad_logits must have shape {expected}, got {grad_logits.shape}")

    grad = net.head.backward(cache.features, grad_logits)
    if net.head.rectified_input:
        grad = relu_backward(cache.pre_activations[-1], grad)
    grad = net.feature_layer.backward(cache.inputs[-1], grad)
    for i in range(len(net.hidden) - 1, -1, -1):
        grad = relu_backward(cache.pre_activations[i], grad)
        grad = net.hidden[i].backward(cache.inputs[i], grad)


def predict(net: Network, batch: np.ndarray) -> np.ndarray:
    return np.argmax(forward(net, batch).logits, axis=1)
