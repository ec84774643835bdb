"""
Model Parameters

Named learnable tensors of the forecaster and typed views over them.

Naming scheme (block k):
    block{k}.tcn1.{p,q}_{kernel,bias}   gated temporal conv before the GCN
    block{k}.gcn.{w0,w1}                two-layer spatial embedding
    block{k}.tcn2.{p,q}_{kernel,bias}   gated temporal conv after the GCN
    block{k}.prelu                      PReLU slope of the temporal stream
    block{k}.ln.{gain,bias}             block-output layer norm
    block{k}.ln_tcn1 / ln_gcn           optional per-sub-layer norms
    encoder.{w_ih,w_hh,bias}            encoder LSTM
    bridge.{w_h,b_h,w_c,b_c}            encoder -> decoder state projection
    decoder.embed.{w,b}                 position embedding
    decoder.{w_ih,w_hh,bias}            decoder LSTM
    head.{w1,b1,w2,b2}                  output MLP

Weights are Xavier-uniform, biases zero, LSTM forget-gate bias
``forget_bias``, PReLU slope ``prelu_init``, layer-norm gain one.
"""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np

from src.core.errors import DimensionError
from src.core.tensor import Tensor
from src.models.config import ModelConfig


@dataclass(frozen=True)
class TemporalConvParams:
    """Two parallel causal convolutions of a gated unit: P ⊙ sigmoid(Q)."""
    p_kernel: Tensor
    p_bias: Tensor
    q_kernel: Tensor
    q_bias: Tensor


@dataclass(frozen=True)
class STBlockParams:
    tcn1: TemporalConvParams
    gcn_w0: Tensor
    gcn_w1: Tensor
    tcn2: TemporalConvParams
    prelu: Tensor
    ln_gain: Tensor
    ln_bias: Tensor
    sublayer_norms: Optional[Dict[str, Tuple[Tensor, Tensor]]] = None


@dataclass(frozen=True)
class LstmWeights:
    """Gate order along the 4H axis: input, forget, cell, output."""
    w_ih: Tensor
    w_hh: Tensor
    bias: Tensor

    @property
    def hidden(self) -> int:
        return self.w_hh.shape[1]


@dataclass(frozen=True)
class DecoderParams:
    bridge_w_h: Tensor
    bridge_b_h: Tensor
    bridge_w_c: Tensor
    bridge_b_c: Tensor
    embed_w: Tensor
    embed_b: Tensor
    lstm: LstmWeights
    head_w1: Tensor
    head_b1: Tensor
    head_w2: Tensor
    head_b2: Tensor


class ModelParams:
    """
    Ordered mapping of parameter name -> Tensor.

    Instances are immutable; optimisers return new instances.
    """

    def __init__(self, tensors: Dict[str, Tensor]):
        self._tensors: Dict[str, Tensor] = {}
        for name, tensor in tensors.items():
            if tensor.name != name:
                tensor = Tensor(tensor.data, requires_grad=tensor.requires_grad, name=name)
            self._tensors[name] = tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def names(self) -> List[str]:
        return list(self._tensors)

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self._tensors.items())

    def tensors(self) -> List[Tensor]:
        return list(self._tensors.values())

    @property
    def num_parameters(self) -> int:
        return sum(t.size for t in self._tensors.values())

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: t.data for name, t in self._tensors.items()}

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "ModelParams":
        return cls({name: Tensor(arr, requires_grad=True, name=name) for name, arr in arrays.items()})

    # Typed views

    def _temporal(self, prefix: str) -> TemporalConvParams:
        return TemporalConvParams(
            p_kernel=self[f"{prefix}.p_kernel"],
            p_bias=self[f"{prefix}.p_bias"],
            q_kernel=self[f"{prefix}.q_kernel"],
            q_bias=self[f"{prefix}.q_bias"],
        )

    def block(self, index: int) -> STBlockParams:
        prefix = f"block{index}"
        norms = None
        if f"{prefix}.ln_tcn1.gain" in self:
            norms = {
                key: (self[f"{prefix}.{key}.gain"], self[f"{prefix}.{key}.bias"])
                for key in ("ln_tcn1", "ln_gcn")
            }
        return STBlockParams(
            tcn1=self._temporal(f"{prefix}.tcn1"),
            gcn_w0=self[f"{prefix}.gcn.w0"],
            gcn_w1=self[f"{prefix}.gcn.w1"],
            tcn2=self._temporal(f"{prefix}.tcn2"),
            prelu=self[f"{prefix}.prelu"],
            ln_gain=self[f"{prefix}.ln.gain"],
            ln_bias=self[f"{prefix}.ln.bias"],
            sublayer_norms=norms,
        )

    def encoder(self) -> LstmWeights:
        return LstmWeights(self["encoder.w_ih"], self["encoder.w_hh"], self["encoder.bias"])

    def decoder(self) -> DecoderParams:
        return DecoderParams(
            bridge_w_h=self["bridge.w_h"],
            bridge_b_h=self["bridge.b_h"],
            bridge_w_c=self["bridge.w_c"],
            bridge_b_c=self["bridge.b_c"],
            embed_w=self["decoder.embed.w"],
            embed_b=self["decoder.embed.b"],
            lstm=LstmWeights(self["decoder.w_ih"], self["decoder.w_hh"], self["decoder.bias"]),
            head_w1=self["head.w1"],
            head_b1=self["head.b1"],
            head_w2=self["head.w2"],
            head_b2=self["head.b2"],
        )


def parameter_shapes(config: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Name -> shape of every parameter, in canonical order."""
    shapes: Dict[str, Tuple[int, ...]] = {}
    k = config.tcn_kernel
    c_in = config.in_channels
    for b in range(config.n_blocks):
        prefix = f"block{b}"
        for gate in ("p", "q"):
            shapes[f"{prefix}.tcn1.{gate}_kernel"] = (config.tcn_hidden, c_in, k)
            shapes[f"{prefix}.tcn1.{gate}_bias"] = (config.tcn_hidden,)
        shapes[f"{prefix}.gcn.w0"] = (config.tcn_hidden, config.gcn_hidden)
        shapes[f"{prefix}.gcn.w1"] = (config.gcn_hidden, config.gcn_out)
        for gate in ("p", "q"):
            shapes[f"{prefix}.tcn2.{gate}_kernel"] = (config.tcn_out, config.gcn_out, k)
            shapes[f"{prefix}.tcn2.{gate}_bias"] = (config.tcn_out,)
        shapes[f"{prefix}.prelu"] = (1,)
        shapes[f"{prefix}.ln.gain"] = (config.tcn_out,)
        shapes[f"{prefix}.ln.bias"] = (config.tcn_out,)
        if config.per_sublayer_norm:
            shapes[f"{prefix}.ln_tcn1.gain"] = (config.tcn_hidden,)
            shapes[f"{prefix}.ln_tcn1.bias"] = (config.tcn_hidden,)
            shapes[f"{prefix}.ln_gcn.gain"] = (config.gcn_out,)
            shapes[f"{prefix}.ln_gcn.bias"] = (config.gcn_out,)
        c_in = config.feature_dim

    h_enc, h_dec = config.encoder_hidden, config.decoder_hidden
    shapes["encoder.w_ih"] = (4 * h_enc, config.feature_dim)
    shapes["encoder.w_hh"] = (4 * h_enc, h_enc)
    shapes["encoder.bias"] = (4 * h_enc,)
    shapes["bridge.w_h"] = (h_dec, h_enc)
    shapes["bridge.b_h"] = (h_dec,)
    shapes["bridge.w_c"] = (h_dec, h_enc)
    shapes["bridge.b_c"] = (h_dec,)
    shapes["decoder.embed.w"] = (config.embedding_dim, 2)
    shapes["decoder.embed.b"] = (config.embedding_dim,)
    shapes["decoder.w_ih"] = (4 * h_dec, config.embedding_dim + config.feature_dim)
    shapes["decoder.w_hh"] = (4 * h_dec, h_dec)
    shapes["decoder.bias"] = (4 * h_dec,)
    shapes["head.w1"] = (config.head_hidden, h_dec)
    shapes["head.b1"] = (config.head_hidden,)
    shapes["head.w2"] = (2, config.head_hidden)
    shapes["head.b2"] = (2,)
    return shapes


def _fan(shape: Tuple[int, ...], name: str) -> Tuple[int, int]:
    if "kernel" in name:
        c_out, c_in, k = shape
        return c_in * k, c_out * k
    if ".gcn." in name:
        return shape[0], shape[1]
    return shape[1], shape[0]


def _is_bias(name: str) -> bool:
    leaf = name.rsplit(".", 1)[-1]
    return leaf in ("bias", "b", "b_h", "b_c", "b1", "b2") or leaf.endswith("_bias")


def init_params(config: ModelConfig, seed: Union[int, np.random.SeedSequence] = 0) -> ModelParams:
    """
    Fresh parameters drawn from ``numpy.random.default_rng(seed)``.

    Same config and seed give bit-identical parameters.
    """
    rng = np.random.default_rng(seed)
    arrays: Dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(config).items():
        leaf = name.rsplit(".", 1)[-1]
        if name.endswith(".prelu"):
            arr = np.full(shape, config.prelu_init)
        elif leaf == "gain":
            arr = np.ones(shape)
        elif _is_bias(name):
            arr = np.zeros(shape)
            if name in ("encoder.bias", "decoder.bias"):
                hidden = shape[0] // 4
                arr[hidden:2 * hidden] = config.forget_bias
        else:
            fan_in, fan_out = _fan(shape, name)
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            arr = rng.uniform(-limit, limit, size=shape)
        arrays[name] = arr
    return ModelParams.from_arrays(arrays)


def check_compatible(params: ModelParams, config: ModelConfig) -> None:
    """Raise DimensionError if parameter names/shapes do not match the config."""
    expected = parameter_shapes(config)
    if list(expected) != params.names():
        missing = sorted(set(expected) - set(params.names()))
        extra = sorted(set(params.names()) - set(expected))
        raise DimensionError(f"parameter set mismatch: missing {missing}, unexpected {extra}")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise DimensionError(f"parameter {name}: expected shape {shape}, got {params[name].shape}")
