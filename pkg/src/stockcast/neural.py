"""Two-layer gated LSTM with dense head: forward, BPTT backward, checkpoints.

Gates follow the standard formulation: i, f, o = sigmoid(pre), g = tanh(pre),
c' = f*c + i*g, h' = o*tanh(c'). Layer 1 emits its full hidden sequence,
inverted dropout scales it at train time, layer 2's final hidden state feeds
a single linear neuron (a sigmoid head is available behind a config flag).
All arithmetic is float64; gradient checks rely on that.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

GATES = ("i", "f", "g", "o")


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class NetworkConfig:
    window_size: int = 60
    n_features: int = 2
    layer_sizes: tuple[int, ...] = (64, 32)
    dropout_rate: float = 0.2
    seed: int = 0
    sigmoid_head: bool = False

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if any(s <= 0 for s in self.layer_sizes):
            raise ContractError("layer sizes must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ContractError("dropout rate must be in [0, 1)")
        if self.n_features <= 0 or self.window_size <= 0:
            raise ContractError("window size and feature count must be positive")


@dataclass
class LstmParams:
    """Per-gate weights of one layer: W_x (hidden x in), W_h (hidden x hidden),
    b (hidden)."""

    W_x: dict[str, np.ndarray]
    W_h: dict[str, np.ndarray]
    b: dict[str, np.ndarray]

    @property
    def hidden_size(self) -> int:
        return self.b["i"].shape[0]


@dataclass
class LstmState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> "LstmState":
        return cls(h=np.zeros(hidden_size), c=np.zeros(hidden_size))


@dataclass
class DenseHead:
    W: np.ndarray              # (hidden,)
    b: np.ndarray              # (1,)


@dataclass
class LstmNetwork:
    config: NetworkConfig
    layers: list[LstmParams]
    head: DenseHead

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        """Stable name -> tensor listing; the order fixes Adam/grad keying."""
        out = []
        for li, layer in enumerate(self.layers):
            for g in GATES:
                out.append((f"layer{li}.W_x.{g}", layer.W_x[g]))
                out.append((f"layer{li}.W_h.{g}", layer.W_h[g]))
                out.append((f"layer{li}.b.{g}", layer.b[g]))
        out.append(("head.W", self.head.W))
        out.append(("head.b", self.head.b))
        return out

    def get_parameter(self, name: str) -> np.ndarray:
        for n, p in self.parameters():
            if n == name:
                return p
        raise KeyError(name)


def init_params(config: NetworkConfig) -> LstmNetwork:
    """Glorot-uniform weights, zero biases except forget bias = 1. Deterministic
    for a given config seed."""
    rng = np.random.default_rng(config.seed)

    def glorot(fan_in: int, fan_out: int, shape) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    layers = []
    in_size = config.n_features
    for hidden in config.layer_sizes:
        W_x = {g: glorot(in_size, hidden, (hidden, in_size)) for g in GATES}
        W_h = {g: glorot(hidden, hidden, (hidden, hidden)) for g in GATES}
        b = {g: (np.ones(hidden) if g == "f" else np.zeros(hidden)) for g in GATES}
        layers.append(LstmParams(W_x=W_x, W_h=W_h, b=b))
        in_size = hidden

    last = config.layer_sizes[-1]
    head = DenseHead(W=glorot(last, 1, (last,)), b=np.zeros(1))
    return LstmNetwork(config=config, layers=layers, head=head)


def lstm_cell_forward(x: np.ndarray, state: LstmState,
                      params: LstmParams) -> tuple[LstmState, dict]:
    """One gated step. Returns the new state and the cache backward needs."""
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(state.h))
            and np.all(np.isfinite(state.c))):
        raise FloatingPointError("non-finite input to LSTM cell")
    pre = {g: params.W_x[g] @ x + params.W_h[g] @ state.h + params.b[g]
           for g in GATES}
    i = sigmoid(pre["i"])
    f = sigmoid(pre["f"])
    g = np.tanh(pre["g"])
    o = sigmoid(pre["o"])
    c_new = f * state.c + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    cache = {"x": x, "h_prev": state.h, "c_prev": state.c,
             "i": i, "f": f, "g": g, "o": o, "tanh_c": tanh_c}
    return LstmState(h=h_new, c=c_new), cache


def _layer_forward(params: LstmParams, inputs: np.ndarray) -> tuple[np.ndarray, list[dict]]:
    """Run one layer over a (T, in) sequence from a zero state; returns the
    (T, hidden) hidden sequence and per-step caches."""
    state = LstmState.zeros(params.hidden_size)
    hs, caches = [], []
    for t in range(inputs.shape[0]):
        state, cache = lstm_cell_forward(inputs[t], state, params)
        hs.append(state.h)
        caches.append(cache)
    return np.stack(hs), caches


def forward(network: LstmNetwork, window: np.ndarray, mode: str = "infer",
            rng: np.random.Generator | None = None) -> tuple[float, dict]:
    """Full pass over one (window_size, n_features) sample.

    In train mode an inverted-dropout mask scales the layer-1 hidden sequence;
    the mask is cached so backward can replay it.
    """
    cfg = network.config
    window = np.asarray(window, dtype=np.float64)
    if window.shape != (cfg.window_size, cfg.n_features):
        raise ContractError(
            f"window shape {window.shape} != ({cfg.window_size}, {cfg.n_features})")
    if mode not in ("train", "infer"):
        raise ContractError(f"unknown mode {mode!r}")

    caches: dict = {"mode": mode, "layers": [], "masks": []}
    seq = window
    for li, layer in enumerate(network.layers):
        hs, layer_caches = _layer_forward(layer, seq)
        caches["layers"].append(layer_caches)
        if li < len(network.layers) - 1:
            if mode == "train" and cfg.dropout_rate > 0.0:
                if rng is None:
                    raise ContractError("train mode with dropout needs an rng")
                keep = 1.0 - cfg.dropout_rate
                mask = (rng.random(hs.shape) < keep) / keep
            else:
                mask = np.ones_like(hs)
            caches["masks"].append(mask)
            seq = hs * mask
        else:
            seq = hs
    h_final = seq[-1]

    z_pre = float(network.head.W @ h_final + network.head.b[0])
    if cfg.sigmoid_head:
        z = float(sigmoid(np.array([z_pre]))[0])
    else:
        z = z_pre
    caches["h_final"] = h_final
    caches["z"] = z
    return z, caches


def _layer_backward(params: LstmParams, step_caches: list[dict],
                    dh_seq: np.ndarray) -> tuple[dict, np.ndarray]:
    """BPTT through one layer given per-step hidden-state gradients.

    Returns (grads for this layer keyed like parameters(), dInput sequence).
    """
    hidden = params.hidden_size
    T = len(step_caches)
    grads = {f"W_x.{g}": np.zeros_like(params.W_x[g]) for g in GATES}
    grads |= {f"W_h.{g}": np.zeros_like(params.W_h[g]) for g in GATES}
    grads |= {f"b.{g}": np.zeros_like(params.b[g]) for g in GATES}
    d_inputs = np.zeros((T, step_caches[0]["x"].shape[0]))

    dh_next = np.zeros(hidden)
    dc_next = np.zeros(hidden)
    for t in range(T - 1, -1, -1):
        cache = step_caches[t]
        i, f, g, o, tanh_c = (cache[k] for k in ("i", "f", "g", "o", "tanh_c"))
        dh = dh_seq[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tanh_c ** 2)

        d_pre = {
            "i": dc * cache["g"] * i * (1.0 - i),
            "f": dc * cache["c_prev"] * f * (1.0 - f),
            "g": dc * i * (1.0 - g ** 2),
            "o": dh * tanh_c * o * (1.0 - o),
        }
        dh_next = np.zeros(hidden)
        dx = np.zeros_like(d_inputs[t])
        for gate in GATES:
            grads[f"W_x.{gate}"] += np.outer(d_pre[gate], cache["x"])
            grads[f"W_h.{gate}"] += np.outer(d_pre[gate], cache["h_prev"])
            grads[f"b.{gate}"] += d_pre[gate]
            dh_next += params.W_h[gate].T @ d_pre[gate]
            dx += params.W_x[gate].T @ d_pre[gate]
        d_inputs[t] = dx
        dc_next = dc * f
    return grads, d_inputs


def backward(network: LstmNetwork, caches: dict, dZ: float) -> dict[str, np.ndarray]:
    """Exact gradients of a scalar loss wrt every parameter, given dLoss/dZ."""
    if "z" not in caches or "layers" not in caches:
        raise ContractError("caches do not come from a matching forward call")
    cfg = network.config
    h_final = caches["h_final"]

    if cfg.sigmoid_head:
        z = caches["z"]
        d_pre = dZ * z * (1.0 - z)
    else:
        d_pre = dZ
    grads: dict[str, np.ndarray] = {
        "head.W": d_pre * h_final,
        "head.b": np.array([d_pre]),
    }

    n_layers = len(network.layers)
    T = cfg.window_size
    # Gradient wrt the top layer's hidden sequence: only the last step feeds Z.
    dh_seq = np.zeros((T, network.layers[-1].hidden_size))
    dh_seq[-1] = d_pre * network.head.W

    for li in range(n_layers - 1, -1, -1):
        layer_grads, d_inputs = _layer_backward(network.layers[li],
                                                caches["layers"][li], dh_seq)
        for key, val in layer_grads.items():
            grads[f"layer{li}.{key}"] = val
        if li > 0:
            dh_seq = d_inputs * caches["masks"][li - 1]
    return grads


# -- checkpoint serialization -------------------------------------------------

def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "f64le": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["f64le"])
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(obj["shape"])


def checkpoint_to_json(network: LstmNetwork, optimizer_state: dict | None = None) -> str:
    """Serialize config, parameters, and optimizer state to deterministic JSON.

    Arrays are base64 of little-endian float64 bytes, so the round-trip is
    bit-exact on any host.
    """
    cfg = network.config
    doc = {
        "format": "stockcast-checkpoint-v1",
        "config": {
            "window_size": cfg.window_size,
            "n_features": cfg.n_features,
            "layer_sizes": list(cfg.layer_sizes),
            "dropout_rate": cfg.dropout_rate,
            "seed": cfg.seed,
            "sigmoid_head": cfg.sigmoid_head,
        },
        "parameters": {name: _encode_array(p) for name, p in network.parameters()},
    }
    if optimizer_state is not None:
        doc["optimizer"] = {
            "t": optimizer_state["t"],
            "m": {k: _encode_array(v) for k, v in sorted(optimizer_state["m"].items())},
            "v": {k: _encode_array(v) for k, v in sorted(optimizer_state["v"].items())},
        }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def checkpoint_from_json(text: str) -> tuple[LstmNetwork, dict | None]:
    doc = json.loads(text)
    if doc.get("format") != "stockcast-checkpoint-v1":
        raise ContractError("not a stockcast checkpoint")
    c = doc["config"]
    config = NetworkConfig(window_size=c["window_size"], n_features=c["n_features"],
                           layer_sizes=tuple(c["layer_sizes"]),
                           dropout_rate=c["dropout_rate"], seed=c["seed"],
                           sigmoid_head=c["sigmoid_head"])
    network = init_params(config)
    params = doc["parameters"]
    for name, tensor in network.parameters():
        tensor[...] = _decode_array(params[name])
    opt = None
    if "optimizer" in doc:
        opt = {"t": doc["optimizer"]["t"],
               "m": {k: _decode_array(v) for k, v in doc["optimizer"]["m"].items()},
               "v": {k: _decode_array(v) for k, v in doc["optimizer"]["v"].items()}}
    return network, opt
