"""GraphSAGE policy/value networks over the deferred-vertex subgraph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .graph import Graph, disjoint_union, normalized_adjacency

NUM_ACTIONS = 3  # exclude, include, defer


@dataclass
class PolicyOutput:
    """Per-vertex categorical log-probabilities over {exclude, include, defer}."""

    log_probs: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs.astype(np.float64))

    def __len__(self):
        return len(self.log_probs)


@dataclass(frozen=True)
class NetConfig:
    in_dim: int = 2
    hidden: int = 128
    layers: int = 4
    shared_trunk: bool = False


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(nn.DTYPE)


def trunk_prefixes(cfg: NetConfig) -> tuple[str, str]:
    return ("", "") if cfg.shared_trunk else ("policy.", "value.")


def init_params(cfg: NetConfig, seed: int) -> nn.ParamStore:
    """Glorot-uniform weights; no biases anywhere.

    Parameter names: ``{trunk}layer{n}.W1``/``W2`` with trunk ``policy.`` and
    ``value.`` (or no prefix for a shared trunk), plus ``policy_head.W`` and
    ``value_head.W``.
    """
    rng = np.random.default_rng(seed)
    store = nn.ParamStore()
    prefixes = sorted(set(trunk_prefixes(cfg)), key=lambda p: p != "policy.")
    for pre in prefixes:
        dims = [cfg.in_dim] + [cfg.hidden] * cfg.layers
        for n in range(1, cfg.layers + 1):
            store.add(f"{pre}layer{n}.W1", _glorot(rng, dims[n - 1], dims[n]))
            store.add(f"{pre}layer{n}.W2", _glorot(rng, dims[n - 1], dims[n]))
    store.add("policy_head.W", _glorot(rng, cfg.hidden, NUM_ACTIONS))
    store.add("value_head.W", _glorot(rng, cfg.hidden, 1))
    return store


def config_from_store(store: nn.ParamStore) -> NetConfig:
    shared = "layer1.W1" in store
    pre = "" if shared else "policy."
    layers = 0
    while f"{pre}layer{layers + 1}.W1" in store:
        layers += 1
    if layers == 0:
        raise ValueError("parameter store has no GraphSAGE layers")
    in_dim, hidden = store[f"{pre}layer1.W1"].value.shape
    return NetConfig(in_dim=in_dim, hidden=hidden, layers=layers, shared_trunk=shared)


def sage_layer(h, adj, w1, w2, activate: bool = True) -> nn.Var:
    """``ReLU(H W1 + Â H W2)``."""
    z = nn.add(nn.matmul(h, w1), nn.matmul(nn.spmm(adj, h), w2))
    return nn.relu(z) if activate else z


def _weights(store, tape, name):
    return tape.param(store, name) if tape is not None else store[name].value


def trunk(store: nn.ParamStore, tape, prefix: str, layers: int, adj, x) -> nn.Var:
    dtype = store[f"{prefix}layer1.W1"].value.dtype
    h = nn.Var(np.asarray(x, dtype=dtype))
    for n in range(1, layers + 1):
        h = sage_layer(h, adj, _weights(store, tape, f"{prefix}layer{n}.W1"),
                       _weights(store, tape, f"{prefix}layer{n}.W2"))
    return h


@dataclass
class Batch:
    """Several deferred subgraphs packed into one block-diagonal graph."""

    adj: object
    x: np.ndarray
    segments: np.ndarray
    offsets: np.ndarray

    @classmethod
    def pack(cls, graphs: list[Graph], feats: list[np.ndarray]) -> "Batch":
        union, offsets = disjoint_union(graphs)
        seg = np.repeat(np.arange(len(graphs)), np.diff(offsets))
        x = np.concatenate(feats, axis=0) if feats else np.zeros((0, 2), nn.DTYPE)
        return cls(normalized_adjacency(union), x.astype(nn.DTYPE), seg, offsets)

    @property
    def num_graphs(self) -> int:
        return len(self.offsets) - 1


def forward(store: nn.ParamStore, batch: Batch, tape: nn.Tape | None = None,
            cfg: NetConfig | None = None, want_policy=True, want_value=True):
    """Return ``(log_probs (rows, 3), values (graphs, 1))`` as Vars (None if not wanted)."""
    cfg = cfg or config_from_store(store)
    if batch.x.shape[1] != cfg.in_dim:
        raise nn.ShapeError(f"features have {batch.x.shape[1]} columns, network expects {cfg.in_dim}")
    ppre, vpre = trunk_prefixes(cfg)
    logp = val = None
    hp = trunk(store, tape, ppre, cfg.layers, batch.adj, batch.x) if want_policy or cfg.shared_trunk else None
    if want_policy:
        logits = nn.matmul(hp, _weights(store, tape, "policy_head.W"))
        logp = nn.row_log_softmax(logits)
    if want_value:
        hv = hp if cfg.shared_trunk else trunk(store, tape, vpre, cfg.layers, batch.adj, batch.x)
        pooled = nn.row_sum_pool(hv, batch.segments, batch.num_graphs)
        val = nn.matmul(pooled, _weights(store, tape, "value_head.W"))
    return logp, val


def policy_forward(store, sub: Graph, features) -> PolicyOutput:
    if sub.n == 0:
        raise ValueError("policy queried on an empty deferred subgraph")
    logp, _ = forward(store, Batch.pack([sub], [features]), want_value=False)
    return PolicyOutput(logp.value)


def value_forward(store, sub: Graph, features) -> float:
    _, val = forward(store, Batch.pack([sub], [features]), want_policy=False)
    return float(val.value[0, 0])


def sample_actions(out: PolicyOutput, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Independent categorical draw per row; returns actions and their log-probs."""
    p = out.probs
    c = np.cumsum(p, axis=1)
    c /= c[:, -1:]
    u = rng.random(len(p))
    a = (u >= c[:, 0]).astype(np.int8) + (u >= c[:, 1]).astype(np.int8)
    # zero-probability classes are never chosen even under rounding
    a = np.where(p[np.arange(len(p)), a] > 0, a, np.argmax(p, axis=1)).astype(np.int8)
    return a, out.log_probs[np.arange(len(p)), a].astype(np.float64)


def argmax_actions(out: PolicyOutput) -> tuple[np.ndarray, np.ndarray]:
    a = np.argmax(out.log_probs, axis=1).astype(np.int8)
    return a, out.log_probs[np.arange(len(a)), a].astype(np.float64)


def entropy(out: PolicyOutput) -> float:
    """Mean over vertices of ``-sum_c p_c log p_c``."""
    if len(out) == 0:
        return 0.0
    p = out.probs
    lp = np.where(p > 0, out.log_probs.astype(np.float64), 0.0)
    return float(np.mean(-(p * lp).sum(axis=1)))


class Agent:
    """Callable policy used by rollouts: batches observations through the networks."""

    def __init__(self, store: nn.ParamStore, need_value: bool = True):
        self.store = store
        self.cfg = config_from_store(store)
        self.need_value = need_value

    def __call__(self, observations):
        if not observations:
            return [], np.zeros(0)
        batch = Batch.pack([o.sub for o in observations], [o.features for o in observations])
        logp, val = forward(self.store, batch, cfg=self.cfg, want_value=self.need_value)
        outs = [PolicyOutput(logp.value[a:b]) for a, b in zip(batch.offsets[:-1], batch.offsets[1:])]
        values = val.value[:, 0].astype(np.float64) if val is not None else np.zeros(len(outs))
        return outs, values
