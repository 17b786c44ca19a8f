"""Random graph datasets ER/BA/HK/WS-[n_min, n_max] and named RNG sub-streams."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph, gen_ba, gen_er, gen_hk, gen_ws

MODELS = ("er", "ba", "hk", "ws")

_STREAMS = {"gen": 0, "train": 1, "eval": 2, "init": 3, "val": 4, "val-eval": 5, "weights": 6}


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named purpose derived from one master seed."""
    return np.random.default_rng([int(seed), _STREAMS[name]])


def stream_seed(seed: int, name: str) -> int:
    return int(stream(seed, name).integers(2**63))


@dataclass(frozen=True)
class GraphModel:
    model: str = "er"
    n_min: int = 15
    n_max: int = 20
    p: float = 0.15          # ER edge probability
    m_attach: int = 2        # BA / HK
    p_triad: float = 0.05    # HK
    k: int = 4               # WS
    p_rewire: float = 0.15   # WS

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown graph model {self.model!r}; expected one of {MODELS}")
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError(f"bad size range [{self.n_min}, {self.n_max}]")

    def make(self, n: int, seed: int) -> Graph:
        if self.model == "er":
            return gen_er(n, self.p, seed)
        if self.model == "ba":
            return gen_ba(n, self.m_attach, seed)
        if self.model == "hk":
            return gen_hk(n, self.m_attach, self.p_triad, seed)
        return gen_ws(n, self.k, self.p_rewire, seed)

    def draw_n(self, seed: int) -> int:
        return int(np.random.default_rng(seed).integers(self.n_min, self.n_max + 1))

    def from_seed(self, seed: int) -> Graph:
        """Graph fully determined by one seed: size drawn uniformly, then the model."""
        return self.make(self.draw_n(seed), seed)

    def sample(self, rng: np.random.Generator) -> Graph:
        return self.from_seed(int(rng.integers(2**63)))

    def params(self) -> dict:
        d = asdict(self)
        keep = {"er": ("p",), "ba": ("m_attach",), "hk": ("m_attach", "p_triad"),
                "ws": ("k", "p_rewire")}[self.model]
        return {k: d[k] for k in keep}
