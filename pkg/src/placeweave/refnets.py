"""Seeded reference networks matched on size and average degree.

Two baselines: a G(n, p) random graph whose degrees concentrate around a
Poisson law (homogeneous visitation), and a Barabasi-Albert preferential
attachment graph whose degree tail follows a power law (heterogeneous
visitation). Both are simple, unit-weight graphs generated from a named
64-bit RNG (numpy PCG64) so runs are bit-reproducible per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import PlaceNetwork

RNG_ALGORITHM = "numpy-pcg64"

REFNET_KINDS = ("random", "scale_free")


@dataclass(frozen=True)
class RefNetSpec:
    kind: str
    n: int
    target_average_degree: float
    seed: int

    def validate(self) -> None:
        if self.kind not in REFNET_KINDS:
            raise ValueError(f"kind must be one of {REFNET_KINDS}, got {self.kind!r}")
        if self.n < 2:
            raise ValueError(f"need at least 2 nodes, got {self.n}")
        if self.target_average_degree <= 0:
            raise ValueError(
                f"target average degree must be positive, got {self.target_average_degree}"
            )
        # G(n, p) needs p <= 1; attachment instead caps edges-per-node below n.
        if self.kind == "random" and self.target_average_degree > self.n - 1:
            raise ValueError(
                f"target average degree must lie in (0, {self.n - 1}] for a "
                f"random network, got {self.target_average_degree}"
            )


def _node_names(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"v{i:0{width}d}" for i in range(n)]


def gen_random_network(spec: RefNetSpec) -> PlaceNetwork:
    """Erdos-Renyi G(n, p) with p = target_average_degree / (n - 1)."""
    spec.validate()
    if spec.kind != "random":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'random'")
    n = spec.n
    p = spec.target_average_degree / (n - 1)
    names = _node_names(n)
    net = PlaceNetwork(nodes=names, mode="reference")
    net.label = f"random-n{n}-seed{spec.seed}"
    rng = np.random.default_rng(spec.seed)
    if p >= 1.0:
        for i in range(n):
            for j in range(i + 1, n):
                net.add_edge(names[i], names[j])
        return net
    # Batagelj-Brandes skip sampling: geometric jumps through the pair order.
    log_q = math.log1p(-p)
    v, w = 1, -1
    while v < n:
        r = rng.random()
        w = w + 1 + int(math.log1p(-r) / log_q)
        while w >= v and v < n:
            w -= v
            v += 1
        if v < n:
            net.add_edge(names[w], names[v])
    return net


def gen_scale_free_network(spec: RefNetSpec) -> PlaceNetwork:
    """Barabasi-Albert graph with m = round(target_average_degree / 2).

    The seed graph is a complete graph on the first m nodes; each arriving
    node attaches to m distinct existing nodes drawn proportionally to
    degree, giving exactly C(m, 2) + (n - m) * m edges.
    """
    spec.validate()
    if spec.kind != "scale_free":
        raise ValueError(f"spec kind is {spec.kind!r}, expected 'scale_free'")
    m = round(spec.target_average_degree / 2)
    if m < 1:
        raise ValueError(
            f"target average degree {spec.target_average_degree} rounds to m=0 edges per node"
        )
    n = spec.n
    if n <= m:
        raise ValueError(f"need n > m, got n={n}, m={m}")
    names = _node_names(n)
    net = PlaceNetwork(nodes=names, mode="reference")
    net.label = f"scale-free-n{n}-m{m}-seed{spec.seed}"
    rng = np.random.default_rng(spec.seed)
    repeated: list[int] = []
    for i in range(m):
        for j in range(i + 1, m):
            net.add_edge(names[i], names[j])
        repeated.extend([i] * (m - 1))
    if m == 1:
        repeated = [0]  # lone seed node has degree 0; give it unit mass
    for src in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(repeated[int(rng.integers(len(repeated)))])
        for tgt in sorted(targets):
            net.add_edge(names[tgt], names[src])
            repeated.append(tgt)
        repeated.extend([src] * m)
    return net


def generate(spec: RefNetSpec) -> PlaceNetwork:
    spec.validate()
    if spec.kind == "random":
        return gen_random_network(spec)
    return gen_scale_free_network(spec)
