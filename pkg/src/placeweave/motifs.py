"""Classification and exact enumeration of 2- to 4-node motifs.

Connected graphs on at most four vertices are fully determined up to
isomorphism by (size, sorted degree sequence), which keeps classification
a table lookup. Enumeration uses ESU: every connected node-induced
k-subgraph is emitted exactly once, rooted at its minimum vertex via the
exclusive-neighborhood rule, so per-root work partitions cleanly across
threads.

Trajectory classification is the second counting mode: each device-day's
stay walk induces a small graph whose identity is (node set, edge set);
per class, visit flows equal covering device-days times the class edge
count by construction.
"""

from __future__ import annotations

import datetime as dt
import enum
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Mapping

from .errors import InvariantError
from .ingest import StaySequence
from .network import PlaceNetwork, csr_adjacency, edge_key


class MotifClass(enum.Enum):
    M2_1 = "M2_1"  # edge
    M3_1 = "M3_1"  # 3-chain
    M3_2 = "M3_2"  # triangle
    M4_1 = "M4_1"  # 4-clique
    M4_2 = "M4_2"  # chordal 4-cycle
    M4_3 = "M4_3"  # 4-cycle
    M4_4 = "M4_4"  # tailed triangle
    M4_5 = "M4_5"  # 4-chain
    M4_6 = "M4_6"  # 3-star
    OTHER = "OTHER"

    @property
    def size(self) -> int:
        return _CLASS_SIZE[self]

    @property
    def edge_count(self) -> int:
        return _CLASS_EDGES[self]

    def __str__(self) -> str:
        return self.value


_CLASS_SIZE = {
    MotifClass.M2_1: 2,
    MotifClass.M3_1: 3,
    MotifClass.M3_2: 3,
    MotifClass.M4_1: 4,
    MotifClass.M4_2: 4,
    MotifClass.M4_3: 4,
    MotifClass.M4_4: 4,
    MotifClass.M4_5: 4,
    MotifClass.M4_6: 4,
    MotifClass.OTHER: 0,
}

_CLASS_EDGES = {
    MotifClass.M2_1: 1,
    MotifClass.M3_1: 2,
    MotifClass.M3_2: 3,
    MotifClass.M4_1: 6,
    MotifClass.M4_2: 5,
    MotifClass.M4_3: 4,
    MotifClass.M4_4: 4,
    MotifClass.M4_5: 3,
    MotifClass.M4_6: 3,
    MotifClass.OTHER: 0,
}

# The nine classes in report order.
CLASS_ORDER: tuple[MotifClass, ...] = (
    MotifClass.M2_1,
    MotifClass.M3_1,
    MotifClass.M3_2,
    MotifClass.M4_1,
    MotifClass.M4_2,
    MotifClass.M4_3,
    MotifClass.M4_4,
    MotifClass.M4_5,
    MotifClass.M4_6,
)

# Fixed indices for count arrays shared with the compiled kernels.
CLASS_INDEX: dict[MotifClass, int] = {c: i for i, c in enumerate(CLASS_ORDER)}
CLASS_INDEX[MotifClass.OTHER] = len(CLASS_ORDER)
INDEX_CLASS: tuple[MotifClass, ...] = CLASS_ORDER + (MotifClass.OTHER,)

_DEGSEQ_CLASS: dict[tuple[int, tuple[int, ...]], MotifClass] = {
    (2, (1, 1)): MotifClass.M2_1,
    (3, (1, 1, 2)): MotifClass.M3_1,
    (3, (2, 2, 2)): MotifClass.M3_2,
    (4, (3, 3, 3, 3)): MotifClass.M4_1,
    (4, (2, 2, 3, 3)): MotifClass.M4_2,
    (4, (2, 2, 2, 2)): MotifClass.M4_3,
    (4, (1, 2, 2, 3)): MotifClass.M4_4,
    (4, (1, 1, 2, 2)): MotifClass.M4_5,
    (4, (1, 1, 1, 3)): MotifClass.M4_6,
}


def classify_graph(n: int, edges: Iterable[tuple]) -> MotifClass:
    """Classify a simple undirected graph on n labeled vertices (2 <= n <= 4).

    Vertices are inferred from the edge set; unreferenced vertices count as
    isolated. Disconnected graphs map to OTHER.
    """
    if n not in (2, 3, 4):
        raise ValueError(f"motif size must be 2, 3 or 4, got {n}")
    adj: dict = {}
    for a, b in edges:
        if a == b:
            raise ValueError(f"self-loop at {a!r}: motif graphs are simple")
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    if len(adj) > n:
        raise ValueError(f"edge set references {len(adj)} vertices but n={n}")
    if len(adj) < n:
        return MotifClass.OTHER  # isolated vertex present
    if not _connected(adj):
        return MotifClass.OTHER
    degseq = tuple(sorted(len(nbrs) for nbrs in adj.values()))
    return _DEGSEQ_CLASS[(n, degseq)]


def _connected(adj: dict) -> bool:
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        for u in adj[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(adj)


@dataclass(frozen=True)
class MotifInstance:
    """One occurrence: a vertex set with its (induced or traversed) edges."""

    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]
    motif_class: MotifClass

    def sorted_edges(self) -> list[tuple[str, str]]:
        return sorted(self.edges)


def instance_from_edges(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> MotifInstance:
    nodes = tuple(sorted(set(nodes)))
    edge_set = frozenset(edge_key(a, b) for a, b in edges)
    if 2 <= len(nodes) <= 4:
        cls = classify_graph(len(nodes), edge_set)
    else:
        cls = MotifClass.OTHER
    return MotifInstance(nodes, edge_set, cls)


def trajectory_instance(seq: StaySequence) -> MotifInstance:
    """Graph traced by one device-day: distinct stays, deduplicated steps."""
    return instance_from_edges(seq.stays, zip(seq.stays, seq.stays[1:]))


# -- enumeration -------------------------------------------------------------


def iter_connected_subsets(adj: Mapping, k: int) -> Iterator[tuple]:
    """Yield every connected k-subset of the graph exactly once (ESU).

    Nodes must be mutually comparable; subsets come out rooted at their
    minimum vertex, in deterministic order.
    """
    if k < 1:
        raise ValueError("k must be positive")
    for v in sorted(adj):
        if k == 1:
            yield (v,)
            continue
        ext = sorted(u for u in adj[v] if u > v)
        yield from _esu_extend(adj, (v,), ext, v, k)


def _esu_extend(adj: Mapping, sub: tuple, ext: list, root, k: int) -> Iterator[tuple]:
    if len(sub) + 1 == k:
        for w in ext:
            yield sub + (w,)
        return
    hood = set(sub)
    for u in sub:
        hood.update(adj[u])
    for i, w in enumerate(ext):
        grown = ext[i + 1 :] + sorted(
            u for u in adj[w] if u > root and u not in hood
        )
        yield from _esu_extend(adj, sub + (w,), grown, root, k)


def iter_induced_instances(net: PlaceNetwork, k: int) -> Iterator[MotifInstance]:
    """Stream the node-induced connected k-subgraphs of a network."""
    if k not in (2, 3, 4):
        raise ValueError(f"k must be 2, 3 or 4, got {k}")
    adj = net.adjacency
    for sub in iter_connected_subsets(adj, k):
        edges = [
            (a, b)
            for i, a in enumerate(sub)
            for b in sub[i + 1 :]
            if b in adj[a]
        ]
        yield instance_from_edges(sub, edges)


def enumerate_induced(
    net: PlaceNetwork, k: int, threads: int = 1, engine: str = "auto"
) -> dict[MotifClass, int]:
    """Count connected node-induced k-subgraphs per motif class.

    engine "numba" uses the compiled per-root kernels (parallel over
    threads, thread-count-independent integer counts); "python" walks the
    pure ESU generator; "auto" prefers the compiled path when available.
    """
    if k not in (2, 3, 4):
        raise ValueError(f"k must be 2, 3 or 4, got {k}")
    if engine not in ("auto", "numba", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    if k == 2:
        return {MotifClass.M2_1: net.n_edges} if net.n_edges else {}
    if engine == "auto":
        from . import _fastcount

        engine = "numba" if _fastcount.HAVE_NUMBA else "python"
    if engine == "python":
        counts = Counter(inst.motif_class for inst in iter_induced_instances(net, k))
        return dict(counts)
    from . import _fastcount

    _, indptr, indices = csr_adjacency(net)
    raw = _fastcount.census_counts(indptr, indices, k, threads=threads)
    result = {INDEX_CLASS[i]: int(c) for i, c in enumerate(raw) if c}
    if result.pop(MotifClass.OTHER, 0):
        raise InvariantError("enumeration emitted a disconnected subset")
    return result


def enumeration_census(
    net: PlaceNetwork, ks: tuple[int, ...] = (2, 3, 4), threads: int = 1
) -> "MotifCensus":
    """Whole-network census over the requested subgraph sizes."""
    classes = {c: ClassStats() for c in CLASS_ORDER}
    total = 0
    for k in ks:
        for cls, count in enumerate_induced(net, k, threads=threads).items():
            classes[cls].motif_count += count
            total += count
    return MotifCensus(
        classes=classes,
        total_motifs=total,
        total_devices=None,
        total_flows=None,
        mode="enumerate",
        device_unit=None,
    )


# -- trajectory census -------------------------------------------------------


@dataclass
class ClassStats:
    motif_count: int = 0
    device_count: int | None = None
    flow_count: int | None = None
    percentage: float | None = None
    avg_distance_km: float | None = None


@dataclass
class MotifCensus:
    """Per-class aggregates plus the global totals they are measured against."""

    classes: dict[MotifClass, ClassStats]
    total_motifs: int
    total_devices: int | None
    total_flows: int | None
    mode: str
    device_unit: str | None = "device-days"


@dataclass
class InstanceRecord:
    device_count: int = 0
    weekday_count: int = 0
    weekend_count: int = 0


def is_weekend(day: dt.date) -> bool:
    return day.weekday() >= 5


@dataclass
class TrajectoryCensus:
    """Instance-level accumulation over device-days.

    instances holds every distinct (node set, edge set) seen, including
    walks over more than four POIs (class OTHER); those contribute to the
    global totals only. total_flows counts every step of every walk,
    repeats included, matching the total weight of the consecutive-mode
    network built from the same sequences.
    """

    instances: dict[MotifInstance, InstanceRecord] = field(default_factory=dict)
    total_device_days: int = 0
    total_flows: int = 0

    @property
    def total_instances(self) -> int:
        return len(self.instances)

    def add_sequence(self, seq: StaySequence) -> MotifInstance:
        inst = trajectory_instance(seq)
        rec = self.instances.get(inst)
        if rec is None:
            rec = self.instances[inst] = InstanceRecord()
        rec.device_count += 1
        if is_weekend(seq.local_date):
            rec.weekend_count += 1
        else:
            rec.weekday_count += 1
        self.total_device_days += 1
        self.total_flows += len(seq.stays) - 1
        return inst

    @classmethod
    def merge(cls, parts: Iterable["TrajectoryCensus"]) -> "TrajectoryCensus":
        merged = cls()
        for part in parts:
            merged.total_device_days += part.total_device_days
            merged.total_flows += part.total_flows
            for inst, rec in part.instances.items():
                tgt = merged.instances.get(inst)
                if tgt is None:
                    tgt = merged.instances[inst] = InstanceRecord()
                tgt.device_count += rec.device_count
                tgt.weekday_count += rec.weekday_count
                tgt.weekend_count += rec.weekend_count
        return merged

    def census(self) -> MotifCensus:
        classes = {c: ClassStats(motif_count=0, device_count=0, flow_count=0) for c in CLASS_ORDER}
        for inst, rec in self.instances.items():
            cls = inst.motif_class
            if cls is MotifClass.OTHER:
                continue
            stats = classes[cls]
            stats.motif_count += 1
            stats.device_count += rec.device_count
        for cls, stats in classes.items():
            stats.flow_count = stats.device_count * cls.edge_count
        return MotifCensus(
            classes=classes,
            total_motifs=self.total_instances,
            total_devices=self.total_device_days,
            total_flows=self.total_flows,
            mode="trajectory",
        )


def classify_trajectories(sequences: Iterable[StaySequence]) -> TrajectoryCensus:
    """Classify every device-day walk and accumulate the instance census."""
    result = TrajectoryCensus()
    for seq in sequences:
        result.add_sequence(seq)
    return result


def census_percentages(census: MotifCensus) -> MotifCensus:
    """Fill each class's share of the global motif count, in percent."""
    if census.total_motifs == 0:
        raise ValueError("census has no motifs; percentages undefined")
    classes = {
        cls: replace(stats, percentage=100.0 * stats.motif_count / census.total_motifs)
        for cls, stats in census.classes.items()
    }
    return replace(census, classes=classes)
