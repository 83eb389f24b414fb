"""Flow network (G, c, s, t) built from a pipeline topology."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from ..plans import SPRINKLER_FLOW
from .topology import PipelineTopology

logger = logging.getLogger(__name__)

SOURCE = "s"
SINK = "t"
SCALE = 1000  # capacities are held in thousandths of m^3/h


def to_fixed(value: float) -> int:
    return int(round(value * SCALE))


def from_fixed(value: int) -> float:
    return value / SCALE


@dataclass(frozen=True)
class FlowEdge:
    tail: str
    head: str
    capacity: int  # fixed point; equals FlowNetwork.inf for unbounded edges
    infinite: bool = False


@dataclass
class FlowNetwork:
    reservoirs: list[str]
    junctions: list[str]
    consumers: list[str]
    irrigated: list[str]
    edges: list[FlowEdge]
    w: float
    inf: int
    warnings: list[str] = field(default_factory=list)
    strict: bool = False

    @property
    def vertices(self) -> list[str]:
        return [SOURCE, *self.reservoirs, *self.junctions, *self.consumers, *self.irrigated, SINK]

    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def arrays(self) -> tuple[int, int, int, list[int], list[int], list[int]]:
        """(n, s, t, tails, heads, caps) with vertices numbered as in ``vertices``."""
        idx = self.index()
        tails = [idx[e.tail] for e in self.edges]
        heads = [idx[e.head] for e in self.edges]
        caps = [e.capacity for e in self.edges]
        return len(idx), idx[SOURCE], idx[SINK], tails, heads, caps

    def edge(self, tail: str, head: str) -> Optional[FlowEdge]:
        return next((e for e in self.edges if e.tail == tail and e.head == head), None)


def _reachable(topo: PipelineTopology) -> set[str]:
    adj: dict[str, list[str]] = {}
    for p in topo.pipes:
        adj.setdefault(p.src, []).append(p.dst)
    seen = {r for r, _ in topo.reservoirs}
    stack = list(seen)
    while stack:
        v = stack.pop()
        for u in adj.get(v, ()):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def build_flow_network(topo: PipelineTopology, w: float = SPRINKLER_FLOW, *,
                       strict: bool = False) -> FlowNetwork:
    """Add the super source and sink to ``topo``.

    Pipes keep their capacity, ``s`` feeds every reservoir without bound, and
    each consumer with an irrigation controller drains into ``t`` at ``w``.

    ``strict`` applies the capacity cases by the literal vertex tests
    instead: unbounded on every edge leaving a reservoir, ``w`` on every edge
    entering a junction, pipe capacity otherwise.
    """
    if w < 0:
        raise ValueError("w must be non-negative")
    topo.validate()
    kinds = topo.node_kinds()
    w_fixed = to_fixed(w)
    raw: list[tuple[str, str, Optional[int]]] = []  # None marks an unbounded edge
    for p in topo.pipes:
        cap: Optional[int] = to_fixed(p.capacity)
        if strict:
            if kinds[p.src] == "reservoir":
                cap = None
            elif kinds[p.dst] == "junction":
                cap = w_fixed
        raw.append((p.src, p.dst, cap))
    for rid, _ in topo.reservoirs:
        raw.append((SOURCE, rid, None))
    for cid in topo.irrigated:
        raw.append((cid, SINK, w_fixed))
    inf = 1 + sum(c for _, _, c in raw if c is not None)
    edges = [FlowEdge(a, b, inf if c is None else c, c is None) for a, b, c in raw]
    net = FlowNetwork(
        reservoirs=[r for r, _ in topo.reservoirs],
        junctions=list(topo.junctions),
        consumers=[c for c, irrigated in topo.consumers if not irrigated],
        irrigated=topo.irrigated,
        edges=edges, w=w, inf=inf, strict=strict,
    )
    reach = _reachable(topo)
    for cid in net.irrigated:
        if cid not in reach:
            msg = f"irrigated consumer {cid!r} is not reachable from any reservoir"
            logger.warning(msg)
            net.warnings.append(msg)
    return net
