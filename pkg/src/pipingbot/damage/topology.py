"""Urban pipeline topologies and their ``.topo`` text format.

A ``.topo`` file has four sections::

    [reservoirs]
    r1 3785            # id, storage (m^3)
    [junctions]
    j1
    [consumers]
    house{1..3} irrigated
    school
    [pipes]
    r1 j1 50           # from, to, capacity (m^3/h)
    j1 house{1..3} 5

``{a..b}`` in an id expands to ``a`` through ``b``. In a pipe line two ranges
of equal length are paired up; a single id is repeated against a range.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

SECTIONS = ("reservoirs", "junctions", "consumers", "pipes")
RESERVED = frozenset({"s", "t"})
_RANGE = re.compile(r"\{(\d+)\.\.(\d+)\}")
_TRUE = {"irrigated", "yes", "true", "1"}
_FALSE = {"plain", "no", "false", "0"}


class TopologyFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<topology>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class Pipe:
    src: str
    dst: str
    capacity: float


@dataclass
class PipelineTopology:
    reservoirs: list[tuple[str, float]] = field(default_factory=list)
    junctions: list[str] = field(default_factory=list)
    consumers: list[tuple[str, bool]] = field(default_factory=list)
    pipes: list[Pipe] = field(default_factory=list)

    def node_kinds(self) -> dict[str, str]:
        kinds: dict[str, str] = {}
        for rid, _ in self.reservoirs:
            kinds[rid] = "reservoir"
        for jid in self.junctions:
            kinds[jid] = "junction"
        for cid, irrigated in self.consumers:
            kinds[cid] = "irrigated" if irrigated else "consumer"
        return kinds

    @property
    def irrigated(self) -> list[str]:
        return [cid for cid, irrigated in self.consumers if irrigated]

    def validate(self) -> "PipelineTopology":
        seen: set[str] = set()
        ids = ([r for r, _ in self.reservoirs] + list(self.junctions) + [c for c, _ in self.consumers])
        for node in ids:
            if node in RESERVED:
                raise TopologyFormatError(f"node id {node!r} is reserved for the super source/sink")
            if node in seen:
                raise TopologyFormatError(f"duplicate node {node!r}")
            seen.add(node)
        for rid, storage in self.reservoirs:
            if storage <= 0:
                raise TopologyFormatError(f"reservoir {rid!r} needs a positive capacity")
        for p in self.pipes:
            for end in (p.src, p.dst):
                if end not in seen:
                    raise TopologyFormatError(f"pipe {p.src}->{p.dst} references unknown node {end!r}")
            if p.capacity <= 0:
                raise TopologyFormatError(f"pipe {p.src}->{p.dst} needs a positive capacity")
        return self

    def to_dict(self) -> dict:
        return {
            "reservoirs": [{"id": r, "capacity": c} for r, c in self.reservoirs],
            "junctions": list(self.junctions),
            "consumers": [{"id": c, "irrigated": i} for c, i in self.consumers],
            "pipes": [{"from": p.src, "to": p.dst, "capacity": p.capacity} for p in self.pipes],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "PipelineTopology":
        try:
            topo = cls(
                reservoirs=[(str(r["id"]), float(r["capacity"])) for r in doc.get("reservoirs", [])],
                junctions=[str(j) for j in doc.get("junctions", [])],
                consumers=[(str(c["id"]), bool(c.get("irrigated", False))) for c in doc.get("consumers", [])],
                pipes=[Pipe(str(p["from"]), str(p["to"]), float(p["capacity"])) for p in doc.get("pipes", [])],
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise TopologyFormatError(f"malformed topology document: {exc}") from exc
        return topo.validate()


def expand(token: str) -> list[str]:
    m = _RANGE.search(token)
    if m is None:
        return [token]
    lo, hi = int(m.group(1)), int(m.group(2))
    if hi < lo:
        raise ValueError(f"empty range in {token!r}")
    head, tail = token[:m.start()], token[m.end():]
    return [x for i in range(lo, hi + 1) for x in expand(f"{head}{i}{tail}")]


def _pair(a: Sequence[str], b: Sequence[str]) -> Iterable[tuple[str, str]]:
    if len(a) == len(b):
        return zip(a, b)
    if len(a) == 1:
        return ((a[0], y) for y in b)
    if len(b) == 1:
        return ((x, b[0]) for x in a)
    raise ValueError(f"cannot pair ranges of length {len(a)} and {len(b)}")


def parse_topology(text: str, source: str = "<topology>") -> PipelineTopology:
    topo = PipelineTopology()
    section = None
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise TopologyFormatError(f"unknown section [{section}]", lineno, source)
            continue
        if section is None:
            raise TopologyFormatError("entry before any section header", lineno, source)
        parts = line.split()
        try:
            if section == "reservoirs":
                if len(parts) != 2:
                    raise ValueError("expected: <id> <capacity>")
                for rid in expand(parts[0]):
                    topo.reservoirs.append((rid, float(parts[1])))
                    lines[rid] = lineno
            elif section == "junctions":
                for token in parts:
                    for jid in expand(token):
                        topo.junctions.append(jid)
                        lines[jid] = lineno
            elif section == "consumers":
                if len(parts) not in (1, 2):
                    raise ValueError("expected: <id> [irrigated|plain]")
                flag = parts[1].lower() if len(parts) == 2 else "plain"
                if flag not in _TRUE | _FALSE:
                    raise ValueError(f"unknown consumer flag {parts[1]!r}")
                for cid in expand(parts[0]):
                    topo.consumers.append((cid, flag in _TRUE))
                    lines[cid] = lineno
            else:
                if len(parts) != 3:
                    raise ValueError("expected: <from> <to> <capacity>")
                cap = float(parts[2])
                for a, b in _pair(expand(parts[0]), expand(parts[1])):
                    topo.pipes.append(Pipe(a, b, cap))
                    lines[f"{a}->{b}"] = lineno
        except ValueError as exc:
            raise TopologyFormatError(str(exc), lineno, source) from None
    if not any((topo.reservoirs, topo.junctions, topo.consumers, topo.pipes)):
        raise TopologyFormatError("empty topology", None, source)
    try:
        topo.validate()
    except TopologyFormatError as exc:
        # point at the offending line when we can tell which one it was
        msg = str(exc).split(": ", 1)[1]
        hit = next((n for key, n in lines.items() if repr(key) in msg or key in msg.split()), None)
        raise TopologyFormatError(msg, hit, source) from None
    return topo


def load_topology(path: str | Path) -> PipelineTopology:
    path = Path(path)
    return parse_topology(path.read_text(), str(path))
