"""Max-flow front end.

The compiled kernels are used when the extension was built; setting
``PIPINGBOT_PURE=1`` forces the pure-Python ones.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from types import ModuleType

from . import _maxflow_py
from .network import FlowNetwork, from_fixed

_ext: ModuleType | None
try:
    from . import _maxflow_ext as _ext
except ImportError:  # extension not built
    _ext = None

BACKENDS: dict[str, ModuleType] = {"python": _maxflow_py}
if _ext is not None:
    BACKENDS["cython"] = _ext

if os.environ.get("PIPINGBOT_PURE", "") not in ("", "0") or _ext is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


class Algorithm(str, Enum):
    DINIC = "Dinic"
    EDMONDS_KARP = "EdmondsKarp"


_KERNELS = {Algorithm.DINIC: "dinic", Algorithm.EDMONDS_KARP: "edmonds_karp"}


@dataclass(frozen=True)
class FlowResult:
    value: int  # fixed point
    flows: dict[tuple[str, str], int]
    algorithm: Algorithm
    backend: str

    @property
    def m3_per_hour(self) -> float:
        return from_fixed(self.value)


def solve(n: int, s: int, t: int, tails, heads, caps, algorithm: Algorithm | str = Algorithm.DINIC,
          backend: str | None = None) -> tuple[int, list[int]]:
    """Run a kernel on integer arrays; returns (value, per-edge flows)."""
    algorithm = Algorithm(algorithm)
    module = BACKENDS[backend or BACKEND]
    return getattr(module, _KERNELS[algorithm])(n, s, t, list(tails), list(heads), list(caps))


def max_flow_result(net: FlowNetwork, algorithm: Algorithm | str = Algorithm.DINIC,
                    backend: str | None = None) -> FlowResult:
    algorithm = Algorithm(algorithm)
    n, s, t, tails, heads, caps = net.arrays()
    if not net.irrigated:
        value, flows = 0, [0] * len(caps)
    else:
        value, flows = solve(n, s, t, tails, heads, caps, algorithm, backend)
    assignment: dict[tuple[str, str], int] = {}
    for e, f in zip(net.edges, flows):
        key = (e.tail, e.head)
        assignment[key] = assignment.get(key, 0) + f
    return FlowResult(value, assignment, algorithm, backend or BACKEND)


def max_flow(net: FlowNetwork, algorithm: Algorithm | str = Algorithm.DINIC,
             backend: str | None = None) -> float:
    """Maximum s-t flow in m^3/h."""
    return max_flow_result(net, algorithm, backend).m3_per_hour
