"""Topology, link and path records plus the line-oriented topology file format.

File grammar::

    # comment
    node <id>
    link <a> <b> loss_db=<float> length_km=<float> tx_qubits=<int> rx_qubits=<int>

Links are directional: the transmitter buffer sits at ``a`` and the receiver
buffer at ``b``. Declare both directions to use a span either way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Iterable, Optional, Sequence, Union


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class NodeSpec:
    id: str


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    loss_db: float
    length_km: float = 20.0
    tx_qubits: int = 25
    rx_qubits: int = 25
    # optional class label ("S", "G", ...) used for calibration lookup
    cls: Optional[str] = field(default=None, compare=False)

    @property
    def name(self) -> str:
        return f"{self.a}-{self.b}"

    def problems(self) -> list[str]:
        out = []
        if self.a == self.b:
            out.append(f"link {self.name}: endpoints must differ")
        if not math.isfinite(self.loss_db) or self.loss_db < 0:
            out.append(f"link {self.name}: loss_db must be finite and >= 0")
        if not math.isfinite(self.length_km) or self.length_km <= 0:
            out.append(f"link {self.name}: length_km must be > 0")
        if self.tx_qubits < 1 or self.rx_qubits < 1:
            out.append(f"link {self.name}: qubit counts must be >= 1")
        return out


@dataclass(frozen=True)
class Topology:
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]

    @classmethod
    def build(cls, nodes: Iterable[str], links: Iterable[LinkSpec]) -> "Topology":
        return cls(tuple(NodeSpec(n) for n in nodes), tuple(links))

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def link(self, a: str, b: str) -> LinkSpec:
        for ln in self.links:
            if ln.a == a and ln.b == b:
                return ln
        raise KeyError(f"no link {a}-{b}")

    def adjacency(self) -> dict[str, list[LinkSpec]]:
        adj: dict[str, list[LinkSpec]] = {n.id: [] for n in self.nodes}
        for ln in self.links:
            adj.setdefault(ln.a, []).append(ln)
        for out in adj.values():
            out.sort(key=lambda ln: ln.b)
        return adj


@dataclass(frozen=True)
class Path:
    """An ordered chain of links from ``links[0].a`` to ``links[-1].b``."""

    links: tuple[LinkSpec, ...]

    def __post_init__(self):
        if not self.links:
            raise TopologyError("a path needs at least one link")
        nodes = [self.links[0].a]
        for prev, nxt in zip(self.links, self.links[1:]):
            if prev.b != nxt.a:
                raise TopologyError(f"links {prev.name} and {nxt.name} are not adjacent")
        nodes.extend(ln.b for ln in self.links)
        if len(set(nodes)) != len(nodes):
            raise TopologyError(f"path {'-'.join(nodes)} repeats a node")

    @property
    def nodes(self) -> list[str]:
        return [self.links[0].a] + [ln.b for ln in self.links]

    @property
    def src(self) -> str:
        return self.links[0].a

    @property
    def dst(self) -> str:
        return self.links[-1].b

    @property
    def hops(self) -> int:
        return len(self.links)

    def __str__(self) -> str:
        return "-".join(self.nodes)


def chain(losses: Sequence[float], *, length_km: float = 20.0, tx_qubits: int = 25,
          rx_qubits: int = 25, classes: Optional[Sequence[str]] = None) -> Path:
    """Linear path n0 -> n1 -> ... with one link per loss value."""
    links = []
    for i, loss in enumerate(losses):
        links.append(LinkSpec(f"n{i}", f"n{i + 1}", loss, length_km, tx_qubits, rx_qubits,
                              cls=None if classes is None else classes[i]))
    return Path(tuple(links))


def validate_topology(t: Topology) -> list[str]:
    """Every invariant violation in ``t``, as human-readable strings."""
    out = []
    seen_nodes = set()
    for n in t.nodes:
        if n.id in seen_nodes:
            out.append(f"duplicate node {n.id}")
        seen_nodes.add(n.id)
    seen_links = set()
    for ln in t.links:
        for end in (ln.a, ln.b):
            if end not in seen_nodes:
                out.append(f"link {ln.name} references unknown node {end}")
        if (ln.a, ln.b) in seen_links:
            out.append(f"duplicate link {ln.name}")
        seen_links.add((ln.a, ln.b))
        out.extend(ln.problems())
    return out


def enumerate_paths(t: Topology, src: str, dst: str, max_hops: int) -> list[Path]:
    """All simple directed paths src -> dst with at most ``max_hops`` links,
    ordered lexicographically by their node sequence."""
    ids = set(t.node_ids)
    for n in (src, dst):
        if n not in ids:
            raise TopologyError(f"unknown node {n}")
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    adj = t.adjacency()
    found: list[Path] = []

    def walk(node: str, visited: list[str], links: list[LinkSpec]):
        if node == dst and links:
            found.append(Path(tuple(links)))
            return
        if len(links) == max_hops:
            return
        for ln in adj.get(node, ()):
            if ln.b in visited:
                continue
            visited.append(ln.b)
            links.append(ln)
            walk(ln.b, visited, links)
            links.pop()
            visited.pop()

    if src != dst:
        walk(src, [src], [])
    found.sort(key=lambda p: p.nodes)
    return found


_LINK_KEYS = {"loss_db": float, "length_km": float, "tx_qubits": int, "rx_qubits": int,
              "class": str}


def parse_topology(text: str) -> Topology:
    nodes: list[str] = []
    links: list[LinkSpec] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] == "node" and len(words) == 2:
            nodes.append(words[1])
        elif words[0] == "link" and len(words) >= 3:
            kw = {}
            for item in words[3:]:
                key, sep, val = item.partition("=")
                if not sep or key not in _LINK_KEYS:
                    raise TopologyError(f"line {lineno}: unknown key {key!r}")
                try:
                    kw["cls" if key == "class" else key] = _LINK_KEYS[key](val)
                except ValueError:
                    raise TopologyError(f"line {lineno}: bad value for {key}: {val!r}") from None
            if "loss_db" not in kw:
                raise TopologyError(f"line {lineno}: link needs loss_db")
            links.append(LinkSpec(words[1], words[2], **kw))
        else:
            raise TopologyError(f"line {lineno}: cannot parse {raw.strip()!r}")
    return Topology.build(nodes, links)


def dump_topology(t: Topology) -> str:
    lines = [f"node {n.id}" for n in t.nodes]
    for ln in t.links:
        lines.append(f"link {ln.a} {ln.b} loss_db={ln.loss_db!r} length_km={ln.length_km!r} "
                     f"tx_qubits={ln.tx_qubits} rx_qubits={ln.rx_qubits}"
                     + (f" class={ln.cls}" if ln.cls else ""))
    return "\n".join(lines) + "\n"


def load_topology(path: Union[str, FilePath]) -> Topology:
    return parse_topology(FilePath(path).read_text(encoding="utf-8"))
