"""Configuration graphs: trees of modules joined through typed connectors.

A :class:`ConfigGraph` stores every edge with both connection views
(``connect(a, b)`` and ``connect(b, a)``).  Structural problems such as cycles
or a connector used twice are *not* construction errors; they are reported by
:func:`validate_topology` so a scenario file can be diagnosed in one pass.
"""

from __future__ import annotations

import json

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple


class Face(str, Enum):
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    TOP = "TOP"
    BOTTOM = "BOTTOM"

    @property
    def short(self) -> str:
        return self.value[0]

    @classmethod
    def parse(cls, value) -> "Face":
        if isinstance(value, Face):
            return value
        text = str(value).strip().upper()
        for face in cls:
            if text in (face.value, face.short):
                return face
        raise ValueError(f"unknown face {value!r}")

    def opposite(self) -> "Face":
        return _OPPOSITE[self]


FACES = (Face.LEFT, Face.RIGHT, Face.TOP, Face.BOTTOM)
_OPPOSITE = {Face.LEFT: Face.RIGHT, Face.RIGHT: Face.LEFT, Face.TOP: Face.BOTTOM, Face.BOTTOM: Face.TOP}


class InvalidTopology(ValueError):
    """Raised when an operation needs a valid tree and did not get one."""


@dataclass(frozen=True)
class Connection:
    """One side's view of a connection.

    ``face`` belongs to the viewing module, ``face2con`` to its partner.  The
    orientation attribute only exists for BOTTOM-BOTTOM connections; it
    defaults to 0 there and must be absent everywhere else.
    """

    face: Face
    face2con: Face
    orientation: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "face", Face.parse(self.face))
        object.__setattr__(self, "face2con", Face.parse(self.face2con))
        bottom_pair = self.face is Face.BOTTOM and self.face2con is Face.BOTTOM
        if bottom_pair:
            if self.orientation is None:
                object.__setattr__(self, "orientation", 0)
            elif self.orientation not in (0, 1):
                raise ValueError(f"orientation must be 0 or 1, got {self.orientation!r}")
        elif self.orientation is not None:
            raise ValueError("orientation only applies to BOTTOM-BOTTOM connections")

    def reversed(self) -> "Connection":
        return Connection(self.face2con, self.face, self.orientation)

    def __str__(self) -> str:
        tail = "" if self.orientation is None else f"/{self.orientation}"
        return f"{self.face.short}-{self.face2con.short}{tail}"


class Edge(NamedTuple):
    a: int
    b: int
    conn: Connection  # seen from a

    @property
    def conn_b(self) -> Connection:
        return self.conn.reversed()

    def view_from(self, v: int) -> tuple[int, Connection]:
        """Return (partner, connection seen from ``v``)."""
        if v == self.a:
            return self.b, self.conn
        if v == self.b:
            return self.a, self.conn.reversed()
        raise KeyError(v)


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


class ConfigGraph:
    """Undirected configuration graph with connector-typed edges.

    ``edges`` items are ``(a, b, conn_ab)`` or ``(a, b, conn_ab, conn_ba)``;
    when both views are given they must agree.
    """

    __slots__ = ("vertices", "edges", "_adj", "_report")

    def __init__(self, vertices: Iterable[int], edges: Iterable = ()):
        self.vertices = frozenset(int(v) for v in vertices)
        built = []
        verts = self.vertices
        for item in edges:
            if len(item) == 3:
                a, b, conn = item
            else:
                a, b, conn = item[0], item[1], item[2]
                if item[3] is not None:
                    other = item[3]
                    if other != conn.reversed():
                        raise ValueError(
                            f"inconsistent connection views for ({a}, {b}): {conn} vs {other}"
                        )
            if a not in verts or b not in verts:
                raise ValueError(f"edge ({a}, {b}) references an unknown module")
            built.append(Edge(a, b, conn))
        self.edges = tuple(built)
        self._adj = None
        self._report = None

    # -- accessors -------------------------------------------------------

    @property
    def adjacency(self) -> dict[int, dict[Face, tuple[int, Face]]]:
        """``adj[v][face] = (neighbour, neighbour_face)``; first use of a face wins."""
        if self._adj is None:
            self._build()
        return self._adj

    def _build(self) -> None:
        # adjacency and validation share one pass over the edges
        adj: dict[int, dict[Face, tuple[int, Face]]] = {v: {} for v in self.vertices}
        problems: list[str] = []
        for a, b, conn in self.edges:
            fa, fb = conn.face, conn.face2con
            da, db = adj[a], adj[b]
            if a == b:
                problems.append(f"self loop on module {a}")
            if fa in da:
                problems.append(f"connector {fa.value} of module {a} used more than once")
            else:
                da[fa] = (b, fb)
            if fb in db or (a == b and fa == fb):
                problems.append(f"connector {fb.value} of module {b} used more than once")
            else:
                db[fb] = (a, fa)
            if conn.orientation == 1:
                problems.append(
                    f"excluded orientation: BOTTOM-BOTTOM orientation 1 between {a} and {b}"
                )
        self._adj = adj
        self._report = _finish_validation(self, adj, problems)

    def neighbors(self, v: int):
        return [nb for nb, _ in self.adjacency[v].values()]

    def connection(self, u: int, v: int) -> Connection:
        """``connect(u, v)`` seen from ``u``."""
        for e in self.edges:
            if e.a == u and e.b == v:
                return e.conn
            if e.a == v and e.b == u:
                return e.conn.reversed()
        raise KeyError((u, v))

    def edge_set(self) -> set[tuple[int, Face, int, Face]]:
        """Canonical face-labelled edges, smaller id first."""
        out = set()
        for e in self.edges:
            if e.a <= e.b:
                out.add((e.a, e.conn.face, e.b, e.conn.face2con))
            else:
                out.add((e.b, e.conn.face2con, e.a, e.conn.face))
        return out

    def relabel(self, mapping: Mapping[int, int]) -> "ConfigGraph":
        return ConfigGraph(
            (mapping[v] for v in self.vertices),
            ((mapping[e.a], mapping[e.b], e.conn) for e in self.edges),
        )

    @property
    def report(self) -> ValidationReport:
        if self._report is None:
            self._build()
        return self._report

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ConfigGraph)
            and self.vertices == other.vertices
            and self.edge_set() == other.edge_set()
        )

    def __hash__(self):
        return hash((self.vertices, frozenset(self.edge_set())))

    def __repr__(self) -> str:
        return f"ConfigGraph(|V|={len(self.vertices)}, |E|={len(self.edges)})"

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "modules": sorted(self.vertices),
            "connections": [
                {
                    "a": e.a,
                    "fa": e.conn.face.value,
                    "b": e.b,
                    "fb": e.conn.face2con.value,
                    "orientation": e.conn.orientation,
                }
                for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ConfigGraph":
        edges = []
        for c in data.get("connections", []):
            conn = Connection(Face.parse(c["fa"]), Face.parse(c["fb"]), c.get("orientation"))
            edges.append((int(c["a"]), int(c["b"]), conn))
        return cls(data["modules"], edges)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ConfigGraph":
        return cls.from_dict(json.loads(text))


def _finish_validation(graph: ConfigGraph, adj, problems: list[str]) -> ValidationReport:
    n = len(adj)
    if n == 0:
        return ValidationReport(False, ["empty configuration"])
    if len(graph.edges) != n - 1:
        problems.append(f"not a tree: {len(graph.edges)} edges for {n} modules")

    if problems:
        # adjacency may have dropped duplicate-face edges; walk the raw edge list
        nbrs: dict[int, list[int]] = {v: [] for v in adj}
        for a, b, _ in graph.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
    else:
        nbrs = None
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in (nbrs[v] if nbrs is not None else [u for u, _ in adj[v].values()]):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    if len(seen) != n:
        problems.append(f"not connected: {n - len(seen)} module(s) unreachable")
    return ValidationReport(not problems, problems)


def validate_topology(graph: ConfigGraph) -> ValidationReport:
    """Check the tree, single-use connector and excluded-orientation rules."""
    return graph.report


def _require_valid(graph: ConfigGraph) -> None:
    report = graph.report
    if not report.ok:
        raise InvalidTopology("; ".join(report.violations))


# ---------------------------------------------------------------------------
# Root search


@dataclass
class RootedInfo:
    root: int
    depth: dict[int, int]
    height: dict[int, int]
    cn: dict[tuple[int, Face], int]
    parent: dict[int, tuple[int, Face, Face] | None]  # v -> (parent, v's face, parent's face)

    @property
    def graph_depth(self) -> int:
        return max(self.depth.values())

    def children(self, v: int) -> list[int]:
        return sorted(u for u, p in self.parent.items() if p is not None and p[0] == v)


def _orient(adj, v0):
    """BFS from v0: order and parent links (parent, face on child, face on parent)."""
    parent = {v0: None}
    order = [v0]
    for v in order:  # grows while iterating
        for face, (u, uface) in adj[v].items():
            if u not in parent:
                parent[u] = (v, uface, face)
                order.append(u)
    return order, parent


def _connector_counts(graph: ConfigGraph, v0: int):
    """CN^v(c) for every module and connector, seeding the rooting at ``v0``.

    Bottom-up over height buckets: a parent's count towards a child is the
    child's subtree size, the child's count back towards its parent is the
    remainder ``|V| - size``.  Returns ``cn[v][face]`` (absent faces: zero)
    and the heights of the seed rooting.
    """
    adj = graph.adjacency
    n = len(adj)
    order, parent = _orient(adj, v0)
    size = dict.fromkeys(order, 1)
    height = dict.fromkeys(order, 0)
    for v in reversed(order):
        p = parent[v]
        if p is not None:
            u = p[0]
            size[u] += size[v]
            if height[v] >= height[u]:
                height[u] = height[v] + 1

    top = height[v0]
    buckets: list[list[int]] = [[] for _ in range(top + 1)]
    for v in order:
        buckets[height[v]].append(v)

    cn: dict[int, dict[Face, int]] = {v: {} for v in order}
    for h in range(1, top + 1):
        for v in buckets[h]:
            cv = cn[v]
            for face, (child, cface) in adj[v].items():
                pc = parent[child]
                if pc is None or pc[0] != v:
                    continue
                cv[face] = size[child]
                cn[child][cface] = n - size[child]
    return cn, height


def root_candidates(graph: ConfigGraph, steps: list | None = None) -> list[int]:
    """All modules whose every connector subtree holds at most half the modules.

    Single bottom-up pass from a seed module: each module's largest connector
    count is either its biggest child subtree or the remainder towards the
    seed.  Pass a list as ``steps`` to collect the number of updates done.
    """
    if graph._report is None or not graph._report.ok:
        _require_valid(graph)
    adj = graph._adj
    n = len(adj)
    v0 = min(adj)
    parent = {v0: v0}
    order = [v0]
    for v in order:
        for u, _ in adj[v].values():
            if u not in parent:
                parent[u] = v
                order.append(u)
    size = dict.fromkeys(order, 1)
    largest = dict.fromkeys(order, 0)
    for i in range(n - 1, 0, -1):
        v = order[i]
        p = parent[v]
        s = size[v]
        size[p] += s
        if s > largest[p]:
            largest[p] = s
    if steps is not None:
        # BFS visits + adjacency scans + upward updates + final checks
        steps.append(n + 2 * (n - 1) + (n - 1) + n)
    half = n / 2.0
    out = [v for v in order if largest[v] <= half and n - size[v] <= half]
    out.sort()
    return out


def find_root(graph: ConfigGraph, steps: list | None = None) -> int:
    """Root module of a valid configuration (smallest id when two qualify)."""
    return root_candidates(graph, steps)[0]


def tie_break_roots(graph: ConfigGraph) -> int:
    """Pick between the (at most two) adjacent centres: smaller module id wins."""
    return min(root_candidates(graph))


def rooted_info(graph: ConfigGraph, root: int, seed: int | None = None) -> RootedInfo:
    """Depths and heights with respect to ``root``; CN table seeded at ``seed``."""
    if root not in graph.vertices:
        raise KeyError(f"unknown root module {root}")
    _require_valid(graph)
    counts, _ = _connector_counts(graph, root if seed is None else seed)
    cn = {(v, c): counts[v].get(c, 0) for v in counts for c in FACES}
    order, parent = _orient(graph.adjacency, root)
    depth = {root: 0}
    for v in order[1:]:
        depth[v] = depth[parent[v][0]] + 1
    height = dict.fromkeys(order, 0)
    for v in reversed(order):
        p = parent[v]
        if p is not None and height[v] >= height[p[0]]:
            height[p[0]] = height[v] + 1
    return RootedInfo(root=root, depth=depth, height=height, cn=cn, parent=parent)
