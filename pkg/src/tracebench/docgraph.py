"""Hierarchical chunking of markdown manuals into a dependence graph, plus
the four coverage-aware sampling strategies.

Chunking is deterministic: the document is split recursively along heading
levels until every leaf fits the token limit (whitespace-delimited words are
the pinned token proxy); reference edges between chunks come from the
generator port and are validated against existing node ids. Sampling draws
leaf chunks; two leaves are adjacent when they share a hierarchy parent or a
reference edge connects them (edges touching internal nodes project to their
leaf descendants).
"""
from __future__ import annotations

import json
import random
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .genport import GenPortError, GiveUp, generate_validated

STRATEGIES = ("uniform", "coverage_driven", "connected_diverse_coverage", "coverage_islands")


class DocGraphError(Exception):
    pass


@dataclass
class Node:
    id: str
    heading_path: tuple[str, ...]
    text: str
    token_count: int
    children: list[str] = field(default_factory=list)
    parent: str | None = None
    oversize: bool = False  # indivisible leaf exceeding the limit, kept whole

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class DocGraph:
    nodes: dict[str, Node] = field(default_factory=dict)
    root: str = ""
    reference_edges: list[tuple[str, str, str]] = field(default_factory=list)  # (from, to, kind)
    coverage: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def leaves(self) -> list[str]:
        return [n.id for n in self.nodes.values() if n.is_leaf]

    def bump_coverage(self, node_ids: list[str]) -> None:
        with self._lock:
            for nid in node_ids:
                self.coverage[nid] = self.coverage.get(nid, 0) + 1

    def toc(self) -> list[dict]:
        out = []
        for node in self.nodes.values():
            out.append({"id": node.id, "heading_path": list(node.heading_path), "leaf": node.is_leaf})
        return out

    # -- persistence ---------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "root": self.root,
            "nodes": [
                {
                    "id": n.id,
                    "heading_path": list(n.heading_path),
                    "text": n.text,
                    "token_count": n.token_count,
                    "children": n.children,
                    "parent": n.parent,
                    "oversize": n.oversize,
                }
                for n in self.nodes.values()
            ],
            "reference_edges": [list(e) for e in self.reference_edges],
            "coverage": dict(sorted(self.coverage.items())),
            "warnings": self.warnings,
        }

    @staticmethod
    def from_json(data: dict) -> "DocGraph":
        g = DocGraph(root=data["root"])
        for nd in data["nodes"]:
            node = Node(
                id=nd["id"],
                heading_path=tuple(nd["heading_path"]),
                text=nd["text"],
                token_count=nd["token_count"],
                children=list(nd["children"]),
                parent=nd["parent"],
                oversize=nd.get("oversize", False),
            )
            g.nodes[node.id] = node
        g.reference_edges = [tuple(e) for e in data.get("reference_edges", [])]
        g.coverage = dict(data.get("coverage", {}))
        g.warnings = list(data.get("warnings", []))
        return g

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @staticmethod
    def load(path: str | Path) -> "DocGraph":
        return DocGraph.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def token_count(text: str) -> int:
    """Whitespace-delimited word count: the pinned token proxy."""
    return len(text.split())


_HEADING = re.compile(r"^(#{1,6})\s+(.*)$")


@dataclass
class _Section:
    level: int
    heading: str
    lines: list[str] = field(default_factory=list)
    children: list["_Section"] = field(default_factory=list)


def _split_by_headings(lines: list[str], level: int) -> tuple[list[str], list[_Section]]:
    """Split lines into (preamble, sections at exactly the given level)."""
    preamble: list[str] = []
    sections: list[_Section] = []
    current: _Section | None = None
    for line in lines:
        m = _HEADING.match(line)
        if m and len(m.group(1)) == level:
            current = _Section(level, m.group(2).strip())
            sections.append(current)
            continue
        if current is None:
            preamble.append(line)
        else:
            current.lines.append(line)
    return preamble, sections


def build_graph(document: str, max_chunk_tokens: int, gen=None) -> DocGraph:
    """Chunk a markdown document by its heading hierarchy until every leaf is
    within the token limit, then attach generator-proposed reference edges."""
    if not document.strip():
        raise DocGraphError("document is empty")
    if max_chunk_tokens <= 0:
        raise DocGraphError("max_chunk_tokens must be positive")
    graph = DocGraph()
    counter = [0]

    def next_id() -> str:
        nid = f"n{counter[0]:03d}"
        counter[0] += 1
        return nid

    def add_node(heading_path: tuple[str, ...], text: str, parent: str | None) -> Node:
        node = Node(next_id(), heading_path, text, token_count(text), parent=parent)
        graph.nodes[node.id] = node
        graph.coverage[node.id] = 0
        if parent is not None:
            graph.nodes[parent].children.append(node.id)
        return node

    def split(node: Node, lines: list[str], level: int) -> None:
        if node.token_count <= max_chunk_tokens:
            return
        preamble, sections = None, []
        for lvl in range(level, 7):
            preamble, sections = _split_by_headings(lines, lvl)
            if sections:
                level = lvl
                break
        if not sections:
            node.oversize = True
            graph.warnings.append(
                f"node {node.id} ({' / '.join(node.heading_path) or 'document'}) has no deeper headings; "
                f"kept whole at {node.token_count} tokens"
            )
            return
        if preamble and "".join(preamble).strip():
            text = "\n".join(preamble).strip("\n")
            add_node(node.heading_path + ("(preamble)",), text, node.id)
        for sec in sections:
            text = "\n".join([f"{'#' * level} {sec.heading}"] + sec.lines).strip("\n")
            child = add_node(node.heading_path + (sec.heading,), text, node.id)
            split(child, sec.lines, level + 1)

    lines = document.splitlines()
    root = add_node((), document.strip("\n"), None)
    graph.root = root.id
    split(root, lines, 1)

    if gen is not None:
        _attach_reference_edges(graph, gen)
    return graph


def _attach_reference_edges(graph: DocGraph, gen) -> None:
    payload = {
        "toc": graph.toc(),
        "nodes": [
            {"id": n.id, "heading_path": list(n.heading_path), "text": n.text}
            for n in graph.nodes.values()
            if n.is_leaf
        ],
    }

    def validate(resp: dict) -> list[tuple[str, str, str]]:
        edges = []
        for e in resp.get("edges", []):
            src, dst = e.get("from"), e.get("to")
            kind = e.get("kind", "implicit")
            if src not in graph.nodes or dst not in graph.nodes:
                raise GenPortError(f"reference edge touches unknown node: {e}")
            if kind not in ("explicit", "implicit"):
                raise GenPortError(f"bad edge kind {kind!r}")
            edges.append((src, dst, kind))
        return edges

    try:
        edges, _ = generate_validated("document_extraction", payload, gen, validate)
        graph.reference_edges.extend(edges)
    except (GiveUp, GenPortError) as exc:
        graph.warnings.append(f"reference-edge extraction failed; hierarchy edges only ({exc})")


# ---------------------------------------------------------------------------
# Sampling


@dataclass(frozen=True)
class Sample:
    id: str
    node_ids: tuple[str, ...]
    text: str

    def to_json(self) -> dict:
        return {"id": self.id, "node_ids": list(self.node_ids), "text": self.text}

    @staticmethod
    def from_json(data: dict) -> "Sample":
        return Sample(data["id"], tuple(data["node_ids"]), data["text"])


def leaf_adjacency(graph: DocGraph) -> dict[str, set[str]]:
    """Leaves are adjacent when they share a parent or a reference edge links
    them (internal endpoints project to their leaf descendants)."""
    leaves = set(graph.leaves())
    adj: dict[str, set[str]] = {leaf: set() for leaf in leaves}
    by_parent: dict[str, list[str]] = {}
    for leaf in leaves:
        parent = graph.nodes[leaf].parent
        if parent is not None:
            by_parent.setdefault(parent, []).append(leaf)
    for siblings in by_parent.values():
        for a in siblings:
            for b in siblings:
                if a != b:
                    adj[a].add(b)

    def leaf_set(nid: str) -> set[str]:
        node = graph.nodes[nid]
        if node.is_leaf:
            return {nid}
        out: set[str] = set()
        stack = list(node.children)
        while stack:
            cur = graph.nodes[stack.pop()]
            if cur.is_leaf:
                out.add(cur.id)
            else:
                stack.extend(cur.children)
        return out

    for src, dst, _kind in graph.reference_edges:
        for a in leaf_set(src):
            for b in leaf_set(dst):
                if a != b:
                    adj[a].add(b)
                    adj[b].add(a)
    return adj


def _document_order(graph: DocGraph, ids) -> list[str]:
    return sorted(ids)  # node ids are zero-padded creation-order


def _sample_text(graph: DocGraph, node_ids) -> str:
    ordered = _document_order(graph, node_ids)
    return "\n\n".join(graph.nodes[nid].text for nid in ordered)


def _coverage_tiers(graph: DocGraph, eligible: list[str]) -> list[list[str]]:
    by_cov: dict[int, list[str]] = {}
    for nid in eligible:
        by_cov.setdefault(graph.coverage.get(nid, 0), []).append(nid)
    return [sorted(by_cov[c]) for c in sorted(by_cov)]


def _bfs_distances(adj: dict[str, set[str]], sources: set[str]) -> dict[str, int]:
    dist = {s: 0 for s in sources}
    frontier = list(sources)
    while frontier:
        nxt = []
        for node in frontier:
            for nb in adj[node]:
                if nb not in dist:
                    dist[nb] = dist[node] + 1
                    nxt.append(nb)
        frontier = nxt
    return dist


def _pick_diverse_seed(graph: DocGraph, adj, eligible: list[str], previous_seeds: list[str], rng) -> str:
    """Lowest-coverage nodes first; among them, maximize graph distance from
    previously seeded nodes; remaining ties break by seeded randomness."""
    tiers = _coverage_tiers(graph, eligible)
    candidates = tiers[0]
    if not previous_seeds:
        return rng.choice(sorted(candidates))
    dist = _bfs_distances(adj, set(previous_seeds))
    far = max(dist.get(c, len(adj) + 1) for c in candidates)
    best = [c for c in candidates if dist.get(c, len(adj) + 1) == far]
    return rng.choice(sorted(best))


def _expand_connected(graph: DocGraph, adj, seed: str, eligible: set[str], size: int, rng) -> list[str]:
    chosen = [seed]
    chosen_set = {seed}
    while len(chosen) < size:
        frontier = sorted(
            {nb for c in chosen_set for nb in adj[c] if nb in eligible and nb not in chosen_set}
        )
        if not frontier:
            break
        tier = _coverage_tiers(graph, frontier)[0]
        chosen_next = rng.choice(tier)
        chosen.append(chosen_next)
        chosen_set.add(chosen_next)
    return chosen


def _coverage_deficit(graph: DocGraph, nid: str, max_cov: int) -> int:
    return max_cov - graph.coverage.get(nid, 0)


def sample_nodes(
    graph: DocGraph,
    strategy: str,
    min_nodes: int,
    max_nodes: int,
    seed: int,
    count: int,
) -> list[Sample]:
    """Draw ``count`` samples of leaf chunks. Coverage counters are bumped for
    every node of every emitted sample; the sampler never draws more nodes
    than are eligible (samples are truncated instead)."""
    if strategy not in STRATEGIES:
        raise DocGraphError(f"unknown strategy {strategy!r}")
    if not (1 <= min_nodes <= max_nodes):
        raise DocGraphError("need 1 <= min_nodes <= max_nodes")
    eligible = sorted(graph.leaves())
    if not eligible:
        raise DocGraphError("graph has no leaf chunks to sample")
    rng = random.Random(seed)
    adj = leaf_adjacency(graph)
    samples: list[Sample] = []
    seeds_used: list[str] = []
    for k in range(count):
        target = min(rng.randint(min_nodes, max_nodes), len(eligible))
        if strategy == "uniform":
            chosen = rng.sample(eligible, target)
        elif strategy == "coverage_driven":
            chosen = []
            for tier in _coverage_tiers(graph, eligible):
                tier = list(tier)
                rng.shuffle(tier)
                for nid in tier:
                    if len(chosen) < target:
                        chosen.append(nid)
            chosen = chosen[:target]
        elif strategy == "connected_diverse_coverage":
            seed_node = _pick_diverse_seed(graph, adj, eligible, seeds_used, rng)
            seeds_used.append(seed_node)
            chosen = _expand_connected(graph, adj, seed_node, set(eligible), target, rng)
        else:  # coverage_islands
            chosen = _sample_islands(graph, adj, eligible, target, seeds_used, rng)
        chosen = _document_order(graph, chosen)
        graph.bump_coverage(chosen)
        samples.append(Sample(f"smp_{len(samples):03d}_{seed}_{k}", tuple(chosen), _sample_text(graph, chosen)))
    return samples


def _sample_islands(graph: DocGraph, adj, eligible: list[str], target: int, seeds_used: list[str], rng) -> list[str]:
    """Locally coherent islands: expand the current island through neighbors,
    but start a new island when the coverage win of the best remote seed's
    neighborhood beats the deficit of the cheapest local neighbor."""
    max_cov = max((graph.coverage.get(n, 0) for n in eligible), default=0) + 1
    chosen: list[str] = []
    chosen_set: set[str] = set()
    island_seed = _pick_diverse_seed(graph, adj, eligible, seeds_used, rng)
    seeds_used.append(island_seed)
    chosen.append(island_seed)
    chosen_set.add(island_seed)
    while len(chosen) < target:
        frontier = sorted(
            {nb for c in chosen_set for nb in adj[c] if nb in eligible and nb not in chosen_set}
        )
        remaining = [n for n in eligible if n not in chosen_set]
        if not remaining:
            break
        local_best = None
        local_deficit = -1
        if frontier:
            tier = _coverage_tiers(graph, frontier)[0]
            local_best = rng.choice(tier)
            local_deficit = _coverage_deficit(graph, local_best, max_cov)
        remote_candidates = [n for n in remaining if n not in frontier]
        start_new = False
        remote_seed = None
        if remote_candidates:
            remote_seed = _pick_diverse_seed(graph, adj, remote_candidates, chosen, rng)
            neighborhood = [remote_seed] + sorted(adj[remote_seed] & set(remaining))[:2]
            remote_gain = sum(_coverage_deficit(graph, n, max_cov) for n in neighborhood) / len(neighborhood)
            if local_best is None or remote_gain > local_deficit:
                start_new = True
        if start_new and remote_seed is not None:
            chosen.append(remote_seed)
            chosen_set.add(remote_seed)
        elif local_best is not None:
            chosen.append(local_best)
            chosen_set.add(local_best)
        else:
            break
    return chosen
