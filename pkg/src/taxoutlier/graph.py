"""In-memory taxonomy graph over knowledge-base entities.

The graph holds entities plus the two taxonomy relations (instance-of and
subclass-of, both with reverse indexes) and provides the traversal
primitives the dataset generator needs: direct instances, parent/child
classes, the recursive instance closure, bounded shortest-path distance
over undirected subclass edges, and the pre-generation pruning passes.

A built (or pruned) graph is immutable: every mutating step happens inside
``build_graph``/``prune_graph`` before the value is handed out, so reads
are safe from any number of threads.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Iterator, Literal

if TYPE_CHECKING:  # pragma: no cover
    from .formats import EntityRecord

EntityId = str

DEFAULT_ROOT: EntityId = "Q35120"
DEFAULT_PRUNE_DEPTH = 3


class GraphError(Exception):
    """Base class for taxonomy graph errors."""


class DuplicateEntityError(GraphError):
    def __init__(self, entity_id: EntityId):
        super().__init__(f"duplicate entity id: {entity_id}")
        self.entity_id = entity_id


class UnknownEntityError(GraphError, KeyError):
    def __init__(self, entity_id: EntityId):
        super().__init__(f"unknown entity id: {entity_id}")
        self.entity_id = entity_id


@dataclass(slots=True)
class Entity:
    """One knowledge-base entity as stored in the graph.

    ``labels`` and ``wiki_titles`` map language codes to surface strings;
    an entity without a label in some language is unusable as a cluster or
    outlier member in that language but still participates in traversal.
    """

    id: EntityId
    labels: dict[str, str] = field(default_factory=dict)
    sitelinks: int = 0
    is_disambiguation: bool = False
    wiki_titles: dict[str, str] = field(default_factory=dict)

    def label(self, language: str) -> str | None:
        return self.labels.get(language)


@dataclass(slots=True)
class PruneStats:
    """Per-category removal counts for one ``prune_graph`` pass.

    An entity hit by several rules is counted under each rule it matches;
    ``removed_total`` counts it once.
    """

    disambiguation: int = 0
    near_root: int = 0
    stop_class: int = 0
    removed_total: int = 0
    edges_removed: int = 0


_EMPTY: frozenset[EntityId] = frozenset()


class KnowledgeGraph:
    """Entities plus instance-of / subclass-of adjacency with reverse indexes.

    Do not construct directly; use :func:`build_graph`.
    """

    def __init__(
        self,
        entities: dict[EntityId, Entity],
        instance_of: dict[EntityId, frozenset[EntityId]],
        subclass_of: dict[EntityId, frozenset[EntityId]],
        dangling_edges: int = 0,
    ):
        self.entities = entities
        self._instance_of = instance_of
        self._subclass_of = subclass_of
        self.dangling_edges = dangling_edges
        # reverse indexes
        instances: dict[EntityId, set[EntityId]] = {}
        children: dict[EntityId, set[EntityId]] = {}
        for src, targets in instance_of.items():
            for t in targets:
                instances.setdefault(t, set()).add(src)
        for src, targets in subclass_of.items():
            for t in targets:
                children.setdefault(t, set()).add(src)
        self._instances = {k: frozenset(v) for k, v in instances.items()}
        self._children = {k: frozenset(v) for k, v in children.items()}

    # -- basic access --------------------------------------------------

    def __contains__(self, entity_id: EntityId) -> bool:
        return entity_id in self.entities

    def __len__(self) -> int:
        return len(self.entities)

    def entity(self, entity_id: EntityId) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntityError(entity_id) from None

    def _check(self, entity_id: EntityId) -> None:
        if entity_id not in self.entities:
            raise UnknownEntityError(entity_id)

    def class_targets(self, entity_id: EntityId) -> frozenset[EntityId]:
        """Classes this entity is an instance of."""
        return self._instance_of.get(entity_id, _EMPTY)

    def iter_instance_edges(self) -> Iterator[tuple[EntityId, EntityId]]:
        """All (instance, class) edges."""
        for src, targets in self._instance_of.items():
            for t in targets:
                yield (src, t)

    def iter_subclass_edges(self) -> Iterator[tuple[EntityId, EntityId]]:
        """All (subclass, parent) edges."""
        for src, targets in self._subclass_of.items():
            for t in targets:
                yield (src, t)

    # -- traversal primitives -------------------------------------------

    def instances(self, v: EntityId) -> frozenset[EntityId]:
        """Direct instances of ``v``; no closure over subclasses."""
        self._check(v)
        return self._instances.get(v, _EMPTY)

    def parents(self, v: EntityId) -> frozenset[EntityId]:
        """Classes ``v`` is a direct subclass of."""
        self._check(v)
        return self._subclass_of.get(v, _EMPTY)

    def children(self, v: EntityId) -> frozenset[EntityId]:
        """Direct subclasses of ``v``."""
        self._check(v)
        return self._children.get(v, _EMPTY)

    def taxonomy_neighbors(
        self, v: EntityId, direction: Literal["up", "down"]
    ) -> frozenset[EntityId]:
        """Subclass-edge neighbors of ``v``: parents (up) or children (down)."""
        if direction == "up":
            return self.parents(v)
        if direction == "down":
            return self.children(v)
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")

    def instances_closure(self, v: EntityId) -> frozenset[EntityId]:
        """Instances of ``v`` and of every transitive subclass of ``v``.

        Visited-set semantics, so subclass cycles terminate.
        """
        self._check(v)
        out: set[EntityId] = set()
        seen = {v}
        stack = [v]
        while stack:
            cur = stack.pop()
            out.update(self._instances.get(cur, _EMPTY))
            for child in self._children.get(cur, _EMPTY):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return frozenset(out)

    def ancestors_at(self, v: EntityId, k: int) -> frozenset[EntityId]:
        """Classes reachable by following exactly ``k`` parent steps."""
        self._check(v)
        frontier: set[EntityId] = {v}
        for _ in range(k):
            nxt: set[EntityId] = set()
            for node in frontier:
                nxt.update(self._subclass_of.get(node, _EMPTY))
            frontier = nxt
            if not frontier:
                break
        return frozenset(frontier)

    def distance_within(
        self, a: EntityId, b: EntityId, cap: int
    ) -> int | None:
        """Shortest-path length between ``a`` and ``b`` over undirected
        subclass edges, if it is < cap; otherwise None ("at least cap").

        Breadth-first, bounded: never explores beyond depth cap - 1.
        """
        self._check(a)
        self._check(b)
        if cap < 1:
            raise ValueError("cap must be >= 1")
        if a == b:
            return 0
        seen = {a}
        frontier = [a]
        depth = 0
        while frontier and depth < cap - 1:
            depth += 1
            nxt: list[EntityId] = []
            for node in frontier:
                for nb in self._subclass_of.get(node, _EMPTY):
                    if nb == b:
                        return depth
                    if nb not in seen:
                        seen.add(nb)
                        nxt.append(nb)
                for nb in self._children.get(node, _EMPTY):
                    if nb == b:
                        return depth
                    if nb not in seen:
                        seen.add(nb)
                        nxt.append(nb)
            frontier = nxt
        return None

    def subclass_ball(self, center: EntityId, radius: int) -> frozenset[EntityId]:
        """All entities within undirected subclass-edge distance ``radius``
        of ``center``, the center included."""
        self._check(center)
        seen = {center}
        frontier = [center]
        for _ in range(radius):
            nxt: list[EntityId] = []
            for node in frontier:
                for nb in self._subclass_of.get(node, _EMPTY):
                    if nb not in seen:
                        seen.add(nb)
                        nxt.append(nb)
                for nb in self._children.get(node, _EMPTY):
                    if nb not in seen:
                        seen.add(nb)
                        nxt.append(nb)
            frontier = nxt
            if not frontier:
                break
        return frozenset(seen)

    def class_ids(self) -> list[EntityId]:
        """Ids of all entities with at least one instance, ascending."""
        return sorted(self._instances)


def build_graph(records: Iterable[EntityRecord]) -> KnowledgeGraph:
    """Materialize a graph from a stream of entity records.

    Edges whose target id never appears in the stream are dropped and
    counted on ``KnowledgeGraph.dangling_edges`` (real dumps are
    inconsistent, so this is resilience, not an error). A repeated entity
    id raises :class:`DuplicateEntityError`.
    """
    entities: dict[EntityId, Entity] = {}
    raw_instance: dict[EntityId, list[EntityId]] = {}
    raw_subclass: dict[EntityId, list[EntityId]] = {}
    for rec in records:
        if rec.id in entities:
            raise DuplicateEntityError(rec.id)
        entities[rec.id] = Entity(
            id=rec.id,
            labels=dict(rec.labels),
            sitelinks=rec.sitelinks,
            is_disambiguation=rec.is_disambiguation,
            wiki_titles=dict(rec.wiki_titles),
        )
        if rec.instance_of:
            raw_instance[rec.id] = list(rec.instance_of)
        if rec.subclass_of:
            raw_subclass[rec.id] = list(rec.subclass_of)

    # second pass: now that every id is known, resolve edge targets
    dangling = 0
    instance_of: dict[EntityId, frozenset[EntityId]] = {}
    subclass_of: dict[EntityId, frozenset[EntityId]] = {}
    for raw, resolved in ((raw_instance, instance_of), (raw_subclass, subclass_of)):
        for src, targets in raw.items():
            kept = frozenset(t for t in targets if t in entities)
            dangling += len(set(targets)) - len(kept)
            if kept:
                resolved[src] = kept
    return KnowledgeGraph(entities, instance_of, subclass_of, dangling)


def prune_graph(
    g: KnowledgeGraph,
    root: EntityId | None = DEFAULT_ROOT,
    depth: int = DEFAULT_PRUNE_DEPTH,
    stop_classes: frozenset[EntityId] | set[EntityId] = frozenset(),
) -> tuple[KnowledgeGraph, PruneStats]:
    """Remove generation-hostile entities and return the pruned graph.

    Three removal rules:
      1. every entity flagged as a disambiguation page,
      2. every entity within undirected subclass-edge distance ``depth``
         of ``root`` (pass ``root=None`` to disable this rule),
      3. every entity that is an instance of one of ``stop_classes``.

    Edges incident to a removed entity go with it. Instances of removed
    classes are kept if nothing else condemns them.
    """
    if root is not None and root not in g:
        raise UnknownEntityError(root)

    near_root: frozenset[EntityId] = (
        g.subclass_ball(root, depth) if root is not None else _EMPTY
    )
    stop_set = frozenset(stop_classes)
    removed: set[EntityId] = set()
    stats = PruneStats()
    for eid, ent in g.entities.items():
        hit = False
        if ent.is_disambiguation:
            stats.disambiguation += 1
            hit = True
        if eid in near_root:
            stats.near_root += 1
            hit = True
        if stop_set and not stop_set.isdisjoint(g.class_targets(eid)):
            stats.stop_class += 1
            hit = True
        if hit:
            removed.add(eid)
    stats.removed_total = len(removed)

    entities = {k: v for k, v in g.entities.items() if k not in removed}
    instance_of: dict[EntityId, frozenset[EntityId]] = {}
    subclass_of: dict[EntityId, frozenset[EntityId]] = {}
    edges_removed = 0
    for raw, resolved in (
        (g._instance_of, instance_of),
        (g._subclass_of, subclass_of),
    ):
        for src, targets in raw.items():
            if src in removed:
                edges_removed += len(targets)
                continue
            kept = frozenset(t for t in targets if t not in removed)
            edges_removed += len(targets) - len(kept)
            if kept:
                resolved[src] = kept
    stats.edges_removed = edges_removed
    pruned = KnowledgeGraph(entities, instance_of, subclass_of, g.dangling_edges)
    return pruned, stats


def edge_counter(g: KnowledgeGraph) -> Counter[tuple[str, EntityId, EntityId]]:
    """Multiset of all edges, tagged by relation; handy for round-trip checks."""
    c: Counter[tuple[str, EntityId, EntityId]] = Counter()
    for src, dst in g.iter_instance_edges():
        c[("instance_of", src, dst)] += 1
    for src, dst in g.iter_subclass_edges():
        c[("subclass_of", src, dst)] += 1
    return c
