"""Independent reference implementations used to check the package.

Everything here is written directly from the definitions using plain
dicts, lists, and math: no calls into taxoutlier's traversal, selection,
or scoring code. Slow is fine; these only run at test scale.
"""

from __future__ import annotations

import math
from collections import deque

INF = math.inf


def _ids(records) -> set[str]:
    return {r.id for r in records}


def _subclass_edges(records) -> list[tuple[str, str]]:
    known = _ids(records)
    return [(r.id, p) for r in records for p in r.subclass_of if p in known]


def instances_of(records, class_id: str) -> set[str]:
    """Direct instances by scanning every record's instance_of list."""
    if class_id not in _ids(records):
        return set()
    return {r.id for r in records if class_id in r.instance_of}


def descendants(records, class_id: str) -> set[str]:
    """class_id plus every transitive subclass, by fixpoint iteration."""
    edges = _subclass_edges(records)
    out = {class_id}
    changed = True
    while changed:
        changed = False
        for child, parent in edges:
            if parent in out and child not in out:
                out.add(child)
                changed = True
    return out


def closure_instances(records, class_id: str) -> set[str]:
    """Instances of class_id or of any transitive subclass."""
    result: set[str] = set()
    for cls in descendants(records, class_id):
        result |= instances_of(records, cls)
    return result


def parents_of(records, entity_id: str) -> set[str]:
    known = _ids(records)
    for r in records:
        if r.id == entity_id:
            return {p for p in r.subclass_of if p in known}
    return set()


def all_distances(records, source: str) -> dict[str, float]:
    """Unbounded BFS distances over undirected subclass edges."""
    adjacency: dict[str, set[str]] = {r.id: set() for r in records}
    for child, parent in _subclass_edges(records):
        adjacency[child].add(parent)
        adjacency[parent].add(child)
    dist = {eid: INF for eid in adjacency}
    dist[source] = 0
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for neighbor in adjacency[node]:
            if dist[neighbor] == INF:
                dist[neighbor] = dist[node] + 1
                queue.append(neighbor)
    return dist


def prune_survivors(records, root, depth, stop_classes) -> set[str]:
    """Ids that survive pruning, by checking each rule entity by entity."""
    known = _ids(records)
    near_root: set[str] = set()
    if root is not None:
        dist = all_distances(records, root)
        near_root = {eid for eid, d in dist.items() if d <= depth}
    survivors = set()
    for r in records:
        if r.is_disambiguation:
            continue
        if r.id in near_root:
            continue
        if any(c in stop_classes and c in known for c in r.instance_of):
            continue
        survivors.add(r.id)
    return survivors


def expected_tiers(records, class_id: str, mu: int):
    """The three outlier candidate sets, straight from their definitions.

    O1: instance closures of the other children of v's parents.
    O2: same over grandparents' children, minus O1.
    O3: instances of classes at distance >= mu from some parent of v,
        minus both lower tiers.
    All three exclude v's own direct instances.
    """
    own = instances_of(records, class_id)
    parents = parents_of(records, class_id)
    known = _ids(records)
    children: dict[str, set[str]] = {}
    for child, parent in _subclass_edges(records):
        children.setdefault(parent, set()).add(child)

    o1: set[str] = set()
    for p in parents:
        for c in children.get(p, set()) - {class_id}:
            o1 |= closure_instances(records, c)
    o1 -= own

    grandparents: set[str] = set()
    for p in parents:
        grandparents |= parents_of(records, p)
    o2: set[str] = set()
    for gp in grandparents:
        for c in children.get(gp, set()) - {class_id}:
            o2 |= closure_instances(records, c)
    o2 -= own
    o2 -= o1

    classes_with_instances = sorted(
        {cid for r in records for cid in r.instance_of if cid in known}
    )
    o3: set[str] = set()
    for p in parents:
        dist = all_distances(records, p)
        for cls in classes_with_instances:
            if dist.get(cls, INF) >= mu:
                o3 |= instances_of(records, cls)
    o3 -= own
    o3 -= o1
    o3 -= o2
    return o1, o2, o3


def anchor_winners(rows) -> dict[str, tuple[str, float]]:
    """rows: (anchor, title, count). Winner per title with probability."""
    by_title: dict[str, list[tuple[str, int]]] = {}
    for anchor, title, count in rows:
        by_title.setdefault(title, []).append((anchor, count))
    out = {}
    for title, pairs in by_title.items():
        total = sum(c for _a, c in pairs)
        best_count = max(c for _a, c in pairs)
        best_anchor = min(a for a, c in pairs if c == best_count)
        out[title] = (best_anchor, best_count / total)
    return out


def cosine(a, b) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def compactness(vectors) -> list[float]:
    """Literal per-item average over ordered pairs not involving the item."""
    n = len(vectors)
    scores = []
    for w in range(n):
        total = 0.0
        for i in range(n):
            for j in range(n):
                if w in (i, j) or i == j:
                    continue
                total += cosine(vectors[i], vectors[j])
        scores.append(total / ((n - 1) * (n - 2)))
    return scores


def opp_accuracy(groups, table):
    """OPP and accuracy from scratch, surfaces looked up whole in ``table``.

    groups: (cluster surfaces, outlier surfaces) pairs. Surfaces missing
    from the table are discarded; a group is skipped when fewer than two
    cluster items or zero outliers remain. Returns
    (opp, accuracy, cases, skipped); the first two are None with 0 cases.
    """
    position_total = 0.0
    detected_total = 0
    cases = 0
    skipped = 0
    for cluster_surfaces, outlier_surfaces in groups:
        cluster = [table[s] for s in cluster_surfaces if s in table]
        outliers = [table[s] for s in outlier_surfaces if s in table]
        if len(cluster) < 2 or not outliers:
            skipped += 1
            continue
        for ov in outliers:
            scores = compactness(cluster + [ov])
            outlier_score = scores[-1]
            position = sum(1 for s in scores[:-1] if s < outlier_score)
            position_total += position / len(cluster)
            detected_total += int(position == len(cluster))
            cases += 1
    if cases == 0:
        return None, None, 0, skipped
    return (
        100.0 * position_total / cases,
        100.0 * detected_total / cases,
        cases,
        skipped,
    )
