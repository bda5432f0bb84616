"""Produce raw test groups (clusters plus tiered outliers) from a pruned graph.

A cluster is drawn from the direct instances of a class; outliers come in
three tiers of decreasing relatedness: instances of sibling classes (O1),
instances of cousin classes reached through a grandparent (O2), and
instances of classes at subclass-graph distance at least ``mu`` from the
cluster's parent classes (O3).

Everything here works on entity ids; surface resolution and the quality
filters live in :mod:`taxoutlier.refine`. All selection is deterministic
for a fixed seed: O1/O2 picks are ordered by (sitelinks desc, id asc) and
O3 sampling uses a per-class RNG derived from (seed, class id), so output
does not depend on scheduling or iteration order.
"""

from __future__ import annotations

import hashlib
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Literal

from .graph import EntityId, KnowledgeGraph

Tier = Literal["O1", "O2", "O3"]

REASON_TOO_FEW_INSTANCES = "TooFewInstances"
REASON_NO_OUTLIERS = "NoOutliers"


@dataclass(slots=True)
class GeneratorConfig:
    """Knobs for group generation; defaults match the shipped dataset recipe."""

    language: str = "en"
    mu: int = 7
    cluster_size: int = 8
    cluster_min: int = 7
    per_tier_outliers: int = 2
    min_outlier_sitelinks: int = 10
    min_instances: int = 2
    rng_seed: int = 0
    o3_retry_budget: int = 10_000
    # Strict O2 mode drops grandparents that are also direct parents,
    # trading cluster yield for cleaner cousin sets.
    o2_exclude_parent_overlap: bool = False

    def __post_init__(self) -> None:
        if self.mu < 2:
            raise ValueError("mu must be >= 2")
        if not (self.cluster_size >= self.cluster_min >= 3):
            raise ValueError("need cluster_size >= cluster_min >= 3")
        if self.per_tier_outliers < 1:
            raise ValueError("per_tier_outliers must be >= 1")
        if self.min_instances < 1:
            raise ValueError("min_instances must be >= 1")


@dataclass(slots=True)
class RawGroup:
    """One generated test group, still as entity ids."""

    class_id: EntityId
    cluster_ids: list[EntityId]
    outlier_ids: list[tuple[Tier, EntityId]]


@dataclass(slots=True, frozen=True)
class Reject:
    """Why a candidate class produced no group."""

    reason: str


def _labeled(g: KnowledgeGraph, ids, language: str) -> list[EntityId]:
    return [eid for eid in ids if g.entities[eid].labels.get(language)]


def candidate_classes(g: KnowledgeGraph, cfg: GeneratorConfig) -> Iterator[EntityId]:
    """Classes with enough language-labeled instances, ascending id order."""
    for v in g.class_ids():
        if len(_labeled(g, g.instances(v), cfg.language)) >= cfg.min_instances:
            yield v


def outlier_candidates(
    g: KnowledgeGraph, v: EntityId, tier: Tier, cfg: GeneratorConfig
) -> frozenset[EntityId]:
    """The full candidate set for one tier of ``v``.

    Tiers are made mutually exclusive by subtracting lower tiers from
    higher ones. O3 is enumerated exhaustively here, which is only
    sensible at test scale; :func:`select_outliers` samples it instead.
    """
    own = g.instances(v)
    if tier == "O1":
        return frozenset(_sibling_pool(g, v, g.parents(v))) - own
    if tier == "O2":
        grandparents = g.ancestors_at(v, 2)
        if cfg.o2_exclude_parent_overlap:
            grandparents -= g.parents(v)
        pool = frozenset(_sibling_pool(g, v, grandparents)) - own
        return pool - outlier_candidates(g, v, "O1", cfg)
    if tier == "O3":
        pool: set[EntityId] = set()
        parents = g.parents(v)
        for cls in g.class_ids():
            if _is_far_class(g, parents, cls, cfg.mu):
                pool.update(g.instances(cls))
        return (
            frozenset(pool)
            - own
            - outlier_candidates(g, v, "O1", cfg)
            - outlier_candidates(g, v, "O2", cfg)
        )
    raise ValueError(f"unknown tier {tier!r}")


def _sibling_pool(g: KnowledgeGraph, v: EntityId, ancestors) -> set[EntityId]:
    pool: set[EntityId] = set()
    for p in ancestors:
        for c in g.children(p):
            if c != v:
                pool.update(g.instances_closure(c))
    return pool


def _is_far_class(g: KnowledgeGraph, parents, cls: EntityId, mu: int) -> bool:
    return any(g.distance_within(p, cls, mu) is None for p in parents)


def select_cluster(
    g: KnowledgeGraph, v: EntityId, cfg: GeneratorConfig
) -> list[EntityId] | Reject:
    """Top instances of ``v`` by sitelink count, ties to the smaller id."""
    labeled = _labeled(g, g.instances(v), cfg.language)
    if len(labeled) < cfg.cluster_min:
        return Reject(REASON_TOO_FEW_INSTANCES)
    labeled.sort(key=lambda eid: (-g.entities[eid].sitelinks, eid))
    return labeled[: cfg.cluster_size]


def rng_for_class(seed: int, class_id: EntityId) -> random.Random:
    """Independent, reproducible RNG stream for one class."""
    digest = hashlib.sha256(f"{seed}:{class_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def select_outliers(
    g: KnowledgeGraph,
    v: EntityId,
    cfg: GeneratorConfig,
    rng: random.Random,
) -> list[tuple[Tier, EntityId]]:
    """Up to ``per_tier_outliers`` picks per tier, prominent entities only.

    O1/O2 take the highest-sitelink eligible candidates. O3 samples class
    ids uniformly, verifies remoteness with a bounded breadth-first search
    (accepting only distances of at least ``mu`` from some parent), and
    draws an instance, within a fixed retry budget.
    """
    own = g.instances(v)

    def eligible(eid: EntityId) -> bool:
        ent = g.entities[eid]
        return bool(ent.labels.get(cfg.language)) and ent.sitelinks >= cfg.min_outlier_sitelinks

    o1_pool = outlier_candidates(g, v, "O1", cfg)
    o2_pool = outlier_candidates(g, v, "O2", cfg)

    picks: list[tuple[Tier, EntityId]] = []
    for tier, pool in (("O1", o1_pool), ("O2", o2_pool)):
        ranked = sorted(
            (eid for eid in pool if eligible(eid)),
            key=lambda eid: (-g.entities[eid].sitelinks, eid),
        )
        picks.extend((tier, eid) for eid in ranked[: cfg.per_tier_outliers])

    # O3 by rejection sampling over class ids
    parents = g.parents(v)
    if parents:
        class_ids = g.class_ids()
        excluded = set(own) | o1_pool | o2_pool
        far_verdict: dict[EntityId, bool] = {}
        taken: list[EntityId] = []
        for _ in range(cfg.o3_retry_budget):
            if len(taken) >= cfg.per_tier_outliers or not class_ids:
                break
            cls = class_ids[rng.randrange(len(class_ids))]
            if cls not in far_verdict:
                far_verdict[cls] = _is_far_class(g, parents, cls, cfg.mu)
            if not far_verdict[cls]:
                continue
            pool = [
                eid
                for eid in sorted(g.instances(cls))
                if eid not in excluded and eligible(eid)
            ]
            if not pool:
                continue
            chosen = pool[rng.randrange(len(pool))]
            taken.append(chosen)
            excluded.add(chosen)
        picks.extend(("O3", eid) for eid in taken)
    return picks


def generate_group(
    g: KnowledgeGraph,
    v: EntityId,
    cfg: GeneratorConfig,
    rng: random.Random | None = None,
) -> RawGroup | Reject:
    """Cluster plus outliers for one candidate class, or the reject reason."""
    cluster = select_cluster(g, v, cfg)
    if isinstance(cluster, Reject):
        return cluster
    if rng is None:
        rng = rng_for_class(cfg.rng_seed, v)
    outliers = select_outliers(g, v, cfg, rng)
    if not outliers:
        return Reject(REASON_NO_OUTLIERS)
    return RawGroup(class_id=v, cluster_ids=cluster, outlier_ids=outliers)


def generate_results(
    g: KnowledgeGraph, cfg: GeneratorConfig, threads: int = 1
) -> Iterator[tuple[EntityId, RawGroup | Reject]]:
    """Run :func:`generate_group` over every candidate class, in id order.

    With ``threads`` > 1 classes are processed on a thread pool; the
    per-class RNG derivation keeps the output identical either way.
    """
    classes = list(candidate_classes(g, cfg))

    def work(v: EntityId) -> tuple[EntityId, RawGroup | Reject]:
        return v, generate_group(g, v, cfg, rng_for_class(cfg.rng_seed, v))

    if threads > 1 and len(classes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(work, classes)
    else:
        for v in classes:
            yield work(v)


def generate_dataset(
    g: KnowledgeGraph, cfg: GeneratorConfig, threads: int = 1
) -> Iterator[RawGroup]:
    """Accepted groups only, rejects discarded."""
    for _v, result in generate_results(g, cfg, threads=threads):
        if isinstance(result, RawGroup):
            yield result
