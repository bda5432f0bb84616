"""Turn raw id groups into surface-form test groups, or reject them.

Entity ids become human phrases via link-anchor statistics: for each wiki
page title we keep the anchor text most often used to link to it, falling
back to the entity's language label when no anchor is known. Clusters of
resolved surfaces then pass through a fixed sequence of quality filters
that weed out degenerate groups (numbered series entries, shared-affix
name families, maintenance pages, single characters, or too few distinct
strings). Filter behavior varies by language through LanguageProfile.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Iterable

from .formats import AnchorEntry, DatasetRecord
from .generator import GeneratorConfig, RawGroup
from .graph import EntityId, KnowledgeGraph

VIOLATION_DIGIT_DUPLICATES = "DigitDuplicates"
VIOLATION_AFFIX_OVERLAP = "AffixOverlap"
VIOLATION_STOP_AFFIX = "StopAffix"
VIOLATION_SINGLE_CHAR = "SingleChar"
VIOLATION_TOO_FEW = "TooFewAfterDedup"

REASON_CLUSTER_VIOLATIONS = "ClusterViolations"
REASON_OUTLIER_VIOLATIONS = "OutlierViolations"
REASON_UNRESOLVED_CLASS = "UnresolvedClass"
REASON_NO_OUTLIERS = "NoOutliers"


class SurfaceResolutionError(KeyError):
    """Entity has neither a usable anchor nor a label in the language."""

    def __init__(self, entity_id: EntityId, language: str) -> None:
        super().__init__(entity_id)
        self.entity_id = entity_id
        self.language = language

    def __str__(self) -> str:
        return f"no surface for {self.entity_id} in language {self.language!r}"


@dataclass(slots=True, frozen=True)
class LanguageProfile:
    """Language-dependent settings for the cluster filters."""

    language: str
    cjk_mode: bool = False
    word_affix_mode: bool = False
    single_char_enabled: bool = True
    stop_prefixes: tuple[str, ...] = ("Category:",)
    stop_suffixes: tuple[str, ...] = ()
    affix_window: int = 6
    digit_dup_threshold: int = 2
    affix_dup_threshold: int = 3
    # cjk variant: count sharing one (non-kana) boundary char must reach this
    cjk_char_threshold: int = 6

    def __post_init__(self) -> None:
        if self.affix_window < 1:
            raise ValueError("affix_window must be >= 1")
        if min(self.digit_dup_threshold, self.affix_dup_threshold, self.cjk_char_threshold) < 1:
            raise ValueError("filter thresholds must be >= 1")


_PRESETS: dict[str, dict] = {
    "en": {"word_affix_mode": True},
    "ja": {"cjk_mode": True, "single_char_enabled": False, "stop_suffixes": ("一覧",)},
    "zh": {"cjk_mode": True, "single_char_enabled": False},
}


def profile_for_language(language: str, **overrides) -> LanguageProfile:
    """Preset profile for a language code, with keyword overrides."""
    settings: dict = dict(_PRESETS.get(language, {}))
    settings.update(overrides)
    return LanguageProfile(language=language, **settings)


@dataclass(slots=True, frozen=True)
class Violation:
    code: str
    detail: tuple[str, ...]


@dataclass(slots=True, frozen=True)
class Reject:
    reason: str
    violations: tuple[Violation, ...] = ()


@dataclass(slots=True)
class AnchorIndex:
    """Per-title winning anchor with its empirical probability."""

    language: str
    winners: dict[str, tuple[str, float]] = field(default_factory=dict)


def build_anchor_index(entries: Iterable[AnchorEntry], language: str) -> AnchorIndex:
    """Pick, per target title, the most frequent anchor text.

    The winner's probability is its count over the title's total count.
    Count ties go to the lexicographically smaller anchor string.
    """
    totals: dict[str, int] = {}
    best: dict[str, tuple[int, str]] = {}
    for entry in entries:
        totals[entry.target_title] = totals.get(entry.target_title, 0) + entry.count
        cur = best.get(entry.target_title)
        cand = (-entry.count, entry.anchor)
        if cur is None or cand < cur:
            best[entry.target_title] = cand
    winners = {
        title: (anchor, -neg_count / totals[title])
        for title, (neg_count, anchor) in best.items()
    }
    return AnchorIndex(language=language, winners=winners)


def resolve_surface(idx: AnchorIndex, g: KnowledgeGraph, entity_id: EntityId) -> str:
    """Winning anchor for the entity's wiki title, else its label."""
    ent = g.entity(entity_id)
    title = ent.wiki_titles.get(idx.language)
    if title is not None:
        hit = idx.winners.get(title)
        if hit is not None:
            return hit[0]
    label = ent.labels.get(idx.language)
    if label:
        return label
    raise SurfaceResolutionError(entity_id, idx.language)


def _strip_digits(s: str) -> str:
    return "".join(ch for ch in s if unicodedata.category(ch) != "Nd")


_KANA_RANGES = ((0x3040, 0x30FF), (0x31F0, 0x31FF), (0xFF65, 0xFF9F))


def _is_kana(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _KANA_RANGES)


def _overlap_groups(keys: Iterable[tuple[str, str]], threshold: int) -> set[str]:
    """Surfaces belonging to any key shared by more than ``threshold`` of them."""
    groups: dict[str, set[str]] = {}
    for key, surface in keys:
        groups.setdefault(key, set()).add(surface)
    hits: set[str] = set()
    for members in groups.values():
        if len(members) > threshold:
            hits.update(members)
    return hits


def _affix_overlap(cluster: list[str], profile: LanguageProfile) -> set[str]:
    hits: set[str] = set()
    w = profile.affix_window
    if profile.cjk_mode:
        # single boundary char, kana excluded, inclusive threshold
        for pick in (lambda s: s[0], lambda s: s[-1]):
            keys = [(pick(s), s) for s in cluster if s and not _is_kana(pick(s))]
            hits |= _overlap_groups(keys, profile.cjk_char_threshold - 1)
        for pick in (lambda s: s[:2], lambda s: s[-2:]):
            keys = [(pick(s), s) for s in cluster if len(s) >= 2]
            hits |= _overlap_groups(keys, profile.affix_dup_threshold)
        return hits
    for pick in (lambda s: s[:w], lambda s: s[-w:]):
        keys = [(pick(s), s) for s in cluster if len(s) >= w]
        hits |= _overlap_groups(keys, profile.affix_dup_threshold)
    if profile.word_affix_mode:
        for pos in (0, -1):
            keys = [(s.split()[pos], s) for s in cluster if s.split()]
            hits |= _overlap_groups(keys, profile.affix_dup_threshold)
    return hits


def _stop_affix_hits(surfaces: Iterable[str], profile: LanguageProfile) -> list[str]:
    return [
        s
        for s in surfaces
        if any(s.startswith(p) for p in profile.stop_prefixes)
        or any(s.endswith(x) for x in profile.stop_suffixes)
    ]


def reject_reasons(
    cluster: list[str], profile: LanguageProfile, min_size: int
) -> list[Violation]:
    """All filter violations for a deduplicated surface cluster.

    Checks run in a fixed order and all of them run; the result does not
    depend on the order of ``cluster``.
    """
    violations: list[Violation] = []

    digit_hits = _overlap_groups(
        ((_strip_digits(s), s) for s in cluster), profile.digit_dup_threshold
    )
    if digit_hits:
        violations.append(Violation(VIOLATION_DIGIT_DUPLICATES, tuple(sorted(digit_hits))))

    affix_hits = _affix_overlap(cluster, profile)
    if affix_hits:
        violations.append(Violation(VIOLATION_AFFIX_OVERLAP, tuple(sorted(affix_hits))))

    stop_hits = _stop_affix_hits(cluster, profile)
    if stop_hits:
        violations.append(Violation(VIOLATION_STOP_AFFIX, tuple(sorted(stop_hits))))

    if profile.single_char_enabled:
        singles = [s for s in cluster if len(s) == 1]
        if len(singles) > 1:
            violations.append(Violation(VIOLATION_SINGLE_CHAR, tuple(sorted(singles))))

    if len(set(cluster)) < min_size:
        violations.append(Violation(VIOLATION_TOO_FEW, tuple(sorted(set(cluster)))))

    return violations


def refine_group(
    raw: RawGroup,
    idx: AnchorIndex,
    g: KnowledgeGraph,
    profile: LanguageProfile,
    cfg: GeneratorConfig,
) -> DatasetRecord | Reject:
    """Resolve a raw group to surfaces and apply the quality filters.

    Cluster surfaces are deduplicated keeping the first (most prominent)
    occurrence; a cluster violation rejects the whole group. Outliers that
    duplicate an earlier surface are silently dropped, but a stop-affix
    hit on an outlier rejects the group the same way it would a cluster.
    """
    try:
        class_label = resolve_surface(idx, g, raw.class_id)
    except SurfaceResolutionError:
        return Reject(REASON_UNRESOLVED_CLASS)

    cluster: list[str] = []
    seen: set[str] = set()
    for eid in raw.cluster_ids:
        try:
            surface = resolve_surface(idx, g, eid)
        except SurfaceResolutionError:
            continue
        if surface in seen:
            continue
        seen.add(surface)
        cluster.append(surface)

    violations = reject_reasons(cluster, profile, min_size=cfg.cluster_min)
    if violations:
        return Reject(REASON_CLUSTER_VIOLATIONS, tuple(violations))

    outliers: list[tuple[str, str]] = []
    stop_hits: list[str] = []
    for tier, eid in raw.outlier_ids:
        try:
            surface = resolve_surface(idx, g, eid)
        except SurfaceResolutionError:
            continue
        if _stop_affix_hits([surface], profile):
            stop_hits.append(surface)
            continue
        if surface in seen:
            continue
        seen.add(surface)
        outliers.append((tier, surface))
    if stop_hits:
        return Reject(
            REASON_OUTLIER_VIOLATIONS,
            (Violation(VIOLATION_STOP_AFFIX, tuple(sorted(stop_hits))),),
        )
    if not outliers:
        return Reject(REASON_NO_OUTLIERS)

    return DatasetRecord(
        class_id=raw.class_id,
        class_label=class_label,
        language=idx.language,
        cluster=cluster,
        outliers=outliers,
    )
