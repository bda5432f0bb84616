"""Score outlier detection over a dataset with a word embedding.

For each test case the outlier is appended to its cluster and every item
gets a compactness score: the average pairwise similarity of the other
items. The outlier's rank among cluster items (how many cluster items
score strictly below it) is the outlier position; detection means it
ranks last. Aggregates are OPP (mean normalized position, as a
percentage) and accuracy (detection rate).

Out-of-vocabulary surfaces are discarded, never substituted: a group is
skipped when fewer than two cluster items or none of its outliers can be
embedded. OOV percentages are averaged per group over all groups,
including skipped ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .formats import DatasetRecord, Embedding

SKIP_CLUSTER_OOV = "fewer than two cluster items in vocabulary"
SKIP_OUTLIERS_OOV = "all outliers out of vocabulary"

Vector = np.ndarray
Similarity = Callable[[Vector, Vector], float]


def cosine(a: Vector, b: Vector) -> float:
    """Cosine similarity; zero vectors compare as 0 to anything."""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


@dataclass(slots=True, frozen=True)
class LookupPolicy:
    """How surfaces map to vectors."""

    phrase_mode: Literal["greedy", "token-average"] = "greedy"
    tokenizer: Literal["whitespace", "as-is"] = "whitespace"
    case_fold: bool = False


def phrase_vector(e: Embedding, surface: str, policy: LookupPolicy) -> Vector | None:
    """Embed a surface; None means out of vocabulary.

    Greedy mode (only when the embedding carries phrase entries) repeatedly
    matches the longest in-vocabulary token prefix, joining tokens with the
    embedding's phrase joiner, and skips tokens that match nothing. The
    result is the mean of matched vectors; otherwise the mean of per-token
    vectors. A single matched token returns that token's vector exactly.
    """
    if policy.tokenizer == "whitespace":
        tokens = surface.split()
    else:
        tokens = [surface] if surface else []
    if not tokens:
        return None

    vecs: list[Vector] = []
    if policy.phrase_mode == "greedy" and e.supports_phrases:
        limit = e.max_phrase_tokens
        i = 0
        while i < len(tokens):
            hit = None
            for j in range(min(len(tokens), i + limit), i, -1):
                vec = e.get(e.phrase_joiner.join(tokens[i:j]), case_fold=policy.case_fold)
                if vec is not None:
                    hit = (vec, j)
                    break
            if hit is None:
                i += 1
            else:
                vecs.append(hit[0])
                i = hit[1]
    else:
        for tok in tokens:
            vec = e.get(tok, case_fold=policy.case_fold)
            if vec is not None:
                vecs.append(vec)
    if not vecs:
        return None
    return np.mean(vecs, axis=0)


def compactness_naive(vectors: Sequence[Vector], sim: Similarity = cosine) -> list[float]:
    """Reference implementation: literal triple loop over ordered pairs."""
    n = len(vectors)
    if n < 3:
        raise ValueError("compactness needs at least 3 vectors")
    denom = (n - 1) * (n - 2)
    scores: list[float] = []
    for w in range(n):
        total = 0.0
        for i in range(n):
            if i == w:
                continue
            for j in range(n):
                if j == w or j == i:
                    continue
                total += sim(vectors[i], vectors[j])
        scores.append(total / denom)
    return scores


def compactness_fast(vectors: Sequence[Vector], sim: Similarity = cosine) -> np.ndarray:
    """Same scores from one pairwise similarity matrix.

    With S the sum of all ordered-pair similarities and s_w row w's sum,
    leaving w out costs its row and column: score(w) = (S - 2 s_w) / denom.
    """
    n = len(vectors)
    if n < 3:
        raise ValueError("compactness needs at least 3 vectors")
    if sim is cosine:
        arr = np.asarray(vectors, dtype=np.float64)
        norms = np.linalg.norm(arr, axis=1)
        unit = arr / np.where(norms == 0.0, 1.0, norms)[:, None]
        matrix = unit @ unit.T
        np.fill_diagonal(matrix, 0.0)
    else:
        matrix = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                matrix[i, j] = matrix[j, i] = sim(vectors[i], vectors[j])
    total = matrix.sum()
    rows = matrix.sum(axis=1)
    return (total - 2.0 * rows) / float((n - 1) * (n - 2))


@dataclass(slots=True)
class CompactnessResult:
    """Scores for cluster items plus the outlier (last), and its rank."""

    scores: np.ndarray
    outlier_position: int
    detected: bool


def rank_outlier(
    cluster_vectors: Sequence[Vector],
    outlier_vector: Vector,
    sim: Similarity = cosine,
) -> CompactnessResult:
    """Rank one outlier against a cluster by compactness.

    The position counts cluster items scoring strictly below the outlier,
    so score ties count against detection. Detected means the outlier is
    below every cluster item.
    """
    if len(cluster_vectors) < 2:
        raise ValueError("ranking needs at least 2 cluster vectors")
    scores = compactness_fast([*cluster_vectors, outlier_vector], sim)
    outlier_score = scores[-1]
    position = int(np.sum(scores[:-1] < outlier_score))
    return CompactnessResult(
        scores=scores,
        outlier_position=position,
        detected=position == len(cluster_vectors),
    )


@dataclass(slots=True)
class TestGroup:
    """One dataset record resolved against an embedding."""

    class_id: str
    cluster_vectors: list[tuple[str, Vector]]
    outlier_vectors: list[tuple[str, str, Vector]]
    oov_cluster: int
    oov_outliers: int
    skipped: bool
    skip_reason: str | None


def resolve_group(e: Embedding, record: DatasetRecord, policy: LookupPolicy) -> TestGroup:
    """Embed a record's surfaces, dropping OOV ones, and flag skips."""
    cluster_vectors = []
    for surface in record.cluster:
        vec = phrase_vector(e, surface, policy)
        if vec is not None:
            cluster_vectors.append((surface, vec))
    outlier_vectors = []
    for tier, surface in record.outliers:
        vec = phrase_vector(e, surface, policy)
        if vec is not None:
            outlier_vectors.append((tier, surface, vec))

    skip_reason = None
    if len(cluster_vectors) < 2:
        skip_reason = SKIP_CLUSTER_OOV
    elif not outlier_vectors:
        skip_reason = SKIP_OUTLIERS_OOV
    return TestGroup(
        class_id=record.class_id,
        cluster_vectors=cluster_vectors,
        outlier_vectors=outlier_vectors,
        oov_cluster=len(record.cluster) - len(cluster_vectors),
        oov_outliers=len(record.outliers) - len(outlier_vectors),
        skipped=skip_reason is not None,
        skip_reason=skip_reason,
    )


@dataclass(slots=True)
class EvalReport:
    """Aggregate scores; opp/accuracy are None when nothing was evaluable."""

    opp: float | None
    accuracy: float | None
    cases_evaluated: int
    groups_total: int
    groups_skipped: int
    pct_cluster_oov: float
    pct_outlier_oov: float


def evaluate_dataset(
    e: Embedding, records: Sequence[DatasetRecord], policy: LookupPolicy | None = None
) -> EvalReport:
    """OPP and accuracy of an embedding over a dataset.

    Each surviving outlier is one case, weighted equally. OOV percentages
    are per-group means over every record, skipped or not.
    """
    if not records:
        raise ValueError("cannot evaluate an empty dataset")
    if policy is None:
        policy = LookupPolicy()

    position_sum = 0.0
    detected_sum = 0
    cases = 0
    skipped = 0
    cluster_oov_pcts: list[float] = []
    outlier_oov_pcts: list[float] = []
    for record in records:
        group = resolve_group(e, record, policy)
        cluster_oov_pcts.append(100.0 * group.oov_cluster / len(record.cluster))
        outlier_oov_pcts.append(100.0 * group.oov_outliers / len(record.outliers))
        if group.skipped:
            skipped += 1
            continue
        cluster = [vec for _s, vec in group.cluster_vectors]
        for _tier, _surface, outlier_vec in group.outlier_vectors:
            result = rank_outlier(cluster, outlier_vec)
            position_sum += result.outlier_position / len(cluster)
            detected_sum += int(result.detected)
            cases += 1

    return EvalReport(
        opp=100.0 * position_sum / cases if cases else None,
        accuracy=100.0 * detected_sum / cases if cases else None,
        cases_evaluated=cases,
        groups_total=len(records),
        groups_skipped=skipped,
        pct_cluster_oov=float(np.mean(cluster_oov_pcts)),
        pct_outlier_oov=float(np.mean(outlier_oov_pcts)),
    )


@dataclass(slots=True)
class IntersectionStats:
    """What vocabulary intersection removed from a dataset."""

    groups_total: int
    groups_dropped: int
    cluster_entities_total: int = 0
    cluster_entities_removed: int = 0
    outliers_total: int = 0
    outliers_removed: int = 0
    pct_cluster_removed: float = field(init=False, default=0.0)
    pct_outliers_removed: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        if self.cluster_entities_total:
            self.pct_cluster_removed = (
                100.0 * self.cluster_entities_removed / self.cluster_entities_total
            )
        if self.outliers_total:
            self.pct_outliers_removed = 100.0 * self.outliers_removed / self.outliers_total


def intersect_vocabulary(
    embeddings: Sequence[Embedding],
    records: Iterable[DatasetRecord],
    policy: LookupPolicy | None = None,
) -> tuple[list[DatasetRecord], IntersectionStats]:
    """Restrict a dataset to surfaces embeddable under every embedding.

    Groups left with fewer than two cluster items or no outliers are
    dropped. Stats count removed entities across the whole dataset.
    """
    if len(embeddings) < 2:
        raise ValueError("intersection needs at least 2 embeddings")
    if policy is None:
        policy = LookupPolicy()

    def everywhere(surface: str) -> bool:
        return all(phrase_vector(e, surface, policy) is not None for e in embeddings)

    reduced: list[DatasetRecord] = []
    groups_total = 0
    groups_dropped = 0
    cluster_total = cluster_removed = 0
    outliers_total = outliers_removed = 0
    for record in records:
        groups_total += 1
        cluster = [s for s in record.cluster if everywhere(s)]
        outliers = [(t, s) for t, s in record.outliers if everywhere(s)]
        cluster_total += len(record.cluster)
        cluster_removed += len(record.cluster) - len(cluster)
        outliers_total += len(record.outliers)
        outliers_removed += len(record.outliers) - len(outliers)
        if len(cluster) < 2 or not outliers:
            groups_dropped += 1
            continue
        reduced.append(
            DatasetRecord(
                class_id=record.class_id,
                class_label=record.class_label,
                language=record.language,
                cluster=cluster,
                outliers=outliers,
            )
        )
    stats = IntersectionStats(
        groups_total=groups_total,
        groups_dropped=groups_dropped,
        cluster_entities_total=cluster_total,
        cluster_entities_removed=cluster_removed,
        outliers_total=outliers_total,
        outliers_removed=outliers_removed,
    )
    return reduced, stats
