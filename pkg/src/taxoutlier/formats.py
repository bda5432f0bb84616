"""File formats: entity dumps, anchor dictionaries, datasets, embeddings.

Every reader is streaming: peak memory is bounded by the longest line, not
the file, so multi-gigabyte dumps can be fed through without staging.

On-disk formats handled here:

* simplified entity dump (``.kg.jsonl``): one JSON object per line with
  the :class:`EntityRecord` fields;
* real knowledge-base dump entities (one JSON entity object at a time,
  with ``P31``/``P279`` claims and sitelinks);
* anchor dictionaries (``.anchors.tsv``): ``anchor<TAB>title<TAB>count``;
* datasets (``.dataset.jsonl``): one test group per line;
* embeddings: whitespace-separated text vectors with an optional
  ``vocab_size dimension`` header line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any, Iterable, Iterator, Literal

import numpy as np

TIERS = ("O1", "O2", "O3")

INSTANCE_OF_PROPERTY = "P31"
SUBCLASS_OF_PROPERTY = "P279"
DEFAULT_DISAMBIGUATION_CLASS = "Q4167410"

# Invariants of the canonical dataset format; callers running an off-label
# generator configuration can override them on read/write.
CLUSTER_MIN = 7
CLUSTER_MAX = 8
MAX_OUTLIERS = 6
MAX_PER_TIER = 2


class ParseError(ValueError):
    """Malformed input, with position info where available."""

    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        loc = ""
        if line is not None:
            loc += f" at line {line}"
        if offset is not None:
            loc += f" at byte offset {offset}"
        super().__init__(message + loc)
        self.line = line
        self.offset = offset


@dataclass(slots=True)
class EntityRecord:
    """One entity of the simplified dump: labels, counts, taxonomy edges."""

    id: str
    labels: dict[str, str] = field(default_factory=dict)
    sitelinks: int = 0
    instance_of: list[str] = field(default_factory=list)
    subclass_of: list[str] = field(default_factory=list)
    is_disambiguation: bool = False
    wiki_titles: dict[str, str] = field(default_factory=dict)


@dataclass(slots=True, frozen=True)
class AnchorEntry:
    """One (anchor string, target page, occurrence count) observation."""

    anchor: str
    target_title: str
    count: int


@dataclass(slots=True)
class DatasetRecord:
    """One test group: a cluster of surfaces plus tiered outlier surfaces."""

    class_id: str
    class_label: str
    language: str
    cluster: list[str]
    outliers: list[tuple[str, str]]  # (tier, surface)


def _open_text(source: str | Path | IO[str], mode: str = "r") -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, mode, encoding="utf-8", newline=""), True
    return source, False


# ---------------------------------------------------------------------------
# simplified entity dump
# ---------------------------------------------------------------------------

def parse_entity_record(line: str, line_no: int | None = None) -> EntityRecord:
    """Decode one simplified-dump line. Unknown keys are ignored."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        byte_off = len(line[: e.pos].encode("utf-8"))
        raise ParseError(f"malformed entity line: {e.msg}", line=line_no, offset=byte_off) from None
    if not isinstance(obj, dict):
        raise ParseError("entity line is not an object", line=line_no)
    eid = obj.get("id")
    if not isinstance(eid, str) or not eid:
        raise ParseError("entity line is missing a non-empty 'id'", line=line_no)

    def _str_map(key: str) -> dict[str, str]:
        val = obj.get(key, {})
        if not isinstance(val, dict):
            raise ParseError(f"'{key}' must be an object", line=line_no)
        out = {}
        for k, v in val.items():
            if not isinstance(v, str):
                raise ParseError(f"'{key}' values must be strings", line=line_no)
            out[str(k)] = v
        return out

    def _id_list(key: str) -> list[str]:
        val = obj.get(key, [])
        if not isinstance(val, list) or not all(isinstance(x, str) for x in val):
            raise ParseError(f"'{key}' must be an array of ids", line=line_no)
        return val

    sitelinks = obj.get("sitelinks", 0)
    if not isinstance(sitelinks, int) or isinstance(sitelinks, bool) or sitelinks < 0:
        raise ParseError("'sitelinks' must be a non-negative integer", line=line_no)

    return EntityRecord(
        id=eid,
        labels=_str_map("labels"),
        sitelinks=sitelinks,
        instance_of=_id_list("instance_of"),
        subclass_of=_id_list("subclass_of"),
        is_disambiguation=bool(obj.get("is_disambiguation", False)),
        wiki_titles=_str_map("wiki_titles"),
    )


def read_entity_records(source: str | Path | IO[str]) -> Iterator[EntityRecord]:
    """Stream entity records from a simplified dump, one line at a time."""
    f, owned = _open_text(source)
    try:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            yield parse_entity_record(line, line_no=line_no)
    finally:
        if owned:
            f.close()


def entity_record_to_json(rec: EntityRecord) -> str:
    obj = {
        "id": rec.id,
        "labels": rec.labels,
        "sitelinks": rec.sitelinks,
        "instance_of": rec.instance_of,
        "subclass_of": rec.subclass_of,
        "is_disambiguation": rec.is_disambiguation,
        "wiki_titles": rec.wiki_titles,
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_entity_records(records: Iterable[EntityRecord], sink: str | Path | IO[str]) -> int:
    """Write a simplified dump; returns the number of records written."""
    f, owned = _open_text(sink, "w")
    n = 0
    try:
        for rec in records:
            f.write(entity_record_to_json(rec))
            f.write("\n")
            n += 1
    finally:
        if owned:
            f.close()
    return n


# ---------------------------------------------------------------------------
# real knowledge-base dump entities
# ---------------------------------------------------------------------------

def _claim_targets(claims: Any, prop: str) -> list[str]:
    if not isinstance(claims, dict):
        return []
    out: list[str] = []
    statements = claims.get(prop, [])
    if not isinstance(statements, list):
        return out
    for st in statements:
        if not isinstance(st, dict):
            continue
        snak = st.get("mainsnak")
        if not isinstance(snak, dict):
            continue
        datavalue = snak.get("datavalue")
        if not isinstance(datavalue, dict):
            continue
        value = datavalue.get("value")
        if isinstance(value, dict) and isinstance(value.get("id"), str):
            out.append(value["id"])
    return out


def parse_wikidata_entity(
    raw: str | dict[str, Any],
    disambiguation_class: str = DEFAULT_DISAMBIGUATION_CLASS,
) -> EntityRecord | None:
    """Extract an :class:`EntityRecord` from one real-dump entity object.

    Returns None (skip) for non-item entries such as properties. Claims or
    sitelinks of unexpected shape are ignored rather than fatal; only an
    object without a usable id is an error.
    """
    if isinstance(raw, str):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(f"malformed entity object: {e.msg}", offset=e.pos) from None
    else:
        obj = raw
    if not isinstance(obj, dict):
        raise ParseError("entity is not an object")
    eid = obj.get("id")
    if not isinstance(eid, str) or not eid:
        raise ParseError("entity object has no id")
    etype = obj.get("type")
    if etype is not None and etype != "item":
        return None
    if not eid.startswith("Q"):
        return None

    labels: dict[str, str] = {}
    raw_labels = obj.get("labels", {})
    if isinstance(raw_labels, dict):
        for lang, entry in raw_labels.items():
            if isinstance(entry, dict) and isinstance(entry.get("value"), str):
                labels[str(lang)] = entry["value"]

    claims = obj.get("claims", {})
    instance_of = _claim_targets(claims, INSTANCE_OF_PROPERTY)
    subclass_of = _claim_targets(claims, SUBCLASS_OF_PROPERTY)

    sitelink_count = 0
    wiki_titles: dict[str, str] = {}
    raw_sitelinks = obj.get("sitelinks", {})
    if isinstance(raw_sitelinks, dict):
        sitelink_count = len(raw_sitelinks)
        for site, entry in raw_sitelinks.items():
            if not (isinstance(site, str) and site.endswith("wiki")):
                continue
            if isinstance(entry, dict) and isinstance(entry.get("title"), str):
                wiki_titles[site[: -len("wiki")]] = entry["title"]

    return EntityRecord(
        id=eid,
        labels=labels,
        sitelinks=sitelink_count,
        instance_of=instance_of,
        subclass_of=subclass_of,
        is_disambiguation=disambiguation_class in instance_of,
        wiki_titles=wiki_titles,
    )


def read_wikidata_dump(
    source: str | Path | IO[str],
    disambiguation_class: str = DEFAULT_DISAMBIGUATION_CLASS,
) -> Iterator[EntityRecord]:
    """Stream entity records from a real dump laid out as a JSON array with
    one entity per line (bracket and comma cruft tolerated)."""
    f, owned = _open_text(source)
    try:
        for line in f:
            text = line.strip()
            if not text or text in ("[", "]"):
                continue
            rec = parse_wikidata_entity(text.rstrip(","), disambiguation_class)
            if rec is not None:
                yield rec
    finally:
        if owned:
            f.close()


# ---------------------------------------------------------------------------
# anchor dictionaries
# ---------------------------------------------------------------------------

def parse_anchor_record(line: str, line_no: int | None = None) -> AnchorEntry:
    """Parse one ``anchor<TAB>target_title<TAB>count`` line."""
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 3:
        raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}", line=line_no)
    anchor, title, count_text = fields
    if not anchor:
        raise ParseError("empty anchor string", line=line_no)
    try:
        count = int(count_text)
    except ValueError:
        raise ParseError(f"count is not an integer: {count_text!r}", line=line_no) from None
    if count < 1:
        raise ParseError(f"count must be >= 1, got {count}", line=line_no)
    return AnchorEntry(anchor=anchor, target_title=title, count=count)


def read_anchor_file(source: str | Path | IO[str]) -> Iterator[AnchorEntry]:
    f, owned = _open_text(source)
    try:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            yield parse_anchor_record(line, line_no=line_no)
    finally:
        if owned:
            f.close()


# ---------------------------------------------------------------------------
# dataset serialization
# ---------------------------------------------------------------------------

def validate_dataset_record(
    rec: DatasetRecord,
    index: int,
    min_cluster: int = CLUSTER_MIN,
    max_cluster: int = CLUSTER_MAX,
    max_outliers: int = MAX_OUTLIERS,
    max_per_tier: int = MAX_PER_TIER,
) -> None:
    """Raise ParseError naming the record index and the violated rule."""

    def bad(rule: str) -> ParseError:
        return ParseError(f"dataset record {index}: {rule}")

    if not rec.class_id:
        raise bad("class_id must be non-empty")
    if not (min_cluster <= len(rec.cluster) <= max_cluster):
        raise bad(
            f"cluster size must be in [{min_cluster}, {max_cluster}], got {len(rec.cluster)}"
        )
    if not (1 <= len(rec.outliers) <= max_outliers):
        raise bad(f"outlier count must be in [1, {max_outliers}], got {len(rec.outliers)}")
    per_tier: dict[str, int] = {}
    for tier, _surface in rec.outliers:
        if tier not in TIERS:
            raise bad(f"unknown outlier tier {tier!r}")
        per_tier[tier] = per_tier.get(tier, 0) + 1
    for tier, n in per_tier.items():
        if n > max_per_tier:
            raise bad(f"more than {max_per_tier} outliers in tier {tier}")
    surfaces = list(rec.cluster) + [s for _t, s in rec.outliers]
    if len(set(surfaces)) != len(surfaces):
        dupes = sorted({s for s in surfaces if surfaces.count(s) > 1})
        raise bad(f"surface appears twice: {dupes}")


def dataset_record_to_json(rec: DatasetRecord) -> str:
    obj = {
        "class_id": rec.class_id,
        "class_label": rec.class_label,
        "language": rec.language,
        "cluster": rec.cluster,
        "outliers": [{"tier": t, "surface": s} for t, s in rec.outliers],
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_dataset(
    records: Iterable[DatasetRecord],
    sink: str | Path | IO[str],
    min_cluster: int = CLUSTER_MIN,
    max_cluster: int = CLUSTER_MAX,
) -> int:
    """Write the canonical dataset format; returns records written."""
    f, owned = _open_text(sink, "w")
    n = 0
    try:
        for i, rec in enumerate(records):
            validate_dataset_record(rec, i, min_cluster=min_cluster, max_cluster=max_cluster)
            f.write(dataset_record_to_json(rec))
            f.write("\n")
            n += 1
    finally:
        if owned:
            f.close()
    return n


def read_dataset(
    source: str | Path | IO[str],
    min_cluster: int = CLUSTER_MIN,
    max_cluster: int = CLUSTER_MAX,
) -> list[DatasetRecord]:
    """Read and validate a canonical dataset file."""
    f, owned = _open_text(source)
    records: list[DatasetRecord] = []
    try:
        for line in f:
            if not line.strip():
                continue
            index = len(records)
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"dataset record {index}: malformed JSON: {e.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(f"dataset record {index}: not an object")
            try:
                outliers = [(o["tier"], o["surface"]) for o in obj.get("outliers", [])]
                rec = DatasetRecord(
                    class_id=obj["class_id"],
                    class_label=obj["class_label"],
                    language=obj["language"],
                    cluster=list(obj["cluster"]),
                    outliers=outliers,
                )
            except (KeyError, TypeError) as e:
                raise ParseError(f"dataset record {index}: missing or invalid field ({e})") from None
            validate_dataset_record(rec, index, min_cluster=min_cluster, max_cluster=max_cluster)
            records.append(rec)
    finally:
        if owned:
            f.close()
    return records


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------

class Embedding:
    """Token to dense-vector table.

    ``supports_phrases`` marks tables that contain multi-token entries
    (joined with ``phrase_joiner``), enabling greedy subphrase lookup.
    """

    def __init__(
        self,
        dimension: int,
        table: dict[str, np.ndarray],
        supports_phrases: bool = False,
        phrase_joiner: str = "_",
        duplicates_skipped: int = 0,
    ):
        self.dimension = dimension
        self.table = table
        self.supports_phrases = supports_phrases
        self.phrase_joiner = phrase_joiner
        self.duplicates_skipped = duplicates_skipped
        self._folded: dict[str, str] | None = None
        self._max_phrase_tokens: int | None = None

    def __contains__(self, token: str) -> bool:
        return token in self.table

    def __len__(self) -> int:
        return len(self.table)

    def get(self, token: str, case_fold: bool = False) -> np.ndarray | None:
        """Exact lookup, with an optional case-folded second try."""
        vec = self.table.get(token)
        if vec is not None or not case_fold:
            return vec
        if self._folded is None:
            folded: dict[str, str] = {}
            for key in self.table:
                folded.setdefault(key.casefold(), key)
            self._folded = folded
        original = self._folded.get(token.casefold())
        return self.table[original] if original is not None else None

    @property
    def max_phrase_tokens(self) -> int:
        """Longest phrase (in tokens) present in the vocabulary."""
        if self._max_phrase_tokens is None:
            longest = 1
            if self.supports_phrases:
                for key in self.table:
                    n = key.count(self.phrase_joiner) + 1
                    if n > longest:
                        longest = n
            self._max_phrase_tokens = longest
        return self._max_phrase_tokens


def _looks_like_header(parts: list[str]) -> bool:
    if len(parts) != 2:
        return False
    try:
        int(parts[0])
        int(parts[1])
    except ValueError:
        return False
    return True


def load_embedding(
    source: str | Path | IO[str],
    header_mode: Literal["auto", "present", "absent"] = "auto",
    supports_phrases: bool = False,
    phrase_joiner: str = "_",
) -> Embedding:
    """Load a text-format embedding table.

    ``auto`` treats a two-field all-numeric first line as a
    ``vocab_size dimension`` header; otherwise the dimension is inferred
    from the first data line. Duplicate tokens keep their first vector.
    """
    f, owned = _open_text(source)
    table: dict[str, np.ndarray] = {}
    dimension: int | None = None
    duplicates = 0
    try:
        for line_no, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if line_no == 1 and header_mode != "absent":
                if header_mode == "present":
                    if not _looks_like_header(parts):
                        raise ParseError("expected 'vocab_size dimension' header", line=1)
                    dimension = int(parts[1])
                    continue
                if _looks_like_header(parts):
                    dimension = int(parts[1])
                    continue
            token, comps = parts[0], parts[1:]
            if dimension is None:
                dimension = len(comps)
                if dimension == 0:
                    raise ParseError("data line has no vector components", line=line_no)
            if len(comps) != dimension:
                raise ParseError(
                    f"expected {dimension} components, got {len(comps)}", line=line_no
                )
            try:
                vec = np.array(comps, dtype=np.float64)
            except ValueError:
                raise ParseError("non-numeric vector component", line=line_no) from None
            if token in table:
                duplicates += 1
                continue
            table[token] = vec
    finally:
        if owned:
            f.close()
    if not table:
        raise ParseError("embedding file has no data lines")
    assert dimension is not None
    return Embedding(
        dimension=dimension,
        table=table,
        supports_phrases=supports_phrases,
        phrase_joiner=phrase_joiner,
        duplicates_skipped=duplicates,
    )
