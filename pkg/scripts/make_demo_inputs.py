"""Write a small self-contained demo corpus: entity dump, anchors, vectors.

The taxonomy has one dense class (capital city) plus sibling, cousin, and
far-away classes so a generate run produces outliers in all three tiers.
Filler nodes pad the chains so nothing useful sits within the near-root
prune radius.
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

from taxoutlier.formats import EntityRecord, write_entity_records
from taxoutlier.graph import DEFAULT_ROOT

CAPITALS = [
    ("Q1001", "Paris", 300),
    ("Q1002", "Berlin", 280),
    ("Q1003", "Madrid", 260),
    ("Q1004", "Rome", 240),
    ("Q1005", "Vienna", 220),
    ("Q1006", "Lisbon", 200),
    ("Q1007", "Warsaw", 180),
    ("Q1008", "Prague", 160),
    ("Q1009", "Athens", 140),
]
PORTS = [
    ("Q1101", "Hamburg", 150),
    ("Q1102", "Rotterdam", 120),
    ("Q1103", "Marseille", 110),
]
VILLAGES = [
    ("Q1201", "Hallstatt", 90),
    ("Q1202", "Giethoorn", 70),
    ("Q1203", "Bibury", 50),
]
BANDS = [
    ("Q1301", "Ramones", 130),
    ("Q1302", "The Clash", 125),
    ("Q1303", "Sex Pistols", 115),
]

ANCHOR_ROWS = [
    ("Paris", "Paris", 900),
    ("City of Light", "Paris", 100),
    ("The Clash", "The Clash", 50),
    ("Sex Pistols", "Sex Pistols", 30),
]


def _cls(eid: str, label: str, *parents: str) -> EntityRecord:
    return EntityRecord(id=eid, labels={"en": label}, subclass_of=list(parents))


def _inst(eid: str, label: str, sitelinks: int, cls: str) -> EntityRecord:
    return EntityRecord(
        id=eid,
        labels={"en": label},
        sitelinks=sitelinks,
        instance_of=[cls],
        wiki_titles={"en": label},
    )


def demo_records() -> list[EntityRecord]:
    records = [
        EntityRecord(id=DEFAULT_ROOT, labels={"en": "entity"}),
        # filler chain keeps the settlement branch outside the prune radius
        _cls("Q100", "continuant", DEFAULT_ROOT),
        _cls("Q101", "independent continuant", "Q100"),
        _cls("Q102", "material thing", "Q101"),
        _cls("Q110", "geographic region", "Q102"),
        _cls("Q111", "human settlement", "Q110"),
        _cls("Q112", "city", "Q111"),
        _cls("Q113", "capital city", "Q112"),
        _cls("Q114", "port city", "Q112"),
        _cls("Q115", "village", "Q111"),
        # a second, unrelated branch for far-tier outliers
        _cls("Q200", "occurrent", DEFAULT_ROOT),
        _cls("Q201", "social formation", "Q200"),
        _cls("Q202", "collective", "Q201"),
        _cls("Q210", "organization", "Q202"),
        _cls("Q211", "musical ensemble", "Q210"),
        _cls("Q212", "band", "Q211"),
        _cls("Q213", "punk band", "Q212"),
    ]
    for eid, label, sitelinks in CAPITALS:
        records.append(_inst(eid, label, sitelinks, "Q113"))
    for eid, label, sitelinks in PORTS:
        records.append(_inst(eid, label, sitelinks, "Q114"))
    for eid, label, sitelinks in VILLAGES:
        records.append(_inst(eid, label, sitelinks, "Q115"))
    for eid, label, sitelinks in BANDS:
        records.append(_inst(eid, label, sitelinks, "Q213"))
    return records


def demo_vectors() -> dict[str, list[float]]:
    """Unit vectors: capitals bunched, ports near, villages off, bands far."""

    def planar(theta: float) -> list[float]:
        return [math.cos(theta), math.sin(theta), 0.0, 0.0]

    table: dict[str, list[float]] = {}
    for i, (_eid, label, _s) in enumerate(CAPITALS):
        table[label] = planar(0.004 * i)
    for i, (_eid, label, _s) in enumerate(PORTS):
        table[label] = planar(0.35 + 0.01 * i)
    for i, (_eid, label, _s) in enumerate(VILLAGES):
        table[label] = planar(0.8 + 0.01 * i)
    for i, (_eid, label, _s) in enumerate(BANDS):
        table[label] = [0.0, 0.0, 1.0, 0.05 * i]
    return table


def write_demo_inputs(outdir: Path) -> dict[str, Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    dump = outdir / "demo.kg.jsonl"
    anchors = outdir / "demo.anchors.tsv"
    vectors = outdir / "demo.vec.txt"

    write_entity_records(demo_records(), dump)
    anchors.write_text(
        "".join(f"{a}\t{t}\t{c}\n" for a, t, c in ANCHOR_ROWS), encoding="utf-8"
    )
    with open(vectors, "w", encoding="utf-8") as f:
        for surface, vec in demo_vectors().items():
            token = surface.replace(" ", "_")
            f.write(token + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")
    return {"dump": dump, "anchors": anchors, "vectors": vectors}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--output-dir", type=Path, default=Path("demo"))
    args = parser.parse_args()
    paths = write_demo_inputs(args.output_dir)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
