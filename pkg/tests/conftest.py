import pytest

from taxoutlier.formats import write_entity_records
from taxoutlier.generator import GeneratorConfig
from taxoutlier.graph import build_graph, prune_graph
from taxoutlier.refine import build_anchor_index

import kbfixture


@pytest.fixture
def sports_records():
    return kbfixture.sports_entity_records()


@pytest.fixture
def sports_graph(sports_records):
    return build_graph(sports_records)


@pytest.fixture
def pruned_graph(sports_graph):
    pruned, _stats = prune_graph(sports_graph)
    return pruned


@pytest.fixture
def anchor_entries():
    return kbfixture.sports_anchor_entries()


@pytest.fixture
def anchor_index(anchor_entries):
    return build_anchor_index(anchor_entries, "en")


@pytest.fixture
def gen_config():
    return GeneratorConfig(language="en", rng_seed=7)


@pytest.fixture
def dump_file(tmp_path, sports_records):
    path = tmp_path / "sports.kg.jsonl"
    write_entity_records(sports_records, path)
    return path


@pytest.fixture
def anchors_file(tmp_path):
    path = tmp_path / "en.anchors.tsv"
    lines = [f"{a}\t{t}\t{c}\n" for a, t, c in kbfixture.ANCHOR_ROWS]
    path.write_text("".join(lines), encoding="utf-8")
    return path
