import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kbfixture as kb
import oracles
from strategies import taxonomy_records
from taxoutlier.formats import EntityRecord
from taxoutlier.generator import (
    GeneratorConfig,
    RawGroup,
    Reject,
    candidate_classes,
    generate_dataset,
    generate_group,
    generate_results,
    outlier_candidates,
    rng_for_class,
    select_cluster,
    select_outliers,
)
from taxoutlier.graph import build_graph


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mu": 1},
        {"cluster_size": 5, "cluster_min": 6},
        {"cluster_min": 2, "cluster_size": 8},
        {"per_tier_outliers": 0},
        {"min_instances": 0},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        GeneratorConfig(**kwargs)


def test_candidate_classes_ascending_and_thresholded(sports_records, sports_graph, gen_config):
    got = list(candidate_classes(sports_graph, gen_config))
    assert got == sorted(got)
    expected = sorted(
        cls
        for cls in {t for r in sports_records for t in r.instance_of}
        if len(
            [
                r
                for r in sports_records
                if cls in r.instance_of and r.labels.get("en")
            ]
        )
        >= gen_config.min_instances
    )
    assert got == expected


def test_candidate_classes_respects_language(sports_graph):
    cfg = GeneratorConfig(language="fr", rng_seed=7)
    assert list(candidate_classes(sports_graph, cfg)) == []


def test_select_cluster_top_by_sitelinks(pruned_graph, gen_config):
    cluster = select_cluster(pruned_graph, kb.BASKETBALL, gen_config)
    assert cluster == [eid for eid, _label, _links in kb.BASKETBALL_INSTANCES]


def test_select_cluster_tie_breaks_on_id():
    records = [EntityRecord(id="Qc")]
    for eid in ("Q20", "Q11", "Q12", "Q3", "Q4", "Q5", "Q6", "Q7"):
        records.append(
            EntityRecord(id=eid, labels={"en": eid}, sitelinks=10, instance_of=["Qc"])
        )
    g = build_graph(records)
    cfg = GeneratorConfig(cluster_size=8, cluster_min=7)
    cluster = select_cluster(g, "Qc", cfg)
    assert cluster == sorted(cluster)


def test_select_cluster_rejects_small_classes(pruned_graph, gen_config):
    result = select_cluster(pruned_graph, kb.FOOTBALL, gen_config)
    assert isinstance(result, Reject)
    assert result.reason == "TooFewInstances"


def test_select_cluster_ignores_unlabeled_instances(gen_config):
    records = [EntityRecord(id="Qc")]
    for i in range(8):
        records.append(
            EntityRecord(id=f"Q{i + 1}", labels={"en": f"e{i}"}, sitelinks=5, instance_of=["Qc"])
        )
    records.append(EntityRecord(id="Q99", sitelinks=99, instance_of=["Qc"]))  # no label
    g = build_graph(records)
    cluster = select_cluster(g, "Qc", gen_config)
    assert "Q99" not in cluster


def _pruned_records(sports_records, pruned_graph):
    return [r for r in sports_records if r.id in pruned_graph.entities]


def test_outlier_candidates_match_definitions(sports_records, pruned_graph, gen_config):
    records = _pruned_records(sports_records, pruned_graph)
    o1, o2, o3 = oracles.expected_tiers(records, kb.BASKETBALL, gen_config.mu)
    assert outlier_candidates(pruned_graph, kb.BASKETBALL, "O1", gen_config) == o1
    assert outlier_candidates(pruned_graph, kb.BASKETBALL, "O2", gen_config) == o2
    assert outlier_candidates(pruned_graph, kb.BASKETBALL, "O3", gen_config) == o3
    assert {eid for eid, _l, _s in kb.FOOTBALL_INSTANCES} == o1
    hockey_ids = {eid for eid, _l, _s in kb.HOCKEY_INSTANCES}
    assert hockey_ids <= o2
    assert o3 == {eid for eid, _l, _s in kb.GUILD_INSTANCES}


def test_outlier_tiers_are_exclusive(pruned_graph, gen_config):
    own = pruned_graph.instances(kb.BASKETBALL)
    tiers = [
        outlier_candidates(pruned_graph, kb.BASKETBALL, t, gen_config)
        for t in ("O1", "O2", "O3")
    ]
    for i, a in enumerate(tiers):
        assert a.isdisjoint(own)
        for b in tiers[i + 1 :]:
            assert a.isdisjoint(b)


def test_outlier_candidates_unknown_tier(pruned_graph, gen_config):
    with pytest.raises(ValueError):
        outlier_candidates(pruned_graph, kb.BASKETBALL, "O4", gen_config)


def test_o2_strict_mode_drops_parent_overlap():
    # v's grandparent set overlaps its parent set via a shortcut edge
    records = [
        EntityRecord(id="Qgp"),
        EntityRecord(id="Qp", subclass_of=["Qgp"]),
        EntityRecord(id="Qv", subclass_of=["Qp", "Qgp"]),
        EntityRecord(id="Qsib", subclass_of=["Qgp"]),
        EntityRecord(id="Qi", labels={"en": "i"}, instance_of=["Qv"]),
        EntityRecord(id="Qo", labels={"en": "o"}, instance_of=["Qsib"]),
    ]
    g = build_graph(records)
    lax = GeneratorConfig(cluster_size=8, cluster_min=3, min_instances=1)
    strict = GeneratorConfig(
        cluster_size=8, cluster_min=3, min_instances=1, o2_exclude_parent_overlap=True
    )
    # grandparents of Qv: {Qgp} (via Qp) and Qgp is also a direct parent
    assert outlier_candidates(g, "Qv", "O2", lax) == frozenset()  # already in O1
    assert outlier_candidates(g, "Qv", "O1", lax) == {"Qo"}
    assert outlier_candidates(g, "Qv", "O2", strict) == frozenset()


def test_select_outliers_expected_picks(pruned_graph, gen_config):
    rng = rng_for_class(gen_config.rng_seed, kb.BASKETBALL)
    picks = select_outliers(pruned_graph, kb.BASKETBALL, gen_config, rng)
    by_tier: dict[str, list[str]] = {"O1": [], "O2": [], "O3": []}
    for tier, eid in picks:
        by_tier[tier].append(eid)
    assert by_tier["O1"] == ["Q164988", "Q165071"]  # Cowboys 88, Packers 77
    assert by_tier["O2"] == ["Q186310", "Q191477"]  # Canadiens 72, Maple Leafs 68
    assert sorted(by_tier["O3"]) == ["Q501001", "Q501002"]


def test_select_outliers_respects_sitelink_floor(pruned_graph, gen_config):
    rng = rng_for_class(gen_config.rng_seed, kb.BASKETBALL)
    picks = {eid for _tier, eid in select_outliers(pruned_graph, kb.BASKETBALL, gen_config, rng)}
    assert "Q200242" not in picks  # Red Wings, 5 sitelinks
    assert "Q500001" not in picks  # Globetrotters, 9 sitelinks


def test_select_outliers_deterministic_per_seed(pruned_graph, gen_config):
    first = select_outliers(
        pruned_graph, kb.BASKETBALL, gen_config, rng_for_class(7, kb.BASKETBALL)
    )
    second = select_outliers(
        pruned_graph, kb.BASKETBALL, gen_config, rng_for_class(7, kb.BASKETBALL)
    )
    assert first == second


def test_rng_streams_differ_by_class():
    draws = {cls: rng_for_class(0, cls).random() for cls in ("Q1", "Q2", "Q3")}
    assert len(set(draws.values())) == 3
    assert rng_for_class(0, "Q1").random() == draws["Q1"]


def test_generate_group_no_outliers_reject():
    records = [EntityRecord(id="Qisland")]
    for i in range(8):
        records.append(
            EntityRecord(
                id=f"Q{i + 1}", labels={"en": f"m{i}"}, sitelinks=20, instance_of=["Qisland"]
            )
        )
    g = build_graph(records)
    cfg = GeneratorConfig()
    result = generate_group(g, "Qisland", cfg)
    assert isinstance(result, Reject)
    assert result.reason == "NoOutliers"


def test_generate_results_covers_all_candidates(pruned_graph, gen_config):
    results = dict(generate_results(pruned_graph, gen_config))
    assert set(results) == set(candidate_classes(pruned_graph, gen_config))
    accepted = [v for v, r in results.items() if isinstance(r, RawGroup)]
    assert accepted == [kb.BASKETBALL]


def test_generate_results_thread_count_invariant(pruned_graph, gen_config):
    single = list(generate_results(pruned_graph, gen_config, threads=1))
    threaded = list(generate_results(pruned_graph, gen_config, threads=8))
    assert single == threaded


def test_generate_dataset_filters_rejects(pruned_graph, gen_config):
    groups = list(generate_dataset(pruned_graph, gen_config))
    assert len(groups) == 1
    group = groups[0]
    assert group.class_id == kb.BASKETBALL
    assert len(group.cluster_ids) == 8
    assert len(group.outlier_ids) == 6


SMALL_CFG = GeneratorConfig(
    language="en",
    mu=3,
    cluster_size=4,
    cluster_min=3,
    per_tier_outliers=2,
    min_outlier_sitelinks=0,
    min_instances=1,
    rng_seed=11,
)


@settings(max_examples=50, deadline=None)
@given(records=taxonomy_records(max_nodes=14))
def test_tier_candidates_match_oracle_on_random_graphs(records):
    g = build_graph(records)
    for v in g.class_ids():
        o1, o2, o3 = oracles.expected_tiers(records, v, SMALL_CFG.mu)
        assert outlier_candidates(g, v, "O1", SMALL_CFG) == o1
        assert outlier_candidates(g, v, "O2", SMALL_CFG) == o2
        assert outlier_candidates(g, v, "O3", SMALL_CFG) == o3


@settings(max_examples=50, deadline=None)
@given(records=taxonomy_records(max_nodes=14))
def test_generated_groups_satisfy_invariants(records):
    g = build_graph(records)
    for group in generate_dataset(g, SMALL_CFG):
        assert SMALL_CFG.cluster_min <= len(group.cluster_ids) <= SMALL_CFG.cluster_size
        assert 1 <= len(group.outlier_ids) <= 3 * SMALL_CFG.per_tier_outliers
        tiers = oracles.expected_tiers(records, group.class_id, SMALL_CFG.mu)
        tier_sets = dict(zip(("O1", "O2", "O3"), tiers))
        counts = {"O1": 0, "O2": 0, "O3": 0}
        outlier_ids = set()
        for tier, eid in group.outlier_ids:
            counts[tier] += 1
            outlier_ids.add(eid)
            assert eid in tier_sets[tier]
        assert all(n <= SMALL_CFG.per_tier_outliers for n in counts.values())
        assert len(outlier_ids) == len(group.outlier_ids)
        assert outlier_ids.isdisjoint(group.cluster_ids)
