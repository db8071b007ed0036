"""Scenario generation, serialization, and synthetic log statistics."""

import numpy as np
import pytest

from trustpath import ConfigError, build_graph, direct_trust_ec
from trustpath.config import AppConfig, GenerationConfig
from trustpath.scenario import (
    Behavior,
    clustered_behaviors,
    generate_scenario,
    load_scenario,
    ordered_record_pairs,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    synthesize_logs,
)


def small_gen(**kw):
    base = dict(terminals_class_a=4, terminals_class_b=4, ec_count=2,
                arena_m=100.0, link_radius_m=60.0)
    base.update(kw)
    return GenerationConfig(**base)


APP = AppConfig()


class TestGenerate:
    def test_deterministic(self):
        gen = small_gen()
        s1 = generate_scenario(gen, APP.radio, APP.tasks, seed=3)
        s2 = generate_scenario(gen, APP.radio, APP.tasks, seed=3)
        assert scenario_to_dict(s1) == scenario_to_dict(s2)

    def test_population_counts_and_prices(self):
        gen = small_gen()
        sc = generate_scenario(gen, APP.radio, APP.tasks, seed=0)
        topo = sc.topology
        assert len(topo.terminals()) == 8
        assert len(topo.ecs()) == 2
        prices = sorted({topo.device(d).price for d in topo.terminals()})
        assert prices == [0.01, 0.02]
        assert all(topo.device(d).price == 0.002 for d in topo.ecs())

    def test_owner_reaches_an_ec(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=1)
        reach = sc.topology.reachable_from(sc.owner)
        assert any(sc.topology.device(d).is_ec for d in reach)

    def test_impossible_generation_errors_out(self):
        gen = small_gen(link_radius_m=0.001, connect_retries=3)
        with pytest.raises(ConfigError):
            generate_scenario(gen, APP.radio, APP.tasks, seed=0)

    def test_tasks_built_with_owner(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=0)
        assert set(sc.tasks) == {"face_recognition", "virus_scanning"}
        assert sc.tasks["face_recognition"].owner == sc.owner
        assert sc.tasks["face_recognition"].size_bits == 1.6e9

    def test_profiles_private_fields_present(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=0)
        for dev_id in sc.topology.ecs():
            prof = sc.profiles[dev_id]
            assert prof.available_compute_seconds == 1000.0
            assert prof.available_storage_bits == pytest.approx(3.072e13)


class TestScenarioIO:
    def test_file_round_trip(self, tmp_path):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=5)
        path = tmp_path / "scenario.json"
        save_scenario(sc, path)
        sc2 = load_scenario(path)
        assert scenario_to_dict(sc2) == scenario_to_dict(sc)

    def test_dict_round_trip_preserves_behaviors(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=5)
        sc2 = scenario_from_dict(scenario_to_dict(sc))
        assert sc2.behaviors == sc.behaviors
        assert sc2.profiles == sc.profiles

    def test_bad_format_rejected(self):
        with pytest.raises(ConfigError):
            scenario_from_dict({"format": "something-else"})


class TestSynthesizeLogs:
    def test_deterministic(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=2)
        f1, c1 = synthesize_logs(sc, 10, seed=7)
        f2, c2 = synthesize_logs(sc, 10, seed=7)
        assert f1 == f2 and c1 == c2

    def test_record_counts_per_pair(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=2)
        fwd, cmp = synthesize_logs(sc, 7, seed=1)
        pairs = ordered_record_pairs(sc.topology)
        assert len(fwd) + len(cmp) == 7 * len(pairs)
        graph = build_graph(sc.topology.devices.values(), fwd, cmp)
        assert all(e.frequency == 7 for e in graph.edges.values())

    def test_perfect_behavior_gives_unit_trust(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=2)
        behaviors = {}
        for dev_id in sc.topology.device_ids():
            is_ec = sc.topology.device(dev_id).is_ec
            behaviors[dev_id] = Behavior(0.0, 1.0, ec_success=1.0 if is_ec else None)
        sc = sc.with_behaviors(behaviors)
        fwd, cmp = synthesize_logs(sc, 5, seed=1)
        graph = build_graph(sc.topology.devices.values(), fwd, cmp)
        assert all(e.weight == 1.0 for e in graph.edges.values())

    def test_ec_success_rate_recovered(self):
        # law of large numbers: 1000 records recover p to within 0.03
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=2)
        behaviors = dict(sc.behaviors)
        target_ec = sc.topology.ecs()[0]
        behaviors[target_ec] = Behavior(0.0, 1.0, ec_success=0.75)
        sc = sc.with_behaviors(behaviors)
        _, cmp = synthesize_logs(sc, 1000, seed=3)
        recs = [r for r in cmp if r.dst == target_ec]
        src = recs[0].src
        recs = [r for r in recs if r.src == src]
        assert len(recs) == 1000
        assert direct_trust_ec(recs) == pytest.approx(0.75, abs=0.03)

    def test_ec_pairs_get_no_records(self):
        sc = generate_scenario(small_gen(ec_count=3), APP.radio, APP.tasks, seed=4)
        pairs = ordered_record_pairs(sc.topology)
        ecs = set(sc.topology.ecs())
        assert all(src not in ecs for src, _ in pairs)


class TestClusteredBehaviors:
    def test_two_value_structure(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=2)
        sc = clustered_behaviors(sc, seed=9)
        tfsrs = {round(sc.behaviors[d].tfsr, 1) for d in sc.topology.terminals()}
        assert tfsrs <= {0.2, 0.3, 1.0}

    def test_deterministic(self):
        sc = generate_scenario(small_gen(), APP.radio, APP.tasks, seed=2)
        a = clustered_behaviors(sc, seed=9).behaviors
        b = clustered_behaviors(sc, seed=9).behaviors
        assert a == b
