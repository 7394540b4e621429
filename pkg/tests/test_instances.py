import pytest

from kspace.engine import STRATEGY_NAMES, explore_tree, make_strategy, run
from kspace.instances import (
    DuplicateTruthRule,
    InstanceDoc,
    LevelMaskViolation,
    SchemaError,
    UnknownReference,
    UnsoundInitial,
    builtin_argmin,
    builtin_t3,
    gen_cascade,
    gen_random,
    load_instance,
)
from kspace.oracle import check_level_mask, is_sound, realize

from conftest import fs


class TestLoadInstance:
    def test_t3_loads(self):
        inst = load_instance(builtin_t3())
        assert inst.initial == fs()
        assert len(inst.universe) == 4

    def test_mask_violation(self):
        doc = InstanceDoc(
            atoms=[{"id": "lo", "question": "ql", "level": 1},
                   {"id": "hi", "question": "qh", "level": 2}],
            truth_rules=[{"atom": "lo", "condition": {"present": "hi"}}],
            realizer_rules=[],
            initial=[])
        with pytest.raises(LevelMaskViolation):
            load_instance(doc)

    def test_unsound_initial(self):
        doc = builtin_t3()
        doc.initial = ["a0", "b1"]
        with pytest.raises(UnsoundInitial):
            load_instance(doc)

    def test_duplicate_truth_rule(self):
        doc = builtin_t3()
        doc.truth_rules.append({"atom": "a0", "condition": {"const": False}})
        with pytest.raises(DuplicateTruthRule):
            load_instance(doc)

    def test_unknown_reference(self):
        doc = builtin_t3()
        doc.realizer_rules[0]["propose"] = ["ghost"]
        with pytest.raises(UnknownReference):
            load_instance(doc)

    def test_initial_must_be_a_state(self):
        doc = builtin_t3()
        doc.initial = ["b1", "b1'"]
        with pytest.raises(SchemaError):
            load_instance(doc)


class TestDocSchema:
    def test_roundtrip(self):
        doc = builtin_t3()
        again = InstanceDoc.from_json(doc.to_json())
        assert again == doc

    def test_unknown_top_level_key(self):
        import json
        data = json.loads(builtin_t3().to_json())
        data["extra"] = 1
        with pytest.raises(SchemaError):
            InstanceDoc.from_dict(data)

    def test_unknown_condition_key(self):
        doc = builtin_t3()
        doc.truth_rules[0]["condition"] = {"xor": []}
        with pytest.raises(SchemaError):
            InstanceDoc.from_json(doc.to_json())

    def test_bad_json(self):
        with pytest.raises(SchemaError):
            InstanceDoc.from_json("{nope")


class TestT3Dynamics:
    def test_unique_normal_form(self):
        inst = load_instance(builtin_t3())
        tree = explore_tree(fs(), inst.realizer, inst.valuation)
        assert tree.normal_forms == {fs("a0", "b1'", "c2")}

    def test_every_visited_state_is_sound(self):
        inst = load_instance(builtin_t3())
        tree = explore_tree(fs(), inst.realizer, inst.valuation)
        for node in tree.nodes:
            assert is_sound(inst.valuation, node.state)

    def test_level_mask_holds_everywhere(self):
        inst = load_instance(builtin_t3())
        tree = explore_tree(fs(), inst.realizer, inst.valuation)
        for node in tree.nodes:
            for atom in inst.universe.atoms():
                assert check_level_mask(inst.valuation, atom.id, node.state)


class TestArgmin:
    def test_every_strategy_finds_the_minimum(self):
        points = [5, 3, 7, 3, 9]
        inst = builtin_argmin(points)
        for name in STRATEGY_NAMES:
            _, final = run(inst.initial, inst.realizer, inst.valuation,
                           make_strategy(name, seed=2), 64)
            assert points[inst.witness(final)] == min(points)

    def test_single_point(self):
        inst = builtin_argmin([0])
        trace, final = run(inst.initial, inst.realizer, inst.valuation,
                           make_strategy("lowest-level-first"), 64)
        assert inst.witness(final) == 0
        assert len(trace) <= 2

    def test_descending_values_revise_repeatedly(self):
        points = [3, 2, 1, 0]
        inst = builtin_argmin(points)
        trace, final = run(inst.initial, inst.realizer, inst.valuation,
                           make_strategy("lowest-level-first"), 64)
        erasures = sum(1 for e in trace if e.level == 0 and e.source
                       and any(inst.universe.atom(a).level == 1
                               for a in e.source - e.target))
        # strict prefix minima after the initial guess: 2, 1, 0
        assert erasures == 3
        assert inst.witness(final) == 3


class TestCascade:
    def test_minimal_shape(self):
        doc = gen_cascade(1, 1, 0)
        inst = load_instance(doc)
        ids = {a.id for a in inst.universe.atoms()}
        assert ids == {"base", "right1", "wrong1_0"}
        assert inst.universe.max_level() == 1

    def test_stats_are_seed_independent(self):
        stats = set()
        for seed in (0, 1, 42):
            inst = load_instance(gen_cascade(2, 2, seed))
            tree = explore_tree(fs(), inst.realizer, inst.valuation)
            stats.add((tree.node_count, tree.edge_count, tree.max_depth,
                       tree.distinct_state_count))
        assert len(stats) == 1

    def test_regression_stats(self):
        # frozen from exhaustive exploration; the explorer is the oracle
        expected = {
            (1, 1): (6, 5, 3, 4),
            (2, 1): (16, 15, 5, 6),
            (2, 2): (36, 35, 5, 8),
            (4, 2): (486, 485, 9, 14),
        }
        for (depth, width), values in expected.items():
            inst = load_instance(gen_cascade(depth, width, 0))
            tree = explore_tree(fs(), inst.realizer, inst.valuation)
            assert (tree.node_count, tree.edge_count, tree.max_depth,
                    tree.distinct_state_count) == values
            assert len(tree.normal_forms) == 1
            assert tree.check_failures == []


class TestGenRandom:
    def test_deterministic_in_seed(self):
        assert gen_random(10, 3, 8, 5) == gen_random(10, 3, 8, 5)
        assert gen_random(10, 3, 8, 5) != gen_random(10, 3, 8, 6)

    def test_every_doc_loads(self):
        for seed in range(30):
            load_instance(gen_random(12, 4, 10, seed))

    def test_lint_clean_by_construction(self):
        for seed in range(20):
            inst = load_instance(gen_random(10, 3, 10, seed))
            tree = explore_tree(fs(), inst.realizer, inst.valuation,
                                check_lemmas=False)
            for node in tree.nodes:
                realize(inst.realizer, inst.valuation, node.state, mode="strict")

    def test_parameter_caps(self):
        from kspace.instances import InstanceError
        with pytest.raises(InstanceError):
            gen_random(1000, 3, 10, 0)
