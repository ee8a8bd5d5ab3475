import random
from math import inf

from django.test import SimpleTestCase

from planner.exceptions import ConfigurationError, ContractError
from planner.features import (
    AttachmentKind,
    FeatureScorer,
    RejectSet,
    can_attach,
    confident_pairs,
    feature_score,
    material_fit,
    shape_fit,
)
from planner.perception import load_tool_registry
from planner.schemas import ScoreParams
from planner.tests.helpers import SQUEEGEE_TRUTH, bundled_problem, bundled_scenario, make_profile


JOIN = "join-hammer"


class FeatureScoreTestCase(SimpleTestCase):
    def setUp(self):
        self.registry = load_tool_registry()
        self.spec = self.registry[JOIN]
        self.params = ScoreParams()
        self.profiles = {
            "head": make_profile("head", {"hammer_head": 0.8}, {"metal": 0.9}, pierceable=True),
            "handle": make_profile("handle", {"handle": 0.5}, {"wood": 0.9}),
            "cup": make_profile("cup", {"hammer_head": 0.4}, {"plastic": 0.9}, pierceable=True),
        }

    def score(self, pair, trust=True, reject=frozenset()):
        return feature_score(0, JOIN, pair, trust, reject, self.registry, self.profiles, self.params)

    def test_components(self):
        pair = ("head", "handle")

        self.assertAlmostEqual(shape_fit(pair, self.spec, self.profiles), 0.4)
        self.assertAlmostEqual(material_fit(pair, self.spec, self.profiles, self.params), 0.9)
        self.assertAlmostEqual(self.score(pair), 1.3)

    def test_weights(self):
        self.params = ScoreParams(lambda1=2.0, lambda2=0.5)
        self.assertAlmostEqual(self.score(("head", "handle")), 1.25)

    def test_material_constraint(self):
        self.assertEqual(material_fit(("cup", "handle"), self.spec, self.profiles, self.params), -inf)
        self.assertEqual(self.score(("cup", "handle")), -inf)

    def test_threshold_is_inclusive(self):
        self.params = ScoreParams(t=0.9)
        self.assertAlmostEqual(self.score(("head", "handle")), 1.3)

    def test_attachment_constraint(self):
        self.assertIsNone(can_attach(("head", "cup"), self.spec, self.profiles))
        self.assertEqual(self.score(("head", "cup")), -inf)

    def test_untrusted_scores_only_rejected_combinations(self):
        pair = ("cup", "handle")
        reject = RejectSet([(pair, JOIN)])

        self.assertAlmostEqual(self.score(pair, trust=False, reject=reject), 0.2)
        self.assertEqual(self.score(("head", "handle"), trust=False, reject=reject), -inf)

    def test_actions_without_objects_score_zero(self):
        self.assertEqual(self.score(()), 0.0)

    def test_missing_role_confidence_counts_as_zero(self):
        self.profiles["handle"] = make_profile("handle", {}, {"wood": 0.9})
        with self.assertLogs("planner.features", "WARNING"):
            self.assertAlmostEqual(self.score(("head", "handle")), 0.9)

    def test_unknown_object(self):
        with self.assertRaises(ContractError):
            self.score(("head", "ghost"))

    def test_unknown_action(self):
        with self.assertRaises(ConfigurationError):
            feature_score(0, "join-nothing", ("head", "handle"), True, (), self.registry, self.profiles, self.params)

    def test_score_range_over_random_profiles(self):
        rng = random.Random(5)
        finite = 0
        out_of_range = []
        for case in range(100_000):
            metal = rng.random()
            profiles = {
                name: make_profile(
                    name,
                    {"hammer_head": rng.random(), "handle": rng.random()},
                    {"metal": metal, "wood": (1.0 - metal) * rng.random()},
                    pierceable=rng.random() < 0.5,
                    can_grasp_others=rng.random() < 0.3,
                    can_be_grasped=rng.random() < 0.3,
                )
                for name in ("a", "b")
            }
            value = feature_score(0, JOIN, ("a", "b"), True, (), self.registry, profiles, self.params)
            finite += value > -inf
            if not (value == -inf or 0.0 <= value <= 2.0):
                out_of_range.append((case, value))
        self.assertEqual(out_of_range, [])
        self.assertGreater(finite, 0)


class FeatureScoreTableTestCase(SimpleTestCase):
    """Hand-computed scores for join-hammer (metal or wood heads, threshold 0.6)."""

    PIERCE = ({"pierceable": True}, {})
    GRASP = ({"can_be_grasped": True}, {"can_grasp_others": True})
    MAGNET = ({"has_magnet": True}, {"has_magnet": True})
    NONE = ({}, {})

    # head shape, handle shape, head materials, attachment flags, expected
    CASES = [
        (0.8, 0.5, {"metal": 0.9}, PIERCE, 1.3),
        (0.8, 0.5, {"wood": 0.7}, PIERCE, 1.1),
        (0.8, 0.5, {"metal": 0.6}, PIERCE, 1.0),
        (0.8, 0.5, {"metal": 0.59}, PIERCE, -inf),
        (1.0, 1.0, {"metal": 1.0}, PIERCE, 2.0),
        (0.0, 0.0, {"metal": 0.6}, PIERCE, 0.6),
        (0.3, 0.2, {"metal": 0.65, "wood": 0.3}, PIERCE, 0.71),
        (0.9, 0.9, {"plastic": 0.9}, PIERCE, -inf),
        (0.9, 0.9, {"metal": 0.9}, NONE, -inf),
        (0.7, 0.6, {"metal": 0.8}, GRASP, 1.22),
        (0.5, 0.5, {"metal": 0.75}, MAGNET, 1.0),
        (0.5, 0.5, {"metal": 0.75}, ({}, {"has_magnet": True}), -inf),
        (0.25, 0.4, {"wood": 0.95}, PIERCE, 1.05),
        (0.5, 0.2, {"metal": 0.3, "wood": 0.65}, PIERCE, 0.75),
        (0.9, 0.1, {"metal": 0.61, "wood": 0.3}, PIERCE, 0.7),
        (0.9, 0.9, {"metal": 0.9}, ({"can_grasp_others": True}, {"can_be_grasped": True}), -inf),
        (0.95, 0.95, {"metal": 0.95}, GRASP, 1.8525),
        (0.7, 0.7, {"wood": 0.75}, MAGNET, 1.24),
        (0.5, 0.0, {"metal": 0.8}, PIERCE, 0.8),
        (0.1, 0.9, {"wood": 0.6}, GRASP, 0.69),
        (0.9, 0.9, {"metal": 0.5, "wood": 0.5}, PIERCE, -inf),
    ]

    def test_table(self):
        registry = load_tool_registry()
        params = ScoreParams()
        for i, (head_conf, handle_conf, materials, (head_flags, handle_flags), expected) in enumerate(self.CASES):
            profiles = {
                "h": make_profile("h", {"hammer_head": head_conf, "handle": 0.0}, materials, **head_flags),
                "g": make_profile("g", {"hammer_head": 0.0, "handle": handle_conf}, {"wood": 0.9}, **handle_flags),
            }
            value = feature_score(0, JOIN, ("h", "g"), True, (), registry, profiles, params)
            with self.subTest(case=i):
                if expected == -inf:
                    self.assertEqual(value, -inf)
                else:
                    self.assertAlmostEqual(value, expected, delta=1e-12)

    def test_table_size(self):
        self.assertGreaterEqual(len(self.CASES), 20)


class AttachmentTestCase(SimpleTestCase):
    def setUp(self):
        self.spec = load_tool_registry()[JOIN]

    def kind(self, head, handle):
        profiles = {"x": make_profile("x", **head), "y": make_profile("y", **handle)}
        return can_attach(("x", "y"), self.spec, profiles)

    def test_kinds(self):
        self.assertEqual(self.kind({"pierceable": True}, {}), AttachmentKind.PIERCE)
        self.assertEqual(self.kind({}, {"pierceable": True}), AttachmentKind.PIERCE)
        self.assertEqual(self.kind({"can_be_grasped": True}, {"can_grasp_others": True}), AttachmentKind.GRASP)
        self.assertEqual(self.kind({"has_magnet": True}, {"has_magnet": True}), AttachmentKind.MAGNETIC)

    def test_no_mechanism(self):
        self.assertIsNone(self.kind({}, {}))
        self.assertIsNone(self.kind({"pierceable": True}, {"pierceable": True}))
        self.assertIsNone(self.kind({"can_grasp_others": True}, {"can_be_grasped": True}))
        self.assertIsNone(self.kind({"has_magnet": True}, {}))


class RejectSetTestCase(SimpleTestCase):
    def test_entries(self):
        reject = RejectSet()
        self.assertFalse(reject)

        reject.add(["b", "a"], JOIN)
        reject.update([(("a", "b"), JOIN), (("b", "a"), JOIN)])

        self.assertEqual(len(reject), 2)
        self.assertIn((("b", "a"), JOIN), reject)
        self.assertEqual(list(reject), [(("a", "b"), JOIN), (("b", "a"), JOIN)])
        self.assertEqual(reject.frozen(), frozenset({(("a", "b"), JOIN), (("b", "a"), JOIN)}))


class FeatureScorerTestCase(SimpleTestCase):
    def setUp(self):
        self.gp = bundled_problem("squeegee")
        self.scenario = bundled_scenario()
        self.scorer = FeatureScorer(self.scenario.registry(), self.scenario.profiles())

    def test_ground_truth_scores_best(self):
        scores = {a.o_a: self.scorer(self.gp.init, a, True) for a in self.gp.tool_actions}

        self.assertAlmostEqual(scores[SQUEEGEE_TRUTH], 1.7008)
        self.assertEqual(max(scores, key=scores.get), SQUEEGEE_TRUTH)
        self.assertEqual(sum(value > -inf for value in scores.values()), 15)

    def test_non_join_actions_score_zero(self):
        action = self.gp.action_named("move l0 l1")
        self.assertEqual(self.scorer(self.gp.init, action, True), 0.0)

    def test_alignment(self):
        self.scorer.check_alignment(self.gp)

        scorer = FeatureScorer({}, self.scenario.profiles())
        with self.assertRaisesMessage(ConfigurationError, "join-squeegee"):
            scorer.check_alignment(self.gp)

    def test_confident_pairs(self):
        pairs = confident_pairs(self.scenario.registry(), self.scenario.profiles())
        self.assertEqual(pairs, [(SQUEEGEE_TRUTH, "join-squeegee")])
