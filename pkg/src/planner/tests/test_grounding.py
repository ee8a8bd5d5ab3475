from itertools import permutations

from django.test import SimpleTestCase

from planner.exceptions import ContractError, GroundingError
from planner.grounding import applicable, apply, goal_satisfied, ground, iter_bits
from planner.pddl import Atom, parse_domain, parse_problem
from planner.tests.helpers import TOY_DOMAIN, TOY_PROBLEM, bundled_problem, parse, reachable_atom_sets


CORRIDOR_DOMAIN = """
(define (domain corridor)
  (:requirements :strips :typing)
  (:types location)
  (:predicates (at-robot ?l - location) (connected ?a - location ?b - location) (visited ?l - location))
  (:action move
    :parameters (?from - location ?to - location)
    :precondition (and (at-robot ?from) (connected ?from ?to))
    :effect (and (at-robot ?to) (visited ?to) (not (at-robot ?from))))
)
"""

CORRIDOR_PROBLEM = """
(define (problem corridor-1)
  (:domain corridor)
  (:objects l0 l1 l2 - location)
  (:init (at-robot l0) (connected l0 l1) (connected l1 l0) (connected l1 l2) (connected l2 l1))
  (:goal (visited l2))
)
"""


class GroundToyTestCase(SimpleTestCase):
    def setUp(self):
        self.gp = parse(TOY_DOMAIN, TOY_PROBLEM)

    def test_join_bindings_use_distinct_objects(self):
        joins = self.gp.tool_actions

        self.assertEqual(len(joins), 6)
        self.assertEqual({a.o_a for a in joins}, set(permutations("abc", 2)))
        self.assertEqual(len(self.gp.actions), 8)

    def test_action_names(self):
        action = self.gp.action_named("(join-toy a b)")

        self.assertEqual(action.name, "join-toy a b")
        self.assertEqual(str(action), "(join-toy a b)")
        self.assertEqual(action.bound_objects, ("a", "b"))
        self.assertIsNone(self.gp.action_named("join-toy a a"))

    def test_apply_follows_strips_semantics(self):
        gp = self.gp
        prepare = gp.action_named("prepare")
        join = gp.action_named("join-toy a b")

        self.assertFalse(applicable(gp.init, join))
        state = apply(gp.init, prepare)
        state = apply(state, join)

        atoms = set(gp.state_atoms(state))
        self.assertIn(Atom("built"), atoms)
        self.assertNotIn(Atom("available", ("a",)), atoms)
        self.assertIn(Atom("available", ("c",)), atoms)
        self.assertFalse(applicable(state, gp.action_named("join-toy c a")))

        state = apply(state, gp.action_named("finish"))
        self.assertTrue(goal_satisfied(state, gp.goal))

    def test_apply_rejects_inapplicable_actions(self):
        with self.assertRaises(ContractError):
            apply(self.gp.init, self.gp.action_named("finish"))

    def test_state_from_atoms(self):
        gp = self.gp
        self.assertEqual(gp.state_from_atoms(gp.state_atoms(gp.init)), gp.init)
        with self.assertRaises(ContractError):
            gp.state_from_atoms([Atom("available", ("z",))])

    def test_add_wins_over_delete(self):
        text = TOY_DOMAIN.replace(":effect (ready))", ":effect (and (ready) (not (ready))))")
        gp = parse(text, TOY_PROBLEM)
        prepare = gp.action_named("prepare")

        self.assertEqual(prepare.adds & prepare.dels, 0)
        self.assertIn(Atom("ready"), gp.state_atoms(apply(gp.init, prepare)))

    def test_domain_mismatch(self):
        domain = parse_domain(TOY_DOMAIN)
        problem = parse_problem(TOY_PROBLEM, domain)
        other = parse_domain(TOY_DOMAIN.replace("(domain toy)", "(domain other)"))
        with self.assertRaises(GroundingError):
            ground(other, problem)


class GroundBundledTestCase(SimpleTestCase):
    def test_ten_objects_give_ninety_join_actions(self):
        gp = bundled_problem("hammer")
        objects = [f"obj{i}" for i in range(10)]

        self.assertEqual(len(gp.tool_actions), 90)
        self.assertEqual({a.o_a for a in gp.tool_actions}, set(permutations(objects, 2)))

    def test_two_tool_task_doubles_the_joins(self):
        gp = bundled_problem("cleaning")
        self.assertEqual(len(gp.tool_actions), 180)
        self.assertEqual({a.schema_name for a in gp.tool_actions}, {"join-squeegee", "join-rake"})

    def test_adds_and_deletes_are_disjoint(self):
        for name in ("hammer", "cooking", "cleaning"):
            with self.subTest(name=name):
                gp = bundled_problem(name)
                self.assertTrue(all(a.adds & a.dels == 0 for a in gp.actions))

    def test_atoms_are_sorted(self):
        gp = bundled_problem("squeegee")
        self.assertEqual(list(gp.atoms), sorted(gp.atoms, key=str))
        self.assertEqual([gp.atoms[i] for i in iter_bits(gp.init)], sorted(gp.problem.init, key=str))

    def test_static_pruning_keeps_reachable_states(self):
        gp = parse(CORRIDOR_DOMAIN, CORRIDOR_PROBLEM)
        unpruned = ground(gp.domain, gp.problem, prune=False)

        self.assertGreater(gp.pruned, 0)
        self.assertEqual(unpruned.pruned, 0)
        self.assertGreater(len(unpruned.actions), len(gp.actions))
        self.assertIsNone(gp.action_named("move l0 l0"))
        self.assertIsNotNone(unpruned.action_named("move l0 l0"))
        self.assertEqual(reachable_atom_sets(gp), reachable_atom_sets(unpruned))

    def test_explosion_guard_names_the_schema(self):
        gp = bundled_problem("hammer")
        with self.assertRaisesMessage(GroundingError, "schema 'join-hammer'"):
            ground(gp.domain, gp.problem, max_actions=50)
