import numpy as np
from django.test import SimpleTestCase, tag

from arena.services import (
    run_competition,
    run_intersection_episodes,
    run_soccer_match,
    run_tournament,
)
from baselines.agents import HandbuiltSoccerAgent, RandomAgent, StrategyAgent
from environments.intersection import FAST, SLOW, build_intersection
from environments.soccer import PLAYER_A, PLAYER_B, build_soccer
from posg.exceptions import DimensionMismatch
from posg.fixtures import random_model, single_state_model
from posg.tables import StrategyTable


def random_pair(model):
    return RandomAgent(model, "a"), RandomAgent(model.swapped(), "b")


class RunCompetitionTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.model = random_model(seed=3, n_states=5, n_self=3, n_other=2)

    def test_same_seed_same_result(self):
        agent_a, agent_b = random_pair(self.model)
        first = run_competition(self.model, agent_a, agent_b, seed=17)
        second = run_competition(self.model, agent_a, agent_b, seed=17)
        self.assertEqual(first, second)
        self.assertNotEqual(
            first, run_competition(self.model, agent_a, agent_b, seed=18)
        )

    def test_zero_stages(self):
        result = run_competition(self.model, *random_pair(self.model), stages=0)
        self.assertEqual(result.returns, (0.0, 0.0))
        self.assertEqual(result.stages, 0)

    def test_zero_sum_returns_cancel(self):
        result = run_competition(self.model, *random_pair(self.model), seed=4)
        self.assertEqual(result.returns[0], -result.returns[1])
        bound = self.model.r_abs_max / (1 - 0.95)
        self.assertLessEqual(abs(result.returns[0]), bound)

    def test_seats_must_match_the_model(self):
        agent = RandomAgent(self.model)
        with self.assertRaises(DimensionMismatch):
            run_competition(self.model, agent, agent)

    def test_agents_are_not_mutated(self):
        agent_a, agent_b = random_pair(self.model)
        before = agent_a.rng.bit_generator.state
        run_competition(self.model, agent_a, agent_b, seed=1)
        self.assertEqual(agent_a.rng.bit_generator.state, before)


class RunTournamentTests(SimpleTestCase):
    def test_constant_reward(self):
        model = single_state_model(reward=0.5, discount=0.9, n_self=2, n_other=2)
        summary = run_tournament(model, *random_pair(model), n_competitions=8)
        expected = sum(0.5 * 0.95**i for i in range(40))
        self.assertAlmostEqual(summary.mean[0], expected, places=12)
        self.assertEqual(summary.halfwidth[0], 0.0)

    def test_split_tournaments_pool_exactly(self):
        model = random_model(seed=6)
        agents = random_pair(model)
        whole = run_tournament(model, *agents, n_competitions=10, seed=9)
        first = run_tournament(model, *agents, n_competitions=5, seed=9)
        second = run_tournament(
            model, *agents, n_competitions=5, seed=9, first_index=5
        )
        self.assertEqual(whole.results, first.results + second.results)
        pooled = (first.mean[0] + second.mean[0]) / 2
        self.assertAlmostEqual(whole.mean[0], pooled, delta=1e-12)

    def test_worker_count_does_not_change_results(self):
        model = random_model(seed=7)
        agents = random_pair(model)
        serial = run_tournament(model, *agents, n_competitions=6, seed=2, workers=1)
        parallel = run_tournament(model, *agents, n_competitions=6, seed=2, workers=2)
        self.assertEqual(serial.results, parallel.results)

    def test_needs_two_competitions(self):
        model = random_model(seed=7)
        with self.assertRaises(ValueError):
            run_tournament(model, *random_pair(model), n_competitions=1)

    @tag("slow")
    def test_random_play_is_fair(self):
        model = random_model(seed=8)
        summary = run_tournament(model, *random_pair(model), seed=1)
        standard_error = summary.halfwidth[0] / 1.96
        self.assertLess(abs(summary.mean[0]), 3 * standard_error)
        self.assertEqual(summary.mean[1], -summary.mean[0])


class RunIntersectionEpisodesTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.model = build_intersection()

    def scripted(self, av_action: int, hv_action: int):
        n = self.model.n_states
        av = StrategyAgent(self.model, StrategyTable.one_hot([av_action] * n, 5))
        hv = StrategyAgent(
            self.model.swapped(), StrategyTable.one_hot([hv_action] * n, 5)
        )
        return av, hv

    def test_clearing_in_three_actions_costs_nothing(self):
        metrics = run_intersection_episodes(
            self.model, *self.scripted(FAST, SLOW), n_episodes=5
        )
        np.testing.assert_array_equal(metrics.travel, np.full(5, 3.0))
        np.testing.assert_array_equal(metrics.accidents, np.zeros(5))
        np.testing.assert_array_equal(metrics.cost, np.zeros(5))

    def test_waiting_forever_times_out(self):
        with self.assertLogs("arena.services", "WARNING"):
            metrics = run_intersection_episodes(
                self.model, *self.scripted(SLOW, SLOW), n_episodes=2, max_steps=10
            )
        self.assertEqual(metrics.timeouts, 2)
        np.testing.assert_array_equal(metrics.cost, np.zeros(2))

    def test_cost_identity(self):
        av, _ = self.scripted(FAST, SLOW)
        driver = RandomAgent(self.model.swapped())
        metrics = run_intersection_episodes(self.model, av, driver, n_episodes=20)
        expected = 100.0 * metrics.accidents / np.arange(1, 21) + (
            metrics.travel / 3 - 1
        )
        np.testing.assert_allclose(metrics.cost, expected, rtol=0, atol=1e-12)
        self.assertTrue((metrics.collision_rate <= 1).all())
        self.assertTrue((metrics.delay_ratio >= 0).all())


class RunSoccerMatchTests(SimpleTestCase):
    def test_handbuilt_players_score(self):
        model = build_soccer()
        agent_a = HandbuiltSoccerAgent(model, PLAYER_A)
        agent_b = HandbuiltSoccerAgent(model.swapped(), PLAYER_B)
        result = run_soccer_match(model, agent_a, agent_b, n_games=20, seed=3)
        self.assertEqual(result.decided, 20)
        self.assertGreaterEqual(result.games, 20)
        self.assertEqual(result.games, result.decided + result.draws)
        self.assertGreater(result.moves, 0)
