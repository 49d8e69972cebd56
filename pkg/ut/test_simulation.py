import logging
import unittest

import numpy as np

from coauthor import (
    GREEDY,
    STRATEGIC,
    Agent,
    AuthorTerms,
    CheckpointNotFoundError,
    EventLog,
    FriendshipNetwork,
    InvalidStateError,
    Outcome,
    Paper,
    PaperStatus,
    RandomSource,
    Simulation,
    SimulationConfig,
)
from coauthor.metrics import ultimatum_aggregates
from coauthor.ultimatum import TickResult
from policy import (
    Decision,
    ExperienceRecorder,
    Featurizer,
    GreedyPolicy,
    QNetwork,
    ReplayBuffer,
    RewardContext,
    RewardKind,
    StrategicPolicy,
    compute_reward,
)
from simulation import build_simulation

SMALL = {
    "population": {"n": 80, "horizon_T": 150, "paper_spawn_rate_per_agent": 0.02},
    "collab": {"duration_min": 4, "duration_max": 30},
    "greedy": {"raise_hazard": 0.1},
    "metrics": {"network_every": 25, "path_length_sources": 50},
}


def small_config(**sections):
    config = SimulationConfig().override(SMALL)
    return config.override(sections).validate() if sections else config.validate()


def run_logged(config, seed, strategic_pct=0.0, qnet=None):
    sim = build_simulation(config, RandomSource(seed), strategic_pct, qnet)
    log = EventLog().attach(sim)
    records = sim.run()
    return sim, log, records


class TestSimulationCase(unittest.TestCase):
    def setUp(self):
        logging.basicConfig(level=logging.WARNING)
        self.config = small_config()

    def test_deterministic(self):
        _, first, first_records = run_logged(self.config, 7)
        _, second, second_records = run_logged(self.config, 7)
        self.assertTrue(len(first.papers) > 0)
        self.assertEqual([e.to_row() for e in first.ultimatums], [e.to_row() for e in second.ultimatums])
        self.assertEqual([r.to_row() for r in first_records], [r.to_row() for r in second_records])
        self.assertEqual([a.to_row() for a in first.agents], [a.to_row() for a in second.agents])

    def test_seeds_differ(self):
        _, first, _ = run_logged(self.config, 7)
        _, second, _ = run_logged(self.config, 8)
        self.assertNotEqual([p.to_row() for p in first.papers.values()],
                            [p.to_row() for p in second.papers.values()])

    def test_conservation(self):
        sim, log, records = run_logged(self.config, 3)
        self.assertEqual(len(records), 150)
        for record in records:
            self.assertEqual(record.spawned, record.active + record.completed + record.terminated)
            if record.gini is not None:
                self.assertTrue(0.0 <= record.gini <= 1.0)
        self.assertEqual(sim.spawned, len(log.papers))
        self.assertEqual(sim.completed, sum(1 for p in log.papers.values() if p.status == "completed"))
        self.assertEqual(sim.terminated, sum(1 for p in log.papers.values() if p.status == "terminated"))
        self.assertTrue(all(0 <= a.active_papers <= 5 for a in sim.agents))
        self.assertEqual(sum(a.active_papers for a in sim.agents),
                         sum(p.size for p in sim.active_papers))

    def test_diagnostics_cadence(self):
        _, _, records = run_logged(self.config, 3)
        self.assertIsNotNone(records[0].clustering)
        self.assertIsNone(records[1].clustering)
        self.assertIsNotNone(records[25].density)

    def test_no_commitment_no_destruction(self):
        config = small_config(greedy={"p_commit": 0.0, "raise_hazard": 0.3})
        sim, log, _ = run_logged(config, 5)
        self.assertTrue(len(log.ultimatums) > 0)
        self.assertEqual(sim.terminated, 0)
        self.assertFalse(any(e.outcome is Outcome.TERMINATED for e in log.ultimatums))

    def test_missing_policy(self):
        sim = Simulation(self.config, RandomSource(0), strategic=[0, 1])
        sim.set_policy(GREEDY, GreedyPolicy(self.config.greedy, sim.streams.play))
        with self.assertRaises(InvalidStateError):
            sim.step()
        with self.assertRaises(ValueError):
            sim.set_policy("random", GreedyPolicy(self.config.greedy, sim.streams.play))

    def test_strategic_agents_need_network(self):
        with self.assertRaises(CheckpointNotFoundError):
            build_simulation(self.config, RandomSource(0), 50.0)

    def test_strategic_share(self):
        sim = build_simulation(self.config, RandomSource(0), 30.0, QNetwork.from_params(self.config.drl))
        self.assertAlmostEqual(sim.strategic_fraction(), 0.3)

    def test_zero_network_never_raises(self):
        qnet = QNetwork.from_params(self.config.drl)
        _, log, _ = run_logged(self.config, 4, 50.0, qnet)
        self.assertTrue(all(e.issuer_policy == GREEDY for e in log.ultimatums))
        # ties go to refusal
        self.assertTrue(all(not v.accepted for v in log.votes if v.responder_policy == STRATEGIC))

    def test_frozen_evaluation_reproducible(self):
        qnet = QNetwork.from_params(self.config.drl, np.random.default_rng(9))
        _, first, _ = run_logged(self.config, 4, 50.0, qnet)
        _, second, _ = run_logged(self.config, 4, 50.0, qnet)
        self.assertEqual([v.to_row() for v in first.votes], [v.to_row() for v in second.votes])
        self.assertEqual([a.to_row() for a in first.agents], [a.to_row() for a in second.agents])

    def test_initiation_rate_parity(self):
        qnet = QNetwork.from_params(self.config.drl)
        qnet.params["head0.b"] = np.array([0.0, 1.0])
        _, log, _ = run_logged(self.config, 6, 50.0, qnet)
        by_type = ultimatum_aggregates(log.ultimatums, log.votes, log.agents).by_type
        strategic, greedy = by_type[STRATEGIC].initiation_rate, by_type[GREEDY].initiation_rate
        self.assertTrue(greedy > 0.0)
        # an always-raise head only raises on hazard opportunities
        self.assertTrue(0.5 * greedy < strategic < 2.0 * greedy)


class TestStrategicPolicyCase(unittest.TestCase):
    def setUp(self):
        logging.basicConfig(level=logging.WARNING)
        self.config = SimulationConfig()
        self.qnet = QNetwork.from_params(self.config.drl)
        self.qnet.params["head0.b"] = np.array([0.0, 1.0])
        self.featurizer = Featurizer(self.config, np.random.default_rng(0))
        self.buffer = ReplayBuffer(16)
        self.recorder = ExperienceRecorder(self.buffer, self.featurizer, self.config)
        self.net = FriendshipNetwork(2)
        self.net.set_weight(0, 1, 0.5)
        self.agent = Agent(id=1, exploration=0.0)
        terms = AuthorTerms(u0=100.0, eta=0.5, xi=0.1)
        self.paper = Paper(id=0, authors=[0, 1], start_step=0, duration=10, terms={0: terms, 1: terms})

    def policy(self, raise_hazard):
        return StrategicPolicy(self.qnet, self.featurizer, np.random.default_rng(1), recorder=self.recorder,
                               raise_hazard=raise_hazard)

    def test_always_raises_on_opportunity(self):
        policy = self.policy(1.0)
        self.assertTrue(all(policy.decide_raise(self.agent, self.paper, self.net) for _ in range(20)))
        self.assertEqual(self.recorder.recorded, 20)

    def test_no_opportunity_no_raise(self):
        policy = self.policy(0.0)
        self.assertFalse(any(policy.decide_raise(self.agent, self.paper, self.net) for _ in range(50)))
        self.assertEqual(self.recorder.recorded, 0)

    def test_hazard_thins_raises(self):
        policy = self.policy(0.1)
        raised = sum(policy.decide_raise(self.agent, self.paper, self.net) for _ in range(2000))
        self.assertTrue(120 < raised < 280)
        self.assertEqual(self.recorder.recorded, raised)

    def test_first_author_never_raises(self):
        lead = Agent(id=0, exploration=0.0)
        self.assertFalse(self.policy(1.0).decide_raise(lead, self.paper, self.net))

    def test_invalid_hazard(self):
        with self.assertRaises(ValueError):
            self.policy(1.5)
        with self.assertRaises(ValueError):
            self.policy(-0.1)


class TestRewardCase(unittest.TestCase):
    def test_intermediate(self):
        self.assertEqual(compute_reward(RewardContext()), 0.0)

    def test_completion(self):
        ctx = RewardContext(kind=RewardKind.COMPLETION, u0=100.0, u1=0.5, completion_step=0.0, rho=0.05)
        self.assertAlmostEqual(compute_reward(ctx), 0.5)

    def test_discounted_completion(self):
        ctx = RewardContext(kind=RewardKind.COMPLETION, u0=100.0, u1=0.5, completion_step=2.0, rho=0.05)
        self.assertAlmostEqual(compute_reward(ctx), 0.5 / 1.05 ** 2)

    def test_destruction(self):
        ctx = RewardContext(kind=RewardKind.DESTRUCTION, contribution=0.3)
        self.assertAlmostEqual(compute_reward(ctx, lambda_destr=1.0), -0.3)
        self.assertAlmostEqual(compute_reward(ctx, lambda_destr=2.0), -0.6)

    def test_degree_shaping(self):
        ctx = RewardContext(weighted_degree_before=1.0, weighted_degree_after=2.0)
        self.assertEqual(compute_reward(ctx), 0.0)
        self.assertAlmostEqual(compute_reward(ctx, lambda_deg=0.5), 0.5)


class TestExperienceRecorderCase(unittest.TestCase):
    def setUp(self):
        self.config = SimulationConfig()
        self.buffer = ReplayBuffer(16)
        self.recorder = ExperienceRecorder(self.buffer, Featurizer(self.config, np.random.default_rng(0)),
                                           self.config)
        self.net = FriendshipNetwork(3)
        self.net.set_weight(0, 1, 0.5)
        self.agents = [Agent(id=i, exploration=0.0) for i in range(3)]
        terms = AuthorTerms(u0=100.0, eta=0.5, xi=0.1)
        self.paper = Paper(id=0, authors=[0, 1], start_step=0, duration=10, terms={0: terms, 1: terms})

    def test_pending_until_next_decision(self):
        self.recorder.record(self.agents[1], self.paper, self.net, Decision.RAISE, 1)
        self.assertEqual(len(self.buffer), 0)
        self.assertEqual(self.recorder.pending, 1)
        self.recorder.add_reward(1, 0.25)
        self.recorder.record(self.agents[1], self.paper, self.net, Decision.PULL, 0)
        stored = self.buffer.transitions()
        self.assertEqual(len(stored), 1)
        self.assertEqual(stored[0].decision, int(Decision.RAISE))
        self.assertEqual(stored[0].action, 1)
        self.assertAlmostEqual(stored[0].reward, 0.25)
        self.assertFalse(stored[0].terminal)
        self.assertEqual(stored[0].next_state.shape, (27,))
        self.assertEqual(self.recorder.recorded, 2)

    def test_flush_is_terminal(self):
        self.recorder.record(self.agents[0], self.paper, self.net, Decision.AGREE, 0)
        self.recorder.record(self.agents[1], self.paper, self.net, Decision.RAISE, 1)
        self.assertEqual(self.recorder.flush(self.net), 2)
        self.assertEqual(self.recorder.pending, 0)
        for t in self.buffer.transitions():
            self.assertTrue(t.terminal)
            self.assertTrue(np.all(t.next_state == 0.0))

    def test_completion_reward(self):
        for a in (0, 1):
            self.recorder.record(self.agents[a], self.paper, self.net, Decision.AGREE, 1)
        self.paper.status, self.paper.end_step = PaperStatus.COMPLETED, 0
        result = TickResult(status=PaperStatus.COMPLETED, payoffs={0: 45.45, 1: 23.81})
        self.recorder._on_paper_closed(self.paper, result)
        self.recorder.flush(self.net)
        rewards = sorted(t.reward for t in self.buffer.transitions())
        self.assertAlmostEqual(rewards[0], 0.5 / 2.1)
        self.assertAlmostEqual(rewards[1], 0.5 / 1.1)

    def test_destruction_penalizes_every_member(self):
        for a in (0, 1):
            self.recorder.record(self.agents[a], self.paper, self.net, Decision.AGREE, 0)
        result = TickResult(status=PaperStatus.TERMINATED, losses={0: 0.3, 1: 0.1})
        self.recorder._on_paper_closed(self.paper, result)
        self.recorder.flush(self.net)
        rewards = sorted(t.reward for t in self.buffer.transitions())
        self.assertAlmostEqual(rewards[0], -0.3)
        self.assertAlmostEqual(rewards[1], -0.1)

    def test_greedy_decisions_fill_buffer(self):
        config = small_config(greedy={"raise_hazard": 0.3})
        buffer = ReplayBuffer(5000)
        sim = Simulation(config, RandomSource(2))
        recorder = ExperienceRecorder(buffer, Featurizer(config, sim.stream("policy-exploration")), config)
        recorder.attach(sim)
        sim.set_policy(GREEDY, GreedyPolicy(config.greedy, sim.streams.play, recorder))
        sim.run(60)
        recorder.flush(sim.network)
        self.assertTrue(recorder.recorded > 0)
        self.assertEqual(buffer.pushed, recorder.recorded)


if __name__ == '__main__':
    unittest.main()
