import logging
import math
import unittest

import numpy as np

from coauthor import GREEDY, STRATEGIC, AgentRecord, InsufficientDataError, Outcome, PaperRecord, UltimatumEvent
from coauthor.metrics import (
    ccdf,
    core_outcomes,
    er_baselines,
    fit_lognormal,
    fit_power_law,
    gini,
    linear_trend,
    moving_average,
    productivity_stats,
    top_share,
    ultimatum_aggregates,
)
from coauthor.events import VoteRecord


def event(outcome, policy=GREEDY, week=3, from_pos=3, to_pos=2, paper_id=0):
    return UltimatumEvent(paper_id=paper_id, step=week, week=week, duration=40, issuer_id=1,
                          issuer_policy=policy, from_pos=from_pos, to_pos=to_pos, outcome=outcome)


def agent(i, policy=GREEDY, joined=2, raised=1, utility=1.0, completed=1):
    return AgentRecord(id=i, policy=policy, papers_joined=joined, papers_completed=completed,
                       utility=utility, raw_utility=utility, n_raise=raised, n_agree=0, n_refuse=0,
                       n_pull=0, n_insist=0, n_destr=0)


class TestGiniCase(unittest.TestCase):
    def setUp(self):
        logging.basicConfig(level=logging.WARNING)

    def test_equality(self):
        self.assertAlmostEqual(gini([5, 5, 5, 5]), 0.0)

    def test_pair(self):
        self.assertAlmostEqual(gini([0, 1]), 0.5)

    def test_single_winner(self):
        n = 1000
        self.assertAlmostEqual(gini([1.0] + [0.0] * (n - 1)), (n - 1) / n)

    def test_scale_invariant(self):
        x = np.random.default_rng(0).exponential(size=200)
        self.assertAlmostEqual(gini(x), gini(7.5 * x))

    def test_matches_pairwise_formula(self):
        x = np.random.default_rng(1).uniform(0, 10, size=50)
        pairwise = np.abs(x[:, None] - x[None, :]).sum() / (2 * len(x) ** 2 * x.mean())
        self.assertAlmostEqual(gini(x), float(pairwise))

    def test_all_zero(self):
        with self.assertRaises(InsufficientDataError):
            gini([0, 0, 0])


class TestDistributionCase(unittest.TestCase):
    def test_ccdf(self):
        self.assertEqual(ccdf([3, 3, 3]), [(3.0, 1.0)])
        self.assertEqual(ccdf([1, 2]), [(1.0, 1.0), (2.0, 0.5)])

    def test_ccdf_non_increasing(self):
        points = ccdf(np.random.default_rng(2).poisson(4, size=300))
        probabilities = [p for _, p in points]
        self.assertEqual(probabilities[0], 1.0)
        self.assertEqual(probabilities, sorted(probabilities, reverse=True))

    def test_exact_power_law(self):
        points = [(float(x), float(x) ** -10) for x in range(1, 21)]
        fit = fit_power_law(points, tail_fraction=1.0)
        self.assertAlmostEqual(fit.params[0], 10.0, places=8)
        self.assertAlmostEqual(fit.r_squared, 1.0, places=8)
        self.assertEqual(fit.x_range, (1.0, 20.0))
        self.assertFalse(fit.flagged)

    def test_tail_fraction_changes_range(self):
        counts = np.random.default_rng(3).zipf(2.5, size=2000)
        points = ccdf(counts)
        full = fit_power_law(points, tail_fraction=1.0)
        half = fit_power_law(points, tail_fraction=0.5)
        self.assertTrue(half.points < full.points)
        self.assertTrue(half.x_range[0] > full.x_range[0])
        self.assertEqual(half, fit_power_law(points, tail_fraction=0.5))

    def test_power_law_needs_points(self):
        with self.assertRaises(InsufficientDataError):
            fit_power_law([(1.0, 1.0), (2.0, 0.5)], tail_fraction=1.0)

    def test_lognormal_recovers_parameters(self):
        counts = np.random.default_rng(4).lognormal(4.0, 0.3, size=100000)
        fit = fit_lognormal(counts)
        mu, sigma = fit.params
        self.assertAlmostEqual(mu, 4.0, delta=0.01)
        self.assertAlmostEqual(sigma, 0.3, delta=0.01)
        self.assertTrue(fit.r_squared > 0.9)

    def test_lognormal_degenerate(self):
        fit = fit_lognormal([round(math.exp(4))] * 10)
        self.assertAlmostEqual(fit.params[0], 4.0, delta=0.01)
        self.assertEqual(fit.params[1], 0.0)
        self.assertTrue(fit.flagged)

    def test_lognormal_rejects_zero(self):
        with self.assertRaises(ValueError):
            fit_lognormal([0, 1, 2])

    def test_top_share(self):
        self.assertAlmostEqual(top_share([3] * 10), 0.1)
        self.assertAlmostEqual(top_share([9] + [1] * 9), 0.5)

    def test_productivity_excludes_idle_agents(self):
        counts = [0, 0] + list(range(1, 21))
        result = productivity_stats(counts)
        self.assertEqual(result.agents, 20)
        self.assertEqual(result.excluded, 2)
        self.assertIsNotNone(result.power_law)
        self.assertIsNotNone(result.lognormal)


class TestNetworkBaselineCase(unittest.TestCase):
    def test_er(self):
        c, path = er_baselines(10000, 6)
        self.assertAlmostEqual(c, 6e-4)
        self.assertAlmostEqual(path, 5.14, delta=0.005)

    def test_logs_cancel(self):
        _, path = er_baselines(math.e, math.e)
        self.assertAlmostEqual(path, 1.0)

    def test_sparse(self):
        with self.assertRaises(ValueError):
            er_baselines(100, 1.0)


class TestTrendCase(unittest.TestCase):
    def test_linear(self):
        fit = linear_trend([1.0, 3.0, 5.0])
        self.assertAlmostEqual(fit.slope, 2.0)
        self.assertAlmostEqual(fit.intercept, 1.0)
        self.assertAlmostEqual(fit.r_squared, 1.0)

    def test_moving_average(self):
        self.assertEqual(moving_average([1, 2, 3, 4], 2), [1.5, 2.5, 3.5])
        self.assertEqual(moving_average([1], 2), [])


class TestAggregatesCase(unittest.TestCase):
    def setUp(self):
        self.events = [event(Outcome.ACCEPTED)] * 4 + [event(Outcome.WITHDRAWN)] * 5 + \
            [event(Outcome.TERMINATED)]
        self.agents = [agent(0, raised=1, joined=2), agent(1, raised=3, joined=2),
                       agent(2, policy=STRATEGIC, raised=0, joined=4)]

    def test_outcome_shares(self):
        result = ultimatum_aggregates(self.events, [], self.agents)
        greedy = result.by_type[GREEDY]
        self.assertEqual(result.total, 10)
        self.assertEqual(greedy.raised, 10)
        self.assertAlmostEqual(greedy.accepted_share, 0.4)
        self.assertAlmostEqual(greedy.withdrawn_share, 0.5)
        self.assertAlmostEqual(greedy.terminated_share, 0.1)
        self.assertAlmostEqual(greedy.restraint, 5 / 6)
        self.assertAlmostEqual(greedy.destruction_rate, 0.1)
        self.assertAlmostEqual(greedy.initiation_rate, 1.0)
        self.assertEqual(greedy.median_week, 3.0)

    def test_type_without_ultimatums(self):
        strategic = ultimatum_aggregates(self.events, [], self.agents).by_type[STRATEGIC]
        self.assertEqual(strategic.raised, 0)
        self.assertIsNone(strategic.accepted_share)
        self.assertIsNone(strategic.restraint)
        self.assertEqual(strategic.initiation_rate, 0.0)

    def test_full_restraint(self):
        events = [event(Outcome.WITHDRAWN, policy=STRATEGIC)] * 3 + [event(Outcome.ACCEPTED, policy=STRATEGIC)]
        strategic = ultimatum_aggregates(events, [], self.agents).by_type[STRATEGIC]
        self.assertEqual(strategic.restraint, 1.0)
        self.assertEqual(strategic.destruction_rate, 0.0)

    def test_gap_buckets(self):
        events = [event(Outcome.ACCEPTED, from_pos=2, to_pos=1),
                  event(Outcome.WITHDRAWN, from_pos=3, to_pos=2),
                  event(Outcome.ACCEPTED, from_pos=12, to_pos=1),
                  event(Outcome.TERMINATED, from_pos=9, to_pos=2)]
        gaps = ultimatum_aggregates(events, [], []).gap_acceptance
        self.assertEqual(gaps[1], 0.5)
        self.assertEqual(gaps[7], 0.5)
        self.assertIsNone(gaps[3])

    def test_responder_acceptance(self):
        votes = [VoteRecord(paper_id=0, step=1, responder_id=r, responder_policy=GREEDY, gap=1,
                            displaced=True, accepted=r < 3) for r in range(4)]
        result = ultimatum_aggregates([], votes, [])
        self.assertEqual(result.by_type[GREEDY].votes, 4)
        self.assertAlmostEqual(result.by_type[GREEDY].responder_acceptance, 0.75)
        self.assertIsNone(result.by_type[STRATEGIC].responder_acceptance)

    def test_timing_bins(self):
        events = [event(Outcome.ACCEPTED, week=1), event(Outcome.WITHDRAWN, week=4),
                  event(Outcome.WITHDRAWN, week=5)]
        result = ultimatum_aggregates(events, [], [], bin_weeks=4)
        self.assertEqual(result.by_type[GREEDY].week_histogram, {1: 2, 5: 1})
        self.assertAlmostEqual(result.outcome_by_week[1]["accepted"], 0.5)
        self.assertAlmostEqual(result.outcome_by_week[5]["withdrawn"], 1.0)
        for cell in result.outcome_by_week.values():
            self.assertAlmostEqual(sum(cell.values()), 1.0)

    def test_empty_log(self):
        result = ultimatum_aggregates([], [], [])
        self.assertEqual(result.total, 0)
        self.assertEqual(result.outcome_by_week, {})
        for tag in (GREEDY, STRATEGIC):
            self.assertIsNone(result.by_type[tag].accepted_share)
            self.assertIsNone(result.by_type[tag].median_week)
        self.assertTrue(all(v is None for v in result.gap_acceptance.values()))


class TestCoreOutcomesCase(unittest.TestCase):
    def test_rates(self):
        papers = [PaperRecord(paper_id=k, start_step=0, duration=10, size=2, status=status, end_step=-1)
                  for k, status in enumerate(("completed", "completed", "terminated", "active"))]
        agents = [agent(0, utility=2.0, completed=2), agent(1, utility=4.0, completed=2),
                  agent(2, policy=STRATEGIC, utility=6.0, completed=1),
                  agent(3, policy=STRATEGIC, utility=6.0, completed=1)]
        events = [event(Outcome.ACCEPTED), event(Outcome.TERMINATED)]
        result = core_outcomes(events, papers, agents)
        self.assertEqual(result.papers, 4)
        self.assertAlmostEqual(result.strategic_pct, 50.0)
        self.assertAlmostEqual(result.completion_rate, 0.5)
        self.assertAlmostEqual(result.destruction_rate, 0.25)
        self.assertAlmostEqual(result.ultimatums_per_paper, 0.5)
        self.assertAlmostEqual(result.terminated_per_paper, 0.25)
        self.assertAlmostEqual(result.papers_per_agent, 1.5)
        self.assertAlmostEqual(result.mean_utility[STRATEGIC], 6.0)
        self.assertAlmostEqual(result.abs_advantage, 3.0)
        self.assertAlmostEqual(result.rel_advantage_pct, 100.0)
        self.assertAlmostEqual(result.gini[STRATEGIC], 0.0)

    def test_horizon_excludes_cut_off_papers(self):
        papers = [
            PaperRecord(paper_id=0, start_step=0, duration=10, size=2, status="completed", end_step=9),
            PaperRecord(paper_id=1, start_step=5, duration=10, size=2, status="terminated", end_step=8),
            PaperRecord(paper_id=2, start_step=45, duration=10, size=2, status="active", end_step=-1),
        ]
        events = [
            UltimatumEvent(paper_id=1, step=8, week=4, duration=10, issuer_id=1, issuer_policy=GREEDY,
                           from_pos=2, to_pos=1, outcome=Outcome.TERMINATED),
            UltimatumEvent(paper_id=2, step=49, week=5, duration=10, issuer_id=1, issuer_policy=GREEDY,
                           from_pos=2, to_pos=1, outcome=Outcome.ACCEPTED),
        ]
        self.assertEqual([e.scheduled_end for e in events], [15, 55])
        self.assertEqual([p.scheduled_end for p in papers], [10, 15, 55])

        everything = core_outcomes(events, papers, [agent(0)])
        self.assertEqual(everything.papers, 3)
        self.assertAlmostEqual(everything.completion_rate, 1 / 3)
        self.assertAlmostEqual(everything.ultimatums_per_paper, 2 / 3)

        matured = core_outcomes(events, papers, [agent(0)], horizon=50)
        self.assertEqual(matured.papers, 2)
        self.assertAlmostEqual(matured.completion_rate, 0.5)
        self.assertAlmostEqual(matured.destruction_rate, 0.5)
        self.assertAlmostEqual(matured.ultimatums_per_paper, 0.5)
        self.assertAlmostEqual(matured.accepted_per_paper, 0.0)
        self.assertEqual(core_outcomes(events, papers, [agent(0)], horizon=55).papers, 3)

    def test_pure_greedy(self):
        result = core_outcomes([], [], [agent(0), agent(1)])
        self.assertIsNone(result.completion_rate)
        self.assertIsNone(result.mean_utility[STRATEGIC])
        self.assertIsNone(result.abs_advantage)
        self.assertIsNone(result.gini[STRATEGIC])


if __name__ == '__main__':
    unittest.main()
