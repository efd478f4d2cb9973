import math

import numpy as np
import pytest

from bandits.core import InfeasibleLambda, InvalidInput, NoData, ProbabilityVector, make_rng
from bandits.gm import (
    LambdaBounds,
    Strategy,
    WeightFunction,
    infer_policy,
    is_coefficient,
    is_estimate,
    lambda_bounds,
    mix,
    optimal_lambda,
    optimized_policy,
    submax_policy,
)
from bandits.selftest import synthetic_dataset

from conftest import make_obs

P0 = ProbabilityVector([0.5, 0.5])
P1 = ProbabilityVector([0.9, 0.1])


class TestMix:
    def test_endpoints_return_inputs(self):
        assert mix(P0, P1, 0.0) is P0
        assert mix(P0, P1, 1.0) is P1

    def test_interior(self):
        assert np.allclose(mix(P0, P1, 0.5).probs, [0.7, 0.3])

    def test_infeasible(self):
        with pytest.raises(InfeasibleLambda):
            mix(P0, P1, 2.0)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInput):
            mix(P0, ProbabilityVector.uniform(3), 0.5)

    def test_weight_function(self):
        w = WeightFunction(1.25)
        assert w.w0 + w.w1 == 1.0
        assert np.allclose(w.apply(P0, P1).probs, [1.0, 0.0])


class TestLambdaBounds:
    def test_two_arm_example(self):
        bounds = lambda_bounds(P0, P1)
        assert bounds.lower == pytest.approx(-1.25)
        assert bounds.upper == pytest.approx(1.25)

    def test_mix_at_bounds_touches_zero(self):
        bounds = lambda_bounds(P0, P1)
        assert mix(P0, P1, bounds.upper).probs.min() == pytest.approx(0.0, abs=1e-12)
        assert mix(P0, P1, bounds.lower).probs.min() == pytest.approx(0.0, abs=1e-12)

    def test_contains_unit_interval(self):
        rng = make_rng(0)
        for _ in range(50):
            k = int(rng.integers(2, 8))
            p0 = ProbabilityVector(rng.dirichlet(np.ones(k)))
            p1 = ProbabilityVector(rng.dirichlet(np.ones(k)))
            bounds = lambda_bounds(p0, p1)
            assert 0.0 in bounds and 1.0 in bounds

    def test_identical_policies_unbounded(self):
        bounds = lambda_bounds(P0, P0)
        assert bounds == LambdaBounds(-math.inf, math.inf)
        assert optimal_lambda(bounds, 3.0) == 1.0

    def test_zero_entry_pins_a_bound(self):
        bounds = lambda_bounds(ProbabilityVector([0.0, 1.0]), ProbabilityVector([0.5, 0.5]))
        assert bounds.lower == 0.0
        assert bounds.upper == pytest.approx(2.0)


class TestImportanceSampling:
    data = [make_obs(0, 1.0, 0.5), make_obs(1, 0.0, 0.5)]

    def test_coefficient(self):
        assert is_coefficient(self.data, P0, P1) == pytest.approx(0.4)

    def test_optimal_lambda_follows_sign(self):
        bounds = lambda_bounds(P0, P1)
        assert optimal_lambda(bounds, 0.4) == bounds.upper
        assert optimal_lambda(bounds, -0.4) == bounds.lower
        assert optimal_lambda(bounds, 0.0) == 1.0

    def test_optimized_policy(self):
        assert np.allclose(optimized_policy(P0, P1, self.data).probs, [1.0, 0.0])

    def test_optimized_with_evaluators(self):
        policy = optimized_policy(
            P0, P1, self.data,
            pi0_eval=lambda rows: np.array([0.5, 0.5]),
            pi1_eval=lambda rows: np.array([0.9, 0.1])
        )
        assert np.allclose(policy.probs, [1.0, 0.0])

    def test_evaluator_length_checked(self):
        with pytest.raises(InvalidInput):
            is_coefficient(self.data, lambda rows: np.zeros(1), P1)

    def test_empty_data(self):
        with pytest.raises(NoData):
            is_coefficient([], P0, P1)

    def test_linear_in_lambda(self):
        rng = make_rng(4)
        for _ in range(20):
            k = int(rng.integers(2, 8))
            p0 = ProbabilityVector(rng.dirichlet(np.ones(k)))
            p1 = ProbabilityVector(rng.dirichlet(np.ones(k)))
            data = synthetic_dataset(rng, k, 50)
            v0, v_half, v1 = (is_estimate(data, lam, p0, p1) for lam in (0.0, 0.5, 1.0))
            assert v_half == pytest.approx(0.5 * (v0 + v1), abs=1e-9)
            assert v1 - v0 == pytest.approx(is_coefficient(data, p0, p1), abs=1e-9)

    def test_rows_must_be_observations(self):
        with pytest.raises(InvalidInput):
            is_coefficient([(0, 1.0, 0.5)], P0, P1)


class TestStrategies:
    def test_submax(self):
        p0 = ProbabilityVector([0.5, 0.3, 0.2])
        p1 = ProbabilityVector([0.2, 0.3, 0.5])
        assert submax_policy(p0, p1).probs.tolist() == [0.0, 0.0, 1.0]

    def test_submax_falls_back_to_p1(self):
        assert submax_policy(P0, P0) is P0

    def test_submax_zeroes_dominated_actions(self):
        rng = make_rng(2)
        for _ in range(20):
            p0 = ProbabilityVector(rng.dirichlet(np.ones(5)))
            p1 = ProbabilityVector(rng.dirichlet(np.ones(5)))
            policy = submax_policy(p0, p1)
            assert np.all(policy.probs[p1.probs <= p0.probs] == 0.0)

    def test_dispatch(self):
        assert infer_policy('optimistic', P0, P1) is P1
        assert infer_policy(Strategy.NEGATIVE, P0, P1) is P0
        assert np.allclose(infer_policy('submax', P0, P1).probs, [1.0, 0.0])
        assert np.allclose(infer_policy('optimized', P0, P1, coefficient=-1.0).probs, [0.0, 1.0])

    def test_optimized_needs_coefficient(self):
        with pytest.raises(InvalidInput):
            infer_policy('optimized', P0, P1)

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            infer_policy('greedy', P0, P1)
