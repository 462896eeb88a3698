import numpy as np
import pytest

from app.estimation.dgp import (SCENARIOS, Dataset, ScenarioSpec, counterfactual_outcome, generate,
                                oracle_exposure_model, oracle_outcome_model, outcome_mean,
                                spatial_confounder, true_shift_effect)
from app.estimation.errors import InvalidArgumentError, UnsupportedDatasetError
from app.estimation.estimators import estimate_ols
from app.estimation.spatial_core import sample_locations


@pytest.mark.parametrize("name", SCENARIOS)
def test_generate_shapes(name):
    data = generate(ScenarioSpec.named(name), 200, np.random.default_rng(1))
    assert data.n == 200
    assert data.x.shape == data.y.shape == data.u.shape == (200,)
    assert np.all(np.isfinite(data.y))


def test_generate_is_deterministic_per_seed():
    spec = ScenarioSpec.named("nonlinear")
    a = generate(spec, 100, np.random.default_rng(5))
    b = generate(spec, 100, np.random.default_rng(5))
    np.testing.assert_array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.s, b.s)


def test_unknown_scenario_is_rejected():
    with pytest.raises(InvalidArgumentError):
        ScenarioSpec.named("not_a_scenario")


def test_negative_noise_is_rejected():
    with pytest.raises(InvalidArgumentError):
        ScenarioSpec.named("simple", confounder_sd=-1.0)


def test_linear_confounder_is_the_coordinate_sum():
    data = generate(ScenarioSpec.named("linear"), 50, np.random.default_rng(2))
    np.testing.assert_allclose(data.u, data.s.sum(axis=1))


def test_smooth_exposure_is_a_function_of_location():
    data = generate(ScenarioSpec.named("smooth_exposure"), 100, np.random.default_rng(3))
    s1, s2 = data.s.T
    np.testing.assert_allclose(data.x, spatial_confounder(data.s) ** 3 + np.cos(2 * np.pi * s1 * s2))
    assert not ScenarioSpec.named("smooth_exposure").positivity


def test_noisy_confounder_departs_from_location():
    data = generate(ScenarioSpec.named("noisy"), 500, np.random.default_rng(4))
    gap = data.u - spatial_confounder(data.s)
    assert np.std(gap) == pytest.approx(1.0, rel=0.15)


def test_random_slope_records_its_correlation():
    data = generate(ScenarioSpec.named("random_slope"), 100, np.random.default_rng(6))
    assert -1.0 <= data.noise.slope_correlation <= 1.0


def test_fixed_locations_are_used():
    locs = sample_locations(30, np.random.default_rng(0))
    data = generate(ScenarioSpec.named("simple"), 30, np.random.default_rng(1), locations=locs)
    np.testing.assert_array_equal(data.s, locs.points)
    with pytest.raises(InvalidArgumentError):
        generate(ScenarioSpec.named("simple"), 31, np.random.default_rng(1), locations=locs)


def test_counterfactual_at_observed_exposure_reproduces_y():
    spec = ScenarioSpec.named("struct_het")
    data = generate(spec, 100, np.random.default_rng(8))
    np.testing.assert_allclose(counterfactual_outcome(spec, data, data.x), data.y)


def test_counterfactual_shift_in_linear_scenario_is_delta():
    spec = ScenarioSpec.named("linear")
    data = generate(spec, 100, np.random.default_rng(8))
    shifted = counterfactual_outcome(spec, data, data.x + 2.0)
    np.testing.assert_allclose(shifted - data.y, 2.0)


def test_counterfactual_needs_retained_noise(linear_data):
    bare = Dataset(locations=linear_data.locations, x=linear_data.x, y=linear_data.y)
    with pytest.raises(UnsupportedDatasetError):
        counterfactual_outcome(ScenarioSpec.named("linear"), bare, bare.x)


def test_subset_allows_repeats(linear_data):
    sub = linear_data.subset([0, 0, 5])
    assert sub.n == 3
    assert sub.x[0] == sub.x[1] == linear_data.x[0]
    assert sub.noise.outcome_noise[2] == linear_data.noise.outcome_noise[5]


def test_field_noise_adds_local_correlation():
    spec = ScenarioSpec.named("simple", field_radius=0.1, field_sd=1.0)
    data = generate(spec, 300, np.random.default_rng(9))
    plain = generate(ScenarioSpec.named("simple"), 300, np.random.default_rng(9))
    assert np.var(data.noise.outcome_noise) > np.var(plain.noise.outcome_noise)


@pytest.mark.parametrize("name", ["linear", "simple", "struct_het", "noisy", "smooth_exposure"])
def test_unit_slope_scenarios_have_analytic_truth(name):
    truth = true_shift_effect(ScenarioSpec.named(name), 1.0)
    assert truth.value == 1.0
    assert truth.method == "analytic"


def test_nonlinear_truth():
    truth = true_shift_effect(ScenarioSpec.named("nonlinear"), 1.0, oracle_n=400_000,
                              rng=np.random.default_rng(0))
    assert truth.method == "monte_carlo"
    assert truth.value == pytest.approx(2.431, abs=0.01)
    assert truth.mc_se > 0


def test_exp_illustration_average_derivative():
    truth = true_shift_effect(ScenarioSpec.named("exp_illustration"), 1.0, oracle_n=200_000,
                              rng=np.random.default_rng(0), mode="derivative")
    assert truth.value == pytest.approx(29.5, abs=0.2)


def test_exp_illustration_ols_slope():
    truth = true_shift_effect(ScenarioSpec.named("exp_illustration"), 1.0, oracle_n=1_000_000,
                              rng=np.random.default_rng(0), mode="ols_slope")
    assert truth.value == pytest.approx(21.7, abs=0.3)


def test_oracle_size_floor():
    with pytest.raises(InvalidArgumentError):
        true_shift_effect(ScenarioSpec.named("nonlinear"), 1.0, oracle_n=1000)


def test_unknown_truth_mode():
    with pytest.raises(InvalidArgumentError):
        true_shift_effect(ScenarioSpec.named("linear"), 1.0, mode="median")


def test_oracle_outcome_model_matches_structural_mean(simple_data):
    spec = ScenarioSpec.named("simple")
    model = oracle_outcome_model(spec)
    expected = outcome_mean(spec, simple_data.x, simple_data.u)
    np.testing.assert_allclose(model.predict(simple_data.x, simple_data.s), expected)


def test_oracle_exposure_model_mean(simple_data):
    model = oracle_exposure_model(ScenarioSpec.named("simple"))
    np.testing.assert_allclose(model.mean(simple_data.s), simple_data.u ** 3)


def test_oracles_need_a_location_confounder():
    with pytest.raises(UnsupportedDatasetError):
        oracle_outcome_model(ScenarioSpec.named("noisy"))
    with pytest.raises(UnsupportedDatasetError):
        oracle_exposure_model(ScenarioSpec.named("smooth_exposure"))


@pytest.mark.parametrize("name", ["noisy", "less_noisy"])
def test_scenario_ladder_collapses_to_simple_without_confounder_noise(name):
    # the default confounder_effect of 5 in the noisy rungs differs from simple's 3
    ladder = ScenarioSpec.named(name, confounder_sd=0.0, confounder_effect=3.0)
    rung = generate(ladder, 300, np.random.default_rng(21))
    simple = generate(ScenarioSpec.named("simple"), 300, np.random.default_rng(21))
    for attribute in ("u", "x", "y"):
        np.testing.assert_array_equal(getattr(rung, attribute), getattr(simple, attribute))


def test_noisy_rungs_differ_only_in_confounder_noise():
    noisy, less_noisy = ScenarioSpec.named("noisy"), ScenarioSpec.named("less_noisy")
    assert (noisy.confounder_sd, less_noisy.confounder_sd) == (1.0, 0.1)
    ignored = {"name": None, "confounder_sd": None}
    assert noisy.to_dict() | ignored == less_noisy.to_dict() | ignored


def test_nonlinear_counterfactuals_match_the_oracle():
    spec = ScenarioSpec.named("nonlinear")
    truth = true_shift_effect(spec, 1.0, oracle_n=200_000, rng=np.random.default_rng(1))
    data = generate(spec, 200_000, np.random.default_rng(2))
    differences = counterfactual_outcome(spec, data, data.x + 1.0) - data.y
    np.testing.assert_allclose(differences, 2.0 * data.x + 2.0, atol=1e-9)
    sample_se = differences.std(ddof=1) / np.sqrt(data.n)
    assert abs(differences.mean() - truth.value) < 3 * np.hypot(truth.mc_se, sample_se)


def test_monte_carlo_oracle_agrees_with_analytic_unit_slope():
    spec = ScenarioSpec.named("struct_het")
    analytic = true_shift_effect(spec, 1.0)
    simulated = true_shift_effect(spec, 1.0, oracle_n=200_000, rng=np.random.default_rng(3),
                                  mode="derivative")
    assert simulated.method == "monte_carlo"
    assert abs(simulated.value - analytic.value) < 3 * simulated.mc_se


def test_random_slope_is_unbiased_on_average_but_not_per_replicate():
    spec = ScenarioSpec.named("random_slope")
    errors, correlations = [], []
    for seed in range(500):
        data = generate(spec, 500, np.random.default_rng(seed))
        errors.append(estimate_ols(data, 1.0).point - 1.0)
        correlations.append(data.noise.slope_correlation)
    errors = np.array(errors)
    assert abs(errors.mean()) < 3 * errors.std(ddof=1) / np.sqrt(len(errors))
    assert np.corrcoef(errors, correlations)[0, 1] > 0.5
