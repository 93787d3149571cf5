import numpy as np
import pytest

from core.enums import FamilyKind
from core.errors import DimensionMismatchError, SigmaZNotPositiveDefiniteError, ValidationError
from core.family import GlmFamily
from core.simgen import (
    SimConfig,
    circulant_sigma_z,
    column_projector,
    fstar_oracle,
    linear_pseudo_true,
    make_truth,
    metrics,
    sample_dataset,
)


class TestConfig:
    @pytest.mark.parametrize(
        "changes",
        [{"k": 5}, {"p": 2}, {"eta": -1.0}, {"n": 1}, {"reps": 0}],
    )
    def test_rejects_invalid(self, changes):
        fields = {"n": 100, "p": 4, "m_dim": 4, "k": 3, "eta": 1.0} | changes

        with pytest.raises(ValidationError):
            SimConfig(**fields)

    def test_payload_round_trip(self, sim_config):
        assert SimConfig.from_payload(dict(sim_config.to_payload())) == sim_config

    def test_payload_missing_field(self):
        with pytest.raises(ValidationError, match="eta"):
            SimConfig.from_payload({"n": 10, "p": 2, "m_dim": 2, "k": 1})


class TestTruth:
    def test_theta_is_orthogonal_to_loadings(self, sim_truth):
        assert np.linalg.norm(sim_truth.p_b @ sim_truth.theta) < 1e-10

    def test_rows_are_normalized(self, sim_config, sim_truth):
        np.testing.assert_allclose(np.linalg.norm(sim_truth.a, axis=1), 1.0, atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(sim_truth.b, axis=1) / sim_config.eta, 1.0, atol=1e-10)

    def test_projectors(self, sim_truth):
        np.testing.assert_allclose(sim_truth.p_b + sim_truth.p_b_perp, np.eye(4), atol=1e-14)
        assert np.trace(sim_truth.p_b) == pytest.approx(3.0)

    def test_projector_ignores_scale(self, sim_truth):
        np.testing.assert_allclose(column_projector(sim_truth.b), column_projector(sim_truth.b / 4.0), atol=1e-12)

    def test_circulant_for_three_factors(self):
        sigma = circulant_sigma_z(3, -0.5)

        np.testing.assert_array_equal(sigma, [[1.0, -0.5, -0.5], [-0.5, 1.0, -0.5], [-0.5, -0.5, 1.0]])
        np.testing.assert_allclose(np.linalg.eigvalsh(sigma), [0.0, 1.5, 1.5], atol=1e-12)

    def test_default_circulant_is_positive_definite(self):
        np.testing.assert_allclose(np.linalg.eigvalsh(circulant_sigma_z(3)), [0.5, 0.5, 2.0], atol=1e-12)

    def test_circulant_wraps_around(self):
        assert circulant_sigma_z(5, 0.5)[0].tolist() == [1.0, 0.5, 0.25, 0.25, 0.5]

    def test_indefinite_sigma_z(self):
        with pytest.raises(SigmaZNotPositiveDefiniteError, match="sigma_z_decay = 0.9"):
            make_truth(SimConfig(n=10, p=5, m_dim=5, k=5, eta=1.0, sigma_z_decay=-0.9))

    def test_singular_sigma_z_is_rejected(self):
        with pytest.raises(SigmaZNotPositiveDefiniteError, match="sigma_z_decay = 0.5"):
            make_truth(SimConfig(n=10, p=4, m_dim=4, k=3, eta=1.0, sigma_z_decay=-0.5))

    def test_default_truth_has_three_factor_directions(self, sim_truth):
        assert np.linalg.matrix_rank(sim_truth.sigma_z_root) == 3

    def test_deterministic(self, sim_config):
        first, second = make_truth(sim_config), make_truth(sim_config)

        for name in ("a", "b", "theta", "sigma_z", "p_b"):
            assert getattr(first, name).tobytes() == getattr(second, name).tobytes()

    def test_seed_changes_truth(self, sim_config):
        assert not np.array_equal(make_truth(sim_config).a, make_truth(sim_config.replace(seed=8)).a)

    def test_zero_eta_removes_hidden_effects(self, sim_config):
        truth = make_truth(sim_config.replace(eta=0.0))

        assert not np.any(truth.b)
        np.testing.assert_array_equal(truth.p_b_perp, np.eye(4))

    @pytest.mark.parametrize("seed", range(20))
    def test_pervasive_loadings(self, seed):
        eta = 2.0
        truth = make_truth(SimConfig(n=10, p=50, m_dim=200, k=3, eta=eta, seed=seed))

        assert 0.2 <= np.linalg.eigvalsh(truth.b.T @ truth.b)[0] / (eta**2 * 200) <= 2.0
        assert 0.2 <= np.linalg.eigvalsh(truth.a.T @ truth.a)[0] / 50 <= 2.0


class TestSample:
    def test_bernoulli_outputs(self, sim_data):
        assert set(np.unique(sim_data.y)) <= {0.0, 1.0}
        assert sim_data.x.shape == (200, 4)
        assert sim_data.y.shape == (200, 4)

    def test_poisson_outputs(self, sim_config, sim_truth):
        data = sample_dataset(sim_truth, sim_config.replace(family=GlmFamily(FamilyKind.poisson)), 3)

        assert np.all(data.y >= 0.0)
        assert np.array_equal(data.y, np.round(data.y))

    def test_deterministic(self, sim_truth, sim_config):
        first = sample_dataset(sim_truth, sim_config, 5)
        second = sample_dataset(sim_truth, sim_config, 5)
        other = sample_dataset(sim_truth, sim_config, 6)

        assert first.x.tobytes() == second.x.tobytes()
        assert first.y.tobytes() == second.y.tobytes()
        assert not np.array_equal(first.x, other.x)

    def test_covariance_of_x(self, sim_truth, sim_config):
        data = sample_dataset(sim_truth, sim_config, 1, n=100_000)

        np.testing.assert_allclose(np.cov(data.x, rowvar=False), sim_truth.sigma_x, atol=0.05)


class TestOracle:
    def test_gaussian_matches_closed_form(self, gaussian):
        config = SimConfig(n=10, p=4, m_dim=4, k=3, eta=0.5, family=gaussian, seed=21)
        truth = make_truth(config)
        f_star = fstar_oracle(truth, config, n_mc=50_000)

        assert np.all(f_star.converged)
        assert np.max(np.abs(f_star.values - linear_pseudo_true(truth))) < 3.0 / np.sqrt(50_000)

    def test_no_hidden_effect_recovers_theta(self, sim_config):
        config = sim_config.replace(eta=0.0)
        truth = make_truth(config)
        f_star = fstar_oracle(truth, config, n_mc=100_000)

        assert np.linalg.norm(f_star.values - truth.theta) / np.sqrt(4) < 0.05

    def test_deterministic(self, gaussian, sim_config, sim_truth):
        first = fstar_oracle(sim_truth, sim_config, gaussian, n_mc=10_000)
        second = fstar_oracle(sim_truth, sim_config, gaussian, n_mc=10_000)

        assert first.values.tobytes() == second.values.tobytes()

    def test_minimum_sample(self, sim_config, sim_truth):
        with pytest.raises(ValidationError, match="10000"):
            fstar_oracle(sim_truth, sim_config, n_mc=9_999)


class TestMetrics:
    def test_exact_estimate(self, sim_truth):
        record = metrics(sim_truth.theta.copy(), sim_truth, p_perp_hat=sim_truth.p_b_perp.copy())

        assert record["frob_err"] == 0.0
        assert record["proj_err"] == 0.0
        assert "bias1" not in record

    def test_known_error(self, sim_truth):
        error = np.zeros((4, 4))
        error[1, 2] = 3.0
        error[0, 0] = 4.0
        record = metrics(sim_truth.theta + error, sim_truth)

        assert record["frob_err"] == pytest.approx(25.0 / 4.0)
        assert record["frob_err_unsquared"] == pytest.approx(5.0 / 4.0)

    def test_bias_fields(self, sim_truth):
        f_star = sim_truth.theta + sim_truth.p_b @ np.ones((4, 4))
        record = metrics(sim_truth.theta, sim_truth, f_star=f_star)

        assert record["bias1"] == pytest.approx(np.linalg.norm(sim_truth.p_b @ np.ones((4, 4))) / 2.0)
        assert record["bias2"] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("field", ["theta_hat", "f_star", "p_perp_hat"])
    def test_dimension_mismatch(self, sim_truth, field):
        arguments = {"theta_hat": sim_truth.theta, field: np.zeros((3, 3))}

        with pytest.raises(DimensionMismatchError):
            metrics(truth=sim_truth, **arguments)


BIAS_SEEDS = (4, 5, 6)


def mean_bias(p, key):
    values = []
    for seed in BIAS_SEEDS:
        config = SimConfig(n=10, p=p, m_dim=4, k=3, eta=1.0, seed=seed)
        truth = make_truth(config)
        values.append(metrics(truth.theta, truth, f_star=fstar_oracle(truth, config, n_mc=100_000).values)[key])

    return float(np.mean(values))


@pytest.mark.slow
def test_projection_removes_most_of_the_bias():
    assert mean_bias(12, "bias2") < 0.25 * mean_bias(12, "bias1")


@pytest.mark.slow
def test_bias_decays_with_dimension():
    biases = {p: mean_bias(p, "bias1") for p in (3, 12, 48)}

    assert biases[48] < biases[12]
    assert biases[48] <= 0.7 * biases[3]
