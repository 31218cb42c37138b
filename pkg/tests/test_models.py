import numpy as np
import pytest

from gpquad.filtering import AdditiveStateSpaceModel, GaussianState
from gpquad.models import BotConfig, Trajectory, bot_model, moment_integrand, simulate, ungm_model


class TestUngmModel:
    def setup_method(self):
        self.model = ungm_model()

    def test_transition_at_origin(self):
        got = self.model.transition(np.zeros((1, 1)), 1)
        assert got[0, 0] == pytest.approx(8.0 * np.cos(1.2), abs=1e-12)
        assert got[0, 0] == pytest.approx(2.898862, abs=1e-6)

    def test_measurement(self):
        assert self.model.measurement(np.array([[10.0]]), 0)[0, 0] == 5.0

    def test_transition_deterministic_part(self):
        # x = 1: x/2 + 25x/(1+x^2) = 0.5 + 12.5 = 13 plus the cosine term
        k = 4
        got = self.model.transition(np.ones((1, 1)), k)[0, 0]
        assert got == pytest.approx(13.0 + 8.0 * np.cos(1.2 * k), abs=1e-12)

    def test_measurement_is_even(self):
        xs = np.linspace(-5, 5, 21).reshape(-1, 1)
        np.testing.assert_array_equal(self.model.measurement(xs, 0),
                                      self.model.measurement(-xs, 0))

    def test_noise_and_prior(self):
        assert self.model.q_cov(1)[0, 0] == 10.0
        assert self.model.r_cov(1)[0, 0] == 1.0
        assert self.model.prior.cov[0, 0] == 5.0


class TestBotModel:
    def setup_method(self):
        self.cfg = BotConfig()
        self.model = bot_model(self.cfg)

    def test_turn_rate_limit_matches_zero_rate_form(self):
        # at omega = 1e-12 the map must agree with the omega = 0 limit
        state = np.array([[10.0, 2.0, -5.0, 1.5, 1e-12]])
        got = self.model.transition(state, 1)[0]
        dt = self.cfg.dt
        limit = np.array([10.0 + dt * 2.0, 2.0, -5.0 + dt * 1.5, 1.5, 1e-12])
        np.testing.assert_allclose(got, limit, atol=1e-6)

    def test_bearing_quadrant(self):
        cfg = BotConfig(sensors=np.array([[0.0, 0.0], [1.0, 0.0],
                                          [0.0, 1.0], [-1.0, -1.0]]))
        model = bot_model(cfg)
        state = np.array([[1.0, 0.0, 1.0, 0.0, 0.0]])
        bearings = model.measurement(state, 0)[0]
        assert bearings[0] == pytest.approx(np.pi / 4)

    def test_process_noise_block(self):
        cfg = BotConfig(q1=0.1, dt=1.0)
        model = bot_model(cfg)
        q = model.q_cov(1)
        assert q[0, 0] == pytest.approx(0.1 / 3.0)
        assert q[0, 1] == pytest.approx(0.05)
        assert q[4, 4] == pytest.approx(cfg.q2)

    def test_turn_rate_preserved_exactly(self):
        rng = np.random.default_rng(0)
        states = rng.normal(size=(20, 5))
        out = self.model.transition(states, 1)
        np.testing.assert_array_equal(out[:, 4], states[:, 4])

    def test_speed_preserved(self):
        rng = np.random.default_rng(1)
        states = rng.normal(size=(20, 5))
        states[:, 4] = rng.uniform(0.05, 0.5, size=20)  # away from the series cutoff
        out = self.model.transition(states, 1)
        speed_in = np.hypot(states[:, 1], states[:, 3])
        speed_out = np.hypot(out[:, 1], out[:, 3])
        np.testing.assert_allclose(speed_out, speed_in, atol=1e-9)

    def test_measurement_noise(self):
        r = self.model.r_cov(0)
        np.testing.assert_allclose(r, self.cfg.bearing_noise_std**2 * np.eye(4))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BotConfig(sensors=np.zeros((3, 2)))
        with pytest.raises(ValueError):
            BotConfig(bearing_noise_std=0.0)


class TestMomentIntegrand:
    def test_p1_at_origin(self):
        y, _ = moment_integrand(1)
        assert y(np.zeros((1, 3)))[0] == 1.0

    def test_p_minus2_squared(self):
        _, y2 = moment_integrand(-2)
        assert y2(np.array([[1.0, 1.0, 1.0]]))[0] == pytest.approx(1 / 16)

    def test_p1_norm_two(self):
        y, _ = moment_integrand(1)
        assert y(np.array([[1.0, 1.0, 1.0]]))[0] == pytest.approx(2.0)

    def test_square_consistency(self):
        y, y2 = moment_integrand(-3)
        x = np.random.default_rng(0).normal(size=(10, 4))
        np.testing.assert_allclose(y(x) ** 2, y2(x), rtol=1e-12)


class TestSimulate:
    def test_deterministic_per_seed(self):
        model = ungm_model()
        a = simulate(model, 50, seed=4)
        b = simulate(model, 50, seed=4)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.measurements, b.measurements)

    def test_noise_free_identity_model(self):
        prior = GaussianState(np.array([1.7]), np.array([[2.0]]))
        model = AdditiveStateSpaceModel(
            transition=lambda x, k: x,
            measurement=lambda x, k: x,
            process_cov=np.zeros((1, 1)),
            measurement_cov=np.zeros((1, 1)),
            prior=prior,
            state_dim=1,
            measurement_dim=1,
        )
        trajectory = simulate(model, 10, seed=0)
        np.testing.assert_allclose(trajectory.measurements,
                                   trajectory.states[0, 0], atol=1e-12)

    def test_ungm_state_variance_band(self):
        model = ungm_model()
        variances = [simulate(model, 500, seed=s).states.var() for s in range(20)]
        assert 1.0 <= np.mean(variances) <= 500.0

    def test_shapes(self):
        trajectory = simulate(bot_model(), 30, seed=2)
        assert trajectory.states.shape == (31, 5)
        assert trajectory.measurements.shape == (30, 4)

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError):
            simulate(ungm_model(), 0, seed=0)

    def test_trajectory_validation(self):
        with pytest.raises(ValueError):
            Trajectory(np.zeros((5, 1)), np.zeros((5, 1)), seed=0)
