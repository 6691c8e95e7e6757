import numpy as np
import pytest

from saddle_lab.errors import DomainError, ParameterError
from saddle_lab.flow import saddle_frame
from saddle_lab.models import (DiffusionModel, DriftSpec, build_competition, build_linear_toy,
                               build_model, build_ok_corral, diffusion_of, drift_of)


def grid(model, n=20, region=None):
    lo, hi = region if region else (model.rate_lo, model.hi)
    a = np.linspace(lo[0], hi[0], n + 2)[1:-1]
    b = np.linspace(lo[1], hi[1], n + 2)[1:-1]
    return [np.array([x, y]) for x in a for y in b]


def all_models():
    return [build_ok_corral(), build_competition(1.0, 1.0), build_competition(0.7, 2.0),
            build_linear_toy(), build_linear_toy(lam=2.0, mu=0.5, c1=1.5, c2=0.5)]


def test_ok_corral_moments():
    m = build_ok_corral()
    assert np.allclose(drift_of(m, [1, 1]), [-1, -1])
    assert np.allclose(drift_of(m, [0, 0]), [0, 0])
    assert np.allclose(drift_of(m, [2, 1]), [-1, -2])
    assert np.allclose(diffusion_of(m, [1, 1]), np.eye(2))
    assert np.array_equal(m.initial_state, [1, 1])
    assert m.is_terminal([0.3, 0.0]) and not m.is_terminal([0.3, 0.1])


def test_competition_moments():
    m = build_competition(1.0, 1.0)
    assert np.allclose(drift_of(m, [1, 1]), [-2, -2])
    assert np.allclose(drift_of(m, [1 / 3, 1 / 3]), [0, 0], atol=1e-15)
    assert np.allclose(diffusion_of(m, [1, 1]), np.diag([4, 4]))
    assert np.allclose(diffusion_of(m, [1 / 3, 1 / 3]), np.diag([2 / 3, 2 / 3]))


def test_competition_rejects_nonpositive():
    with pytest.raises(ParameterError):
        build_competition(0.0, 1.0)
    with pytest.raises(ParameterError):
        build_competition(1.0, -1.0)


def test_linear_toy_moments():
    m = build_linear_toy(lam=2.0, mu=0.5, c1=1.5, c2=0.7)
    x = np.array([0.4, -0.1])
    assert np.allclose(drift_of(m, x), [-0.5 * 0.4, 2.0 * -0.1])
    assert np.allclose(drift_of(m, [0, 0]), [0, 0])
    assert np.allclose(diffusion_of(m, x), np.diag([1.5, 0.7]))
    # the +e1 rate vanishes on the right edge x1 = c1/mu
    assert m.limit_rates([1.5 / 0.5, 0.0])[0] == 0.0


def test_domain_error():
    with pytest.raises(DomainError):
        drift_of(build_competition(), [2.5, 0.5])
    with pytest.raises(DomainError):
        diffusion_of(build_linear_toy(), [0.0, 1.0])


@pytest.mark.parametrize("model", all_models(), ids=lambda m: m.name)
def test_a_is_symmetric_psd_and_rates_nonnegative(model):
    for x in grid(model):
        a = model.diffusion(x)
        assert np.allclose(a, a.T)
        assert np.linalg.eigvalsh(a).min() >= -1e-14
        assert model.limit_rates(x).min() >= 0
        for N in (10, 1000):
            assert model.rates(x, N).min() >= -1e-9


@pytest.mark.parametrize("model", all_models(), ids=lambda m: m.name)
def test_drift_consistency(model):
    # b^N - b vanishes at rate 1/N (exactly for OK Corral and the toy)
    for N in (100, 10_000):
        worst = max(np.max(np.abs(model.drift_N(x, N) - model.drift(x))) for x in grid(model, 8))
        assert worst <= model.consistency_const / N + 1e-12
        assert np.sqrt(N) * worst <= model.consistency_const / np.sqrt(N) + 1e-10


def test_ok_corral_per_n_drift_is_exact():
    m = build_ok_corral()
    for x in grid(m, 6):
        assert np.array_equal(m.drift_N(x, 37), m.drift(x))


def test_jump_sizes_scale():
    for m in all_models():
        for N in (10, 1000):
            assert max(np.hypot(*d(N)) for d, _ in m.jumps) * N == pytest.approx(1.0)


def test_jump_list_matches_moments():
    m = build_competition(0.7, 2.0)
    x = np.array([0.4, 0.9])
    b = sum(s * rate(x) for s, rate in m.limit_jumps)
    assert np.allclose(b, m.drift(x))
    bN = sum(d(50) * rate(x, 50) for d, rate in m.jumps)
    assert np.allclose(bN, m.drift_N(x, 50))


@pytest.mark.parametrize("model", all_models(), ids=lambda m: m.name)
def test_analytic_jacobian(model):
    h = 1e-6
    for x in grid(model, 4):
        fd = np.column_stack([(model.drift(x + h * e) - model.drift(x - h * e)) / (2 * h)
                              for e in np.eye(2)])
        assert np.allclose(model.drift_jacobian(x), fd, atol=1e-8)


def test_diffusion_model_roots():
    m = build_linear_toy(c1=1.0, c2=2.0)
    dm = DiffusionModel(m)
    N = 400
    x = np.array([0.3, -0.2])
    assert np.allclose(dm.sigmaN(x, N), np.diag(np.sqrt([1.0 / N, 2.0 / N])))
    for base in all_models():
        dm = DiffusionModel(base)
        for x in grid(base, 5):
            s = dm.limit_sigma(x)
            assert np.allclose(s @ s.T, base.diffusion(x), atol=1e-12)
            for N in (100, 10_000):
                assert np.max(np.abs(np.sqrt(N) * dm.sigmaN(x, N) - s)) < 5.0 / np.sqrt(N)


def test_noiseless_diffusion_model():
    dm = build_model("deterministic_toy")
    assert np.all(dm.diffusion([0.1, 0.2]) == 0)
    assert np.all(dm.sigmaN([0.1, 0.2], 100) == 0)
    assert np.allclose(dm.drift([0.1, 0.2]), [-0.1, 0.2])


def test_drift_spec_in_canonical_frame():
    m = build_competition(1.0, 1.0)
    spec = DriftSpec.from_frame(saddle_frame(m))
    assert np.allclose(spec.B, np.diag([-1.0, 1 / 3]))
    assert np.allclose(spec.b(np.zeros(2)), 0, atol=1e-15)
    # tau is quadratic: tau(y)/|y|^2 stays bounded as y shrinks
    ratios = [np.hypot(*spec.tau(np.array([r, -0.6 * r]))) / r ** 2 for r in (1e-1, 1e-2, 1e-3)]
    assert max(ratios) < 10 and abs(ratios[-1] - ratios[-2]) < 0.1 * ratios[-1]


def test_build_model_by_name():
    assert build_model("okcorral").name == "okcorral"
    assert build_model("competition", {"alpha": 2.0, "beta": 1.0}).params["alpha"] == 2.0
    assert isinstance(build_model("linear_toy", diffusion=True), DiffusionModel)
    with pytest.raises(ParameterError):
        build_model("nope")
    with pytest.raises(ParameterError):
        build_model("okcorral", {"alpha": 1})
