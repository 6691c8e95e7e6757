import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddle_lab.errors import DomainExitError, InputError, NotASaddleError
from saddle_lab.flow import (flow, flow_jacobian, flow_near_stable, saddle_frame,
                             stable_asymptotics, stable_point, unstable_asymptotics,
                             unstable_crossing)
from saddle_lab.models import build_competition, build_linear_toy, build_ok_corral

E = math.e


def test_ok_corral_frame(okc):
    _, fr, _ = okc
    assert np.allclose(fr.p, 0, atol=1e-12)
    assert fr.lam == pytest.approx(1.0) and fr.mu == pytest.approx(1.0)
    c = 1 / math.sqrt(2)
    assert np.allclose(np.abs(fr.R), c)
    assert np.allclose(fr.R @ fr.R.T, np.eye(2))
    # (1, 1) maps onto the positive first axis
    assert np.allclose(fr.to_canonical([1, 1]), [math.sqrt(2), 0])


def test_competition_frame(comp):
    m, fr, _ = comp
    assert np.allclose(fr.p, [1 / 3, 1 / 3], atol=1e-12)
    # eigenvalues are -1 along the diagonal and +1/3 across it
    assert fr.lam == pytest.approx(1 / 3, abs=1e-12)
    assert fr.mu == pytest.approx(1.0, abs=1e-12)
    B = fr.R @ m.drift_jacobian(fr.p) @ fr.R_inv
    assert np.allclose(B, np.diag([-fr.mu, fr.lam]), atol=1e-9)
    assert np.max(np.abs(m.drift(fr.p))) < 1e-9
    assert fr.to_canonical(m.initial_state)[0] > 0


def test_competition_frame_general_rates():
    m = build_competition(0.5, 2.0)
    fr = saddle_frame(m)
    B = fr.R @ m.drift_jacobian(fr.p) @ fr.R_inv
    assert np.allclose(B, np.diag([-fr.mu, fr.lam]), atol=1e-9)
    assert fr.lam > 0 and fr.mu > 0


def test_toy_frame_is_identity(toy):
    _, fr, _ = toy
    assert np.allclose(fr.p, 0) and np.allclose(fr.R, np.eye(2))
    assert (fr.lam, fr.mu) == (1.0, 1.0)


def test_not_a_saddle():
    class Sink:
        saddle_guess = np.zeros(2)
        initial_state = np.array([0.1, 0.0])

        def drift(self, x):
            return -np.asarray(x, dtype=float)

        def drift_jacobian(self, x):
            return -np.eye(2)

        def contains(self, x):
            return True

    with pytest.raises(NotASaddleError):
        saddle_frame(Sink())


def test_flow_closed_forms(wide_toy, okc, comp):
    _, fr = wide_toy
    assert np.allclose(flow(fr, [1, 1], 1.0), [1 / E, E], atol=1e-9)
    _, fo, _ = okc
    assert np.allclose(flow(fo, [math.sqrt(2), 0], 2.0), [math.sqrt(2) * E ** -2, 0], atol=1e-9)
    m, fc, _ = comp
    end = fc.to_original(flow(fc, fc.to_canonical([1.0, 1.0]), 10.0))
    assert np.allclose(end, [1 / 3, 1 / 3], atol=1e-3)


def test_competition_diagonal_logistic(comp):
    # on the diagonal u' = u(1 - 3u)
    m, fr, _ = comp
    u0, t = 1.0, 0.7
    u = u0 * math.exp(t) / (1 + 3 * u0 * (math.exp(t) - 1))
    x = fr.to_original(flow(fr, fr.to_canonical([u0, u0]), t))
    assert np.allclose(x, [u, u], atol=1e-9)


def test_flow_domain_exit(toy):
    _, fr, _ = toy
    with pytest.raises(DomainExitError) as err:
        flow(fr, [0.1, 0.1], 10.0)
    assert err.value.time == pytest.approx(math.log(10.0), rel=1e-6)


def test_flow_rejects_negative_time(toy):
    with pytest.raises(InputError):
        flow(toy[1], [0.1, 0.0], -1.0)


def _grid(fr, n=10, r=0.3):
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return [r * np.array([math.cos(a), math.sin(a)]) + np.array([0.05, 0.02]) for a in ang]


@pytest.mark.parametrize("which", ["okc", "comp", "toy"])
def test_semigroup_and_inverse(which, request):
    fr = request.getfixturevalue(which)[1]
    for x in _grid(fr, 6, 0.05) - np.array([0.05, 0.02]):
        for s in (0.3, 1.1):
            for t in (0.3, 1.1):
                assert np.allclose(flow(fr, flow(fr, x, s), t), flow(fr, x, s + t), atol=1e-8)
            back = flow(fr, flow(fr, x, s), s, reversed=True)
            assert np.allclose(back, x, atol=1e-8)


def test_linear_jacobian_exact(wide_toy):
    _, fr = wide_toy
    for x in ([0.1, 0.2], [-0.5, 0.3]):
        assert np.allclose(flow_jacobian(fr, x, 1.0), np.diag([1 / E, E]), rtol=1e-9)


@pytest.mark.parametrize("which", ["okc", "comp"])
def test_jacobian_matches_finite_differences(which, request):
    fr = request.getfixturevalue(which)[1]
    h = 1e-6
    for x in _grid(fr, 10, 0.15):
        for t in (0.5, 2.0):
            J = flow_jacobian(fr, x, t)
            fd = np.column_stack([(flow(fr, x + h * e, t) - flow(fr, x - h * e, t)) / (2 * h)
                                  for e in np.eye(2)])
            assert np.linalg.norm(J - fd) / np.linalg.norm(J) <= 1e-5


def test_jacobian_norm_bound(comp):
    _, fr, _ = comp
    for x in _grid(fr, 8, 0.05):
        x = x - np.array([0.05, 0.02])
        for t in (1.0, 3.0, 5.0):
            assert np.linalg.norm(flow_jacobian(fr, x, t), 2) <= 4 * math.exp(fr.lam * t)


def test_stable_points(toy, okc, comp):
    assert np.allclose(stable_point(toy[1], 0.5), [0.5, 0], atol=1e-12)
    assert np.allclose(stable_point(okc[1], math.sqrt(2)), [math.sqrt(2), 0], atol=1e-9)
    m, fr, _ = comp
    for d in (0.05, 0.2, 0.4):
        x = fr.to_original(stable_point(fr, d))
        assert abs(x[0] - x[1]) < 1e-9
        assert np.hypot(*stable_point(fr, d)) == pytest.approx(d, rel=1e-12)


def test_stable_point_other_side(toy):
    assert np.allclose(stable_point(toy[1], 0.3, side=-1), [-0.3, 0], atol=1e-12)


def test_stable_asymptotics_closed_forms(wide_toy, okc):
    _, fr = wide_toy
    sa = stable_asymptotics(fr, [2.0, 0.0])
    assert sa.xbar0 == pytest.approx(2.0, rel=1e-9)
    assert np.allclose(sa.D0, [0, 1], atol=1e-9)
    sa = okc[2]
    assert sa.xbar0 == pytest.approx(math.sqrt(2), rel=1e-9)
    assert np.allclose(sa.D0, [0, 1], atol=1e-9)


def test_stable_asymptotics_competition_regression(comp):
    sa = comp[2]
    assert sa.xbar0 == pytest.approx(0.3142696805272078, rel=1e-7)
    assert abs(sa.D0[0]) < 1e-7
    assert sa.D0[1] == pytest.approx(0.48074985676915244, rel=1e-7)
    assert np.sign(sa.xbar0) == np.sign(sa.x0[0])


def test_stable_asymptotics_limits_by_direct_integration(comp):
    # e^{mu t} phi_t(x0) and e^{-lam t} grad phi_t(x0) settle on the traced limits
    _, fr, sa = comp
    t = 14.0
    y = flow(fr, sa.x0, t)
    assert math.exp(fr.mu * t) * y[0] == pytest.approx(sa.xbar0, rel=1e-5)
    J = flow_jacobian(fr, sa.x0, t)
    assert np.allclose(math.exp(-fr.lam * t) * J[1], sa.D0, atol=1e-4)


def test_decay_bound_near_saddle(comp, okc):
    # |phi_t(x0)| <= 2 |xbar0| e^{-mu t} for a start point close to the saddle
    _, fr, _ = comp
    sa = stable_asymptotics(fr, stable_point(fr, 0.1))
    for t in np.linspace(0, 30, 61):
        assert np.hypot(*sa.state(t)) <= 2 * abs(sa.xbar0) * math.exp(-fr.mu * t)
    _, fo, so = okc
    for t in np.linspace(0, 30, 61):
        assert np.hypot(*so.state(t)) <= 2 * abs(so.xbar0) * math.exp(-fo.mu * t)


def test_stable_state_follows_the_flow(comp):
    _, fr, sa = comp
    for s in (0.5, 2.0, 6.0):
        assert np.allclose(sa.state(s), flow(fr, sa.x0, s), atol=1e-9)


def test_unstable_asymptotics_toy(toy):
    ua = unstable_asymptotics(toy[1], 0.5)
    assert np.allclose(ua.x_inf_plus, [0, 0.5], atol=1e-12)
    assert np.allclose(ua.x_inf_minus, [0, -0.5], atol=1e-12)
    assert ua.xbar_inf_plus == pytest.approx(0.5) and ua.xbar_inf_minus == pytest.approx(-0.5)
    assert np.allclose(ua.D_inf, [1, 0], atol=1e-9)


def test_unstable_asymptotics_okcorral(okc):
    ua = unstable_asymptotics(okc[1], 0.5)
    assert np.allclose(ua.x_inf_plus, [0, 0.5], atol=1e-9)
    assert np.allclose(ua.x_inf_minus, [0, -0.5], atol=1e-9)


def test_unstable_sign_contract(comp_ua):
    ua = comp_ua
    assert ua.x_inf_minus[1] < 0 < ua.x_inf_plus[1]
    assert ua.xbar_inf_minus < 0 < ua.xbar_inf_plus
    # backward path leaves x_inf and decays onto the unstable axis
    assert np.allclose(ua.backward(1, 0.0), ua.x_inf_plus, atol=1e-12)
    y = ua.backward(1, 20.0)
    assert math.exp(ua.plus.mu * 20.0) * y[1] == pytest.approx(ua.xbar_inf_plus, rel=1e-6)


def test_flow_near_stable_matches_direct_flow(comp):
    _, fr, sa = comp
    z = np.array([0.0, 1e-3])
    sol, _ = flow_near_stable(fr, sa, z, 5.0)
    for t in (1.0, 3.0, 5.0):
        assert np.allclose(sa.state(t) + sol(t), flow(fr, sa.x0 + z, t), atol=1e-9)


def test_deviation_from_stable_path_is_linear_in_z(comp):
    # phi_t(x0 + z) - phi_t(x0) - grad phi_t(x0) z = O(|z|^2 e^{2 lam t})
    _, fr, sa = comp
    resid = []
    for k in (3, 4, 5):
        z = np.array([0.0, 4.0 ** -k])
        t = 6.0
        sol, _ = flow_near_stable(fr, sa, z, t)
        lin = flow_jacobian(fr, sa.x0, t) @ z
        resid.append(np.hypot(*(sol(t) - lin)) / np.hypot(*z))
    # the relative residual shrinks in proportion to |z|
    for a, b in zip(resid, resid[1:]):
        assert 3.0 < a / b < 5.0


def test_linear_crossing_closed_form():
    m = build_linear_toy(c1=3.0, c2=3.0)
    fr = saddle_frame(m)
    sa = stable_asymptotics(fr, [1.0, 0.0])
    ua = unstable_asymptotics(fr, 0.5)
    z = np.array([0.0, 1e-6])
    c = unstable_crossing(fr, sa.x0 + z, ua, sa)
    assert c.s == pytest.approx(math.log(0.5 / 1e-6), abs=1e-6)
    assert c.point[1] == pytest.approx(0.5, abs=1e-9)
    assert c.timing_error <= 1e-6


def test_crossing_rejects_degenerate_direction(toy):
    _, fr, sa = toy
    assert sa.D0[0] == 0.0
    ua = unstable_asymptotics(fr, 0.5)
    with pytest.raises(InputError):
        unstable_crossing(fr, sa.x0 + np.array([1e-3, 0.0]), ua, sa)


def test_crossing_methods_agree(comp, comp_ua):
    _, fr, sa = comp
    z = np.array([0.0, 4.0 ** -3])
    a = unstable_crossing(fr, sa.x0 + z, comp_ua, sa, method="matched")
    b = unstable_crossing(fr, sa.x0 + z, comp_ua, sa, method="direct")
    assert a.s == pytest.approx(b.s, abs=1e-6)
    assert np.allclose(a.point, b.point, atol=1e-6)


def test_crossing_minus_side(comp, comp_ua):
    _, fr, sa = comp
    c = unstable_crossing(fr, sa.x0 + np.array([0.0, -4.0 ** -4]), comp_ua, sa)
    assert c.side == -1 and c.point[1] < 0
    assert c.timing_error < 1e-3


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.0, 0.08), a=st.floats(0.0, 2 * math.pi), t=st.floats(0.0, 2.0))
def test_reversed_flow_inverts(comp, r, a, t):
    fr = comp[1]
    x = r * np.array([math.cos(a), math.sin(a)])
    assert np.allclose(flow(fr, flow(fr, x, t), t, reversed=True), x, atol=1e-8)
