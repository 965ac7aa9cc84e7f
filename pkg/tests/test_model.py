import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coupled_fhn.model import (
    DELTA_MATRIX,
    FOLD_X,
    FOLD_Y,
    GAMMA_MATRIX,
    CouplingMode,
    Params,
    State,
    as_state,
    delta,
    from_z,
    gamma,
    jacobian,
    phi,
    phi_double_prime,
    phi_prime,
    rhs,
    rhs_z,
    to_z,
)

coord = st.floats(-3.0, 3.0, allow_nan=False)
states = st.tuples(coord, coord, st.floats(-6, 6), st.floats(-6, 6))
params = st.builds(
    Params,
    b=st.floats(-1, 1),
    c=st.floats(-2, 2),
    k=st.floats(-1, 1),
    epsilon=st.floats(0.01, 1.0),
)


def central_jacobian(p, s, h=1e-6):
    s = np.asarray(s, dtype=float)
    cols = []
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        cols.append((rhs(p, s + e) - rhs(p, s - e)) / (2 * h))
    return np.column_stack(cols)


def test_cubic_and_fold_constants():
    assert phi(2.0) == 0.0
    assert phi(1.0) == 3.0
    assert phi_prime(FOLD_X) == pytest.approx(0.0, abs=1e-15)
    assert phi(FOLD_X) == pytest.approx(FOLD_Y, rel=1e-15)
    assert FOLD_Y == pytest.approx(3.0792014356780038)
    assert phi_double_prime(FOLD_X) < 0 < phi_double_prime(-FOLD_X)


@given(st.floats(-5, 5))
def test_cubic_derivatives_match_differences(x):
    h = 1e-5
    assert phi_prime(x) == pytest.approx((phi(x + h) - phi(x - h)) / (2 * h), abs=1e-7)
    assert phi_double_prime(x) == pytest.approx((phi_prime(x + h) - phi_prime(x - h)) / (2 * h), abs=1e-7)


def test_rhs_hand_expanded():
    # phi(1) = 3, phi(-1) = -3, so both fast components vanish.
    p = Params(b=0.0, c=0.0, k=1.0, epsilon=0.5)
    np.testing.assert_array_equal(rhs(p, (1.0, -1.0, 3.0, -3.0)), [0.0, 0.0, -5.0, 5.0])


def test_rhs_symmetric_general_point():
    p = Params(b=0.3, c=0.2, k=-0.4, epsilon=0.1)
    x1, x2, y1, y2 = 0.5, -1.2, 0.7, 2.0
    expected = [
        (-y1 + 4 * x1 - x1**3) / 0.1,
        (-y2 + 4 * x2 - x2**3) / 0.1,
        x1 - 0.3 * y1 - 0.2 + 0.4 * (y1 - y2),
        x2 - 0.3 * y2 - 0.2 + 0.4 * (y2 - y1),
    ]
    np.testing.assert_allclose(rhs(p, (x1, x2, y1, y2)), expected, rtol=1e-14)


def test_rhs_asymmetric_forcing():
    p = Params(b=0.5, c=1.0, k=2.0, epsilon=0.5, mode=CouplingMode.ASYMMETRIC)
    out = rhs(p, (1.0, 2.0, 3.0, 4.0))
    assert out[2] == pytest.approx(1 - 1.5 - 1 + 8)
    assert out[3] == pytest.approx(2 - 2 - 1)


def test_rhs_perturbed_second_cell():
    p = Params(b=0.1, c=0.2, k=0.3, mode=CouplingMode.PERTURBED, b2=0.5, c2=-0.1, k2=0.7)
    out = rhs(p, (1.0, 2.0, 3.0, 4.0))
    assert out[2] == pytest.approx(1 - 0.3 - 0.2 - 0.3 * (3 - 4))
    assert out[3] == pytest.approx(2 - 2.0 + 0.1 - 0.7 * (4 - 3))


def test_rhs_vectorised_over_columns():
    p = Params(b=0.1, c=0.2, k=0.3)
    pts = np.random.default_rng(1).uniform(-2, 2, size=(4, 7))
    batched = rhs(p, pts)
    for j in range(7):
        np.testing.assert_allclose(batched[:, j], rhs(p, pts[:, j]), rtol=1e-15)


@given(params, states)
def test_gamma_equivariance(p, s):
    np.testing.assert_allclose(rhs(p, gamma(s)), GAMMA_MATRIX @ rhs(p, s), rtol=1e-12, atol=1e-9)


@given(params, states)
def test_delta_equivariance_when_c_zero(p, s):
    p = p.replace(c=0.0)
    np.testing.assert_allclose(rhs(p, delta(s)), DELTA_MATRIX @ rhs(p, s), rtol=1e-12, atol=1e-9)


@given(params.filter(lambda p: abs(p.c) > 1e-3), states)
def test_delta_breaks_when_c_nonzero(p, s):
    diff = rhs(p, delta(s)) - DELTA_MATRIX @ rhs(p, s)
    # Only the slow components pick up the constant: exactly -2c in each.
    np.testing.assert_allclose(diff[:2], 0.0, atol=1e-9)
    np.testing.assert_allclose(diff[2:], [-2 * p.c, -2 * p.c], rtol=1e-9)


def test_symmetries_are_involutions_that_commute():
    s = State(0.3, -1.1, 2.0, 0.4)
    assert gamma(gamma(s)) == s
    assert delta(delta(s)) == s
    assert gamma(delta(s)) == delta(gamma(s)) == State(-0.3, 1.1, -2.0, -0.4)


@given(params, states)
def test_jacobian_matches_central_differences(p, s):
    analytic = jacobian(p, s)
    fd = central_jacobian(p, s)
    scale = np.maximum(np.abs(analytic), 1.0)
    assert np.max(np.abs(analytic - fd) / scale) <= 1e-6


@pytest.mark.parametrize("mode", list(CouplingMode))
def test_jacobian_every_mode(mode):
    extra = {"b2": 0.2, "c2": 0.1, "k2": -0.3} if mode is CouplingMode.PERTURBED else {}
    p = Params(b=0.4, c=-0.2, k=0.7, epsilon=0.05, mode=mode, **extra)
    s = (0.9, -1.4, 0.3, 1.1)
    np.testing.assert_allclose(jacobian(p, s), central_jacobian(p, s), rtol=1e-7, atol=1e-6)


@given(states)
def test_z_coordinates_round_trip(s):
    back = from_z(to_z(s))
    np.testing.assert_allclose(back, s, rtol=1e-12, atol=1e-12)


def test_rhs_z_conjugate_to_rhs():
    rng = np.random.default_rng(7)
    T = np.array([[1, 1, 0, 0], [0, 0, 1, 1], [1, -1, 0, 0], [0, 0, 1, -1]], dtype=float)
    for _ in range(1000):
        p = Params(b=rng.uniform(-1, 1), c=rng.uniform(-2, 2), k=rng.uniform(-1, 1),
                   epsilon=rng.uniform(0.01, 1))
        s = rng.uniform(-3, 3, 4)
        lhs = rhs_z(p, to_z(s))
        rhs_ = T @ rhs(p, s)
        np.testing.assert_allclose(lhs, rhs_, rtol=1e-10, atol=1e-9)


def test_rhs_z_keeps_synchrony_plane():
    p = Params(b=0.2, c=-0.5, k=0.3)
    z = to_z((0.8, 0.8, -0.4, -0.4))
    out = rhs_z(p, z)
    assert out[2] == 0.0 and out[3] == 0.0


def test_rhs_z_rejects_other_modes():
    with pytest.raises(ValueError):
        rhs_z(Params(0, 0, 1, mode=CouplingMode.ASYMMETRIC), (0, 0, 0, 0))


def test_params_validation():
    with pytest.raises(ValueError):
        Params(0, 0, 1, epsilon=0.0)
    with pytest.raises(ValueError):
        Params(0, 0, 1, mode=CouplingMode.PERTURBED)
    with pytest.raises(ValueError):
        Params(0, 0, 1, b2=0.3)
    with pytest.raises(ValueError):
        Params(math.nan, 0, 1)
    with pytest.raises(ValueError):
        Params(0, 0, 1, mode="NoSuchMode")


@pytest.mark.parametrize(
    "p",
    [
        Params(0.1, -0.2, 0.3, 0.05),
        Params(0.0, 1.15, 0.82, 0.5, mode=CouplingMode.ASYMMETRIC),
        Params(0.1, 0.0, 0.1, mode=CouplingMode.PERTURBED, b2=0.12, c2=0.01, k2=0.11),
    ],
)
def test_params_json_round_trip(p):
    assert Params.from_json(p.to_json()) == p


def test_params_json_layout():
    data = json.loads(Params(0.1, 0.0, 0.1, mode=CouplingMode.PERTURBED, b2=0.2, c2=0.3, k2=0.4).to_json())
    assert data["mode"] == {"name": "PerturbedSecondCell", "b2": 0.2, "c2": 0.3, "k2": 0.4}
    assert json.loads(Params(0, 1, 2).to_json())["mode"] == "SymmetricBidirectional"
    with pytest.raises(ValueError):
        Params.from_dict({"b": 0, "c": 0, "k": 1, "eps": 0.1})


def test_as_state_requires_four_components():
    assert as_state([1, 2, 3, 4]) == State(1.0, 2.0, 3.0, 4.0)
    with pytest.raises(ValueError):
        as_state([1, 2, 3])
