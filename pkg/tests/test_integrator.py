import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coupled_fhn import _kernel
from coupled_fhn.integrator import (
    EventSpec,
    IntegratorConfig,
    MaxStepsExceeded,
    NonFiniteState,
    StepSizeUnderflow,
    Trajectory,
    integrate,
    integrate_two,
    param_vector,
)
from coupled_fhn.model import FOLD_X, CouplingMode, Params, gamma, jacobian, phi, rhs

CANARD = Params(b=0.0, c=-0.519935054, k=1.0, epsilon=0.5)
CANARD_IC = (-1.5, 2.0, phi(-1.5), phi(2.0))


@pytest.fixture(scope="module")
def reference():
    """High-accuracy explicit run used as the oracle for the implicit solver."""
    return integrate(CANARD, CANARD_IC, IntegratorConfig(20.0, rtol=1e-12, atol=1e-14), method="explicit")


@given(
    st.sampled_from(list(CouplingMode)),
    st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    st.floats(0.01, 1.0),
)
def test_compiled_field_agrees_with_model(mode, y, eps):
    extra = {"b2": 0.3, "c2": -0.2, "k2": 0.6} if mode is CouplingMode.PERTURBED else {}
    p = Params(b=0.1, c=0.4, k=-0.7, epsilon=eps, mode=mode, **extra)
    code, prm = param_vector(p)
    y = np.array(y)
    out, jac = np.empty(4), np.empty((4, 4))
    _kernel.field(code, prm, y, out)
    _kernel.jacobian(code, prm, y, jac)
    np.testing.assert_allclose(out, rhs(p, y), rtol=1e-13, atol=1e-12)
    np.testing.assert_allclose(jac, jacobian(p, y), rtol=1e-14)


def test_equilibrium_stays_put():
    p = Params(b=0.0, c=0.0, k=1.0)
    traj = integrate(p, (0.0, 0.0, 0.0, 0.0), IntegratorConfig(50.0))
    assert np.all(traj.states == 0.0)
    assert traj.t_span == (0.0, 50.0)


def test_converges_to_reference(reference):
    traj = integrate(CANARD, CANARD_IC, IntegratorConfig(20.0, rtol=1e-9, atol=1e-11))
    assert np.max(np.abs(np.subtract(traj.final_state(), reference.final_state()))) < 1e-8


def test_error_scales_with_tolerance(reference):
    errors = []
    for rtol in (1e-6, 1e-7, 1e-8):
        traj = integrate(CANARD, CANARD_IC, IntegratorConfig(20.0, rtol=rtol, atol=rtol / 100))
        errors.append(np.max(np.abs(np.subtract(traj.final_state(), reference.final_state()))))
    # Global error tracks the tolerance roughly proportionally.
    assert errors[0] > errors[1] > errors[2]
    assert errors[0] / errors[2] > 30


def test_tolerance_halving_changes_little():
    cfg = IntegratorConfig(20.0, rtol=1e-8, atol=1e-10)
    a = integrate(CANARD, CANARD_IC, cfg).final_state()
    b = integrate(CANARD, CANARD_IC, cfg.with_tolerances(5e-9, 5e-11)).final_state()
    assert np.max(np.abs(np.subtract(a, b))) <= 10 * (1e-8 * 3 + 1e-10)


def test_dense_output_tracks_reference(reference):
    traj = integrate(CANARD, CANARD_IC, IntegratorConfig(20.0, rtol=1e-10, atol=1e-12))
    grid = np.linspace(0.0, 20.0, 997)
    assert np.max(np.abs(traj(grid) - reference(grid))) < 1e-4
    np.testing.assert_array_equal(traj(traj.times[5]), traj.states[5])


def test_stiff_relaxation_run_is_cheap():
    p = Params(b=0.3, c=0.01, k=0.1, epsilon=0.001)
    traj = integrate(p, (1.0, -1.0, phi(1.0), phi(-1.0)), IntegratorConfig(50.0, rtol=1e-6, atol=1e-8))
    # An explicit method would need on the order of 1e5 steps here.
    assert traj.n_accepted < 20_000


def test_synchrony_plane_invariant():
    p = Params(b=0.0, c=-2.0, k=1.0)
    traj = integrate(p, (1.0, 1.0, 2.0, 2.0), IntegratorConfig(100.0))
    drift = np.max(np.abs(traj.states[:, 0] - traj.states[:, 1]))
    drift = max(drift, np.max(np.abs(traj.states[:, 2] - traj.states[:, 3])))
    assert drift <= 1e-7


def test_flow_commutes_with_swap():
    cfg = IntegratorConfig(50.0)
    a, b = integrate_two(CANARD, CANARD_IC, gamma(CANARD_IC), cfg)
    np.testing.assert_allclose(gamma(a.final_state()), b.final_state(), atol=1e-6)


def test_runs_are_bit_identical():
    cfg = IntegratorConfig(30.0)
    a = integrate(CANARD, CANARD_IC, cfg)
    b = integrate(CANARD, CANARD_IC, cfg)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.states, b.states)
    assert a.to_csv() == b.to_csv()


def test_fold_event_location():
    spec = EventSpec.fold("x2", sign=1)
    traj = integrate(CANARD, CANARD_IC, IntegratorConfig(30.0, events=(spec,)))
    assert traj.events
    for ev in traj.events:
        assert ev.id == "fold_x2_+"
        assert abs(ev.state.x2 - FOLD_X) <= 1e-8


def test_events_sorted_and_directional():
    up = EventSpec.plane("x2", 0.0, direction=1, id="x2_up")
    down = EventSpec.plane("x2", 0.0, direction=-1, id="x2_down")
    traj = integrate(CANARD, CANARD_IC, IntegratorConfig(40.0, events=(up, down)))
    times = [e.time for e in traj.events]
    assert times == sorted(times)
    ids = [e.id for e in traj.events]
    # Crossings of a plane alternate in direction.
    assert all(a != b for a, b in zip(ids, ids[1:]))
    for ev in traj.events:
        slope = traj(ev.time + 1e-6)[1] - traj(ev.time - 1e-6)[1]
        assert (slope > 0) == (ev.id == "x2_up")


def test_terminal_event_truncates():
    spec = EventSpec.fold("x2", sign=1, terminal=True)
    traj = integrate(CANARD, CANARD_IC, IntegratorConfig(30.0, events=(spec,)))
    assert len(traj.events) == 1
    assert traj.times[-1] == traj.events[0].time
    assert abs(traj.states[-1, 1] - FOLD_X) <= 1e-8


def test_explicit_cross_check_agrees():
    cfg = IntegratorConfig(20.0, rtol=1e-10, atol=1e-12)
    a = integrate(CANARD, CANARD_IC, cfg)
    b = integrate(CANARD, CANARD_IC, cfg, method="explicit")
    assert b.method == "dop853"
    assert np.max(np.abs(np.subtract(a.final_state(), b.final_state()))) < 1e-6


def test_other_modes_integrate():
    p = Params(0.0, 1.1505466726, 0.820125, 0.5, mode=CouplingMode.ASYMMETRIC)
    a = integrate(p, (2, 2, 0, 0), IntegratorConfig(20.0, rtol=1e-10, atol=1e-12))
    b = integrate(p, (2, 2, 0, 0), IntegratorConfig(20.0, rtol=1e-10, atol=1e-12), method="explicit")
    assert np.max(np.abs(np.subtract(a.final_state(), b.final_state()))) < 1e-6


def test_max_steps_raises_with_partial_trajectory():
    with pytest.raises(MaxStepsExceeded) as info:
        integrate(CANARD, CANARD_IC, IntegratorConfig(10.0, max_steps=10))
    partial = info.value.trajectory
    assert len(partial) == partial.n_accepted + 1
    assert partial.times[-1] < 10.0


def test_unreachable_tolerance_underflows():
    with pytest.raises(StepSizeUnderflow):
        integrate(CANARD, CANARD_IC, IntegratorConfig(10.0, rtol=1e-300, atol=1e-300))


def test_overflowing_state_is_reported():
    with pytest.raises(NonFiniteState):
        integrate(CANARD, (1e200, 0, 0, 0), IntegratorConfig(10.0))
    with pytest.raises(NonFiniteState):
        integrate(CANARD, (np.nan, 0, 0, 0), IntegratorConfig(10.0))


@pytest.mark.parametrize(
    "kwargs",
    [dict(t_end=0.0), dict(t_end=1.0, rtol=0.0), dict(t_end=1.0, max_steps=0), dict(t_end=1.0, max_step=0.0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegratorConfig(**kwargs)


def test_unknown_method():
    with pytest.raises(ValueError):
        integrate(CANARD, CANARD_IC, IntegratorConfig(1.0), method="euler")


def test_max_step_respected():
    traj = integrate(CANARD, CANARD_IC, IntegratorConfig(10.0, max_step=0.05))
    assert np.max(np.diff(traj.times)) <= 0.05 + 1e-15


def test_csv_format_and_round_trip(tmp_path):
    traj = integrate(CANARD, CANARD_IC, IntegratorConfig(5.0))
    path = tmp_path / "traj.csv"
    text = traj.to_csv(path)
    raw = path.read_bytes()
    assert raw.decode() == text
    assert b"\r" not in raw
    lines = text.splitlines()
    assert lines[0] == "t,x1,x2,y1,y2"
    assert len(lines) == len(traj) + 1
    back = Trajectory.from_csv(path, CANARD)
    np.testing.assert_array_equal(back.times, traj.times)
    np.testing.assert_array_equal(back.states, traj.states)


def test_window_and_resample():
    traj = integrate(CANARD, CANARD_IC, IntegratorConfig(10.0))
    part = traj.window(2.0, 4.0)
    assert part.times[0] >= 2.0 and part.times[-1] <= 4.0
    grid, values = traj.resample(0.5, 1.0, 3.0)
    np.testing.assert_allclose(grid, [1.0, 1.5, 2.0, 2.5, 3.0])
    assert values.shape == (5, 4)
    assert traj.x2 is traj.states[:, 1] or np.array_equal(traj.x2, traj.states[:, 1])
