import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from daoctrl import plant
from daoctrl.plant import AgentSpec, AgentState

finite = st.floats(-1e3, 1e3, allow_nan=False)


def spec(i, **kw):
    return AgentSpec(number=i, tau=1.0, **kw)


def test_agent_spec_invariants():
    with pytest.raises(ValueError):
        AgentSpec(1, tau=0.0)
    with pytest.raises(ValueError):
        AgentSpec(1, tau=1.0, u_min=3.0, u_max=-3.0)
    with pytest.raises(ValueError):
        AgentSpec(1, tau=1.0, dynamics="nope")
    assert AgentSpec(1, tau=1.0, u_min=-2.0, u_max=5.0).delta == 2.0


def test_initial_state():
    s = AgentState(x=1.0, u=0.5)
    assert s.d == 0.0 and s.gamma == 1.0 and s.r == 0.0 and not s.r_defined


def test_step_dynamics_paper_agent1():
    # 1 + 0.1 (sin 1 + cos 1), evaluated at 30 digits
    x = plant.step_dynamics(spec(1), AgentState(x=1.0, u=0.0), 1.0, 0.1)
    assert x == pytest.approx(1.13817732906760362240534389291, rel=1e-14)


def test_step_dynamics_zero_derivative():
    plant.register_dynamics("frozen", lambda i, x, u: 0.0)
    assert plant.step_dynamics(spec(3, dynamics="frozen"), AgentState(x=5.0, u=0.0), 0.0, 0.1) == 5.0


def test_step_dynamics_zero_dt():
    assert plant.step_dynamics(spec(4), AgentState(x=2.0, u=1.0), 1.5, 0.0) == 2.0


@given(st.integers(1, 10), finite, finite, st.floats(1e-3, 1.0))
def test_step_dynamics_is_euler(i, x, cu, dt):
    expected = x + dt * (x * math.sin(i) + cu * math.cos(i))
    assert plant.step_dynamics(spec(i), AgentState(x=x, u=0.0), cu, dt) == expected


def test_local_objective_values():
    assert plant.local_objective(spec(1), 0.0, 0.0) == 0.0
    assert plant.local_objective(spec(2), math.pi / 2, 1.0) == pytest.approx(1.5838531634528576, rel=1e-14)
    assert all(plant.local_objective(spec(i), 0.0, 0.0) == 0.0 for i in range(1, 11))


def test_gradient_analytic():
    assert plant.objective_gradient(spec(1), 0.3, 1.0) == pytest.approx(1.0806046117362794, rel=1e-14)
    assert plant.objective_gradient(spec(5), 7.0, 0.0) == 0.0


def test_gradient_fd_agrees():
    g_fd = plant.objective_gradient(spec(1), 0.3, 1.0, method="fd")
    assert g_fd == pytest.approx(2 * math.cos(1), rel=1e-6)


def test_gradient_fd_fallback_for_unregistered():
    plant.register_objective("quartic", lambda i, x, u: u ** 4)
    s = spec(1, objective="quartic")
    assert plant.objective_gradient(s, 0.0, 1.0) == pytest.approx(4.0, rel=1e-6)
    with pytest.raises(ValueError):
        plant.objective_gradient(s, 0.0, 1.0, method="analytic")


def test_gradient_fd_converges_second_order():
    # non-polynomial objective so truncation error is visible
    plant.register_objective("expo", lambda i, x, u: math.exp(u) * i)
    s = spec(2, objective="expo")
    exact = 2 * math.exp(0.7)
    hs = [1e-1, 5e-2, 2.5e-2, 1.25e-2]
    errs = [abs(plant.objective_gradient(s, 0.0, 0.7, method="fd", h=h) - exact) for h in hs]
    orders = [math.log(errs[k] / errs[k + 1]) / math.log(2) for k in range(3)]
    assert min(orders) >= 1.9


def test_update_ece_first_call_primes():
    s = AgentState(x=0.0, u=1.0)
    sample = plant.update_ece(s, 3.0, 1.0)
    assert not sample.defined and s.r == 0.0
    assert s.last_g == 3.0 and s.last_u == 1.0


def test_update_ece_values():
    s = AgentState(x=0.0, u=1.0, last_g=3.0, last_u=1.0)
    sample = plant.update_ece(s, 5.0, 1.5)
    assert sample == (4.0, True) and s.r == 4.0 and s.dg == 2.0
    # unchanged control: undefined, previous r kept
    sample = plant.update_ece(s, 9.0, 1.5)
    assert sample == (4.0, False) and s.r == 4.0 and not s.r_defined
    # unchanged objective: r = 0
    sample = plant.update_ece(s, 9.0, 2.0)
    assert sample == (0.0, True)


def test_update_ece_deadband():
    s = AgentState(x=0.0, u=0.0, last_g=0.0, last_u=0.0)
    assert not plant.update_ece(s, 1.0, 5e-10).defined
    assert plant.update_ece(s, 2.0, 1.0).defined


@given(st.lists(st.tuples(finite, st.floats(-3, 3)), min_size=1, max_size=30))
def test_update_ece_never_nan(samples):
    s = AgentState(x=0.0, u=0.0)
    for g, u in samples:
        sample = plant.update_ece(s, g, u)
        assert not math.isnan(sample.value) and not math.isnan(s.r)


def test_gradient_grid_relative_error():
    rng = np.random.default_rng(0)
    for i in range(1, 11):
        for x, u in zip(rng.uniform(-20, 20, 10), rng.uniform(0.1, 3, 10) * rng.choice([-1, 1], 10)):
            a = plant.objective_gradient(spec(i), x, u, method="analytic")
            f = plant.objective_gradient(spec(i), x, u, method="fd")
            assert abs(f - a) <= 1e-6 * abs(a)
