"""
ECE, voting power and the saturated control law
===============================================

Walk one agent through a single decision epoch by hand.
"""

from daoctrl import control, plant
from daoctrl.plant import AgentSpec, AgentState

spec = AgentSpec(number=1, tau=10.0)
state = AgentState(x=1.0, u=0.5)

# first epoch primes the history, the second one yields an ECE sample
plant.update_ece(state, plant.local_objective(spec, state.x, state.u), state.u)
state.x = plant.step_dynamics(spec, state, coupled_u=1.0, dt=0.1)
state.u = 1.5
sample = plant.update_ece(state, plant.local_objective(spec, state.x, state.u), state.u)
print("ECE sample:", sample)

# voting power from the local disagreement with one neighbour
r = [state.r, state.r - 0.8]
rtilde = control.local_disagreement(0, [(1, 0.2)], r)
w = control.voting_weights(state.gamma, rtilde, k1=2.0, k2=5.0)
print(f"rtilde={rtilde:.3f} alpha={w.alpha:.3f} beta={w.beta:.3f}")

grad = plant.objective_gradient(spec, state.x, state.u)
out = control.control_step(state.d, grad, control.consensus_term(0, [(1, 0.2)], r),
                           w.alpha, w.beta, spec.delta, spec.tau)
print(f"new u={out.u:.3f} (saturated at +/-{spec.delta}), new d={out.d:.3f}")

inc = control.incentive_update(state.gamma, rtilde, 0.0, [(0.2, -0.3)], k3=0.3, k4=0.1)
print(f"h={inc.h:.3f} multiplier={inc.multiplier:.3f} gamma={inc.gamma:.3f}")
