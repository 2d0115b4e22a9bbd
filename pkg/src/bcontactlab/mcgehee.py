"""The planar circular restricted three-body problem at infinity.

In a frame rotating with the primaries (masses 1−μ at (μ, 0) and μ at
(μ−1, 0)) the polar-coordinate Hamiltonian is

    P_r²/2 + P_a²/(2r²) − P_a − (1−μ)/d₁ − μ/d₂,

with d₁,₂ the distances to the primaries.  The inverted radial variable
x = √(2/r) compactifies r = ∞ to {x = 0}; the symplectic form picks up a
−4 dx/x³ ∧ dP_r factor there, so Hamilton's equations acquire an x³/4
rescaling in the (x, P_r) pair:

    ẋ = −(x³/4) ∂H/∂P_r,   ȧ = ∂H/∂P_a,
    Ṗ_r = (x³/4) ∂H/∂x,    Ṗ_a = −∂H/∂a.

Everything on the right is polynomial in x near x = 0, so the set {x = 0}
is invariant — exactly so, including in floating point — and carries the
rigid flow ȧ = −1: a circle of 2π-periodic orbits, one per (a₀, P_r, P_a).
For x > 0 the system is the classical one in disguise, which is what the
independent polar-coordinate oracle checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .jets import Jet1
from .rk45 import integrate

__all__ = [
    "CollisionError", "McGeheeParams", "McGeheeState", "McGeheeTrajectory",
    "hamiltonian", "polar_hamiltonian", "vector_field", "polar_field",
    "integrate_mcgehee", "newtonian_oracle_compare",
]

COLLISION_FLOOR = 1e-12   # minimum squared primary distance (rescaled)
ENERGY_DRIFT_TOL = 1e-8


class CollisionError(RuntimeError):
    """The trajectory ran into one of the primaries."""


@dataclass(frozen=True)
class McGeheeParams:
    mu: float

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mass ratio must lie in (0, 1), got {self.mu}")


@dataclass(frozen=True)
class McGeheeState:
    x: float    # inverted radial variable, r = 2/x²
    a: float    # rotating-frame polar angle
    pr: float   # radial momentum (unchanged by the substitution)
    pa: float   # angular momentum

    def __post_init__(self):
        if self.x < 0.0:
            raise ValueError(f"the radial variable cannot be negative: {self.x}")

    @property
    def r(self):
        if self.x == 0.0:
            return math.inf
        return 2.0 / (self.x * self.x)

    def as_array(self):
        return np.array([self.x, self.a, self.pr, self.pa])

    @classmethod
    def from_array(cls, y):
        return cls(float(y[0]), float(y[1]), float(y[2]), float(y[3]))


def _cos(w):
    return w.cos() if isinstance(w, Jet1) else np.cos(w)


def _sqrt(w):
    return w.sqrt() if isinstance(w, Jet1) else np.sqrt(w)


def _energy(x, a, pr, pa, mu):
    """The Hamiltonian, generic over floats, arrays and jets."""
    x2 = x * x
    x4 = x2 * x2
    c = _cos(a)
    d1 = _sqrt(4.0 - 4.0 * mu * x2 * c + mu * mu * x4)
    d2 = _sqrt(4.0 + 4.0 * (1.0 - mu) * x2 * c + (1.0 - mu) ** 2 * x4)
    return (pr * pr / 2.0 + x4 * pa * pa / 8.0 - pa
            - (1.0 - mu) * x2 / d1 - mu * x2 / d2)


def _squared_separations(x, a, mu):
    x2 = x * x
    x4 = x2 * x2
    c = np.cos(a)
    return (4.0 - 4.0 * mu * x2 * c + mu * mu * x4,
            4.0 + 4.0 * (1.0 - mu) * x2 * c + (1.0 - mu) ** 2 * x4)


def _guard(x, a, mu):
    s1, s2 = _squared_separations(x, a, mu)
    if np.min(s1) < COLLISION_FLOOR or np.min(s2) < COLLISION_FLOOR:
        raise CollisionError(
            f"primary separation underflow at x={float(np.max(x)):.6g}")


def hamiltonian(state, params):
    """Energy of a state; guards against collision with either primary."""
    _guard(state.x, state.a, params.mu)
    return float(_energy(state.x, state.a, state.pr, state.pa, params.mu))


def polar_hamiltonian(r, a, pr, pa, mu):
    """The same energy in the original polar variables (r = 2/x²)."""
    c = np.cos(a)
    d1 = np.sqrt(r * r - 2.0 * mu * r * c + mu * mu)
    d2 = np.sqrt(r * r + 2.0 * (1.0 - mu) * r * c + (1.0 - mu) ** 2)
    return pr * pr / 2.0 + pa * pa / (2.0 * r * r) - pa \
        - (1.0 - mu) / d1 - mu / d2


def _field_values(x, a, pr, pa, mu):
    if x == 0.0:
        # {x = 0} is invariant and carries the rigid rotation a' = -1
        return np.array([0.0, -1.0, 0.0, 0.0])
    jx, ja, jpr, jpa = Jet1.seed((x, a, pr, pa))
    grad = _energy(jx, ja, jpr, jpa, mu).grad
    k = x * x * x / 4.0
    return np.array([-k * grad[2], grad[3], k * grad[0], -grad[1]])


def vector_field(state, params):
    """State derivative (ẋ, ȧ, Ṗ_r, Ṗ_a)."""
    _guard(state.x, state.a, params.mu)
    return _field_values(state.x, state.a, state.pr, state.pa, params.mu)


@dataclass
class McGeheeTrajectory:
    t: np.ndarray
    y: np.ndarray            # columns (x, a, Pr, Pa)
    energy: np.ndarray
    energy_drift: float
    status: str
    stats: dict

    @property
    def final(self):
        return McGeheeState.from_array(self.y[-1])


def integrate_mcgehee(state0, params, t_span=(0.0, 100.0), rtol=1e-10,
                      atol=1e-12):
    """Integrate the system and report the worst energy drift along the way."""
    mu = params.mu

    def rhs(t, y):
        _guard(y[0], y[1], mu)
        return _field_values(float(y[0]), float(y[1]), float(y[2]),
                             float(y[3]), mu)

    sol = integrate(rhs, state0.as_array(), t_span, rtol=rtol, atol=atol)
    energy = np.asarray(_energy(sol.y[:, 0], sol.y[:, 1], sol.y[:, 2],
                                sol.y[:, 3], mu), dtype=float)
    drift = float(np.max(np.abs(energy - energy[0])))
    return McGeheeTrajectory(t=sol.t, y=sol.y, energy=energy,
                             energy_drift=drift, status=sol.status,
                             stats=sol.stats_dict())


# ---------------------------------------------------------------------------
# the independent oracle

def polar_field(t, y, mu):
    """Rotating-frame equations in (r, a, P_r, P_a), derived by hand."""
    r, a, pr, pa = y
    c, s = math.cos(a), math.sin(a)
    d1sq = r * r - 2.0 * mu * r * c + mu * mu
    d2sq = r * r + 2.0 * (1.0 - mu) * r * c + (1.0 - mu) ** 2
    d1 = math.sqrt(d1sq)
    d2 = math.sqrt(d2sq)
    r_dot = pr
    a_dot = pa / (r * r) - 1.0
    pr_dot = (pa * pa / r ** 3
              - (1.0 - mu) * (r - mu * c) / (d1sq * d1)
              - mu * (r + (1.0 - mu) * c) / (d2sq * d2))
    pa_dot = mu * (1.0 - mu) * r * s * (1.0 / (d2sq * d2) - 1.0 / (d1sq * d1))
    return (r_dot, a_dot, pr_dot, pa_dot)


def newtonian_oracle_compare(state0, params, t_span=(0.0, 10.0), rtol=1e-10,
                             atol=1e-12, oracle_rtol=1e-12, oracle_atol=1e-14):
    """Run both formulations side by side and measure their disagreement.

    The trajectory is integrated in the inverted variable with the shared
    adaptive integrator, then the classical polar system — coded separately
    above — is driven through SciPy's DOP853 over the same time samples.
    The deviation is reported per component after mapping r = 2/x².
    """
    if state0.x <= 0.0:
        raise ValueError("the oracle comparison needs an orbit with x > 0")
    traj = integrate_mcgehee(state0, params, t_span, rtol=rtol, atol=atol)
    x = traj.y[:, 0]
    if np.min(x) <= 0.0:
        raise CollisionError("trajectory reached the infinity manifold; the "
                             "polar formulation cannot follow it")

    y0 = [state0.r, state0.a, state0.pr, state0.pa]
    if traj.t[0] == traj.t[-1]:
        oracle_y = np.tile(y0, (traj.t.size, 1))
    else:
        oracle = solve_ivp(polar_field, (traj.t[0], traj.t[-1]), y0,
                           t_eval=traj.t, args=(params.mu,), method="DOP853",
                           rtol=oracle_rtol, atol=oracle_atol,
                           dense_output=False)
        if not oracle.success:
            raise CollisionError(f"oracle integration failed: {oracle.message}")
        oracle_y = oracle.y.T

    mapped = np.column_stack([2.0 / (x * x), traj.y[:, 1], traj.y[:, 2],
                              traj.y[:, 3]])
    gaps = np.abs(mapped - oracle_y)
    per = {name: float(np.max(gaps[:, k]))
           for k, name in enumerate(("r", "a", "Pr", "Pa"))}
    return {
        "max_deviation": float(np.max(gaps)),
        "per_component": per,
        "n_samples": int(traj.t.size),
        "t_final": float(traj.t[-1]),
        "energy_drift": traj.energy_drift,
        "oracle": "scipy solve_ivp DOP853 on the polar equations",
    }
