"""Singular contact forms α = f dz/z + β on a tubular chart and their Reeb data.

Everything is expressed in the frame {du, dv, dz/z} dual to {∂u, ∂v, z∂z}.
Writing A = β_u, B = β_v and C = f + z β_z for the frame coefficients of α,
exterior differentiation gives

    dα = P du∧dv + Q du∧(dz/z) + S dv∧(dz/z),
    P = ∂u B − ∂v A,   Q = ∂u C − z ∂z A,   S = ∂v C − z ∂z B,

and the volume coefficient of α∧dα in du∧dv∧(dz/z) is

    V = A·S − B·Q + C·P.

The Reeb field R = Y_u ∂u + Y_v ∂v + g z∂z solves the 4×3 system

    [A  B  C ] (Y_u)   (1)
    [0 −P −Q ] (Y_v) = (0)
    [P  0 −S ] ( g )   (0)
    [Q  S  0 ]

(α(R) = 1 plus ι_R dα contracted with each frame vector), solved in the
least-squares sense through the normal equations — the redundant fourth row
keeps the solve well-posed wherever the contact condition holds.

On the surface Z = {z = 0} the form induces the area form ω = f dβ + β∧df
with coefficient w = f(∂uB − ∂vA) + A f_v − B f_u, and H = −f|_Z generates
the restricted Reeb dynamics: ι_{R|_Z} ω = df|_Z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expressions import Expr, evaluate
from .jets import Jet1, Jet2

__all__ = [
    "ChartFields", "BContactForm", "BReebField", "ZSymplecticData",
    "ValidationReport", "RankDeficiencyError", "DegenerateSymplecticError",
    "contact_check", "solve_reeb", "exceptional_hamiltonian", "symplectic_on_Z",
    "verify_hamiltonian_identity", "reeb_residual_report",
    "CONTACT_THRESHOLD", "REEB_RESIDUAL_TOL",
]

CONTACT_THRESHOLD = 1e-8
REEB_RESIDUAL_TOL = 1e-8
_DET_FLOOR = 1e-12


class RankDeficiencyError(RuntimeError):
    """The Reeb system could not be solved to tolerance at some point."""


class DegenerateSymplecticError(RuntimeError):
    """|w| fell below threshold somewhere on Z: ω is not an area form there."""


@dataclass(frozen=True)
class ChartFields:
    """Component expressions of one chart: α = f dz/z + β_u du + β_v dv + β_z dz."""

    f: Expr
    beta_u: Expr
    beta_v: Expr
    beta_z: Expr


class BContactForm:
    """A singular contact form given per chart of a tubular atlas."""

    def __init__(self, fields):
        if not fields:
            raise ValueError("a contact form needs at least one chart")
        self.fields = dict(fields)

    def for_chart(self, name):
        try:
            return self.fields[name]
        except KeyError:
            raise KeyError(f"form has no data for chart {name!r}; "
                           f"available: {sorted(self.fields)}") from None

    def chart_names(self):
        return sorted(self.fields)


@dataclass
class ValidationReport:
    check: str
    passed: bool
    threshold: float
    worst_value: float
    worst_location: dict
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "check": self.check,
            "passed": bool(self.passed),
            "threshold": self.threshold,
            "worst_value": self.worst_value,
            "worst_location": self.worst_location,
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# frame coefficients

def _jet1_lift(x):
    """Constant-valued trees evaluate to bare numbers; give them zero grads."""
    return x if isinstance(x, Jet1) else Jet1.constant(x, 3)


def frame_values(cf, chart, u, v, z):
    """(A, B, C, P, Q, S, V) values at a point or an array of points."""
    ju, jv, jz = Jet1.seed((u, v, z))
    env = {chart.u_name: ju, chart.v_name: jv, chart.z_name: jz}
    fj = _jet1_lift(evaluate(cf.f, env))
    Aj = _jet1_lift(evaluate(cf.beta_u, env))
    Bj = _jet1_lift(evaluate(cf.beta_v, env))
    bzj = _jet1_lift(evaluate(cf.beta_z, env))
    Cj = fj + jz * bzj
    A, B, C = Aj.value, Bj.value, Cj.value
    P = Bj.grad[0] - Aj.grad[1]
    Q = Cj.grad[0] - z * Aj.grad[2]
    S = Cj.grad[1] - z * Bj.grad[2]
    V = A * S - B * Q + C * P
    return A, B, C, P, Q, S, V


def _d(j2, i):
    """First-derivative slice of a Jet2 as a Jet1 (∂_i of the quantity)."""
    return Jet1(j2.grad[i], tuple(j2.hess[i]))


def _val(j2):
    return Jet1(j2.value, j2.grad)


def frame_jets(cf, chart, u, v, z):
    """Frame coefficients as Jet1 values carrying their (u, v, z)-gradients."""
    ju, jv, jz = Jet2.seed((u, v, z))
    env = {chart.u_name: ju, chart.v_name: jv, chart.z_name: jz}

    def lift(x):
        return x if isinstance(x, Jet2) else Jet2.constant(x, 3)

    fj = lift(evaluate(cf.f, env))
    Aj = lift(evaluate(cf.beta_u, env))
    Bj = lift(evaluate(cf.beta_v, env))
    bzj = lift(evaluate(cf.beta_z, env))
    Cj = fj + jz * bzj
    A = _val(Aj)
    B = _val(Bj)
    C = _val(Cj)
    zj1 = _val(jz)
    P = _d(Bj, 0) - _d(Aj, 1)
    Q = _d(Cj, 0) - zj1 * _d(Aj, 2)
    S = _d(Cj, 1) - zj1 * _d(Bj, 2)
    return A, B, C, P, Q, S


# ---------------------------------------------------------------------------
# the least-squares Reeb solve, generic over floats / arrays / jets

def _det_magnitude(det):
    """Smallest |det| across the payload (value part for jets, min over arrays)."""
    if isinstance(det, Jet1):
        det = det.value
    if isinstance(det, float):
        return abs(det)
    return float(np.min(np.abs(np.asarray(det, dtype=float))))


def _solve_reeb_system(A, B, C, P, Q, S):
    """Solve the 4×3 system via normal equations and a closed-form 3×3 inverse.

    Returns (Y_u, Y_v, g, det N); the solution triple is None when det N is
    below the degeneracy floor (in any array lane), so callers can raise with
    their own context instead of dividing by ~0.  Works for float, array, and
    Jet1 entries alike.
    """
    n11 = A * A + P * P + Q * Q
    n12 = A * B + Q * S
    n13 = A * C - P * S
    n22 = B * B + P * P + S * S
    n23 = B * C + P * Q
    n33 = C * C + Q * Q + S * S
    det = (n11 * (n22 * n33 - n23 * n23)
           - n12 * (n12 * n33 - n23 * n13)
           + n13 * (n12 * n23 - n22 * n13))
    if _det_magnitude(det) < _DET_FLOOR:
        return None, None, None, det
    # adjugate rows applied to the right-hand side (A, B, C)
    x1 = ((n22 * n33 - n23 * n23) * A
          + (n13 * n23 - n12 * n33) * B
          + (n12 * n23 - n13 * n22) * C) / det
    x2 = ((n23 * n13 - n12 * n33) * A
          + (n11 * n33 - n13 * n13) * B
          + (n12 * n13 - n11 * n23) * C) / det
    x3 = ((n12 * n23 - n22 * n13) * A
          + (n12 * n13 - n11 * n23) * B
          + (n11 * n22 - n12 * n12) * C) / det
    return x1, x2, x3, det


def _residual_norm(A, B, C, P, Q, S, x1, x2, x3):
    r1 = A * x1 + B * x2 + C * x3 - 1.0
    r2 = -P * x2 - Q * x3
    r3 = P * x1 - S * x3
    r4 = Q * x1 + S * x2
    return np.sqrt(r1 * r1 + r2 * r2 + r3 * r3 + r4 * r4)


class BReebField:
    """Pointwise-solved Reeb field R = Y_u ∂u + Y_v ∂v + g z∂z."""

    def __init__(self, form, chart):
        self.form = form
        self.chart = chart

    def _chart(self, chart_name):
        if chart_name is None:
            names = self.form.chart_names()
            if len(names) != 1:
                raise ValueError("chart_name is required for a multi-chart atlas")
            chart_name = names[0]
        return chart_name, self.chart.charts[chart_name]

    def components(self, u, v, z, chart_name=None):
        """(Y_u, Y_v, g) at one point (floats) or arrays of points."""
        chart_name, chart = self._chart(chart_name)
        cf = self.form.for_chart(chart_name)
        A, B, C, P, Q, S, _ = frame_values(cf, chart, u, v, z)
        x1, x2, x3, det = _solve_reeb_system(A, B, C, P, Q, S)
        if x1 is None:
            raise RankDeficiencyError(
                f"Reeb system rank-deficient on chart {chart_name!r} "
                f"(|det| min {_det_magnitude(det):.3e})")
        res = _residual_norm(A, B, C, P, Q, S, x1, x2, x3)
        scalar = isinstance(res, float)
        bad_res = res > REEB_RESIDUAL_TOL if scalar else bool(np.any(res > REEB_RESIDUAL_TOL))
        if bad_res:
            raise RankDeficiencyError(
                f"Reeb system rank-deficient on chart {chart_name!r} "
                f"(residual {np.max(res):.3e})")
        return x1, x2, x3

    def jacobian(self, u, v, z, chart_name=None):
        """(Y_u, Y_v, g) as Jet1s carrying ∂/∂(u, v, z) — one point only."""
        chart_name, chart = self._chart(chart_name)
        cf = self.form.for_chart(chart_name)
        A, B, C, P, Q, S = frame_jets(cf, chart, u, v, z)
        x1, x2, x3, det = _solve_reeb_system(A, B, C, P, Q, S)
        if x1 is None:
            raise RankDeficiencyError(
                f"Reeb system degenerate at ({u}, {v}, {z}) on {chart_name!r}")
        return x1, x2, x3

    def linearization_at(self, u, v, chart_name=None):
        """DR(p) of the ordinary field (Y_u, Y_v, g·z) at a point of Z.

        The bottom row is exactly (0, 0, g(p)) because z = 0 kills the
        in-surface derivatives of g·z.
        """
        x1, x2, x3 = self.jacobian(u, v, 0.0, chart_name=chart_name)
        return np.array([
            [x1.grad[0], x1.grad[1], x1.grad[2]],
            [x2.grad[0], x2.grad[1], x2.grad[2]],
            [0.0, 0.0, x3.value],
        ])


# ---------------------------------------------------------------------------
# grid helpers

def _surface_points(tub, chart, nu, nv):
    """Flattened (U, V) sample arrays for one chart's surface domain."""
    if chart.disk_radius > 0.0:
        pts = chart.disk_points()
        arr = np.array(pts)
        return arr[:, 0], arr[:, 1]
    gu, gv = chart.grid(nu, nv)
    U, V = np.meshgrid(gu, gv, indexing="ij")
    return U.ravel(), V.ravel()


def z_ladder(epsilon, nz):
    """0 plus ±ε·2^{−k} geometric levels, nz values in total (nz odd)."""
    half = max(1, (nz - 1) // 2)
    pos = [epsilon * 0.5 ** k for k in range(half)]
    return tuple(pos + [0.0] + [-p for p in pos])


def contact_check(form, tub, grid=(64, 64, 9), threshold=CONTACT_THRESHOLD):
    """Validate α∧dα ≠ 0: min |V| over the validation grid of every chart."""
    nu, nv, nz = grid
    if nu < 2 or nv < 2 or nz < 1:
        raise ValueError("grid resolutions must be at least 2×2×1")
    worst = math.inf
    worst_loc = {}
    per_chart = {}
    for chart in tub.surface_charts():
        if chart.name not in form.fields:
            continue
        cf = form.for_chart(chart.name)
        U, V = _surface_points(tub, chart, nu, nv)
        chart_min = math.inf
        for z in z_ladder(tub.epsilon, nz):
            Z = np.full_like(U, z)
            *_, vol = frame_values(cf, chart, U, V, Z)
            vol = np.broadcast_to(np.asarray(vol, dtype=float), U.shape)
            k = int(np.argmin(np.abs(vol)))
            m = abs(float(vol[k]))
            if m < chart_min:
                chart_min = m
            if m < worst:
                worst = m
                worst_loc = {"chart": chart.name, "u": float(U[k]),
                             "v": float(V[k]), "z": float(z)}
        per_chart[chart.name] = chart_min
    passed = worst >= threshold
    return ValidationReport(
        check="contact_check", passed=passed, threshold=threshold,
        worst_value=worst, worst_location=worst_loc,
        details={"min_abs_volume_per_chart": per_chart, "grid": list(grid)},
    )


def solve_reeb(form, tub, probe_grid=(12, 12, 5)):
    """Construct the Reeb evaluator, probing a coarse grid so failures surface early."""
    reeb = BReebField(form, tub)
    nu, nv, nz = probe_grid
    for chart in tub.surface_charts():
        if chart.name not in form.fields:
            continue
        U, V = _surface_points(tub, chart, nu, nv)
        for z in z_ladder(tub.epsilon, nz):
            reeb.components(U, V, np.full_like(U, z), chart_name=chart.name)
    return reeb


def reeb_residual_report(form, tub, reeb=None, grid=(64, 64, 9)):
    """Max |α(R) − 1| and max |ι_R dα| component over the validation grid.

    The residuals measure how well ``reeb`` satisfies the defining equations
    of ``form``; by default the field is the one solved from ``form`` itself,
    but any :class:`BReebField` can be audited against the form.
    """
    if reeb is None:
        reeb = BReebField(form, tub)
    nu, nv, nz = grid
    worst = 0.0
    worst_loc = {}
    for chart in tub.surface_charts():
        if chart.name not in form.fields:
            continue
        cf = form.for_chart(chart.name)
        U, V = _surface_points(tub, chart, nu, nv)
        for z in z_ladder(tub.epsilon, nz):
            Z = np.full_like(U, z)
            A, B, C, P, Q, S, _ = frame_values(cf, chart, U, V, Z)
            x1, x2, x3 = reeb.components(U, V, Z, chart_name=chart.name)
            comps = (
                np.abs(A * x1 + B * x2 + C * x3 - 1.0),
                np.abs(-P * x2 - Q * x3),
                np.abs(P * x1 - S * x3),
                np.abs(Q * x1 + S * x2),
            )
            for ci, comp in enumerate(comps):
                comp = np.broadcast_to(np.asarray(comp, dtype=float), U.shape)
                k = int(np.argmax(comp))
                m = float(comp[k])
                if m > worst:
                    worst = m
                    worst_loc = {"chart": chart.name, "u": float(U[k]),
                                 "v": float(V[k]), "z": float(z),
                                 "component": ("alpha(R)-1", "i_R dalpha @du",
                                               "i_R dalpha @dv", "i_R dalpha @dz/z")[ci]}
    return ValidationReport(
        check="reeb_residuals", passed=worst < 1e-9, threshold=1e-9,
        worst_value=worst, worst_location=worst_loc, details={"grid": list(grid)},
    )


# ---------------------------------------------------------------------------
# restriction to Z

class ZSymplecticData:
    """H = −f|_Z and the du∧dv coefficient w of ω = (f dβ + β∧df)|_Z."""

    def __init__(self, form, tub):
        self.form = form
        self.chart = tub

    def _cf(self, chart_name):
        return self.form.for_chart(chart_name), self.chart.charts[chart_name]

    def H_value(self, u, v, chart_name):
        cf, chart = self._cf(chart_name)
        zj = 0.0 if isinstance(u, float) else np.zeros_like(u)
        env = {chart.u_name: u, chart.v_name: v, chart.z_name: zj}
        return -evaluate(cf.f, env)

    def H_jet2(self, u, v, chart_name):
        """H with gradient and Hessian in the two surface variables."""
        cf, chart = self._cf(chart_name)
        ju, jv = Jet2.seed((u, v))
        env = {chart.u_name: ju, chart.v_name: jv,
               chart.z_name: Jet2.constant(0.0, 2)}
        return -evaluate(cf.f, env)

    def w_value(self, u, v, chart_name):
        cf, chart = self._cf(chart_name)
        zj = 0.0 if isinstance(u, float) else np.zeros_like(u)
        ju, jv, _ = Jet1.seed((u, v, zj))
        env = {chart.u_name: ju, chart.v_name: jv, chart.z_name: Jet1.constant(zj, 3)}
        fj = evaluate(cf.f, env)
        Aj = evaluate(cf.beta_u, env)
        Bj = evaluate(cf.beta_v, env)
        return (fj.value * (Bj.grad[0] - Aj.grad[1])
                + Aj.value * fj.grad[1] - Bj.value * fj.grad[0])


def exceptional_hamiltonian(form, tub):
    """The generator H = −f|_Z of the restricted Reeb dynamics."""
    return ZSymplecticData(form, tub)


def symplectic_on_Z(form, tub, grid=(64, 64), threshold=CONTACT_THRESHOLD):
    """ZSymplecticData with the area-form check |w| ≥ threshold on the Z grid."""
    data = ZSymplecticData(form, tub)
    nu, nv = grid
    for chart in tub.surface_charts():
        if chart.name not in form.fields:
            continue
        U, V = _surface_points(tub, chart, nu, nv)
        w = np.broadcast_to(
            np.asarray(data.w_value(U, V, chart.name), dtype=float), U.shape)
        k = int(np.argmin(np.abs(w)))
        if abs(float(w[k])) < threshold:
            raise DegenerateSymplecticError(
                f"|w| = {abs(float(w[k])):.3e} < {threshold:g} on chart "
                f"{chart.name!r} at (u={float(U[k]):.6f}, v={float(V[k]):.6f})")
    return data


def verify_hamiltonian_identity(form, tub, reeb=None, grid=(64, 64), tol=1e-9):
    """Check ι_{R|_Z} ω = d(f|_Z) componentwise over the Z grid.

    With ω = w du∧dv the contraction is −w Y_v du + w Y_u dv, so the residual
    components are |−w Y_v − f_u| and |w Y_u − f_v|, both evaluated at z = 0.
    """
    if reeb is None:
        reeb = BReebField(form, tub)
    data = ZSymplecticData(form, tub)
    nu, nv = grid
    worst = 0.0
    worst_loc = {}
    for chart in tub.surface_charts():
        if chart.name not in form.fields:
            continue
        cf = form.for_chart(chart.name)
        U, V = _surface_points(tub, chart, nu, nv)
        Z = np.zeros_like(U)
        Yu, Yv, _ = reeb.components(U, V, Z, chart_name=chart.name)
        w = data.w_value(U, V, chart.name)
        ju, jv, _ = Jet1.seed((U, V, Z))
        env = {chart.u_name: ju, chart.v_name: jv, chart.z_name: Jet1.constant(Z, 3)}
        fj = evaluate(cf.f, env)
        r1 = np.abs(-w * Yv - fj.grad[0])
        r2 = np.abs(w * Yu - fj.grad[1])
        for ci, comp in enumerate((r1, r2)):
            comp = np.broadcast_to(np.asarray(comp, dtype=float), U.shape)
            k = int(np.argmax(comp))
            m = float(comp[k])
            if m > worst:
                worst = m
                worst_loc = {"chart": chart.name, "u": float(U[k]),
                             "v": float(V[k]), "component": ("du", "dv")[ci]}
    return ValidationReport(
        check="hamiltonian_identity", passed=worst < tol, threshold=tol,
        worst_value=worst, worst_location=worst_loc, details={"grid": list(grid)},
    )
