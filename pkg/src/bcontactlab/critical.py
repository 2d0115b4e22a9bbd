"""Critical points of the surface Hamiltonian and the escape-orbit bounds.

The pipeline is: coarse grid scan for local minima of |∇H|², Newton
refinement on ∇H = 0, cross-chart deduplication in canonical coordinates,
then per-point classification.  At a nondegenerate critical point p the
linearized Reeb field DR(p) has spectrum {λ₊, λ₋, λ_z} with

    λ± = ±√(−det Hess H(p))   (Hessian in Darboux-normalized coordinates,
                               i.e. the chart Hessian divided by w(p)²),
    λ_z = g(p) = 1/f(p),

so the sign of det Hess H(p) decides between a hyperbolic point with a
two-dimensional transverse invariant manifold (saddles of H) and a
non-hyperbolic point whose transverse manifold is the one-dimensional
z-axis (extrema of H).  A single index-1 point forces infinitely many
escape orbits; otherwise the weighted expectation is 4 per component.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CriticalPoint", "StabilityReport", "CensusBound",
    "NotMorseError", "RegularValueViolation", "MorseInequalityViolation",
    "SpectrumMismatchError", "find_critical_points", "stability_at",
    "census_bound", "BETTI",
]

BETTI = {"torus": (1, 2, 1), "sphere": (1, 0, 1)}
EULER = {"torus": 0, "sphere": 2}

NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
DEDUP_DISTANCE = 1e-6
MORSE_DET_FLOOR = 1e-10
REGULAR_VALUE_FLOOR = 1e-8


class NotMorseError(RuntimeError):
    """A converged critical point has a (near-)degenerate Hessian."""


class RegularValueViolation(RuntimeError):
    """f vanishes at a critical point of f|_Z, so 0 is not a regular value."""


class MorseInequalityViolation(RuntimeError):
    """C_k < b_k for some k: the scan missed a critical point."""


class SpectrumMismatchError(RuntimeError):
    """Numerical DR(p) spectrum deviates from the closed forms."""


@dataclass(frozen=True)
class CriticalPoint:
    chart: str
    u: float
    v: float
    H: float
    hess: tuple  # ((H_uu, H_uv), (H_uv, H_vv)) in chart coordinates
    index: int
    f_value: float
    grad_norm: float

    def as_dict(self):
        return {
            "chart": self.chart, "u": self.u, "v": self.v, "H": self.H,
            "hess": [list(r) for r in self.hess], "index": self.index,
            "f": self.f_value, "grad_norm": self.grad_norm,
        }


@dataclass
class StabilityReport:
    point: CriticalPoint
    lambda_plus: complex
    lambda_minus: complex
    lambda_z: float
    kind: str  # hyperbolic-2d-transverse | nonhyperbolic-1d-transverse
    transverse: str  # stable | unstable
    det_hess_darboux: float
    w_at_p: float
    dr_matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    max_rel_mismatch: float

    def as_dict(self):
        return {
            "point": self.point.as_dict(),
            "lambda_plus": [self.lambda_plus.real, self.lambda_plus.imag],
            "lambda_minus": [self.lambda_minus.real, self.lambda_minus.imag],
            "lambda_z": self.lambda_z,
            "kind": self.kind,
            "transverse": self.transverse,
            "det_hess_darboux": self.det_hess_darboux,
            "w_at_p": self.w_at_p,
            "max_rel_mismatch": self.max_rel_mismatch,
        }


@dataclass
class CensusBound:
    n_components: int
    per_component: list
    counts: tuple  # total (C0, C1, C2)
    verdict: str  # "at-least-2N" | "infinite"
    lower_bound: int  # 2N
    expected_weighted: int | None  # 4N when saddle-free, else None

    def as_dict(self):
        return {
            "n_components": self.n_components,
            "per_component": self.per_component,
            "counts": list(self.counts),
            "verdict": self.verdict,
            "lower_bound": self.lower_bound,
            "expected_weighted": self.expected_weighted,
        }


# ---------------------------------------------------------------------------
# scanning

def _grad_sq_grid(zdata, chart, U, V):
    """|∇H|² on flattened sample arrays via one array-payload jet pass."""
    j = zdata.H_jet2(U, V, chart.name)
    gu = np.broadcast_to(np.asarray(j.grad[0], dtype=float), U.shape)
    gv = np.broadcast_to(np.asarray(j.grad[1], dtype=float), U.shape)
    return gu * gu + gv * gv


def _local_minima_box(G, u_periodic, v_periodic):
    """Indices of non-strict local minima of a 2-d array with optional wrap."""
    nu, nv = G.shape
    out = []
    for i in range(nu):
        for j in range(nv):
            g0 = G[i, j]
            best = True
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ii, jj = i + di, j + dj
                    if u_periodic:
                        ii %= nu
                    elif not (0 <= ii < nu):
                        continue
                    if v_periodic:
                        jj %= nv
                    elif not (0 <= jj < nv):
                        continue
                    if G[ii, jj] < g0:
                        best = False
                        break
                if not best:
                    break
            if best:
                out.append((i, j))
    return out


def _newton_refine(zdata, chart, u0, v0, tol):
    u, v = float(u0), float(v0)
    for _ in range(NEWTON_MAX_ITER):
        j = zdata.H_jet2(u, v, chart.name)
        gu, gv = j.grad
        if math.hypot(gu, gv) < tol:
            return u, v, j
        h11, h12 = j.hess[0]
        _, h22 = j.hess[1]
        det = h11 * h22 - h12 * h12
        if abs(det) < 1e-14:
            return None
        du = (h22 * gu - h12 * gv) / det
        dv = (h11 * gv - h12 * gu) / det
        if not (math.isfinite(du) and math.isfinite(dv)):
            return None
        u -= du
        v -= dv
        if max(abs(du), abs(dv)) > 2.0:  # runaway step, candidate is junk
            return None
    return None


def find_critical_points(zdata, tub, coarse=(128, 128), newton_tol=NEWTON_TOL,
                         warnings=None):
    """All nondegenerate critical points of H on Z, deduplicated across charts.

    ``warnings`` (a list, when given) collects non-fatal records: dropped
    candidates, locally-constant charts.  Degenerate Hessians at converged
    points raise :class:`NotMorseError`; |f(p)| ≈ 0 raises
    :class:`RegularValueViolation`.
    """
    if warnings is None:
        warnings = []
    nu, nv = coarse
    found = []  # (canonical, CriticalPoint-args)
    for chart in tub.surface_charts():
        if chart.name not in zdata.form.fields:
            continue
        if chart.disk_radius > 0.0:
            n = 33
            gu = np.linspace(-chart.disk_radius, chart.disk_radius, n)
            gv = gu
            UU, VV = np.meshgrid(gu, gv, indexing="ij")
            mask = UU ** 2 + VV ** 2 <= chart.disk_radius ** 2
            G = np.full(UU.shape, np.inf)
            Gm = _grad_sq_grid(zdata, chart, UU[mask], VV[mask])
            G[mask] = Gm
            cand = _local_minima_box(G, False, False)
            cand = [(i, j) for (i, j) in cand if np.isfinite(G[i, j])]
            axis_u, axis_v = gu, gv
        else:
            axis_u, axis_v = chart.grid(nu, nv)
            UU, VV = np.meshgrid(axis_u, axis_v, indexing="ij")
            G = _grad_sq_grid(zdata, chart, UU.ravel(), VV.ravel()).reshape(UU.shape)
            if float(np.max(G)) < newton_tol ** 2:
                warnings.append({"kind": "locally-constant",
                                 "chart": chart.name,
                                 "detail": "|grad H| below tolerance everywhere"})
                continue
            cand = _local_minima_box(G, chart.u_periodic, chart.v_periodic)
        for (i, j) in cand:
            got = _newton_refine(zdata, chart, axis_u[i], axis_v[j], newton_tol)
            if got is None:
                warnings.append({"kind": "newton-dropped", "chart": chart.name,
                                 "u0": float(axis_u[i]), "v0": float(axis_v[j])})
                continue
            u, v, jet = got
            u, v = chart.wrap(u, v)
            if not chart.contains(u, v, slack=1e-9):
                continue  # owned by a neighbouring chart
            canonical = tub.to_canonical(chart.name, u, v)
            dup = False
            for k, (c_prev, rec) in enumerate(found):
                if tub.distance(chart.name, (u, v), rec.chart, (rec.u, rec.v)) < DEDUP_DISTANCE:
                    dup = True
                    if math.hypot(*jet.grad) < rec.grad_norm:
                        found[k] = (canonical, _make_point(chart.name, u, v, jet))
                    break
            if not dup:
                found.append((canonical, _make_point(chart.name, u, v, jet)))
    points = [rec for _, rec in found]
    for p in points:
        det = p.hess[0][0] * p.hess[1][1] - p.hess[0][1] ** 2
        if abs(det) < MORSE_DET_FLOOR:
            raise NotMorseError(
                f"degenerate Hessian (det {det:.3e}) at ({p.u:.6f}, {p.v:.6f}) "
                f"on chart {p.chart!r}")
        if abs(p.f_value) < REGULAR_VALUE_FLOOR:
            raise RegularValueViolation(
                f"f({p.u:.6f}, {p.v:.6f}) = {p.f_value:.3e} vanishes at a "
                f"critical point on chart {p.chart!r}")
    points.sort(key=lambda p: (p.H, p.u, p.v))
    return points


def _make_point(chart_name, u, v, jet):
    h11, h12 = jet.hess[0]
    _, h22 = jet.hess[1]
    eigs = np.linalg.eigvalsh(np.array([[h11, h12], [h12, h22]]))
    index = int(np.sum(eigs < 0))
    return CriticalPoint(
        chart=chart_name, u=float(u), v=float(v), H=float(jet.value),
        hess=((float(h11), float(h12)), (float(h12), float(h22))),
        index=index, f_value=float(-jet.value),
        grad_norm=float(math.hypot(*jet.grad)),
    )


# ---------------------------------------------------------------------------
# stability

def stability_at(p, reeb, zdata, rel_tol=1e-6):
    """Classify DR(p): numerical spectrum cross-checked against closed forms."""
    w_p = zdata.w_value(p.u, p.v, p.chart)
    det_chart = p.hess[0][0] * p.hess[1][1] - p.hess[0][1] ** 2
    det_dbx = det_chart / (w_p * w_p)
    lam_plus = cmath.sqrt(complex(-det_dbx, 0.0))
    lam_minus = -lam_plus
    lam_z = 1.0 / p.f_value

    dr = reeb.linearization_at(p.u, p.v, chart_name=p.chart)
    eigs, vecs = np.linalg.eig(dr)

    # pair numerical eigenvalues with the closed forms
    order = np.argsort([abs(e - lam_z) for e in eigs])
    ez = eigs[order[0]]
    rest = sorted(eigs[order[1:]], key=lambda e: (e.real, e.imag))
    targets = sorted([lam_plus, lam_minus], key=lambda e: (e.real, e.imag))
    scale = max(abs(lam_z), abs(lam_plus), 1e-30)
    mism = max(
        abs(ez - lam_z) / max(abs(lam_z), 1e-30),
        abs(rest[0] - targets[0]) / scale,
        abs(rest[1] - targets[1]) / scale,
    )
    if mism > rel_tol:
        raise SpectrumMismatchError(
            f"DR(p) spectrum {sorted(eigs, key=abs)} deviates from closed forms "
            f"{[lam_plus, lam_minus, lam_z]} by {mism:.3e} (rel) at "
            f"({p.u:.6f}, {p.v:.6f}) on {p.chart!r}")

    kind = ("hyperbolic-2d-transverse" if det_dbx < 0
            else "nonhyperbolic-1d-transverse")
    return StabilityReport(
        point=p, lambda_plus=lam_plus, lambda_minus=lam_minus,
        lambda_z=float(lam_z), kind=kind,
        transverse="unstable" if lam_z > 0 else "stable",
        det_hess_darboux=float(det_dbx), w_at_p=float(w_p),
        dr_matrix=dr, eigenvalues=eigs, eigenvectors=vecs,
        max_rel_mismatch=float(mism),
    )


# ---------------------------------------------------------------------------
# census

def census_bound(points, components):
    """Theorem-predicted escape-orbit bound from the critical-point census.

    ``components``: list of {"kind": "torus"|"sphere", "charts": [names]} —
    each critical point is assigned to the component that owns its chart.
    """
    n = len(components)
    if n == 0:
        raise ValueError("at least one surface component is required")
    per = []
    total = [0, 0, 0]
    any_saddle = False
    for comp in components:
        kind = comp["kind"]
        betti = BETTI[kind]
        charts = set(comp["charts"])
        mine = [p for p in points if p.chart in charts]
        counts = [sum(1 for p in mine if p.index == k) for k in range(3)]
        if len(mine) < 2:
            raise MorseInequalityViolation(
                f"component {kind!r} contributed {len(mine)} critical points; "
                f"a closed surface carries at least a max and a min")
        for k in range(3):
            if counts[k] < betti[k]:
                raise MorseInequalityViolation(
                    f"C_{k} = {counts[k]} < b_{k} = {betti[k]} on a {kind} "
                    f"component: the scan missed a critical point")
            total[k] += counts[k]
        euler = counts[0] - counts[1] + counts[2]
        per.append({
            "kind": kind,
            "betti": list(betti),
            "counts": counts,
            "euler": euler,
            "euler_expected": EULER[kind],
            "euler_ok": euler == EULER[kind],
        })
        if counts[1] > 0:
            any_saddle = True
    verdict = "infinite" if any_saddle else "at-least-2N"
    return CensusBound(
        n_components=n, per_component=per, counts=tuple(total),
        verdict=verdict, lower_bound=2 * n,
        expected_weighted=None if any_saddle else 4 * n,
    )
