"""Tubular charts of a closed surface Z inside a 3-manifold.

A tubular chart is Z × (−ε, ε) in coordinates (u, v, z), with Z at z = 0.
Two surface kinds are supported:

* ``torus``: one chart, both surface coordinates 2π-periodic;
* ``sphere-atlas``: two angular charts (north- and south-centered colatitude
  θ ∈ [δ, π/2 + margin], azimuth φ), glued by the involution
  θ′ = π − θ, φ′ = −φ on the equatorial overlap annulus, plus two small
  Cartesian disk charts (u, v) = (θ cos φ, θ sin φ) covering the poles that
  the angular charts exclude.

Every chart knows its variable names, domain box, and periodicity; the atlas
provides canonical coordinates and an intrinsic distance so that points found
in different charts can be compared and deduplicated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Chart", "TubularChart", "Z_LEVEL_FRACTIONS"]

# transverse sampling: the contact condition is uniform in dz/z, so a geometric
# ladder of z-levels plus z = 0 itself exercises it at all scales
Z_LEVEL_FRACTIONS = (1.0, 0.5, 0.25, 0.125)


@dataclass(frozen=True)
class Chart:
    """A single coordinate chart (u, v) on Z, extended by the transverse z."""

    name: str
    u_name: str
    v_name: str
    z_name: str
    u_range: tuple
    v_range: tuple
    u_periodic: bool = False
    v_periodic: bool = False
    disk_radius: float = 0.0  # > 0: domain is the disk u² + v² ≤ r², not the box

    @property
    def variables(self):
        return (self.u_name, self.v_name, self.z_name)

    @property
    def surface_variables(self):
        return (self.u_name, self.v_name)

    def wrap(self, u, v):
        """Normalize periodic coordinates into their fundamental range."""
        if self.u_periodic:
            lo, hi = self.u_range
            u = lo + (u - lo) % (hi - lo)
        if self.v_periodic:
            lo, hi = self.v_range
            v = lo + (v - lo) % (hi - lo)
        return u, v

    def contains(self, u, v, slack=0.0):
        if self.disk_radius > 0.0:
            return u * u + v * v <= (self.disk_radius + slack) ** 2
        ok_u = self.u_periodic or (self.u_range[0] - slack <= u <= self.u_range[1] + slack)
        ok_v = self.v_periodic or (self.v_range[0] - slack <= v <= self.v_range[1] + slack)
        return ok_u and ok_v

    def grid(self, nu, nv):
        """(u_values, v_values) arrays; periodic axes omit the duplicate endpoint."""
        if self.disk_radius > 0.0:
            raise ValueError("disk charts are sampled with disk_points, not a box grid")
        u = np.linspace(*self.u_range, nu, endpoint=not self.u_periodic)
        v = np.linspace(*self.v_range, nv, endpoint=not self.v_periodic)
        return u, v

    def disk_points(self, n_r=9, n_psi=24):
        """Polar sampling of a disk chart, center included once."""
        if self.disk_radius <= 0.0:
            raise ValueError(f"chart {self.name!r} is not a disk chart")
        pts = [(0.0, 0.0)]
        for r in np.linspace(self.disk_radius / n_r, self.disk_radius, n_r):
            for psi in np.linspace(0.0, 2 * math.pi, n_psi, endpoint=False):
                pts.append((r * math.cos(psi), r * math.sin(psi)))
        return pts


class TubularChart:
    """The tubular neighborhood Z × (−ε, ε) as a set of glued charts."""

    def __init__(self, kind, epsilon, charts, delta=0.0):
        if epsilon <= 0:
            raise ValueError("tubular half-width epsilon must be positive")
        self.kind = kind
        self.epsilon = epsilon
        self.charts = {c.name: c for c in charts}
        self.delta = delta

    @staticmethod
    def torus(epsilon=0.5):
        two_pi = 2 * math.pi
        chart = Chart("torus", "u", "v", "z", (0.0, two_pi), (0.0, two_pi),
                      u_periodic=True, v_periodic=True)
        return TubularChart("torus", epsilon, [chart])

    @staticmethod
    def sphere_atlas(epsilon=0.5, delta=0.05, pole_radius=0.3, margin=0.2):
        """Two angular charts plus two pole disks.

        The angular charts exclude a δ-cap around their own pole (where the
        (θ, φ) coordinates degenerate); the disk charts cover those caps with
        honest Cartesian coordinates and overlap the angular charts on
        δ < θ < pole_radius.
        """
        if not (0 < delta < pole_radius):
            raise ValueError("need 0 < delta < pole_radius")
        theta_hi = math.pi / 2 + margin
        north = Chart("north", "theta", "phi", "z", (delta, theta_hi),
                      (-math.pi, math.pi), v_periodic=True)
        south = Chart("south", "theta", "phi", "z", (delta, theta_hi),
                      (-math.pi, math.pi), v_periodic=True)
        npole = Chart("north-pole", "u", "v", "z", (-pole_radius, pole_radius),
                      (-pole_radius, pole_radius), disk_radius=pole_radius)
        spole = Chart("south-pole", "u", "v", "z", (-pole_radius, pole_radius),
                      (-pole_radius, pole_radius), disk_radius=pole_radius)
        return TubularChart("sphere-atlas", epsilon, [north, south, npole, spole],
                            delta=delta)

    # -- transverse levels ------------------------------------------------
    def z_levels(self):
        levels = [self.epsilon * f for f in Z_LEVEL_FRACTIONS]
        return tuple(levels + [0.0] + [-l for l in levels])

    def surface_charts(self):
        """Charts to scan for surface work, primaries first."""
        if self.kind == "torus":
            return [self.charts["torus"]]
        return [self.charts[n] for n in ("north", "south", "north-pole", "south-pole")]

    # -- sphere transition maps -------------------------------------------
    @staticmethod
    def angular_transition(theta, phi):
        """North ↔ south angular chart map; an involution, its own inverse."""
        phi2 = -phi
        if phi2 <= -math.pi:
            phi2 += 2 * math.pi
        return math.pi - theta, phi2

    def overlap_annulus(self, n_theta=8, n_phi=16):
        """Sample points of the equatorial overlap of the two angular charts."""
        if self.kind != "sphere-atlas":
            raise ValueError("overlap annulus exists only for sphere atlases")
        north = self.charts["north"]
        t_lo = math.pi - north.u_range[1]
        t_hi = north.u_range[1]
        thetas = np.linspace(t_lo + 1e-3, t_hi - 1e-3, n_theta)
        phis = np.linspace(-math.pi, math.pi, n_phi, endpoint=False)
        return [(float(t), float(p)) for t in thetas for p in phis]

    # -- canonical coordinates and metric ----------------------------------
    def to_canonical(self, chart_name, u, v):
        """Chart point → canonical coordinates usable across the whole atlas.

        Torus: wrapped (u, v).  Sphere: the unit vector in R³, which makes the
        comparison metric chart-independent.
        """
        if self.kind == "torus":
            return self.charts["torus"].wrap(u, v)
        if chart_name == "north":
            theta, phi = u, v
        elif chart_name == "south":
            theta, phi = self.angular_transition(u, v)
        elif chart_name == "north-pole":
            theta = math.hypot(u, v)
            phi = math.atan2(v, u) if theta > 0 else 0.0
        elif chart_name == "south-pole":
            rho = math.hypot(u, v)
            theta = math.pi - rho
            phi = -math.atan2(v, u) if rho > 0 else 0.0
        else:
            raise KeyError(chart_name)
        st = math.sin(theta)
        return (st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def distance(self, chart_a, pa, chart_b, pb):
        """Intrinsic-scale distance between points given in any two charts."""
        ca = self.to_canonical(chart_a, *pa)
        cb = self.to_canonical(chart_b, *pb)
        if self.kind == "torus":
            du = _wrap_diff(ca[0] - cb[0])
            dv = _wrap_diff(ca[1] - cb[1])
            return math.hypot(du, dv)
        return math.dist(ca, cb)

    def express_in(self, chart_name, canonical):
        """Canonical coordinates → this chart's (u, v), or None if outside it."""
        chart = self.charts[chart_name]
        if self.kind == "torus":
            return chart.wrap(*canonical)
        x, y, zc = canonical
        theta = math.atan2(math.hypot(x, y), zc)
        phi = math.atan2(y, x)
        if chart_name == "north":
            uv = (theta, phi)
        elif chart_name == "south":
            uv = self.angular_transition(theta, phi)
        elif chart_name == "north-pole":
            uv = (theta * math.cos(phi), theta * math.sin(phi))
        else:  # south-pole
            rho = math.pi - theta
            uv = (rho * math.cos(-phi), rho * math.sin(-phi))
        return uv if chart.contains(*uv) else None


def _wrap_diff(d):
    two_pi = 2 * math.pi
    return (d + math.pi) % two_pi - math.pi
