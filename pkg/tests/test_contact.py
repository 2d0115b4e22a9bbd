"""The frame algebra and Reeb solve against hand-derived closed forms.

Two reference setups are used throughout:

* torus, f = cos v + 0.3 cos u sin v, beta = sin v du.  Closed forms:
  alpha ∧ dalpha = −1 · du dv (dz/z), w = −1, and the Reeb field is
  (sin v − 0.3 cos u cos v, −0.3 sin u sin v, cos v).
* round sphere, f = cos θ, beta = sin²θ dφ.  In an angular chart the
  volume coefficient is sin θ (1 + cos²θ) and the Reeb field is
  (0, 1/(1 + cos²θ), 2 cos θ/(1 + cos²θ)).
"""
import math
import random

import numpy as np
import pytest

from bcontactlab.charts import TubularChart
from bcontactlab.contact import (
    BContactForm, BReebField, ChartFields, DegenerateSymplecticError,
    RankDeficiencyError, contact_check, exceptional_hamiltonian, frame_jets,
    frame_values, reeb_residual_report, solve_reeb, symplectic_on_Z,
    verify_hamiltonian_identity, z_ladder,
)
from bcontactlab.expressions import parse
from bcontactlab.scenarios import load_scenario, scenario_form


def torus_setup(f="cos(v) + 0.3*cos(u)*sin(v)", beta_u="sin(v)",
                beta_v="0", beta_z="0"):
    tub = TubularChart.torus()
    names = ("u", "v", "z")
    form = BContactForm({"torus": ChartFields(
        parse(f, names), parse(beta_u, names),
        parse(beta_v, names), parse(beta_z, names))})
    return tub, form


@pytest.fixture(scope="module")
def sphere():
    return scenario_form(load_scenario("sphere"))


def test_torus_volume_coefficient_is_minus_one():
    tub, form = torus_setup()
    chart = tub.charts["torus"]
    cf = form.for_chart("torus")
    rng = random.Random(7)
    for _ in range(50):
        u = rng.uniform(0, 2 * math.pi)
        v = rng.uniform(0, 2 * math.pi)
        z = rng.uniform(-0.5, 0.5)
        *_, V = frame_values(cf, chart, u, v, z)
        assert V == pytest.approx(-1.0, abs=1e-12)


def test_torus_reeb_components_match_closed_form():
    tub, form = torus_setup()
    reeb = solve_reeb(form, tub)
    rng = random.Random(8)
    for _ in range(50):
        u = rng.uniform(0, 2 * math.pi)
        v = rng.uniform(0, 2 * math.pi)
        z = rng.uniform(-0.5, 0.5)
        yu, yv, g = reeb.components(u, v, z)
        assert yu == pytest.approx(math.sin(v) - 0.3 * math.cos(u) * math.cos(v), abs=1e-10)
        assert yv == pytest.approx(-0.3 * math.sin(u) * math.sin(v), abs=1e-10)
        assert g == pytest.approx(math.cos(v), abs=1e-10)


def test_torus_reeb_accepts_arrays():
    tub, form = torus_setup()
    reeb = BReebField(form, tub)
    u = np.linspace(0.1, 6.2, 23)
    v = np.linspace(0.2, 5.9, 23)
    z = np.full_like(u, 0.25)
    yu, yv, g = reeb.components(u, v, z)
    assert np.allclose(yu, np.sin(v) - 0.3 * np.cos(u) * np.cos(v), atol=1e-10)
    assert np.allclose(g, np.cos(v), atol=1e-10)


def test_sphere_angular_frame_closed_forms(sphere):
    tub, form = sphere
    chart = tub.charts["north"]
    cf = form.for_chart("north")
    rng = random.Random(9)
    for _ in range(40):
        th = rng.uniform(0.06, math.pi / 2 + 0.19)
        ph = rng.uniform(-math.pi, math.pi)
        z = rng.uniform(-0.5, 0.5)
        *_, V = frame_values(cf, chart, th, ph, z)
        assert V == pytest.approx(math.sin(th) * (1 + math.cos(th) ** 2), rel=1e-12)
    reeb = BReebField(form, tub)
    th, ph = 0.8, 1.1
    yu, yv, g = reeb.components(th, ph, 0.125, chart_name="north")
    denom = 1 + math.cos(th) ** 2
    assert yu == pytest.approx(0.0, abs=1e-11)
    assert yv == pytest.approx(1.0 / denom, rel=1e-11)
    assert g == pytest.approx(2 * math.cos(th) / denom, rel=1e-11)


def test_sphere_pole_chart_reeb_is_vertical(sphere):
    tub, form = sphere
    reeb = BReebField(form, tub)
    yu, yv, g = reeb.components(0.0, 0.0, 0.0, chart_name="north-pole")
    assert (yu, yv) == pytest.approx((0.0, 0.0), abs=1e-12)
    assert g == pytest.approx(1.0, abs=1e-12)
    zdata = exceptional_hamiltonian(form, tub)
    assert zdata.w_value(0.0, 0.0, "north-pole") == pytest.approx(2.0, abs=1e-12)
    assert zdata.w_value(0.0, 0.0, "south-pole") == pytest.approx(2.0, abs=1e-12)


def test_contact_check_passes_on_builtin_scenarios(sphere):
    tub, form = torus_setup()
    report = contact_check(form, tub)
    assert report.passed
    assert report.worst_value == pytest.approx(1.0, abs=1e-9)  # |V| = 1
    stub, sform = sphere
    sreport = contact_check(sform, stub)
    assert sreport.passed
    # the angular charts bottom out at theta = delta
    expected = math.sin(0.05) * (1 + math.cos(0.05) ** 2)
    assert sreport.worst_value == pytest.approx(expected, rel=1e-6)
    assert set(sreport.details["min_abs_volume_per_chart"]) == {
        "north", "south", "north-pole", "south-pole"}


def test_contact_check_fails_when_alpha_is_closed():
    tub, form = torus_setup(f="1", beta_u="0")
    report = contact_check(form, tub)
    assert not report.passed
    assert report.worst_value < 1e-12
    assert report.worst_location["chart"] == "torus"


def test_solve_reeb_raises_on_rank_deficiency():
    tub, form = torus_setup(f="1", beta_u="0")
    with pytest.raises(RankDeficiencyError):
        solve_reeb(form, tub)


def test_reeb_residuals_tiny_on_builtins(sphere):
    tub, form = torus_setup()
    report = reeb_residual_report(form, tub, grid=(48, 48, 5))
    assert report.passed and report.worst_value < 1e-9
    stub, sform = sphere
    sreport = reeb_residual_report(sform, stub, grid=(48, 48, 5))
    assert sreport.passed and sreport.worst_value < 1e-9


def test_reeb_residuals_flag_a_wrong_field():
    tub, form = torus_setup()
    _, wrong_form = torus_setup(f="cos(v) + 0.3*cos(u)*sin(v) + 0.001*sin(u)")
    wrong_reeb = BReebField(wrong_form, tub)
    report = reeb_residual_report(form, tub, reeb=wrong_reeb, grid=(32, 32, 3))
    assert not report.passed
    assert report.worst_value > 1e-4


def test_hamiltonian_identity_on_builtins(sphere):
    tub, form = torus_setup()
    report = verify_hamiltonian_identity(form, tub)
    assert report.passed and report.worst_value < 1e-9
    stub, sform = sphere
    sreport = verify_hamiltonian_identity(sform, stub)
    assert sreport.passed and sreport.worst_value < 1e-9


def test_hamiltonian_value_is_minus_f(sphere):
    stub, sform = sphere
    zdata = exceptional_hamiltonian(sform, stub)
    assert zdata.H_value(0.7, 0.3, "north") == pytest.approx(-math.cos(0.7), rel=1e-14)
    assert zdata.H_value(0.7, 0.3, "south") == pytest.approx(math.cos(0.7), rel=1e-14)
    j = zdata.H_jet2(0.7, 0.3, "north")
    assert j.grad[0] == pytest.approx(math.sin(0.7), rel=1e-12)
    assert j.grad[1] == pytest.approx(0.0, abs=1e-14)


def test_symplectic_on_Z_rejects_degenerate_area_form():
    # with beta = 0 the restriction of d(alpha) to Z has no du∧dv part
    tub, form = torus_setup(f="cos(v)", beta_u="0")
    with pytest.raises(DegenerateSymplecticError):
        symplectic_on_Z(form, tub)


def test_torus_w_is_minus_one_everywhere():
    tub, form = torus_setup()
    zdata = symplectic_on_Z(form, tub)
    U = np.linspace(0, 6.0, 40)
    V = np.linspace(0, 6.0, 40)
    w = zdata.w_value(U, V, "torus")
    assert np.allclose(np.asarray(w, dtype=float), -1.0, atol=1e-12)


def test_sphere_chart_consistency_on_overlaps(sphere):
    """H is a scalar; w and V are du∧dv densities, so polar↔Cartesian
    comparisons carry the Jacobian theta."""
    tub, form = sphere
    zdata = exceptional_hamiltonian(form, tub)

    # angular ↔ pole-disk overlap (delta < theta < pole radius)
    npole = form.for_chart("north-pole")
    nang = form.for_chart("north")
    for theta in (0.08, 0.15, 0.28):
        for phi in (-2.0, 0.4, 2.9):
            u, v = theta * math.cos(phi), theta * math.sin(phi)
            H_a = zdata.H_value(theta, phi, "north")
            H_p = zdata.H_value(u, v, "north-pole")
            assert H_a == pytest.approx(H_p, abs=1e-13)
            w_a = zdata.w_value(theta, phi, "north")
            w_p = zdata.w_value(u, v, "north-pole")
            assert w_a == pytest.approx(theta * w_p, rel=1e-11)
            for z in (0.0, 0.25, -0.4):
                *_, V_a = frame_values(nang, tub.charts["north"], theta, phi, z)
                *_, V_p = frame_values(npole, tub.charts["north-pole"], u, v, z)
                assert V_a == pytest.approx(theta * V_p, rel=1e-11)

    # north ↔ south angular overlap near the equator (orientation-preserving
    # transition, so V matches without a sign)
    sang = form.for_chart("south")
    for theta, phi in tub.overlap_annulus(n_theta=4, n_phi=6):
        t2, p2 = TubularChart.angular_transition(theta, phi)
        assert zdata.H_value(theta, phi, "north") == pytest.approx(
            zdata.H_value(t2, p2, "south"), abs=1e-13)
        assert zdata.w_value(theta, phi, "north") == pytest.approx(
            zdata.w_value(t2, p2, "south"), rel=1e-11)
        *_, V_n = frame_values(nang, tub.charts["north"], theta, phi, 0.3)
        *_, V_s = frame_values(sang, tub.charts["south"], t2, p2, 0.3)
        assert V_n == pytest.approx(V_s, rel=1e-11)


def test_frame_jets_agree_with_frame_values():
    tub, form = torus_setup()
    chart = tub.charts["torus"]
    cf = form.for_chart("torus")
    rng = random.Random(11)
    for _ in range(20):
        u, v = rng.uniform(0, 6.28), rng.uniform(0, 6.28)
        z = rng.uniform(-0.4, 0.4)
        vals = frame_values(cf, chart, u, v, z)[:6]
        jets = frame_jets(cf, chart, u, v, z)
        for plain, jet in zip(vals, jets):
            assert jet.value == pytest.approx(plain, abs=1e-14)


def test_z_ladder_is_symmetric():
    zs = z_ladder(0.5, 9)
    assert len(zs) == 9
    assert sorted(zs) == sorted(-z for z in zs)
