"""Stream-function identities and the reconstructed contact form.

Hand values used below, all on the flat torus unless a metric is given:

* F = cos u, λ = 1: X_u = 0, X_v = −sin u; both sides of the area-form
  identity are ±sin u du.
* F = cos u + cos v/2 (the bundled scenario): stagnation points at the four
  half-period combinations, stream values ±3/2 and ±1/2, Hessian
  determinants ±1/2, so the tangential rates are ±1/√2 (real at the two
  saddle-like points, imaginary at the centers).
* h = diag(2, 1), F = cos(u + 2v): Δ_h F = (1/2)F_uu + F_vv = −(9/2)F.
"""
import math

import numpy as np
import pytest

from bcontactlab.beltrami import (
    BeltramiData, MetricDegeneracyError, MetricOnZ, SignInconsistencyError,
    beltrami_stability_matrix, contact_from_beltrami,
    hamiltonian_identity_check, laplace_eigen_check, tangential_components,
    tangential_expressions,
)
from bcontactlab.charts import TubularChart
from bcontactlab.contact import exceptional_hamiltonian
from bcontactlab.critical import NotMorseError, RegularValueViolation
from bcontactlab.expressions import differentiate, eval_value, parse, substitute
from bcontactlab.scenarios import load_scenario

BUILTIN_STREAM = "cos(u) + cos(v)/2"


def _grid(n=40):
    u = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    U, V = np.meshgrid(u, u, indexing="ij")
    return U.ravel(), V.ravel()


# ---------------------------------------------------------------------------
# tangential components

def test_components_match_hand_values():
    U, V = _grid()
    xu, xv = tangential_components("cos(u)")
    assert np.max(np.abs(np.asarray(xu(U, V)))) == 0.0
    assert np.max(np.abs(xv(U, V) + np.sin(U))) < 1e-15

    xu2, xv2 = tangential_components("cos(v)", eigenvalue=2.0)
    assert np.max(np.abs(xu2(U, V) - np.sin(V) / 2)) < 1e-15
    assert np.max(np.abs(np.asarray(xv2(U, V)))) == 0.0


def test_constant_stream_gives_the_zero_field():
    xu, xv = tangential_components("3")
    assert xu(0.4, 1.2) == 0.0 and xv(0.4, 1.2) == 0.0


def test_zero_eigenvalue_is_rejected():
    with pytest.raises(ValueError, match="nonzero"):
        BeltramiData("cos(u)", eigenvalue=0.0)


def test_metric_must_be_positive_definite():
    with pytest.raises(MetricDegeneracyError):
        MetricOnZ(h_uu="-1").validate()
    with pytest.raises(MetricDegeneracyError, match="det"):
        MetricOnZ(h_uu="1", h_uv="1", h_vv="1").validate()


def test_stagnation_points_are_exactly_the_field_zeros():
    xu, xv = tangential_components(BUILTIN_STREAM)
    for p in ((0.0, 0.0), (0.0, math.pi), (math.pi, 0.0), (math.pi, math.pi)):
        assert abs(xu(*p)) < 1e-12 and abs(xv(*p)) < 1e-12


def test_field_is_divergence_free_for_a_curved_metric():
    met = MetricOnZ(h_uu="2 + sin(v)")
    xu_ast, xv_ast = tangential_expressions(BUILTIN_STREAM, met)
    weigh = parse("s*x", ("s", "x"))
    div = None
    for var, ast in (("u", xu_ast), ("v", xv_ast)):
        flux = substitute(weigh, {"s": met.sqrt_det_expr, "x": ast})
        term = differentiate(flux, var)
        div = term if div is None else substitute(
            parse("a + b", ("a", "b")), {"a": div, "b": term})
    U, V = _grid()
    residual = np.abs(eval_value(div, ("u", "v"), (U, V)) / met.sqrt_det(U, V))
    assert float(np.max(residual)) < 1e-8


# ---------------------------------------------------------------------------
# the area-form identity

def test_identity_holds_with_a_single_sign():
    rep = hamiltonian_identity_check("cos(u)")
    assert rep.passed
    assert rep.global_sign == -1.0
    assert rep.max_residual < 1e-12

    rep2 = hamiltonian_identity_check("cos(u)*cos(v)")
    assert rep2.passed and rep2.max_residual < 1e-10


def test_identity_fails_for_a_corrupted_component():
    data = BeltramiData("cos(u)")
    xu = lambda u, v: data.tangential(u, v)[0]
    bad = lambda u, v: data.tangential(u, v)[1] + 0.5
    rep = hamiltonian_identity_check(data, components=(xu, bad))
    assert not rep.passed
    assert rep.max_residual > 0.1


def test_identity_rejects_a_pointwise_sign_flip():
    data = BeltramiData("cos(u)")

    def flip(u, v):
        return np.where(np.asarray(u) > math.pi, -1.0, 1.0)

    pair = (lambda u, v: flip(u, v) * data.tangential(u, v)[0],
            lambda u, v: flip(u, v) * data.tangential(u, v)[1])
    with pytest.raises(SignInconsistencyError):
        hamiltonian_identity_check(data, components=pair)


# ---------------------------------------------------------------------------
# Laplace eigenfunctions

def test_single_modes_have_their_wave_number_eigenvalues():
    assert laplace_eigen_check("cos(u)").eigenvalue == pytest.approx(-1.0)
    rep = laplace_eigen_check("cos(2*u)*cos(v)")
    assert rep.verdict == "eigenfunction"
    assert rep.eigenvalue == pytest.approx(-5.0, abs=1e-12)


def test_every_low_mode_is_detected():
    for m in range(-3, 4):
        for n in range(-3, 4):
            if m == 0 and n == 0:
                continue
            rep = laplace_eigen_check(f"cos({m}*u + {n}*v)")
            assert rep.verdict == "eigenfunction"
            assert abs(rep.eigenvalue + (m * m + n * n)) < 1e-8


def test_mixed_modes_are_not_an_eigenfunction():
    rep = laplace_eigen_check("cos(u) + cos(2*u)")
    assert rep.verdict == "not-eigenfunction"
    assert rep.eigenvalue is None


def test_anisotropic_metric_rescales_the_eigenvalue():
    rep = laplace_eigen_check("cos(u + 2*v)", MetricOnZ(h_uu="2"))
    assert rep.verdict == "eigenfunction"
    assert rep.eigenvalue == pytest.approx(-4.5, abs=1e-12)


def test_builtin_scenario_stream_is_an_eigenfunction():
    data = BeltramiData.from_scenario(load_scenario("beltrami").data)
    assert data.eigenvalue == 1.0
    rep = laplace_eigen_check(data)
    assert rep.verdict == "eigenfunction"
    assert rep.eigenvalue == pytest.approx(-1.0, abs=1e-12)
    assert hamiltonian_identity_check(data).passed


# ---------------------------------------------------------------------------
# stability at stagnation points

def test_center_and_saddle_spectra_of_the_builtin_stream():
    half = 1.0 / math.sqrt(2.0)
    expected = {
        (0.0, 0.0): ("nonhyperbolic-1d-transverse", half * 1j, -1.5, "stable"),
        (0.0, math.pi): ("hyperbolic-2d-transverse", half, -0.5, "stable"),
        (math.pi, 0.0): ("hyperbolic-2d-transverse", half, 0.5, "unstable"),
        (math.pi, math.pi): ("nonhyperbolic-1d-transverse", half * 1j, 1.5,
                             "unstable"),
    }
    for p, (kind, lam_plus, lam_z, transverse) in expected.items():
        rep = beltrami_stability_matrix(BUILTIN_STREAM, point=p)
        assert rep.kind == kind
        assert rep.lambda_plus == pytest.approx(lam_plus, abs=1e-14)
        assert rep.lambda_z == pytest.approx(lam_z, abs=1e-14)
        assert rep.transverse == transverse
        assert rep.max_rel_mismatch < 1e-10


def test_stability_matrix_entries_are_the_hessian_block():
    rep = beltrami_stability_matrix(BUILTIN_STREAM, point=(0.0, math.pi))
    # F_uu = -1, F_uv = 0, F_vv = 1/2 there, and the rescaling is 1
    assert np.allclose(rep.matrix,
                       [[0.0, -0.5, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -0.5]],
                       atol=1e-15)


def test_degenerate_hessian_is_refused():
    with pytest.raises(NotMorseError):
        beltrami_stability_matrix("cos(u)", point=(0.0, 1.3))


def test_zero_stream_value_is_refused():
    # (pi/2, pi/2) is a genuine saddle of cos u cos v but sits on the zero
    # level, where the transverse rate would vanish
    with pytest.raises(RegularValueViolation):
        beltrami_stability_matrix("cos(u)*cos(v)",
                                  point=(math.pi / 2, math.pi / 2))


def test_non_stagnation_point_is_refused():
    with pytest.raises(ValueError, match="stagnation"):
        beltrami_stability_matrix("cos(u)*cos(v)", point=(math.pi / 2, 0.0))


# ---------------------------------------------------------------------------
# reconstructed contact form

def test_roundtrip_recovers_the_stream_function():
    for stream in (BUILTIN_STREAM, "cos(u)*cos(v)"):
        form, rep = contact_from_beltrami(stream)
        assert rep["stream_recovered"]
        assert rep["roundtrip_max_error"] < 1e-12


def test_builtin_stream_produces_a_contact_form():
    _, rep = contact_from_beltrami(BUILTIN_STREAM)
    assert rep["contact_passed"]


def test_vanishing_field_fails_the_contact_condition():
    _, rep = contact_from_beltrami("1")
    assert rep["stream_recovered"]       # H = F still holds
    assert not rep["contact_passed"]     # but alpha wedge dalpha vanishes


def test_product_stream_fails_contact_where_the_field_vanishes():
    # cos u cos v and its gradient vanish together at (pi/2, pi/2)
    _, rep = contact_from_beltrami("cos(u)*cos(v)")
    assert not rep["contact_passed"]
    loc = rep["contact_worst_location"]
    assert math.cos(loc["u"]) ** 2 + math.cos(loc["v"]) ** 2 < 1e-12


def test_explicit_transverse_extension_is_honored():
    ext = {"X_z": f"(0 - ({BUILTIN_STREAM})) * (1 + z^2)"}
    form, rep = contact_from_beltrami(BUILTIN_STREAM, extension=ext)
    assert rep["stream_recovered"]
    tub = TubularChart.torus()
    cf = form.for_chart("torus")
    off = eval_value(cf.f, ("u", "v", "z"), (0.3, 0.7, 0.2))
    on = eval_value(cf.f, ("u", "v", "z"), (0.3, 0.7, 0.0))
    assert off == pytest.approx(on * 1.04)
    data = exceptional_hamiltonian(form, tub)
    target = math.cos(0.3) + math.cos(0.7) / 2
    assert data.H_value(0.3, 0.7, "torus") == pytest.approx(target, abs=1e-14)
