import math
import random

import numpy as np
import pytest

from bcontactlab.jets import DomainError, Jet1, Jet2


# --- finite-difference helpers --------------------------------------------

GRAD_STEP = 1e-5
HESS_STEP = 1e-4


def fd_grad(fn, x, h=GRAD_STEP):
    n = len(x)
    out = []
    for i in range(n):
        xp = list(x); xp[i] += h
        xm = list(x); xm[i] -= h
        out.append((fn(xp) - fn(xm)) / (2 * h))
    return out


def fd_hess(fn, x, h=HESS_STEP):
    n = len(x)
    H = [[0.0] * n for _ in range(n)]
    f0 = fn(x)
    for i in range(n):
        xp = list(x); xp[i] += h
        xm = list(x); xm[i] -= h
        H[i][i] = (fn(xp) - 2 * f0 + fn(xm)) / (h * h)
        for j in range(i + 1, n):
            xpp = list(x); xpp[i] += h; xpp[j] += h
            xpm = list(x); xpm[i] += h; xpm[j] -= h
            xmp = list(x); xmp[i] -= h; xmp[j] += h
            xmm = list(x); xmm[i] -= h; xmm[j] -= h
            H[i][j] = H[j][i] = (fn(xpp) - fn(xpm) - fn(xmp) + fn(xmm)) / (4 * h * h)
    return H


def rel(a, b):
    return abs(a - b) / (1.0 + abs(a))


# a small zoo of C^2 functions exercising every primitive; each is written
# once over jets and once over plain floats for the FD reference
ZOO = [
    (lambda u, v, z: (u * v).sin() + (z * z - u).cos() * v,
     lambda u, v, z: math.sin(u * v) + math.cos(z * z - u) * v),
    (lambda u, v, z: (u ** 2 + v ** 2 + 1).sqrt() / (z + 2.0),
     lambda u, v, z: math.sqrt(u ** 2 + v ** 2 + 1) / (z + 2.0)),
    (lambda u, v, z: (0.3 * u - v).exp() + z ** 3,
     lambda u, v, z: math.exp(0.3 * u - v) + z ** 3),
    (lambda u, v, z: (u + 2.0).absval() * v - 1.0 / (v - 4.0),
     lambda u, v, z: abs(u + 2.0) * v - 1.0 / (v - 4.0)),
    (lambda u, v, z: (u.sin() * v.cos() + 2.5) ** -2 + (z.exp() + u) ** 3,
     lambda u, v, z: (math.sin(u) * math.cos(v) + 2.5) ** -2 + (math.exp(z) + u) ** 3),
]


def test_jet2_matches_finite_differences():
    rng = random.Random(20240915)
    for jet_fn, ref_fn in ZOO:
        for _ in range(40):
            x = [rng.uniform(-1.2, 1.2) for _ in range(3)]
            u, v, z = Jet2.seed(tuple(x))
            out = jet_fn(u, v, z)
            assert math.isclose(out.value, ref_fn(*x), rel_tol=1e-13, abs_tol=1e-13)
            g = fd_grad(lambda p: ref_fn(*p), x)
            for i in range(3):
                assert rel(out.grad[i], g[i]) < 1e-6
            H = fd_hess(lambda p: ref_fn(*p), x)
            for i in range(3):
                for j in range(3):
                    assert rel(out.hess[i][j], H[i][j]) < 1e-4


def test_jet1_agrees_with_jet2_gradient():
    rng = random.Random(7)
    for jet_fn, _ in ZOO:
        x = tuple(rng.uniform(-1.0, 1.0) for _ in range(3))
        j1 = jet_fn(*Jet1.seed(x))
        j2 = jet_fn(*Jet2.seed(x))
        assert j1.value == j2.value
        assert j1.grad == j2.grad


def test_hessian_is_exactly_symmetric():
    u, v, z = Jet2.seed((0.4, -0.9, 0.2))
    out = (u * v * z).sin() * (u + v).exp() + u ** 4 / (v + 3.0)
    for i in range(3):
        for j in range(3):
            assert out.hess[i][j] == out.hess[j][i]


def test_array_payload_matches_scalar_loop():
    pts = np.linspace(-1.0, 1.0, 17)
    U = np.full_like(pts, 0.3)
    u, v = Jet2.seed((U, pts))
    out = (u * v).sin() + (v ** 2 + 1.0).sqrt()
    for k, p in enumerate(pts):
        us, vs = Jet2.seed((0.3, float(p)))
        ref = (us * vs).sin() + (vs ** 2 + 1.0).sqrt()
        assert math.isclose(out.value[k], ref.value, rel_tol=1e-15)
        assert math.isclose(out.grad[1][k], ref.grad[1], rel_tol=1e-15)
        assert math.isclose(out.hess[0][1][k], ref.hess[0][1], rel_tol=1e-15)


# --- domain policy ----------------------------------------------------------

def test_division_by_zero_raises():
    u, = Jet1.seed((0.0,))
    with pytest.raises(DomainError):
        1.0 / u
    u2, = Jet2.seed((0.0,))
    with pytest.raises(DomainError):
        (u2 + 1.0) / u2


def test_sqrt_domain():
    u, = Jet2.seed((-0.5,))
    with pytest.raises(DomainError):
        u.sqrt()
    z, = Jet2.seed((0.0,))
    with pytest.raises(DomainError):
        z.sqrt()  # derivative blows up at 0, refuse rather than inf


def test_abs_kink():
    u, = Jet2.seed((1e-13,))
    with pytest.raises(DomainError):
        u.absval()
    ok, = Jet2.seed((-0.3,))
    out = ok.absval()
    assert out.value == 0.3 and out.grad[0] == -1.0


def test_exp_overflow():
    u, = Jet1.seed((1000.0,))
    with pytest.raises(DomainError):
        u.exp()


def test_integer_powers_only():
    u, = Jet2.seed((2.0,))
    with pytest.raises(DomainError):
        u ** 0.5
    z, = Jet2.seed((0.0,))
    with pytest.raises(DomainError):
        z ** -1
    assert (u ** 0).value == 1.0
    assert (u ** -2).value == 0.25
    assert (u ** -2).grad[0] == pytest.approx(-2 * 2.0 ** -3)


def test_array_payload_domain_check_is_any():
    # one bad lane poisons the whole batch, by design
    u, = Jet1.seed((np.array([1.0, 0.0, 4.0]),))
    with pytest.raises(DomainError):
        u.sqrt()
