import numpy as np
import pytest

from cgl_lab.errors import DefectivePencil
from cgl_lab.modes import (dispersion, evolve_modal, fibonacci_sphere, growth_scan,
                           growth_scan_batch)
from cgl_lab.quasilinear import plane_wave_matrix
from cgl_lab.sampling import random_firehose, random_hyperbolic
from cgl_lab.state import PlasmaState
from cgl_lab.symmetrizer import a0_closed_form


def test_zero_wavevector(iso):
    r = dispersion(iso, [0, 0, 0])
    assert np.all(r.eigenvalues == 0)
    assert r.growth_rate == 0


def test_hyperbolic_no_growth(rng):
    dirs = fibonacci_sphere(16)
    for u in random_hyperbolic(rng, 50):
        U = PlasmaState.from_vector(u)
        for d in dirs:
            r = dispersion(U, 3.0 * d)
            scale = np.max(np.abs(r.eigenvalues)) + 1.0
            assert r.growth_rate <= 1e-10 * scale


def test_firehose_growth(firehose):
    b = firehose.H / firehose.Hnorm
    r = dispersion(firehose, b)
    assert r.growth_rate > 0.1
    # complex-conjugate pair
    w = r.eigenvalues
    assert np.any(np.abs(w.imag + r.growth_rate) < 1e-8)


def test_firehose_sweep(rng):
    u = random_firehose(rng, 200)
    for row in u:
        b = row[4:7] / np.linalg.norm(row[4:7])
        assert growth_scan_batch(row[None], [b])[0] > 0


def test_mirror_scan(mirror):
    g = growth_scan(mirror, fibonacci_sphere(64))
    assert g.shape == (64,)
    assert np.max(g) > 1e-3


def test_scan_homogeneity(mirror):
    dirs = fibonacci_sphere(8)
    for d in dirs:
        g1 = dispersion(mirror, d).growth_rate
        g2 = dispersion(mirror, 2 * d).growth_rate
        assert g2 == pytest.approx(2 * g1, abs=1e-10)


def test_scan_threads_do_not_change_results(mirror, monkeypatch):
    dirs = fibonacci_sphere(32)
    a = growth_scan(mirror, dirs)
    monkeypatch.setenv("CGL_LAB_THREADS", "4")
    b = growth_scan(mirror, dirs)
    assert np.array_equal(a, b)


def test_batch_matches_scalar(rng):
    u = random_firehose(rng, 5)
    dirs = fibonacci_sphere(10)
    gb = growth_scan_batch(u, dirs)
    for i in range(5):
        assert gb[i] == pytest.approx(np.max(growth_scan(PlasmaState.from_vector(u[i]), dirs)),
                                      abs=1e-12)


def test_fibonacci_sphere_unit():
    d = fibonacci_sphere(64)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert abs(np.mean(d, axis=0)).max() < 0.05


def test_evolve_identity_at_zero(rng):
    U = PlasmaState.from_vector(random_hyperbolic(rng, 1)[0])
    V0 = rng.normal(size=9) + 1j * rng.normal(size=9)
    assert np.allclose(evolve_modal(U, [1.0, 0.5, 0], V0, 0.0), V0, atol=1e-12)


def test_evolve_solves_ode(rng):
    U = PlasmaState.from_vector(random_hyperbolic(rng, 1)[0])
    k = np.array([2.0, -1.0, 0.5])
    V0 = rng.normal(size=9).astype(complex)
    M = plane_wave_matrix(U, k)
    t, h = 0.7, 1e-4
    dV = (evolve_modal(U, k, V0, t + h) - evolve_modal(U, k, V0, t - h)) / (2 * h)
    assert np.allclose(dV, -1j * M @ evolve_modal(U, k, V0, t), atol=1e-6)


def test_evolve_bounded(rng):
    U = PlasmaState.from_vector(random_hyperbolic(rng, 1)[0])
    k = np.array([1.0, 1.0, 0.0])
    V0 = rng.normal(size=9).astype(complex)
    R = np.linalg.eig(plane_wave_matrix(U, k))[1]
    bound = np.linalg.cond(R) * np.linalg.norm(V0)
    for t in (1.0, 10.0, 100.0):
        assert np.linalg.norm(evolve_modal(U, k, V0, t)) <= bound * (1 + 1e-10)


def test_defective_pencil_detected():
    # tau = 1 exactly: the Alfven pair along b collapses into a Jordan block
    U = PlasmaState(1.0, [0, 0, 0], [1, 0, 0], 2.0, 1.0)
    with pytest.raises(DefectivePencil):
        evolve_modal(U, [1.0, 0, 0], np.ones(9), 1.0)


def test_certificate_implies_real_spectrum(rng):
    u = random_hyperbolic(rng, 2000)
    assert all(a0_closed_form(PlasmaState.from_vector(r)) for r in u[:50])
    dirs = fibonacci_sphere(8)
    g = growth_scan_batch(u, dirs)
    scale = np.array([np.max(np.abs(np.linalg.eigvals(plane_wave_matrix(PlasmaState.from_vector(r), dirs[0]))))
                      for r in u])
    assert np.all(g <= 1e-10 * scale)
