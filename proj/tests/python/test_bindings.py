import math

import numpy as np
import pytest

import bohmflow as bf


def test_version_and_error_type():
    assert isinstance(bf.__version__, str) and bf.__version__
    with pytest.raises(bf.BohmflowError, match="power of two"):
        bf.Grid(-1.0, 1.0, 100)


def test_spreading_law():
    spec = bf.GaussianSpec(x0=0.0, p0=1.0, sigma0=1.5)
    tau = spec.characteristic_time()
    assert tau == pytest.approx(2 * 1.5**2)
    assert bf.sigma_t(spec, tau) == pytest.approx(1.5 * math.sqrt(2), rel=1e-15)
    assert bf.classify_regime(spec, tau)[0] == "Fresnel"


def test_superposition_is_normalized():
    grid = bf.Grid(-40.0, 40.0, 512)
    psi = bf.superposition([bf.GaussianSpec(-5.0, 1.0), bf.GaussianSpec(5.0, -1.0)], grid, 0.0)
    assert psi.dtype == np.complex128
    assert np.sum(np.abs(psi) ** 2) * grid.dx == pytest.approx(1.0, abs=1e-12)


def test_propagated_trajectories_follow_the_scaling_law():
    grid = bf.Grid(-60.0, 60.0, 1024)
    spec = bf.GaussianSpec(x0=-5.0, p0=1.0, sigma0=1.0)
    psi0 = bf.superposition([spec], grid, 0.0)
    rec = bf.propagate(grid, psi0, dt=0.01, t_final=4.0, record_every=1)
    assert len(rec) == 401
    assert rec.norm_drift < 1e-10
    starts = np.linspace(-7.0, -3.0, 9)
    paths = bf.trajectories(rec, starts.tolist(), threads=2)
    assert [p["status"] for p in paths] == ["completed"] * 9
    for x0, p in zip(starts, paths):
        expected = [bf.analytic_trajectory(spec, x0, t) for t in p["param"]]
        assert np.max(np.abs(np.asarray(p["x"]) - expected)) < 5e-5
    assert bf.non_crossing_violations(paths, 120.0) == 0


def test_decompose_plane_wave_velocity():
    grid = bf.Grid(-10.0, 10.0, 128)
    k = 2 * math.pi * 3 / (grid.n * grid.dx)
    psi = np.exp(1j * k * grid.x)
    h = bf.decompose(grid, psi)
    assert np.allclose(h["velocity"], k, rtol=1e-12)


def test_interval_probability_half_space():
    grid = bf.Grid(-30.0, 30.0, 512)
    psi = bf.superposition([bf.GaussianSpec(1.0, 0.0, 2.0)], grid, 0.0)
    assert bf.interval_probability(grid, psi, -math.inf, 1.0) == pytest.approx(0.5, abs=1e-12)


def test_straight_guide_mode_is_stationary():
    grid = bf.Grid(-60.0, 60.0, 1024)
    rec = bf.paraxial_mode_run("straight", grid, z_final=50.0, record_every=50)
    first, last = np.abs(rec.psi(0)), np.abs(rec.psi(len(rec) - 1))
    assert np.max(np.abs(first - last)) < 1e-9


def test_y_junction_split_is_even():
    grid = bf.Grid(-60.0, 60.0, 1024)
    rec = bf.paraxial_mode_run("y_junction", grid, z_final=200.0, record_every=100, split_z=20.0)
    left, right = bf.arm_split(rec)
    assert left / (left + right) == pytest.approx(0.5, abs=1e-9)


def test_record_round_trip(tmp_path):
    grid = bf.Grid(-30.0, 30.0, 256)
    psi0 = bf.superposition([bf.GaussianSpec(-3.0, 1.0)], grid, 0.0)
    rec = bf.propagate(grid, psi0, dt=0.01, t_final=0.5, record_every=10)
    rec.save(str(tmp_path / "rec"))
    back = bf.load_record(str(tmp_path / "rec"))
    assert np.array_equal(back.psi(len(back) - 1), rec.psi(len(rec) - 1))


def test_bad_inputs_raise():
    grid = bf.Grid(-30.0, 30.0, 256)
    with pytest.raises(bf.BohmflowError):
        bf.propagate(grid, np.zeros(100, dtype=complex), dt=0.01, t_final=1.0)
    with pytest.raises(bf.BohmflowError):
        bf.paraxial_mode_run("spiral", grid)
