import math

import numpy as np
import pytest

from mforge import catalog
from mforge.dynamics import (
    DomainExitError, IntegratorConfig, conservation_drift, integrate, read_csv, write_csv,
)
from mforge.expr import Domain, parse
from mforge.geometry import VectorField
from oracles import rk4_reference
import corpus


def harmonic():
    return catalog.harmonic_system(1.0)


def test_harmonic_period():
    traj = integrate(harmonic(), [1.0, 0.0], IntegratorConfig(t_end=2 * math.pi, step=1e-3))
    assert traj.times[-1] == pytest.approx(2 * math.pi, abs=1e-14)
    assert np.max(np.abs(traj.states[-1] - [1.0, 0.0])) < 1e-8


def test_uniform_strictly_increasing_times():
    traj = integrate(harmonic(), [1.0, 0.0], IntegratorConfig(t_end=1.0, step=3e-3))
    dt = np.diff(traj.times)
    assert (dt > 0).all()
    assert np.ptp(dt) < 1e-12 and traj.step == pytest.approx(dt[0])


def test_oscillator_one_integral_drift():
    s = catalog.oscillator_one_system(1.0, 1.0)
    traj = integrate(s, [0.5, 0.0], IntegratorConfig(t_end=20.0, step=1e-3))
    assert not traj.truncated
    drift, series = conservation_drift(traj, parse("(1 + k*x^2)/(k*v^2 - a^2)"), s.params)
    assert drift < 1e-8
    assert series.shape == traj.times.shape


def test_oscillator_two_integral_drift():
    s = catalog.oscillator_two_system(1.0, 1.0)
    traj = integrate(s, [0.3, 0.1], IntegratorConfig(t_end=20.0, step=1e-3))
    drift, _ = conservation_drift(traj, parse("(k*(1 + k*x^2)^2*v^2 - a^2)/(1 + k*x^2)"), s.params)
    assert drift < 1e-8


def test_start_outside_domain_is_rejected():
    s = catalog.oscillator_one_system(-1.0, 1.0)
    with pytest.raises(DomainExitError):
        integrate(s, [1.2, 0.0], IntegratorConfig(t_end=1.0))


def test_leaving_the_domain_truncates():
    s = catalog.harmonic_system(1.0)
    traj = integrate(s, [1.9, 1.0], IntegratorConfig(t_end=5.0, step=1e-2))
    assert traj.truncated and "domain" in traj.reason
    assert traj.times[-1] < 5.0
    assert np.all(np.abs(traj.states) <= 2.0)


def test_harmonic_energy_drift():
    traj = integrate(harmonic(), [1.0, 0.0], IntegratorConfig(t_end=20.0, step=1e-3))
    drift, _ = conservation_drift(traj, parse("x^2 + v^2"))
    assert drift < 1e-10


def test_constant_has_zero_drift():
    traj = integrate(harmonic(), [0.5, 0.5], IntegratorConfig(t_end=1.0))
    drift, series = conservation_drift(traj, parse("7"))
    assert drift == 0.0 and (series == 7).all()


def test_csv_round_trip(tmp_path):
    s = harmonic()
    traj = integrate(s, [1.0, 0.0], IntegratorConfig(t_end=0.1, step=1e-2))
    path = tmp_path / "traj.csv"
    text = write_csv(traj, path, Q=parse("x^2 + v^2"), params=s.params)
    assert text.splitlines()[0] == "t,x,v,Q"
    back = read_csv(path)
    assert np.array_equal(back["t"], traj.times)
    assert np.array_equal(back["x"], traj["x"])
    assert np.array_equal(back["v"], traj["v"])
    assert len(back["Q"]) == len(traj.times)


def test_rk45_matches_exact_solution():
    traj = integrate(harmonic(), [1.0, 0.0], IntegratorConfig(t_end=10.0, method="rk45", step=0.1,
                                                              atol=1e-12, rtol=1e-12))
    t = traj.times
    assert np.max(np.abs(traj["x"] - np.cos(t))) < 1e-9
    assert np.max(np.abs(traj["v"] + np.sin(t))) < 1e-9


def test_rk4_matches_reference_stepper():
    s = catalog.oscillator_one_system(1.0, 1.0)

    def f(t, y):
        x, v = y
        return np.array([v, (v * v - 1) * x / (1 + x * x)])

    ref = rk4_reference(f, [0.5, 0.0], 1.0, 1e-2)
    traj = integrate(s, [0.5, 0.0], IntegratorConfig(t_end=1.0, step=1e-2))
    assert np.max(np.abs(traj.states[-1] - ref)) < 1e-14


def test_rk4_is_fourth_order():
    errs = []
    for h in (4e-3, 2e-3, 1e-3):
        traj = integrate(harmonic(), [1.0, 0.0], IntegratorConfig(t_end=10.0, step=h))
        errs.append(abs(traj["x"][-1] - math.cos(10.0)))
    for e1, e2 in zip(errs, errs[1:]):
        assert 12 <= e1 / e2 <= 20


def test_plain_vector_field_and_dict_state():
    X = VectorField(("t", "x"), (parse("1"), parse("-x")))
    traj = integrate(X, {"x": 1.0}, IntegratorConfig(t_end=1.0, step=1e-3), domain=Domain({"x": (-2, 2)}))
    assert traj["x"][-1] == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=1.0, method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=1.0, step=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=0.0)


@pytest.mark.parametrize("idx", range(8))
def test_lagrangian_energy_conserved_for_catalog(idx):
    e = corpus.entries()[idx]
    s = e.sode
    x0 = [0.5 * s.domain["x"][1], 0.0]
    if e.name == "oscillator2":
        x0 = [0.3, 0.1]
    traj = integrate(s, x0, IntegratorConfig(t_end=20.0, step=1e-3))
    for name, L in e.lagrangians.items():
        inside = Domain({q: L.domain[q] for q in ("x", "v")})
        ok = all(inside.contains_point({"x": x, "v": v}) for x, v in traj.states[::50])
        if not ok:
            continue
        drift, _ = conservation_drift(traj, L.energy(), s.params)
        assert drift < 1e-7, (e.name, name)
