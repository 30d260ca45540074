"""Shared fixtures and independent oracles for the test suite.

The oracles here are deliberately written without calling the library's
numerical code: a classical RK4 integrator and a literal, zone-by-zone
transcription of the 2R2C equations.
"""

import numpy as np
import pytest

from aggtherm.scenarios import NOMINAL_ZONE, generate, homogeneous_building, open_loop_spec, virtual_building
from aggtherm.thermal import BuildingModel, ZoneParams, ZoneTraceSet


def literal_zone_rhs(t_z, t_w, t_a, eta, q_ac, q_int, p):
    """Term-by-term 2R2C right-hand side for one zone (degC/h)."""
    dz = 0.0
    dz += (t_a - t_z) / (p.r_za * p.c_z)
    dz += (q_int - q_ac) / p.c_z
    dz += (t_w - t_z) / (p.r_zw * p.c_z)
    dz += p.a_z / p.c_z * eta
    dw = 0.0
    dw += (t_z - t_w) / (p.r_zw * p.c_w)
    dw += (t_a - t_w) / (p.r_wa * p.c_w)
    dw += p.a_w / p.c_w * eta
    return dz, dw


def literal_building_rhs(x, u, model):
    """Stacked per-zone derivatives with coupling; ``x`` = (t_z..., t_w...)."""
    n = model.n_zones
    t_z, t_w = x[:n], x[n:]
    t_a, eta, q_ac, q_int = u
    out = np.empty(2 * n)
    for j, p in enumerate(model.zones):
        dz, dw = literal_zone_rhs(t_z[j], t_w[j], t_a[j], eta[j], q_ac[j], q_int[j], p)
        if model.interaction_resistance is not None:
            for i in range(n):
                r = model.interaction_resistance[i, j]
                if i != j and np.isfinite(r):
                    dz += (t_z[i] - t_z[j]) / (r * p.c_z)
        out[j], out[n + j] = dz, dw
    return out


def rk4(f, x0, t_s, n_steps, u_of_t):
    """Classical fourth-order Runge-Kutta with inputs evaluated at stage times."""
    x = np.empty((n_steps + 1, np.size(x0)))
    x[0] = x0
    for k in range(n_steps):
        t = k * t_s
        k1 = f(x[k], u_of_t(t))
        k2 = f(x[k] + 0.5 * t_s * k1, u_of_t(t + 0.5 * t_s))
        k3 = f(x[k] + 0.5 * t_s * k2, u_of_t(t + 0.5 * t_s))
        k4 = f(x[k] + t_s * k3, u_of_t(t + t_s))
        x[k + 1] = x[k] + t_s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def random_zone(rng):
    return ZoneParams(
        r_za=rng.uniform(0.5, 2.0),
        c_z=rng.uniform(0.3, 1.5),
        r_zw=rng.uniform(0.4, 1.5),
        c_w=rng.uniform(1.0, 6.0),
        r_wa=rng.uniform(2.0, 8.0),
        a_z=rng.uniform(0.0, 1.0),
        a_w=rng.uniform(0.0, 20.0),
    )


def random_traces(rng, n_t, n_z, t_s=1.0 / 12.0, with_states=True):
    kw = dict(
        t_s=t_s,
        t_z=rng.normal(23.0, 1.5, (n_t, n_z)),
        t_a=rng.normal(27.0, 3.0, (n_t, n_z)),
        eta_solar=rng.uniform(0.0, 0.8, (n_t, n_z)),
        q_ac=rng.uniform(0.0, 2.5, (n_t, n_z)),
        q_int=rng.uniform(0.0, 1.5, (n_t, n_z)),
    )
    if with_states:
        kw["t_w"] = rng.normal(25.0, 1.0, (n_t, n_z))
    return ZoneTraceSet(**kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20181001)


@pytest.fixture(scope="session")
def nominal_zone():
    return NOMINAL_ZONE


@pytest.fixture(scope="session")
def hetero_building():
    return virtual_building()


@pytest.fixture(scope="session")
def homo_building():
    return homogeneous_building()


@pytest.fixture(scope="session")
def open_loop_scenario(hetero_building):
    return generate(open_loop_spec(building=hetero_building))


@pytest.fixture(scope="session")
def two_zone_building():
    return BuildingModel((NOMINAL_ZONE.scaled(r_za=0.6), NOMINAL_ZONE.scaled(r_za=1.4)))


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list = []


def report(line: str) -> None:
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
