"""Benchmark problems: consolidation series solution against frozen
reference values, smooth reference fields against finite-difference PDE
residuals, error norms, and study protocols."""

import numpy as np
import pytest

from poromech.assembly import Material
from poromech.mesh import PolyMesh, build_cartesian
from poromech.problems import cantilever, mandel, manufactured, studies
from poromech.problems.norms import ErrorNorms

# First five roots of tan(x) = (8/3) x, the root equation of the benchmark
# material below (nu = 0.2, undrained nu = 0.5), solved independently to
# machine precision with mpmath.
ROOTS_8_3 = np.array([1.2873421538900565, 4.6315996618239435,
                      7.8059784374006638, 10.961376593495558,
                      14.110597424487525])

# Normalized center pressures p(0, t)/p0 of the same material, frozen from
# an independent mpmath evaluation of the series.
CENTER_PRESSURE = {1e-4: 1.0042455241452888,
                   0.01: 1.0437611498994,
                   0.05: 1.0988832914089,
                   0.1: 1.0954137423071,
                   0.5: 0.59278538295739}

# (t/t_char, u_x(0.7), u_y at y=1) from the same evaluation.
DISPLACEMENTS = [(0.01, 8.7510970685926209e-5, -0.00012524131868280082),
                 (0.1, 8.3353194627207627e-5, -0.00013789682350162525),
                 (0.5, 5.937050368690155e-5, -0.00016436771676278973)]


@pytest.fixture(scope="module")
def solution():
    return mandel.MandelSolution(mandel.default_material())


# ----- consolidation series ---------------------------------------------------

def test_series_roots_frozen_values(solution):
    assert solution.nu == pytest.approx(0.2, rel=1e-12)
    assert solution.roots[:5] == pytest.approx(ROOTS_8_3, rel=1e-14)


def test_series_roots_satisfy_equation():
    ratio = 8.0 / 3.0
    roots = mandel.series_roots(ratio, 10)
    for k, r in enumerate(roots):
        assert k * np.pi < r < (k + 0.5) * np.pi
        assert np.tan(r) - ratio * r == pytest.approx(0.0, abs=1e-8)


def test_series_roots_reject_small_ratio():
    with pytest.raises(ValueError, match="ratio"):
        mandel.series_roots(1.0, 3)


def test_characteristic_time(solution):
    assert solution.t_char == pytest.approx(899928005.7595392, rel=1e-12)


def test_undrained_pressure(solution):
    assert solution.undrained_pressure() == pytest.approx(100.0, rel=1e-12)


def test_center_pressure_frozen_values(solution):
    p0 = solution.undrained_pressure()
    for frac, expected in CENTER_PRESSURE.items():
        p = solution.pressure(0.0, frac * solution.t_char)
        assert p / p0 == pytest.approx(expected, rel=1e-10)


def test_drained_edge_pressure_vanishes(solution):
    for frac in (1e-4, 0.01, 0.1, 1.0):
        p = solution.pressure(solution.width, frac * solution.t_char)
        assert abs(p) <= 1e-10 * solution.undrained_pressure()


def test_center_pressure_overshoot(solution):
    """Early times squeeze extra load onto the fluid before drainage wins;
    the center pressure rises above its undrained start."""
    p0 = solution.undrained_pressure()
    t_peak = 0.07275668609557183 * solution.t_char
    peak = solution.pressure(0.0, t_peak) / p0
    assert peak == pytest.approx(1.10687661633, rel=1e-9)
    for frac in (0.03, 0.05, 0.11, 0.2):
        assert solution.pressure(0.0, frac * solution.t_char) / p0 < peak


def test_displacement_frozen_values(solution):
    for frac, ux_ref, uy_ref in DISPLACEMENTS:
        u_x, u_y = solution.displacement(0.7, 1.0, frac * solution.t_char)
        assert u_x == pytest.approx(ux_ref, rel=1e-10)
        assert u_y == pytest.approx(uy_ref, rel=1e-10)


def test_series_limits_match_closed_forms(solution):
    ux0, uy0 = solution.undrained_displacement(0.7, 1.0)
    assert ux0 == pytest.approx(8.39932805376e-5, rel=1e-9)
    assert uy0 == pytest.approx(-0.000119990400768, rel=1e-9)
    u_x, u_y = solution.displacement(0.7, 1.0, 1e-7 * solution.t_char)
    assert u_x == pytest.approx(ux0, rel=1e-3)
    assert u_y == pytest.approx(uy0, rel=1e-3)

    uxd, uyd = solution.drained_displacement(0.7, 1.0)
    assert uxd == pytest.approx(3.3597312215e-5, rel=1e-9)
    assert uyd == pytest.approx(-0.0001919846412287017, rel=1e-9)
    u_x, u_y = solution.displacement(0.7, 1.0, 20.0 * solution.t_char)
    assert u_x == pytest.approx(uxd, rel=1e-9)
    assert u_y == pytest.approx(uyd, rel=1e-9)
    assert solution.pressure(0.0, 20.0 * solution.t_char) == pytest.approx(
        0.0, abs=1e-10 * solution.undrained_pressure())


def test_series_truncation_converged(solution):
    fine = mandel.MandelSolution(mandel.default_material(), n_terms=10_000)
    p0 = solution.undrained_pressure()
    t = 1e-4 * solution.t_char
    x = np.array([0.0, 0.3, 0.7, 0.95])
    assert np.abs(solution.pressure(x, t)
                  - fine.pressure(x, t)).max() <= 1e-8 * p0


def test_series_rejects_compressible_material():
    with pytest.raises(ValueError, match="storage"):
        mandel.MandelSolution(Material(shear=1.0, lam=1.0, alpha=1.0,
                                       storage=0.1))
    with pytest.raises(ValueError, match="coupling"):
        mandel.MandelSolution(Material(shear=1.0, lam=1.0, alpha=0.9,
                                       storage=0.0))


# ----- discrete consolidation setup -----------------------------------------------

def test_setup_rejects_offset_mesh():
    verts = np.array([[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]])
    mesh = PolyMesh(verts, [np.array([0, 1, 2, 3])])
    with pytest.raises(ValueError, match="origin"):
        mandel.setup(mesh, dt=1.0)


def test_profile_cells_pick_midline():
    mesh = build_cartesian(5, 5)
    cells = mandel.profile_cells(mesh, 1.0)
    assert cells.size == 5
    assert mesh.cell_centroid[cells, 1] == pytest.approx(
        np.full(5, 0.5), rel=1e-12)


def test_run_profiles_structure():
    mesh = build_cartesian(5, 5)
    system, solution, state0 = mandel.setup(mesh, dt=0.01 * 899928005.7595392)
    times = [0.02 * solution.t_char, 0.04 * solution.t_char]
    result = mandel.run_profiles(system, solution, state0, times)
    assert result["p_undrained"] == pytest.approx(100.0)
    assert len(result["profiles"]) == 2
    assert result["history_t"].size == 5
    assert result["history_p"][0] == pytest.approx(1.0)
    for profile, t_ref in zip(result["profiles"], times):
        assert profile["time"] == pytest.approx(t_ref, rel=1e-12)
        assert np.all(np.diff(profile["x"]) > 0)
        assert profile["p"].shape == profile["p_exact"].shape
        # midline pressure decays monotonically toward the drained edge
        assert np.all(np.diff(profile["p_point"]) < 0)


def test_run_profiles_rejects_unaligned_times():
    mesh = build_cartesian(3, 3)
    system, solution, state0 = mandel.setup(mesh, dt=0.01 * 899928005.7595392)
    with pytest.raises(ValueError, match="multiples"):
        mandel.run_profiles(system, solution, state0,
                            [0.025 * solution.t_char])


# ----- smooth reference problem ---------------------------------------------------

H = 1e-3


def u_at(pt, t):
    return manufactured.displacement(pt[None, :], t)[0]


def p_at(pt, t):
    return float(manufactured.pressure(pt[None, :], t)[0])


def fd1(f, pt, t, axis, h=H):
    e = np.zeros(2)
    e[axis] = h
    return (np.asarray(f(pt - 2 * e, t)) - 8.0 * np.asarray(f(pt - e, t))
            + 8.0 * np.asarray(f(pt + e, t))
            - np.asarray(f(pt + 2 * e, t))) / (12.0 * h)


def fd2(f, pt, t, axis, h=H):
    e = np.zeros(2)
    e[axis] = h
    return (-np.asarray(f(pt + 2 * e, t)) + 16.0 * np.asarray(f(pt + e, t))
            - 30.0 * np.asarray(f(pt, t)) + 16.0 * np.asarray(f(pt - e, t))
            - np.asarray(f(pt - 2 * e, t))) / (12.0 * h * h)


def div_u(pt, t):
    return fd1(u_at, pt, t, 0)[0] + fd1(u_at, pt, t, 1)[1]


def test_exact_fields_start_consistently():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.0, 1.0, (50, 2))
    assert np.abs(manufactured.displacement(pts, 0.0)).max() == 0.0
    center = np.array([[0.5, 0.5]])
    assert manufactured.pressure(center, 0.0)[0] == pytest.approx(-1.0)


def test_body_force_closes_momentum_balance():
    """Finite-difference residual of -div(2G eps + lam tr I) + alpha grad p
    against the hand-derived body force."""
    rng = np.random.default_rng(1)
    pts = rng.uniform(0.05, 0.95, (100, 2))
    times = rng.uniform(0.05, 0.95, 100)
    shear, lam = 1.0, 1.0
    for pt, t in zip(pts, times):
        lap = fd2(u_at, pt, t, 0) + fd2(u_at, pt, t, 1)
        grad_div = np.array([fd1(div_u, pt, t, 0), fd1(div_u, pt, t, 1)])
        grad_p = np.array([fd1(p_at, pt, t, 0), fd1(p_at, pt, t, 1)])
        b = manufactured.body_force(pt[None, :], t)[0]
        residual = -(shear * lap + (shear + lam) * grad_div) + grad_p - b
        assert np.abs(residual).max() <= 1e-6 * (1.0 + np.abs(b).max())


def test_fluid_source_closes_mass_balance():
    """Finite-difference residual of d/dt(div u) - lap p against the
    hand-derived source (zero storage, unit coupling and permeability)."""
    rng = np.random.default_rng(2)
    pts = rng.uniform(0.05, 0.95, (100, 2))
    times = rng.uniform(0.05, 0.95, 100)
    for pt, t in zip(pts, times):
        ht = 1e-3
        ddt_div = (div_u(pt, t - 2 * ht) - 8.0 * div_u(pt, t - ht)
                   + 8.0 * div_u(pt, t + ht)
                   - div_u(pt, t + 2 * ht)) / (12.0 * ht)
        lap_p = fd2(p_at, pt, t, 0) + fd2(p_at, pt, t, 1)
        g = float(manufactured.mass_source(pt[None, :], t)[0])
        assert ddt_div - lap_p - g == pytest.approx(0.0, abs=1e-6 * (1 + abs(g)))


# ----- error norms ----------------------------------------------------------------

def piecewise_exact_system():
    mesh = build_cartesian(3, 3)
    system, _ = manufactured.setup(mesh, dt=0.5)
    return system


def test_norms_vanish_on_reproducible_fields():
    """A constant pressure and a linear displacement are reproduced
    exactly by cell means and mean gradients, so all norms vanish."""
    system = piecewise_exact_system()

    def pressure(pts, t):
        return np.full(np.asarray(pts).reshape(-1, 2).shape[0], 3.0)

    grad = np.array([[0.4, -0.3], [0.2, 0.1]])

    def displacement(pts, t):
        return np.asarray(pts).reshape(-1, 2) @ grad.T + [0.5, -1.0]

    norms = ErrorNorms(system, pressure, displacement)
    from poromech.assembly import State
    state = State(time=0.7, u=displacement(system.mesh.vertices, 0.7).ravel(),
                  p=np.full(system.n_p, 3.0), pi=np.zeros(system.n_pi))
    e_p, e_u, e_s = norms.instantaneous(state)
    assert e_p <= 1e-13
    assert e_u <= 1e-13
    assert e_s <= 1e-12


def test_pressure_norm_measures_constant_offset():
    system = piecewise_exact_system()
    zero_p = lambda pts, t: np.zeros(np.asarray(pts).reshape(-1, 2).shape[0])
    zero_u = lambda pts, t: np.zeros((np.asarray(pts).reshape(-1, 2).shape[0], 2))
    norms = ErrorNorms(system, zero_p, zero_u)
    from poromech.assembly import State
    delta = 0.25
    state = State(time=0.0, u=np.zeros(system.n_u),
                  p=np.full(system.n_p, delta), pi=np.zeros(system.n_pi))
    e_p, e_u, e_s = norms.instantaneous(state)
    # unit domain: the integral of delta^2 is delta^2
    assert e_p == pytest.approx(delta, rel=1e-12)
    assert e_u == 0.0 and e_s == 0.0
    for _ in range(4):
        norms.accumulate(state)
    totals = norms.totals()
    assert set(totals) == {"e_p", "e_u", "e_s"}
    assert totals["e_p"] == pytest.approx(delta * np.sqrt(4 * system.dt),
                                          rel=1e-12)
    assert norms.steps == 4


# ----- studies -------------------------------------------------------------------------

def test_family_mesh_validation():
    with pytest.raises(ValueError, match="family"):
        studies.family_mesh("triangular", 4)


def test_level_mesh_doubles_resolution():
    assert studies.level_mesh("cartesian", 0, base=5).num_cells == 25
    assert studies.level_mesh("cartesian", 1, base=5).num_cells == 100


def test_manufactured_case_row():
    row = studies.manufactured_case(build_cartesian(3, 3), dt=0.25,
                                    t_end=0.5)
    assert row["cells"] == 9 and row["steps"] == 2
    assert row["h"] == pytest.approx(np.sqrt(2.0) / 3.0, rel=1e-12)
    assert row["iterations"] == 0
    assert row["e_p"] > 0 and row["e_u"] > 0 and row["e_s"] > 0


def test_observed_rates_on_synthetic_ladder():
    rows = [{"h": h, "e_p": h**2, "e_u": 3 * h**2, "e_s": h} for h in
            (0.4, 0.2, 0.1)]
    rates = studies.observed_rates(rows)
    assert rates["e_p"] == pytest.approx(2.0, rel=1e-12)
    assert rates["e_u"] == pytest.approx(2.0, rel=1e-12)
    assert rates["e_s"] == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError, match="two cases"):
        studies.observed_rates(rows[:1])
    rows = [{"dt": 0.1, "e_p": 0.1}, {"dt": 0.05, "e_p": 0.05}]
    assert studies.observed_rates(rows, x_key="dt", keys=("e_p",))["e_p"] \
        == pytest.approx(1.0, rel=1e-12)


def test_worker_count_env_cap(monkeypatch):
    monkeypatch.setenv("POROMECH_THREADS", "1")
    assert studies._worker_count(None, 99) == 1
    monkeypatch.delenv("POROMECH_THREADS")
    assert studies._worker_count(4, 2) == 2
    assert studies._worker_count(4, 0) == 1


def test_stabilization_study_reduces_indicator():
    rows = studies.stabilization_study(families=("cartesian",), n=4,
                                       dt=1e-5)
    assert len(rows) == 1
    row = rows[0]
    assert row["family"] == "cartesian" and row["cells"] == 16
    assert row["stabilized"] < row["unstabilized"]


# ----- cantilever -----------------------------------------------------------------------

def test_cantilever_bends_downward():
    mesh = build_cartesian(4, 4)
    system, state0 = cantilever.setup(mesh, dt=1e-5, stabilize=True)
    assert np.abs(state0.u).max() == 0.0
    state = system.step(state0)
    tip = np.flatnonzero(np.all(np.isclose(mesh.vertices, [1.0, 1.0]),
                                axis=1))[0]
    assert state.u[2 * tip + 1] < 0.0
    clamped = np.flatnonzero(mesh.vertices[:, 0] < 1e-9)
    for v in clamped:
        assert state.u[2 * v] == 0.0 and state.u[2 * v + 1] == 0.0
