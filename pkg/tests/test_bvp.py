import numpy as np
import pytest

from scn.bvp import (
    CSV_HEADER,
    BoundarySpec,
    Dirichlet,
    NeumannZero,
    Trajectory,
    classify_modes,
    component_oscillates,
    make_grid,
    read_csv,
    residual_check,
    solve,
    write_csv,
)
from scn.errors import ValidationError


def scalar(a):
    return np.array([[float(a)]])


def qr_eigenvalues(a, iters=500):
    """Unshifted QR iteration; adequate for real, well-separated spectra."""
    x = np.array(a, dtype=float)
    for _ in range(iters):
        q, r = np.linalg.qr(x)
        x = r @ q
    return np.diag(x)


class TestOracles:
    def test_sinh(self):
        traj, rep = solve(scalar(1.0), BoundarySpec.dirichlet([0.0], [1.0]), 1.0, 1e-3)
        exact = np.sinh(traj.times) / np.sinh(1.0)
        assert np.max(np.abs(traj.states[:, 0] - exact)) <= 1e-6
        assert traj.states[500, 0] == pytest.approx(0.443409, abs=1e-6)
        assert not rep.divergent
        assert residual_check(traj, scalar(1.0)) <= 1e-5

    def test_sine(self):
        a = scalar(-np.pi ** 2)
        traj, rep = solve(a, BoundarySpec.dirichlet([0.0], [1.0]), 0.5, 1e-3)
        assert np.max(np.abs(traj.states[:, 0] - np.sin(np.pi * traj.times))) <= 1e-6
        assert not rep.divergent

    def test_straight_line(self):
        traj, _ = solve(scalar(0.0), BoundarySpec.dirichlet([0.0], [1.0]), 2.0, 0.25)
        assert traj.states[4, 0] == pytest.approx(0.5, abs=1e-15)
        np.testing.assert_allclose(traj.states[:, 0], traj.times / 2.0, atol=1e-14)

    def test_neumann_constant(self):
        spec = BoundarySpec((0.7,), (NeumannZero(),))
        traj, rep = solve(scalar(0.0), spec, 5.0, 0.5)
        np.testing.assert_allclose(traj.states[:, 0], 0.7, atol=1e-14)
        assert rep.boundary_residual <= 1e-14


def default_spec(n=4, seed=0, neumann=(2,)):
    rng = np.random.default_rng(seed)
    init = tuple(rng.uniform(-3, 3, n))
    term = tuple(NeumannZero() if k in neumann else Dirichlet(float(rng.uniform(-3, 3)))
                 for k in range(n))
    return BoundarySpec(init, term)


class TestLinearity:
    def test_zero_data(self, cfg):
        a = cfg.effective_matrix(True)
        spec = BoundarySpec((0.0,) * 4, (Dirichlet(0.0), Dirichlet(0.0), NeumannZero(), Dirichlet(0.0)))
        traj, _ = solve(a, spec, 900.0)
        assert np.max(np.abs(traj.states)) <= 1e-12

    def test_scaling(self, cfg):
        a = cfg.effective_matrix(True)
        spec = default_spec()
        t1, _ = solve(a, spec, 900.0)
        t2, _ = solve(a, spec.scaled(-2.5), 900.0)
        np.testing.assert_allclose(t2.states, -2.5 * t1.states, rtol=1e-9, atol=1e-12)

    def test_superposition(self, cfg):
        a = cfg.effective_matrix(True)
        s1, s2 = default_spec(seed=1), default_spec(seed=2)
        t1, _ = solve(a, s1, 900.0)
        t2, _ = solve(a, s2, 900.0)
        t12, _ = solve(a, s1 + s2, 900.0)
        scale = np.max(np.abs(t12.states))
        assert np.max(np.abs(t12.states - t1.states - t2.states)) <= 1e-9 * scale

    def test_mixed_kinds_cannot_add(self):
        with pytest.raises(ValidationError):
            default_spec(neumann=(0,)) + default_spec(neumann=(1,))


def test_grid_refinement_order():
    a = scalar(1.0)
    spec = BoundarySpec.dirichlet([0.0], [1.0])
    _, r1 = solve(a, spec, 1.0, 0.02)
    _, r2 = solve(a, spec, 1.0, 0.01)
    assert 3.0 < r1.ode_residual / r2.ode_residual < 5.0


def test_boundary_values_met(cfg):
    a = cfg.effective_matrix(True)
    spec = default_spec()
    traj, rep = solve(a, spec, 1500.0)
    assert not rep.divergent
    np.testing.assert_allclose(traj.states[0], spec.initial, atol=1e-12)
    for k, c in enumerate(spec.terminal):
        got = traj.states[-1, k] if isinstance(c, Dirichlet) else traj.derivatives[-1, k]
        want = c.value if isinstance(c, Dirichlet) else 0.0
        assert abs(got - want) <= 1e-8 * max(1.0, abs(want))


class TestResidual:
    def test_linear_exact(self):
        t = np.linspace(0, 1, 101)
        traj = Trajectory(t, (3 * t + 1)[:, None], np.full((101, 1), 3.0))
        assert residual_check(traj, scalar(0.0)) <= 1e-10

    def test_corrupted_point(self):
        traj, _ = solve(scalar(1.0), BoundarySpec.dirichlet([0.0], [1.0]), 1.0, 1e-3)
        states = traj.states.copy()
        states[400, 0] += 1.0
        bad = Trajectory(traj.times, states, traj.derivatives)
        assert residual_check(bad, scalar(1.0)) > 1e3

    def test_too_short(self):
        traj = Trajectory(np.array([0.0, 1.0]), np.zeros((2, 1)), np.zeros((2, 1)))
        with pytest.raises(ValidationError):
            residual_check(traj, scalar(0.0))


class TestDivergence:
    def test_flagged_not_raised(self):
        a = np.diag([1.0, 2.0, 3.0, 4.0])
        traj, rep = solve(a, default_spec(neumann=()), 900.0, 0.25)
        assert rep.divergent
        assert rep.diagnostic

    def test_unit_mass_scales_diverge(self, cfg):
        a = cfg.replace(psi=type(cfg.psi)()).effective_matrix(True)
        _, rep = solve(a, default_spec(), 900.0)
        assert rep.divergent


class TestGrid:
    @pytest.mark.parametrize("horizon, step", [(1.0, 0.3), (0.0, 0.1), (1.0, -0.1), (1.0, 1.0)])
    def test_invalid(self, horizon, step):
        with pytest.raises(ValidationError):
            make_grid(horizon, step)

    def test_offset(self):
        g = make_grid(3.0, 0.5, t0=10.0)
        assert g[0] == 10.0 and g[-1] == 13.0 and len(g) == 7

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            solve(np.eye(3), default_spec(), 10.0, 1.0)

    def test_non_finite_matrix(self):
        with pytest.raises(ValidationError):
            solve(np.full((1, 1), np.nan), BoundarySpec.dirichlet([0.0], [1.0]), 1.0, 0.1)


def test_spec_validation():
    with pytest.raises(ValidationError):
        BoundarySpec((0.0, 1.0), (Dirichlet(0.0),))
    with pytest.raises(ValidationError):
        BoundarySpec((0.0,), ("fixed",))


class TestModes:
    def test_oscillatory(self):
        modes = classify_modes(np.diag([-1.0, -4.0, -9.0, -16.0]))
        assert all(m.kind == "oscillatory" for m in modes)
        assert sorted(m.rate for m in modes) == pytest.approx([1, 2, 3, 4])

    def test_exponential(self):
        modes = classify_modes(np.eye(4))
        assert [m.kind for m in modes] == ["exponential"] * 4
        assert all(m.rate == pytest.approx(1.0) for m in modes)

    def test_neutral_and_complex(self):
        kinds = {m.kind for m in classify_modes(np.array([[0.0, 1.0], [-1.0, 0.0]]))}
        assert kinds == {"growing-oscillatory"}
        assert classify_modes(np.zeros((2, 2)))[0].kind == "neutral"

    def test_default_matrix_against_qr(self, cfg):
        for constrained in (False, True):
            m = cfg.matrix(constrained).entries
            ref = np.sort(qr_eigenvalues(m))
            modes = classify_modes(m)
            got = np.sort([md.eigenvalue.real for md in modes])
            np.testing.assert_allclose(got, ref, rtol=1e-8)
            for md in modes:
                assert md.kind == ("oscillatory" if md.eigenvalue.real < 0 else "exponential")

    def test_vco2_component(self, cfg):
        modes = classify_modes(cfg.matrix(False))
        assert component_oscillates(modes, 3)
        assert not component_oscillates(classify_modes(np.eye(4)), 3)


def test_csv_round_trip(tmp_path, cfg):
    a = cfg.effective_matrix(True)
    traj, rep = solve(a, default_spec(), 300.0)
    path = tmp_path / "t.csv"
    write_csv(traj, path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    back = read_csv(path)
    np.testing.assert_array_equal(back.states, traj.states)
    np.testing.assert_array_equal(back.derivatives, traj.derivatives)
    assert abs(residual_check(back, a) - rep.ode_residual) <= 1e-12


def test_csv_rejects_wrong_width(tmp_path):
    traj = Trajectory(np.arange(3.0), np.zeros((3, 1)), np.zeros((3, 1)))
    with pytest.raises(ValidationError):
        write_csv(traj, tmp_path / "x.csv")
