import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from costa.mms import (
    ALPHA_TEST,
    ALPHA_TRAIN,
    ALPHA_VAL,
    SOLUTION_IDS,
    DomainError,
    PhysicalParams,
    SpatialGrid,
    TimeGrid,
    eval_source,
    eval_temperature,
    get_solution,
    sample_profile,
    verify_mms_residual,
)


def test_alpha_sets():
    assert len(ALPHA_TRAIN) == 16
    assert ALPHA_VAL == (0.8, 1.1)
    assert ALPHA_TEST == (-0.5, 0.7, 1.5, 2.5)
    assert not set(ALPHA_TRAIN) & (set(ALPHA_VAL) | set(ALPHA_TEST))
    assert min(ALPHA_TRAIN) == 0.1 and max(ALPHA_TRAIN) == 2.0


def test_spatial_grid_centers():
    g = SpatialGrid(20)
    assert g.dx == pytest.approx(0.05)
    assert g.centers[0] == pytest.approx(0.025)
    assert np.all(np.diff(g.centers) > 0)
    assert np.allclose(g.centers, (np.arange(20) + 0.5) * 0.05)


def test_time_grid():
    tg = TimeGrid()
    assert tg.dt == pytest.approx(1e-3)
    assert tg.time(5000) == pytest.approx(5.0)
    assert len(tg.times) == 5001


@pytest.mark.parametrize("bad", [dict(n_cells=0), dict(x_min=1.0, x_max=0.0)])
def test_spatial_grid_rejects(bad):
    with pytest.raises(ValueError):
        SpatialGrid(**bad)


def test_physical_params_positive():
    with pytest.raises(ValueError):
        PhysicalParams(rho_cv=0.0)


@pytest.mark.parametrize(
    "sid, x, t, alpha, expected",
    [
        ("0", 0.5, 0.0, 1.0, 0.125),
        ("1", 0.0, 2.0, 0.7, 2.0),
        ("4", 0.3, 0.0, 0.0, 1.0),
        ("4", 0.25, 0.0, 0.0, 1.0),
    ],
)
def test_eval_temperature_examples(sid, x, t, alpha, expected):
    assert eval_temperature(get_solution(sid), x, t, alpha) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "sid, x, t, alpha, expected",
    [
        ("0", 0.3, 1.2, 0.7, 0.0),
        ("1", 0.3, 1.2, 1.0, 0.0),
        ("2", 0.0, 0.0, 0.0, 40.5),
    ],
)
def test_eval_source_examples(sid, x, t, alpha, expected):
    assert eval_source(get_solution(sid), x, t, alpha) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("sid", ["2", "A"])
def test_sqrt_rows_domain_error(sid):
    with pytest.raises(DomainError):
        eval_temperature(get_solution(sid), 0.5, 0.0, -1.5)
    with pytest.raises(DomainError):
        eval_source(get_solution(sid), 0.5, 0.0, -1.5)


def test_unknown_solution():
    with pytest.raises(KeyError):
        get_solution("7")
    assert get_solution("a").id == "A"
    assert get_solution(3).id == "3"


def test_sample_profile_examples():
    g = SpatialGrid(20)
    p = sample_profile(get_solution("0"), g, 0.0, 1.0)
    assert p.shape == (20,)
    assert p[0] == pytest.approx(0.0003125, abs=1e-16)
    assert np.allclose(p, g.centers**2 / 2)

    alpha = 1.3
    pb = sample_profile(get_solution("1"), g, 0.0, alpha, with_boundaries=True)
    assert pb.shape == (22,)
    assert pb[0] == 0.0
    assert pb[-1] == pytest.approx(alpha / 2)


@given(
    sid=st.sampled_from(SOLUTION_IDS),
    n=st.integers(3, 60),
    t=st.floats(0.0, 5.0),
    alpha=st.floats(-0.5, 2.5),
)
@settings(max_examples=60, deadline=None)
def test_boundary_padding_keeps_interior(sid, n, t, alpha):
    sol, g = get_solution(sid), SpatialGrid(n)
    inner = sample_profile(sol, g, t, alpha)
    padded = sample_profile(sol, g, t, alpha, with_boundaries=True)
    assert len(padded) == len(inner) + 2
    assert np.array_equal(padded[1:-1], inner)


def test_symmetric_profile_for_even_solution():
    # solution 4 at t = 0, alpha = 0 is the constant 1
    p = sample_profile(get_solution("4"), SpatialGrid(20), 0.0, 0.0)
    assert np.array_equal(p, p[::-1])
    assert np.allclose(p, 1.0)


def _probes(rng, count=50):
    return [(rng.uniform(0.01, 0.99), rng.uniform(0.01, 4.99), rng.uniform(-0.5, 2.5)) for _ in range(count)]


def test_verify_residual_solution0_exact():
    rng = np.random.default_rng(1)
    probes = [(x, t, 1.0) for x, t, _ in _probes(rng)]
    assert verify_mms_residual(get_solution("0"), PhysicalParams(), probes, 1e-4) <= 1e-6


@pytest.mark.parametrize("sid", ["2", "3", "4", "A", "B"])
def test_residual_is_second_order(sid):
    # truncation dominates at h = 1e-2 / 1e-3, so the ratio is cleanly ~100
    rng = np.random.default_rng(2)
    probes = _probes(rng)
    sol, params = get_solution(sid), PhysicalParams()
    coarse = verify_mms_residual(sol, params, probes, 1e-2)
    fine = verify_mms_residual(sol, params, probes, 1e-3)
    assert 100 / 3 <= coarse / fine <= 300


@pytest.mark.parametrize("sid", ["3", "B"])
def test_residual_small_at_fine_step(sid):
    rng = np.random.default_rng(3)
    probes = _probes(rng)
    sol = get_solution(sid)
    scale = max(abs(float(eval_source(sol, x, t, a))) for x, t, a in probes) + 1.0
    assert verify_mms_residual(sol, PhysicalParams(), probes, 1e-4) <= 1e-4 * scale
