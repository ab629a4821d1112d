import math

import numpy as np
import pytest

from stripedge import Image, Params
from stripedge.detector import choose_nmax, detect_static, detect_updating
from stripedge.functional import threshold
from stripedge.geometry import enlargement, initial_mask
from stripedge.grid import element_gradients

from conftest import step_image


def strip_key(result):
    return [(s.center, s.tangent) for s in result.strips]


@pytest.fixture(scope="module")
def static_step():
    p = Params(alpha=8.0, beta=150.0, eps=3.0, kappa=0.1, delta=2.0)
    return detect_static(step_image(), p)


def test_constant_image_has_no_edges(default_params):
    f = Image(np.full((20, 20), 0.4))
    assert len(detect_static(f, default_params).strips) == 0
    r = detect_updating(f, default_params)
    assert len(r.strips) == 0 and r.n_solves == 1


def test_too_small_image(default_params):
    with pytest.raises(ValueError):
        detect_static(Image(np.zeros((6, 6))), default_params)


def test_step_orientation(static_step):
    assert len(static_step.strips) > 0
    vertical = sum(abs(s.tangent[0]) <= math.sin(math.radians(10)) for s in static_step.strips)
    assert vertical == len(static_step.strips)


def test_trace_soundness(static_step):
    thr = threshold(static_step.params)
    assert len(static_step.trace) == len(static_step.strips)
    assert all(row.gradsq >= thr for row in static_step.trace)
    assert all(row.predicted_delta < 0 for row in static_step.trace)


def test_orientation_contract(static_step):
    r = static_step
    gx, gy = (g.ravel() for g in element_gradients(r.grid, r.u))
    mx, my = (m.ravel() for m in r.grid.midpoints())
    for s in r.strips:
        e = r.grid.element_index(int(s.center[1] // r.grid.h), int(s.center[0] // r.grid.h))
        assert (mx[e], my[e]) == s.center
        g = math.hypot(gx[e], gy[e])
        assert abs(s.tangent[0] * gx[e] + s.tangent[1] * gy[e]) <= 1e-12 * max(g, 1.0)


def test_center_separation(static_step):
    r = static_step
    L = initial_mask(r.grid, r.params.delta).ravel()
    for s in r.strips:
        e = r.grid.element_index(int(s.center[1]), int(s.center[0]))
        assert L[e]
        L[enlargement(s, r.params.delta, r.grid)] = False
    # no later centre inside an earlier enlargement
    for a, s in enumerate(r.strips):
        S = set(enlargement(s, r.params.delta, r.grid))
        for t in r.strips[a + 1:]:
            assert r.grid.element_index(int(t.center[1]), int(t.center[0])) not in S


def test_termination_bound(static_step):
    admissible = initial_mask(static_step.grid, static_step.params.delta).sum()
    assert len(static_step.strips) <= admissible


def test_determinism(default_params):
    a = detect_static(step_image(), default_params)
    b = detect_static(step_image(), default_params)
    assert strip_key(a) == strip_key(b)
    np.testing.assert_array_equal(a.u, b.u)


@pytest.mark.parametrize("img", [step_image(), step_image(40, 13)])
def test_reduction(img, default_params):
    s = detect_static(img, default_params)
    p = Params(**{**default_params.__dict__, "n_max": 10**6})
    u = detect_updating(img, p)
    assert strip_key(s) == strip_key(u)


def test_updating_energy_decreases(default_params):
    p = Params(**{**default_params.__dict__, "n_max": 5})
    r = detect_updating(step_image(), p)
    assert r.n_solves >= 3
    # only the early solves are promised: later, small-gradient strips can
    # cost more than the asymptotic gain they were accepted on
    assert r.energies[2] <= r.energies[1] <= r.energies[0]
    assert r.solve_strip_counts == sorted(r.solve_strip_counts)


def test_exclusion_monotone(default_params):
    r = detect_static(step_image(), default_params)
    L = initial_mask(r.grid, default_params.delta)
    counts = [L.sum()]
    for s in r.strips:
        L.ravel()[enlargement(s, default_params.delta, r.grid)] = False
        counts.append(L.sum())
    assert all(b < a for a, b in zip(counts, counts[1:]))


def test_smoothed_pixels_range(static_step):
    px = static_step.smoothed_pixels()
    assert px.shape == (64, 64)
    assert px.min() >= -1e-9 and px.max() <= 1 + 1e-9


def test_choose_nmax():
    assert choose_nmax(64, 64, 3.0, estimate=100) == 10
    assert choose_nmax(64, 64, 3.0, estimate=5) == 1
    assert choose_nmax(64, 64, 3.0, override=7) == 7
    assert choose_nmax(64, 64, 3.0) == math.ceil(256 / 6 / 10)
    with pytest.raises(ValueError):
        choose_nmax(64, 64, 3.0, override=0)
