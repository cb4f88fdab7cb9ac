"""Tests for the velocity safety filter."""

import math
import random

import pytest

from swarmgames.cbf import N_FACETS, VelocityQP, filter_velocity

COLONY = dict(v_max=1.0, r=0.25, R_o=30.0)
MONITORING = dict(v_max=4.0, r=0.04, R_o=2.0 * math.sqrt(2.0), alpha_c=10.0)


def rows_of(qp):
    px, py = qp.position
    rows = [(2 * px, 2 * py, qp.alpha * (qp.R_o ** 2 - (px * px + py * py)))]
    for nx, ny in qp.neighbor_positions:
        dx, dy = px - nx, py - ny
        dist = math.hypot(dx, dy)
        rows.append((-dx, -dy,
                     0.5 * qp.alpha_c * (dist * dist - qp.r ** 2)
                     - 0.5 * qp.v_max * dist))
    return rows


def assert_safe(qp, v):
    assert math.hypot(*v) <= qp.v_max + 1e-9
    for ax, ay, b in rows_of(qp):
        assert ax * v[0] + ay * v[1] <= b + 1e-9


def test_unconstrained_reference_passes_through():
    qp = VelocityQP((0.3, -0.4), (1.0, 2.0), [], **COLONY)
    v, deadlock = filter_velocity(qp)
    assert v == (0.3, -0.4)
    assert not deadlock


def test_fast_reference_is_scaled_to_speed_limit():
    qp = VelocityQP((3.0, 4.0), (0.0, 0.0), [], **COLONY)
    v, deadlock = filter_velocity(qp)
    assert not deadlock
    assert v[0] == pytest.approx(0.6, abs=1e-12)
    assert v[1] == pytest.approx(0.8, abs=1e-12)


def test_containment_row_caps_outward_speed():
    # At p = (29.8, 0) the containment row reads 59.6 vx <= 11.96.
    qp = VelocityQP((1.0, 0.0), (29.8, 0.0), [], **COLONY)
    v, deadlock = filter_velocity(qp)
    assert not deadlock
    assert v[0] == pytest.approx(11.96 / 59.6, abs=1e-9)
    assert v[1] == pytest.approx(0.0, abs=1e-12)
    assert_safe(qp, v)


def test_containment_projection_keeps_tangential_component():
    qp = VelocityQP((1.0, 0.3), (29.8, 0.0), [], **COLONY)
    v, deadlock = filter_velocity(qp)
    assert not deadlock
    assert v[0] == pytest.approx(11.96 / 59.6, abs=1e-9)
    assert v[1] == pytest.approx(0.3, abs=1e-9)


def test_neighbor_row_forces_retreat_with_facets():
    # The neighbor sits inside the standoff radius dead ahead; the row
    # demands vx <= -0.3125 while the reference is full tilt sideways,
    # so the optimum lands on the speed polygon.
    qp = VelocityQP((0.0, 1.0), (0.0, 0.0), [(0.5, 0.0)], **COLONY)
    v, deadlock = filter_velocity(qp)
    assert not deadlock
    assert v[0] <= -0.3125 + 1e-9
    assert v[1] > 0.8
    assert math.hypot(*v) <= qp.v_max + 1e-9


def test_opposed_neighbors_are_a_deadlock():
    qp = VelocityQP((1.0, 0.0), (0.0, 0.0),
                    [(0.26, 0.0), (-0.26, 0.0)], **COLONY)
    v, deadlock = filter_velocity(qp)
    assert deadlock
    assert v == (0.0, 0.0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        VelocityQP((0, 0), (0, 0), [], v_max=0.0, r=0.25, R_o=30.0)
    with pytest.raises(ValueError):
        VelocityQP((0, 0), (0, 0), [], v_max=1.0, r=0.0, R_o=30.0)
    with pytest.raises(ValueError):
        VelocityQP((0, 0), (0, 0), [], v_max=1.0, r=0.25, R_o=0.2)
    with pytest.raises(ValueError):
        VelocityQP((0, 0), (0, 0), [], alpha_c=0.0, **COLONY)


def test_head_on_rollout_is_symmetric_and_separating():
    dt = 0.1
    a = [-2.0, 0.0]
    b = [2.0, 0.0]
    min_dist = math.inf
    for _ in range(400):
        va, da = filter_velocity(VelocityQP((1.0, 0.0), tuple(a), [tuple(b)], **COLONY))
        vb, db = filter_velocity(VelocityQP((-1.0, 0.0), tuple(b), [tuple(a)], **COLONY))
        assert not da and not db
        # the setup is mirror symmetric through the origin, exactly
        assert vb[0] == -va[0] and vb[1] == -va[1]
        a[0] += va[0] * dt
        a[1] += va[1] * dt
        b[0] += vb[0] * dt
        b[1] += vb[1] * dt
        min_dist = min(min_dist, math.hypot(a[0] - b[0], a[1] - b[1]))
    assert min_dist >= COLONY["r"] - 1e-6
    # they settle near the analytic standoff distance
    standoff = (1.0 + math.sqrt(1.0 + 4 * 0.25 ** 2)) / 2.0
    assert abs(math.hypot(a[0] - b[0], a[1] - b[1]) - standoff) < 0.1


def test_head_on_rollout_monitoring_scale():
    dt = 0.1
    a = [1.0, 2.0]
    b = [3.0, 2.0]
    center = (2.0, 2.0)
    min_dist = math.inf
    for _ in range(300):
        qa = VelocityQP((4.0, 0.0), (a[0] - center[0], a[1] - center[1]),
                        [(b[0] - center[0], b[1] - center[1])], **MONITORING)
        qb = VelocityQP((-4.0, 0.0), (b[0] - center[0], b[1] - center[1]),
                        [(a[0] - center[0], a[1] - center[1])], **MONITORING)
        va, da = filter_velocity(qa)
        vb, db = filter_velocity(qb)
        assert not da and not db
        a[0] += va[0] * dt
        a[1] += va[1] * dt
        b[0] += vb[0] * dt
        b[1] += vb[1] * dt
        min_dist = min(min_dist, math.hypot(a[0] - b[0], a[1] - b[1]))
    assert min_dist >= MONITORING["r"] - 1e-6


def test_four_robot_pileup_never_penetrates():
    dt = 0.1
    pts = [[3.0, 0.0], [0.0, 3.0], [-3.0, 0.0], [0.0, -3.0]]
    for _ in range(400):
        vels = []
        for i, p in enumerate(pts):
            speed = math.hypot(*p)
            v_ref = (-p[0] / speed, -p[1] / speed) if speed > 1e-9 else (0.0, 0.0)
            neighbors = [tuple(q) for j, q in enumerate(pts) if j != i]
            v, _ = filter_velocity(VelocityQP(v_ref, tuple(p), neighbors, **COLONY))
            vels.append(v)
        for p, v in zip(pts, vels):
            p[0] += v[0] * dt
            p[1] += v[1] * dt
        for i in range(4):
            for j in range(i + 1, 4):
                d = math.hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1])
                assert d >= COLONY["r"] - 1e-6


def test_boundary_rollout_never_leaves_domain():
    dt = 0.1
    p = [29.0, 0.0]
    for _ in range(500):
        v, deadlock = filter_velocity(VelocityQP((1.0, 0.1), tuple(p), [], **COLONY))
        assert not deadlock
        p[0] += v[0] * dt
        p[1] += v[1] * dt
        assert math.hypot(*p) <= 30.0 + 1.0 * dt


def test_random_stress_satisfies_rows():
    rng = random.Random(20240818)
    deadlocks = 0
    for _ in range(3000):
        angle = rng.uniform(0, 2 * math.pi)
        radius = rng.uniform(0, 29.9)
        px, py = radius * math.cos(angle), radius * math.sin(angle)
        neighbors = []
        for _ in range(rng.randrange(0, 4)):
            na = rng.uniform(0, 2 * math.pi)
            nd = rng.uniform(0.26, 3.0)
            neighbors.append((px + nd * math.cos(na), py + nd * math.sin(na)))
        v_ref = (rng.uniform(-2, 2), rng.uniform(-2, 2))
        qp = VelocityQP(v_ref, (px, py), neighbors, **COLONY)
        v, deadlock = filter_velocity(qp)
        if deadlock:
            deadlocks += 1
            assert v == (0.0, 0.0)
            continue
        assert_safe(qp, v)
    assert deadlocks < 300  # jams exist but must be rare at these densities


def test_facet_count_is_sixteen():
    assert N_FACETS == 16
