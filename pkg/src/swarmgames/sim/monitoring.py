"""Persistent-monitoring dynamics: drain information off fixed nodes.

Each node accumulates information at a constant rate and loses it while
robots sit within service range.  A robot holds its node until the node
is fully drained, then returns to a parking slot on a small ring around
the idle point.  Allocation sees one singleton group per robot because
travel costs differ with position.
"""

from __future__ import annotations

import math

from ..allocation import ProblemInstance
from ..scenarios import ScenarioConfig
from .engine import (
    IDLE_AT_BASE,
    SERVICE_NODE,
    TRAVEL_TO_NODE,
    RobotState,
    node_information_step,
)


class MonitoringDynamics:
    """Scenario-specific hooks the engine calls while stepping a monitoring run."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.p = config.monitoring
        m = len(config.gamma)
        self.columns = (("t",)
                        + tuple(f"R_{k + 1}" for k in range(m))
                        + ("n_idle",)
                        + tuple(f"n_task{k + 1}" for k in range(m))
                        + ("min_dist",))
        self.domain_center = self.p.idle_point
        # smallest disk containing the D x D workspace
        self.domain_radius = self.p.D * math.sqrt(2.0) / 2.0
        cx, cy = self.p.idle_point
        n = config.n_robots
        self.slots = [
            (cx + self.p.idle_ring * math.cos(2.0 * math.pi * i / n),
             cy + self.p.idle_ring * math.sin(2.0 * math.pi * i / n))
            for i in range(n)
        ]

    # -- setup ---------------------------------------------------------

    def init_world(self, world, rng_place, rng_sources):
        world.robots = [RobotState(id=i, group=i, x=x, y=y)
                        for i, (x, y) in enumerate(self.slots)]
        world.R = [0.0] * len(self.config.gamma)

    # -- events and continuous dynamics ---------------------------------

    def apply_event(self, world, event):
        # config validation leaves only robot_removal possible here
        ids = sorted(r.id for r in world.robots)
        chosen = set(world.rng_events.sample(ids, min(event.amount, len(ids))))
        world.robots = [r for r in world.robots if r.id not in chosen]

    def integrate(self, world, dt):
        p = self.p
        rr = p.service_radius * p.service_radius
        for k, (nx, ny) in enumerate(p.nodes):
            in_range = 0
            for robot in world.robots:
                dx, dy = robot.x - nx, robot.y - ny
                if dx * dx + dy * dy <= rr:
                    in_range += 1
            world.R[k] = node_information_step(world.R[k], in_range, dt,
                                               p.A, p.B, p.R_max)

    def signals(self, world):
        return tuple(1.0 - value / self.p.R_max for value in world.R)

    # -- allocation ------------------------------------------------------

    def build_instance(self, world):
        """One singleton group per robot: costs depend on its position."""
        m = len(self.config.gamma)
        costs = []
        counts = []
        row_of = {}
        for row, robot in enumerate(world.robots):
            costs.append([math.hypot(nx - robot.x, ny - robot.y) / self.p.D
                          for nx, ny in self.p.nodes])
            row_counts = [0] * (m + 1)
            row_counts[robot.assigned_task] = 1
            counts.append(row_counts)
            row_of[robot.id] = row
        instance = ProblemInstance(self.config.gamma, world.signals, costs, counts)
        return instance, row_of

    # -- behaviors -------------------------------------------------------

    def behave(self, world, robot, dt):
        if robot.assigned_task and world.R[robot.assigned_task - 1] <= 0.0:
            # node drained (by this robot or a teammate): job done
            robot.assigned_task = 0
            robot.behavior = IDLE_AT_BASE
            robot.node = -1
        if robot.assigned_task == 0:
            robot.behavior = IDLE_AT_BASE
            slot = self.slots[robot.id]
            return self._toward(robot, slot[0], slot[1], dt)
        k = robot.assigned_task - 1
        robot.node = k
        nx, ny = self.p.nodes[k]
        dx, dy = nx - robot.x, ny - robot.y
        in_range = dx * dx + dy * dy <= self.p.service_radius * self.p.service_radius
        robot.behavior = SERVICE_NODE if in_range else TRAVEL_TO_NODE
        return self._toward(robot, nx, ny, dt)

    def _toward(self, robot, tx, ty, dt):
        dx = tx - robot.x
        dy = ty - robot.y
        dist = math.hypot(dx, dy)
        if dist < 1e-12:
            return (0.0, 0.0)
        speed = min(self.config.v_max, dist / dt)
        return (dx / dist * speed, dy / dist * speed)

    # -- accounting ------------------------------------------------------

    def post_move(self, world, robot, speed, dt):
        pass

    def check_conservation(self, world):
        pass

    def check_failure(self, world):
        pass

    def cargo_done_time(self, world):
        return None

    def metrics_row(self, world, counts, min_dist):
        return (world.clock, *world.R, counts[0], *counts[1:], min_dist)
