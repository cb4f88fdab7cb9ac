"""Foraging-colony dynamics: shared energy store, depot cargo, harvest walks.

Task 1 is energy harvesting (random-walk search over the annulus, carry
sources home), task 2 is cargo hauling (travel to the depot, wait for a
unit, carry it home).  The colony's energy store leaks at a constant
rate and is topped up by delivered sources; every robot's motion runs a
small personal deficit that the store repays when the robot finishes a
task at the colony.
"""

from __future__ import annotations

import math

from ..allocation import ProblemInstance
from ..scenarios import ScenarioConfig, ScenarioError
from .engine import (
    APPROACH_ITEM,
    ENERGY_DEPLETED,
    IDLE_AT_BASE,
    RANDOM_WALK,
    RETURN_HOME,
    TRAVEL_TO_DEPOT,
    WAIT_AT_DEPOT,
    RobotState,
    colony_energy_step,
    random_walk_step,
    robot_energy_step,
    _project_annulus,
)

CARGO = "cargo"


class ColonyDynamics:
    """Scenario-specific hooks the engine calls while stepping a colony run."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.p = config.colony
        self.columns = ("t", "E_colony", "E_system", "cargo",
                        "n_idle", "n_task1", "n_task2", "min_dist")
        self.domain_center = (0.0, 0.0)
        self.domain_radius = self.p.R_o

    # -- setup ---------------------------------------------------------

    def init_world(self, world, rng_place, rng_sources):
        p = self.p
        world.E_c = p.E_start
        points = []
        attempts = 0
        while len(points) < self.config.n_robots:
            attempts += 1
            if attempts > 100_000:
                raise ScenarioError("cannot place robots with the requested separation")
            radius = p.R_i * math.sqrt(rng_place.random())
            theta = rng_place.uniform(0.0, 2.0 * math.pi)
            x, y = radius * math.cos(theta), radius * math.sin(theta)
            sep = p.min_separation * p.min_separation
            if all((x - qx) ** 2 + (y - qy) ** 2 >= sep for qx, qy in points):
                points.append((x, y))
        world.robots = [RobotState(id=i, group=0, x=x, y=y)
                        for i, (x, y) in enumerate(points)]
        world.sources = {}
        span = p.R_o * p.R_o - p.R_i * p.R_i
        for sid in range(p.n_sources):
            radius = math.sqrt(rng_sources.random() * span + p.R_i * p.R_i)
            theta = rng_sources.uniform(0.0, 2.0 * math.pi)
            world.sources[sid] = (radius * math.cos(theta), radius * math.sin(theta))
        world.claims = {}

    # -- events and continuous dynamics ---------------------------------

    def apply_event(self, world, event):
        if event.kind == "cargo_delivery":
            # single-depot model: units land at the depot whatever the
            # event's nominal drop point
            world.depot_stock += event.amount
            world.injected_cargo += event.amount
            return
        ids = sorted(r.id for r in world.robots)
        chosen = set(world.rng_events.sample(ids, min(event.amount, len(ids))))
        removed = [r for r in world.robots if r.id in chosen]
        world.robots = [r for r in world.robots if r.id not in chosen]
        for robot in removed:
            if robot.payload == CARGO:
                world.depot_stock += 1
            released = [sid for sid, rid in world.claims.items() if rid == robot.id]
            for sid in released:
                del world.claims[sid]
            # its motion deficit leaves the system along with the robot
            world.flow_removal += -robot.energy_used

    def integrate(self, world, dt):
        world.E_c = colony_energy_step(world.E_c, 0, 0.0, dt,
                                       self.p.E_drain, self.p.E_source)
        world.flow_drain += self.p.E_drain * dt

    def signals(self, world):
        s1 = world.E_c / self.p.E_max
        s2 = 1.0 - world.depot_stock / self.p.c_max
        return (min(1.0, max(0.0, s1)), min(1.0, max(0.0, s2)))

    # -- allocation ------------------------------------------------------

    def build_instance(self, world):
        counts = [0, 0, 0]
        for robot in world.robots:
            counts[robot.assigned_task] += 1
        instance = ProblemInstance.single_group(
            self.config.gamma, world.signals, counts[0], counts[1:])
        return instance, {robot.id: 0 for robot in world.robots}

    # -- behaviors -------------------------------------------------------

    def behave(self, world, robot, dt):
        if robot.assigned_task == 0:
            robot.behavior = IDLE_AT_BASE
            if robot.x * robot.x + robot.y * robot.y > self.p.R_i * self.p.R_i:
                return self._toward(robot, 0.0, 0.0, dt)
            return (0.0, 0.0)
        if robot.assigned_task == 1:
            return self._harvest(world, robot, dt)
        return self._haul(world, robot, dt)

    def _harvest(self, world, robot, dt):
        p = self.p
        if robot.behavior == IDLE_AT_BASE:
            robot.behavior = RANDOM_WALK
            robot.target = None
            if robot.memory is not None:
                # revisit the last find, blurred proportionally to how far
                # away it is
                mx, my = robot.memory
                sigma = p.return_noise * math.hypot(mx - robot.x, my - robot.y)
                rng = world.rng_walk[robot.id]
                robot.target = _project_annulus(
                    mx + rng.gauss(0.0, sigma), my + rng.gauss(0.0, sigma),
                    p.R_i, p.R_o)
        if robot.behavior == RANDOM_WALK:
            sid = self._sense(world, robot)
            if sid is None:
                random_walk_step(robot, p.h, (p.R_i, p.R_o),
                                 world.rng_walk[robot.id], p.arrive_radius)
                return self._toward(robot, robot.target[0], robot.target[1], dt)
            world.claims[sid] = robot.id
            robot.behavior = APPROACH_ITEM
            robot.node = sid
        if robot.behavior == APPROACH_ITEM:
            sid = robot.node
            pos = world.sources.get(sid)
            if pos is None or world.claims.get(sid) != robot.id:
                robot.behavior = RANDOM_WALK
                robot.target = None
                robot.node = -1
                random_walk_step(robot, p.h, (p.R_i, p.R_o),
                                 world.rng_walk[robot.id], p.arrive_radius)
                return self._toward(robot, robot.target[0], robot.target[1], dt)
            dx, dy = pos[0] - robot.x, pos[1] - robot.y
            if dx * dx + dy * dy <= p.arrive_radius * p.arrive_radius:
                del world.sources[sid]
                del world.claims[sid]
                robot.payload = sid
                robot.memory = pos
                robot.node = -1
                robot.target = None
                robot.behavior = RETURN_HOME
            else:
                return self._toward(robot, pos[0], pos[1], dt)
        # ReturnHome
        if robot.x * robot.x + robot.y * robot.y <= self.p.R_i * self.p.R_i:
            world.E_c += p.E_source
            world.flow_delivery += p.E_source
            self._finish_at_base(world, robot)
            return (0.0, 0.0)
        return self._toward(robot, 0.0, 0.0, dt)

    def _haul(self, world, robot, dt):
        p = self.p
        if robot.behavior == IDLE_AT_BASE:
            robot.behavior = TRAVEL_TO_DEPOT
        if robot.behavior == TRAVEL_TO_DEPOT:
            dx = p.depot[0] - robot.x
            dy = p.depot[1] - robot.y
            if dx * dx + dy * dy <= p.arrive_radius * p.arrive_radius:
                robot.behavior = WAIT_AT_DEPOT
                robot.wait = p.depot_wait
                return (0.0, 0.0)
            return self._toward(robot, p.depot[0], p.depot[1], dt)
        if robot.behavior == WAIT_AT_DEPOT:
            robot.wait -= dt
            if robot.wait > 1e-12:
                return (0.0, 0.0)
            robot.wait = 0.0
            if world.depot_stock >= 1:
                world.depot_stock -= 1
                robot.payload = CARGO
            robot.behavior = RETURN_HOME
        # ReturnHome, possibly empty-handed if the depot had nothing left
        if robot.x * robot.x + robot.y * robot.y <= p.R_i * p.R_i:
            if robot.payload == CARGO:
                world.delivered_cargo += 1
            self._finish_at_base(world, robot)
            return (0.0, 0.0)
        return self._toward(robot, 0.0, 0.0, dt)

    def _finish_at_base(self, world, robot):
        """Completion at the colony: recharge from the store and go idle."""
        world.E_c += robot.energy_used  # energy_used <= 0: the store repays it
        robot.energy_used = robot_energy_step(robot.energy_used, 0.0, True,
                                              0.0, self.config.v_max)
        robot.payload = None
        robot.assigned_task = 0
        robot.behavior = IDLE_AT_BASE
        robot.target = None

    def _sense(self, world, robot):
        """Nearest unclaimed source within sensing range, if any."""
        best = None
        best_dd = self.p.h * self.p.h
        for sid, (sx, sy) in world.sources.items():
            if sid in world.claims:
                continue
            dx, dy = sx - robot.x, sy - robot.y
            dd = dx * dx + dy * dy
            if dd < best_dd or (best is None and dd == best_dd):
                best = sid
                best_dd = dd
        return best

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
        before = robot.energy_used
        robot.energy_used = robot_energy_step(before, speed, False, dt,
                                              self.config.v_max, self.p.E_drain)
        world.flow_motion += before - robot.energy_used

    def check_conservation(self, world):
        e_sys = world.E_c + sum(r.energy_used for r in world.robots)
        predicted = (world.prev_E_sys - world.flow_drain - world.flow_motion
                     + world.flow_delivery + world.flow_removal)
        residual = abs(e_sys - predicted)
        metrics = world.metrics
        if residual > metrics.max_conservation_residual:
            metrics.max_conservation_residual = residual
        world.prev_E_sys = e_sys
        if residual > 1e-9:
            raise RuntimeError(f"energy bookkeeping diverged by {residual:.3e} J")
        in_transit = sum(1 for r in world.robots if r.payload == CARGO)
        if world.depot_stock + in_transit + world.delivered_cargo != world.injected_cargo:
            raise RuntimeError("cargo bookkeeping diverged")

    def check_failure(self, world):
        if world.E_c <= 0.0:
            world.failure = ENERGY_DEPLETED

    def cargo_done_time(self, world):
        return world.cargo_done_at

    def metrics_row(self, world, counts, min_dist):
        if (world.cargo_done_at is None and world.cargo_goal > 0
                and world.delivered_cargo >= world.cargo_goal):
            world.cargo_done_at = world.clock
        return (world.clock, world.E_c, world.prev_E_sys, world.depot_stock,
                counts[0], counts[1], counts[2], min_dist)
