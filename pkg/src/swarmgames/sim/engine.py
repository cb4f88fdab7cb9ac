"""Fixed-step simulation loop shared by both scenarios.

One step advances the world through a fixed pipeline: due events fire,
signal-state dynamics integrate one explicit-Euler step, task signals
are recomputed, idle robots sample fresh assignments from an
equilibrium allocation round, behavior state machines produce reference
velocities, the safety filter clips them, and positions integrate.
Robots already on a task never re-sample (assignments change only
idle -> task via sampling or task -> idle on completion or removal).

Determinism: every random draw comes from a named stream seeded as
"{seed}/{purpose}" or "{seed}/{purpose}/{robot id}", and all per-robot
loops run in robot-id order, so a (scenario, seed) pair fully fixes the
run down to the last bit.
"""

from __future__ import annotations

import dataclasses
import math
import random

from ..allocation import allocate, sample_assignment
from ..cbf import VelocityQP, filter_velocity
from ..scenarios import ScenarioConfig

__all__ = [
    "IDLE_AT_BASE",
    "RANDOM_WALK",
    "APPROACH_ITEM",
    "RETURN_HOME",
    "TRAVEL_TO_DEPOT",
    "WAIT_AT_DEPOT",
    "TRAVEL_TO_NODE",
    "SERVICE_NODE",
    "ENERGY_DEPLETED",
    "RobotState",
    "WorldState",
    "RunMetrics",
    "colony_energy_step",
    "robot_energy_step",
    "node_information_step",
    "random_walk_step",
    "build_world",
    "step",
    "run",
]

IDLE_AT_BASE = "IdleAtBase"
RANDOM_WALK = "RandomWalkTarget"
APPROACH_ITEM = "ApproachItem"
RETURN_HOME = "ReturnHome"
TRAVEL_TO_DEPOT = "TravelToDepot"
WAIT_AT_DEPOT = "WaitAtDepot"
TRAVEL_TO_NODE = "TravelToNode"
SERVICE_NODE = "ServiceNode"

ENERGY_DEPLETED = "EnergyDepleted"

# motion drain sits an order of magnitude below the colony leakage rate
MOTION_DRAIN_FACTOR = 0.1


@dataclasses.dataclass(slots=True)
class RobotState:
    """One robot; behavior arguments live in target/node/wait."""

    id: int
    group: int
    x: float
    y: float
    assigned_task: int = 0
    behavior: str = IDLE_AT_BASE
    target: tuple | None = None
    node: int = -1
    wait: float = 0.0
    payload: object = None          # source id or "cargo"; only in ReturnHome
    energy_used: float = 0.0        # running motion deficit, <= 0
    memory: tuple | None = None     # last successful source position
    deadlock: bool = False

    @property
    def position(self) -> tuple:
        return (self.x, self.y)


@dataclasses.dataclass
class RunMetrics:
    """Per-step records plus run summary.

    `rows` matches `columns` one tuple per completed step.  Deadlock
    flags stay in memory (they are not a CSV column): `deadlock_flags`
    has one bool per step, and `deadlock_robot_steps` counts individual
    robot flags against `robot_steps` total.
    """

    columns: tuple
    dt: float
    rows: list = dataclasses.field(default_factory=list)
    deadlock_flags: list = dataclasses.field(default_factory=list)
    deadlock_robot_steps: int = 0
    robot_steps: int = 0
    max_conservation_residual: float = 0.0
    failure: str | None = None
    final_energy: float | None = None
    all_cargo_delivered_time: float | None = None

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


@dataclasses.dataclass
class WorldState:
    """Full mutable state of one run; scenario-specific fields included."""

    clock: float
    step_index: int
    robots: list
    signals: tuple
    rng_assign: dict
    rng_walk: dict
    rng_events: random.Random
    pending_events: list            # [(step index, seq, Event)], sorted
    metrics: RunMetrics
    dyn: object
    failure: str | None = None
    # colony state
    E_c: float = 0.0
    depot_stock: int = 0
    delivered_cargo: int = 0
    injected_cargo: int = 0
    cargo_goal: int = 0
    cargo_done_at: float | None = None
    sources: dict = dataclasses.field(default_factory=dict)
    claims: dict = dataclasses.field(default_factory=dict)
    # monitoring state
    R: list = dataclasses.field(default_factory=list)
    # per-step energy-flow scratch for the conservation check
    flow_drain: float = 0.0
    flow_motion: float = 0.0
    flow_delivery: float = 0.0
    flow_removal: float = 0.0
    prev_E_sys: float = 0.0


# ---------------------------------------------------------------------------
# pure per-step dynamics


def colony_energy_step(E_c: float, deliveries: int, charges: float,
                       dt: float, E_drain: float = 0.1, E_source: float = 4.0) -> float:
    """Colony store after one step: constant leakage, plus deliveries,
    minus the energy handed to charging robots (`charges` in J)."""
    return E_c - E_drain * dt + deliveries * E_source - charges


def robot_energy_step(E_robot: float, speed: float, charging: bool,
                      dt: float, v_max: float, E_drain: float = 0.1) -> float:
    """Robot motion deficit: drains with speed, snaps to zero on charge.

    The restored amount is drawn from the colony by the caller.
    """
    if charging:
        return 0.0
    return E_robot - MOTION_DRAIN_FACTOR * E_drain * (speed / v_max) * dt


def node_information_step(R_k: float, robots_in_range: int, dt: float,
                          A: float = 0.75, B: float = 2.0, R_max: float = 1.0) -> float:
    """Node information: accumulates at A, drains at B per servicing robot."""
    value = R_k + (A - B * robots_in_range) * dt
    if value < 0.0:
        return 0.0
    if value > R_max:
        return R_max
    return value


def _project_annulus(x: float, y: float, inner: float, outer: float) -> tuple:
    dist = math.hypot(x, y)
    if dist > outer:
        scale = outer / dist
        return (x * scale, y * scale)
    if dist < inner:
        if dist <= 1e-12:
            return (inner, 0.0)
        scale = inner / dist
        return (x * scale, y * scale)
    return (x, y)


def random_walk_step(robot: RobotState, h: float, domain: tuple,
                     rng: random.Random, arrive_radius: float = 0.5) -> RobotState:
    """Keep a walking robot supplied with a target inside the annulus.

    Draws a fresh heading when the robot has no target or has reached
    the current one; targets landing outside the domain are projected
    radially onto its boundary.  Source detection is the caller's job
    (it needs world access); this op only manages the leg geometry.
    """
    inner, outer = domain
    if robot.target is not None:
        dx = robot.target[0] - robot.x
        dy = robot.target[1] - robot.y
        if dx * dx + dy * dy <= arrive_radius * arrive_radius:
            robot.target = None
    if robot.target is None:
        theta = rng.uniform(0.0, 2.0 * math.pi)
        tx = robot.x + h * math.cos(theta)
        ty = robot.y + h * math.sin(theta)
        robot.target = _project_annulus(tx, ty, inner, outer)
    return robot


# ---------------------------------------------------------------------------
# orchestration


def build_world(config: ScenarioConfig, seed: int | None = None) -> WorldState:
    """Fresh world for one run; `seed` overrides the config's."""
    # imported here to keep engine <-> scenario-dynamics imports acyclic
    from .colony import ColonyDynamics
    from .monitoring import MonitoringDynamics

    if seed is None:
        seed = config.seed
    dyn = ColonyDynamics(config) if config.kind == "colony" else MonitoringDynamics(config)
    pending = sorted(
        ((round(e.time / config.dt), seq, e) for seq, e in enumerate(config.events)),
        key=lambda item: (item[0], item[1]))
    metrics = RunMetrics(columns=dyn.columns, dt=config.dt)
    world = WorldState(
        clock=0.0,
        step_index=0,
        robots=[],
        signals=(),
        rng_assign={i: random.Random(f"{seed}/assign/{i}") for i in range(config.n_robots)},
        rng_walk={i: random.Random(f"{seed}/walk/{i}") for i in range(config.n_robots)},
        rng_events=random.Random(f"{seed}/events"),
        pending_events=pending,
        metrics=metrics,
        dyn=dyn,
    )
    dyn.init_world(world, random.Random(f"{seed}/placement"), random.Random(f"{seed}/sources"))
    world.cargo_goal = sum(e.amount for e in config.events if e.kind == "cargo_delivery")
    world.prev_E_sys = world.E_c + sum(r.energy_used for r in world.robots)
    return world


def step(world: WorldState, config: ScenarioConfig, dt: float) -> WorldState:
    """Advance the world by one step, in place, and return it."""
    dyn = world.dyn
    world.flow_drain = 0.0
    world.flow_motion = 0.0
    world.flow_delivery = 0.0
    world.flow_removal = 0.0

    while world.pending_events and world.pending_events[0][0] <= world.step_index:
        _, _, event = world.pending_events.pop(0)
        dyn.apply_event(world, event)

    dyn.integrate(world, dt)
    world.signals = dyn.signals(world)

    idle = [r for r in world.robots if r.assigned_task == 0]
    if idle:
        instance, row_of = dyn.build_instance(world)
        strategy = allocate(instance, check=False).strategy
        for robot in idle:
            u = world.rng_assign[robot.id].random()
            action = sample_assignment(strategy, row_of[robot.id], u)
            if action:
                robot.assigned_task = action

    v_refs = [dyn.behave(world, robot, dt) for robot in world.robots]

    n = len(world.robots)
    positions = [(r.x, r.y) for r in world.robots]
    # 4r is enough at colony speeds; the second term keeps a closing
    # pair from crossing the whole cutoff in one step at higher v_max
    cutoff = max(4.0 * config.r, 2.0 * config.v_max * dt + 2.0 * config.r)
    cutoff_sq = cutoff * cutoff
    neighbor_lists = [[] for _ in range(n)]
    for i in range(n):
        xi, yi = positions[i]
        for j in range(i + 1, n):
            dx = xi - positions[j][0]
            dy = yi - positions[j][1]
            if dx * dx + dy * dy <= cutoff_sq:
                neighbor_lists[i].append(positions[j])
                neighbor_lists[j].append(positions[i])

    center = dyn.domain_center
    radius = dyn.domain_radius
    any_deadlock = False
    for i, robot in enumerate(world.robots):
        qp = VelocityQP(
            v_refs[i],
            (robot.x - center[0], robot.y - center[1]),
            [(nx - center[0], ny - center[1]) for nx, ny in neighbor_lists[i]],
            config.v_max, config.r, radius, config.alpha, config.alpha_c)
        (vx, vy), deadlock = filter_velocity(qp)
        robot.deadlock = deadlock
        any_deadlock = any_deadlock or deadlock
        robot.x += vx * dt
        robot.y += vy * dt
        dyn.post_move(world, robot, math.hypot(vx, vy), dt)

    world.clock += dt
    world.step_index += 1
    dyn.check_conservation(world)
    dyn.check_failure(world)

    metrics = world.metrics
    metrics.robot_steps += n
    metrics.deadlock_robot_steps += sum(1 for r in world.robots if r.deadlock)
    metrics.deadlock_flags.append(any_deadlock)

    counts = [0] * (config.n_tasks + 1)
    for robot in world.robots:
        counts[robot.assigned_task] += 1
    # measured on post-move positions: this is the separation that was
    # actually executed this step
    min_dist = math.inf
    if n > 1:
        post = [(r.x, r.y) for r in world.robots]
        min_sq = math.inf
        for i in range(n):
            for j in range(i + 1, n):
                dd = ((post[i][0] - post[j][0]) ** 2 + (post[i][1] - post[j][1]) ** 2)
                if dd < min_sq:
                    min_sq = dd
        min_dist = math.sqrt(min_sq)
    metrics.rows.append(dyn.metrics_row(world, counts, min_dist))
    return world


def run(config: ScenarioConfig, seed: int | None = None) -> RunMetrics:
    """Simulate one full run and return its metrics."""
    world = build_world(config, seed)
    n_steps = round(config.t_final / config.dt)
    for _ in range(n_steps):
        step(world, config, config.dt)
        if world.failure:
            break
    metrics = world.metrics
    metrics.failure = world.failure
    if config.kind == "colony":
        metrics.final_energy = world.E_c
    metrics.all_cargo_delivered_time = world.dyn.cargo_done_time(world)
    return metrics
