"""Mixed-strategy equilibria for the robot task-allocation game.

Each of M tasks broadcasts a completeness signal s_k in [0, 1] (1 =
satisfied, 0 = at risk) and carries a tuning parameter gamma_k that
scales how many robots it absorbs.  Robots are partitioned into groups
of identical cost vectors; group i has n_0^i idle robots and n_k^i
robots already committed to task k.  Every idle robot independently
samples an action (0 = stay idle, k = join task k) from its group's
mixed strategy.  Joining task k is worth

    u_i(k) = (gamma_k - E[N_k]) / gamma_k - s_k - c_k^i

to a group-i robot, where E[N_k] = |n_k| + sum_i n_0^i p_k^i counts
expected heads on the task, while idling pays exactly zero.  A strategy
matrix is an equilibrium when every supported action of a group earns
that group's common value and no other action beats it.

`allocate` computes such an equilibrium by iterated support elimination
(cheapest groups claim tasks first, negative probabilities drop out,
groups whose idle mass is exhausted switch to busy-only supports), and
`verify_equilibrium` checks any candidate strategy against the
definition directly, without reusing the solver's internals.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .linalg import SingularSystem, solve_linear

__all__ = [
    "EPS_ZERO",
    "EPS_EQ",
    "EPS_SUM",
    "NoIdleRobots",
    "AllocationError",
    "ProblemInstance",
    "MixedStrategy",
    "EquilibriumReport",
    "AllocationResult",
    "expected_task_count",
    "expected_utility",
    "signal_range",
    "sample_assignment",
    "solve_homogeneous_idle",
    "solve_homogeneous_noidle",
    "solve_hetero_idle",
    "solve_hetero_noidle",
    "allocate",
    "verify_equilibrium",
]

EPS_ZERO = 1e-12  # support membership and snap-to-bound tolerance
EPS_EQ = 1e-8     # accepted expected-utility residual in the oracle
EPS_SUM = 1e-9    # accepted row-normalization error

_DEV_TOL = 1e-10    # profitable-deviation threshold inside the solver
_MAX_READMIT = 4    # times a (group, task) pair may re-enter a support


class NoIdleRobots(ValueError):
    """The operation needs at least one idle robot and found none."""


class AllocationError(RuntimeError):
    """Support iteration failed to settle; indicates a solver bug."""


# ---------------------------------------------------------------------------
# value types


@dataclasses.dataclass(frozen=True)
class ProblemInstance:
    """One round of the allocation game.

    gamma:   (M,) task tuning parameters, all > 0
    signals: (M,) completeness signals in [0, 1]
    costs:   (g, M) nonnegative per-group task costs
    counts:  (g, M+1) integer head counts; column 0 is the idle pool
    """

    gamma: np.ndarray
    signals: np.ndarray
    costs: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        signals = np.atleast_1d(np.asarray(self.signals, dtype=float))
        costs = np.atleast_2d(np.asarray(self.costs, dtype=float))
        counts = np.atleast_2d(np.asarray(self.counts, dtype=float))
        m = gamma.shape[0]
        g = costs.shape[0]
        if m == 0:
            raise ValueError("need at least one task")
        if signals.shape != (m,):
            raise ValueError(f"signals shape {signals.shape} != ({m},)")
        if costs.shape != (g, m):
            raise ValueError(f"costs shape {costs.shape} != ({g}, {m})")
        if counts.shape != (g, m + 1):
            raise ValueError(f"counts shape {counts.shape} != ({g}, {m + 1})")
        if not np.all(np.isfinite(gamma)) or np.any(gamma <= 0.0):
            raise ValueError("gamma entries must be finite and > 0")
        if np.any(signals < 0.0) or np.any(signals > 1.0):
            raise ValueError("signals must lie in [0, 1]")
        if not np.all(np.isfinite(costs)) or np.any(costs < 0.0):
            raise ValueError("costs must be finite and >= 0")
        if np.any(counts < 0) or np.any(counts != np.floor(counts)):
            raise ValueError("counts must be nonnegative integers")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "signals", signals)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @classmethod
    def single_group(cls, gamma, signals, idle, assigned=None, costs=None):
        """Convenience constructor for a one-group (homogeneous) instance."""
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        m = gamma.shape[0]
        assigned = np.zeros(m, dtype=int) if assigned is None else np.atleast_1d(assigned)
        costs = np.zeros(m) if costs is None else np.atleast_1d(costs)
        counts = np.concatenate(([int(idle)], np.asarray(assigned, dtype=int)))
        return cls(gamma, np.asarray(signals, dtype=float), costs.reshape(1, m),
                   counts.reshape(1, m + 1))

    @property
    def n_tasks(self) -> int:
        return self.gamma.shape[0]

    @property
    def n_groups(self) -> int:
        return self.costs.shape[0]

    @property
    def idle_counts(self) -> np.ndarray:
        return self.counts[:, 0]

    @property
    def task_totals(self) -> np.ndarray:
        """|n_k|: committed robots per task, summed over groups."""
        return self.counts[:, 1:].sum(axis=0)


@dataclasses.dataclass(frozen=True)
class MixedStrategy:
    """Per-group action distributions; probs[i, 0] is group i's idle mass."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.atleast_2d(np.asarray(self.probs, dtype=float))
        object.__setattr__(self, "probs", probs)

    def validate(self, counts=None, tol: float = EPS_SUM) -> None:
        """Raise ValueError unless every row is a distribution.

        With `counts` given, rows of groups without idle robots must be
        the degenerate idle distribution (those robots make no choice).
        """
        p = self.probs
        if np.any(p < -EPS_ZERO) or np.any(p > 1.0 + EPS_ZERO):
            raise ValueError("probabilities outside [0, 1]")
        err = np.max(np.abs(p.sum(axis=1) - 1.0))
        if err > tol:
            raise ValueError(f"row sums off by {err:.3e} (> {tol})")
        if counts is not None:
            counts = np.atleast_2d(counts)
            for i in range(p.shape[0]):
                if counts[i, 0] == 0 and abs(p[i, 0] - 1.0) > EPS_ZERO:
                    raise ValueError(f"group {i} has no idle robots but row is not idle")

    def supports(self, tol: float = EPS_ZERO) -> list[tuple[int, ...]]:
        return [tuple(int(a) for a in np.flatnonzero(row > tol)) for row in self.probs]


@dataclasses.dataclass(frozen=True)
class EquilibriumReport:
    """Worst-case equilibrium residuals of a strategy, per the oracle."""

    max_support_residual: float
    max_dominance_violation: float
    valid: bool


@dataclasses.dataclass(frozen=True)
class AllocationResult:
    strategy: MixedStrategy
    supports: list[tuple[int, ...]]
    report: EquilibriumReport | None


# ---------------------------------------------------------------------------
# game primitives


def expected_task_count(instance: ProblemInstance, strategy: MixedStrategy, k: int) -> float:
    """E[N_k] = |n_k| + sum_i n_0^i p_k^i for action k in 1..M."""
    if not 1 <= k <= instance.n_tasks:
        raise ValueError(f"task action {k} outside 1..{instance.n_tasks}")
    probs = strategy.probs
    if probs.shape != (instance.n_groups, instance.n_tasks + 1):
        raise ValueError("strategy dimensions do not match instance")
    committed = int(instance.counts[:, k].sum())
    return float(committed + instance.counts[:, 0] @ probs[:, k])


def expected_utility(instance: ProblemInstance, strategy: MixedStrategy,
                     i: int, a: int) -> float:
    """Expected utility of action a for a group-i robot; idling pays 0."""
    if a == 0:
        return 0.0
    expected = expected_task_count(instance, strategy, a)
    k = a - 1
    gamma = instance.gamma[k]
    return float((gamma - expected) / gamma - instance.signals[k] - instance.costs[i, k])


def signal_range(gamma: float, n_idle: int, n_assigned: int) -> tuple[float, float]:
    """Signal interval where task participation is a genuinely mixed choice.

    Below the lower endpoint joining is strictly dominant; above the
    upper endpoint idling is.  With an empty idle pool the interval is
    degenerate.
    """
    return (1.0 - (n_idle + n_assigned) / gamma, 1.0 - n_assigned / gamma)


def sample_assignment(strategy: MixedStrategy, i: int, u: float) -> int:
    """Inverse-CDF draw over actions (0, 1, ..., M) for group i.

    Returns the first action whose cumulative probability exceeds u.
    """
    row = strategy.probs[i]
    acc = 0.0
    last_positive = 0
    for a in range(row.shape[0]):
        p = row[a]
        if p > 0.0:
            last_positive = a
        acc += p
        if u < acc:
            return a
    return last_positive  # u fell into rounding dust past the last edge


# ---------------------------------------------------------------------------
# closed-form solvers


def _snap(p: np.ndarray) -> np.ndarray:
    """Clean float dust: pull values within EPS_ZERO of 0 or 1 onto the bound."""
    p = np.where(np.abs(p) < EPS_ZERO, 0.0, p)
    return np.where(np.abs(p - 1.0) < EPS_ZERO, 1.0, p)


def solve_homogeneous_idle(instance: ProblemInstance) -> MixedStrategy:
    """Single-group equilibrium when idling stays in the support.

    Every supported task must pay exactly the idle utility, which pins
    p_k = (gamma_k / n_0) (1 - s_k - c_k - n_k/gamma_k), clamped to
    [0, 1].  The returned idle entry p_0 = 1 - sum p_k may be negative;
    that flags infeasibility and the caller must fall through to
    solve_homogeneous_noidle.
    """
    if instance.n_groups != 1:
        raise ValueError("expects exactly one group")
    n0 = int(instance.counts[0, 0])
    if n0 == 0:
        raise NoIdleRobots("no idle robots in the group")
    raw = (instance.gamma / n0) * (
        1.0 - instance.signals - instance.costs[0]
        - instance.task_totals / instance.gamma
    )
    p = _snap(np.clip(raw, 0.0, 1.0))
    p0 = 1.0 - p.sum()
    if abs(p0) < EPS_ZERO:
        p0 = 0.0
    return MixedStrategy(np.concatenate(([p0], p)).reshape(1, -1))


def solve_homogeneous_noidle(instance: ProblemInstance, support) -> MixedStrategy:
    """Single-group equilibrium over a busy support (idle excluded).

    Supported tasks must pay one common utility; with the lowest task j
    of the support as pivot that reads

        gamma_k p_j - gamma_j p_k
            = (gamma_k gamma_j ((s_k + c_k) - (s_j + c_j))
               + n_k gamma_j - n_j gamma_k) / n_0

    for every other supported k, closed by sum p_k = 1.  Entries of the
    exact solution may be negative; allocate eliminates those tasks and
    re-solves.
    """
    if instance.n_groups != 1:
        raise ValueError("expects exactly one group")
    tasks = sorted(int(a) for a in support)
    if 0 in tasks:
        raise ValueError("busy support must exclude the idle action")
    if len(tasks) < 2:
        raise ValueError("busy support needs at least two tasks")
    n0 = int(instance.counts[0, 0])
    if n0 == 0:
        raise NoIdleRobots("no idle robots in the group")
    gamma, s, c = instance.gamma, instance.signals, instance.costs[0]
    n = instance.task_totals
    dim = len(tasks)
    a = np.zeros((dim, dim))
    b = np.zeros(dim)
    j = tasks[0] - 1
    for r, action in enumerate(tasks[1:]):
        k = action - 1
        a[r, 0] = gamma[k]
        a[r, r + 1] = -gamma[j]
        b[r] = (gamma[k] * gamma[j] * ((s[k] + c[k]) - (s[j] + c[j]))
                + n[k] * gamma[j] - n[j] * gamma[k]) / n0
    a[dim - 1, :] = 1.0
    b[dim - 1] = 1.0
    x = solve_linear(a, b)
    row = np.zeros(instance.n_tasks + 1)
    for idx, action in enumerate(tasks):
        row[action] = x[idx]
    return MixedStrategy(_snap(row).reshape(1, -1))


def solve_hetero_idle(instance: ProblemInstance) -> MixedStrategy:
    """Multi-group equilibrium when idling stays feasible for everyone.

    Per task only the cheapest idle-rich group(s) participate; tied
    groups pool their idle robots and share one per-robot probability

        p_k = gamma_k (1 - s_k - c_k^min - |n_k|/gamma_k) / pooled_n0

    clamped to [0, 1].  Rows of other groups get p_k^i = 0.  Idle
    entries p_0^i = 1 - sum_k p_k^i may come out negative; the caller
    falls through to the busy path for those groups.
    """
    g, m = instance.n_groups, instance.n_tasks
    n0 = instance.counts[:, 0]
    active = n0 > 0
    if not active.any():
        raise NoIdleRobots("no group has idle robots")
    probs = np.zeros((g, m + 1))
    probs[~active, 0] = 1.0
    costs = np.where(active[:, None], instance.costs, np.inf)
    cmin = costs.min(axis=0)
    eligible = costs == cmin[None, :]
    pool = (eligible * n0[:, None]).sum(axis=0)
    target = instance.gamma * (1.0 - instance.signals - cmin) - instance.task_totals
    shared = _snap(np.clip(target / pool, 0.0, 1.0))
    probs[:, 1:] = eligible * shared[None, :]
    task_mass = probs[active, 1:].sum(axis=1)
    probs[active, 0] = np.where(np.abs(1.0 - task_mass) < EPS_ZERO, 0.0, 1.0 - task_mass)
    return MixedStrategy(probs)


def solve_hetero_noidle(instance: ProblemInstance, supports) -> MixedStrategy:
    """Multi-group equilibrium over busy supports (idle excluded there).

    Supported groups with identical cost vectors are pooled first (their
    robots are interchangeable, so they share one strategy over the
    union of their supports).  Each pooled group's supported tasks are
    tied to its lowest supported task j through

        sum_l n_0^l (p_j^l / gamma_j - p_k^l / gamma_k)
            = (s_k + c_k^i) - (s_j + c_j^i) + |n_k|/gamma_k - |n_j|/gamma_j

    with the sum running over every group supporting the task, plus one
    normalization row per group.  Groups given an empty support keep the
    degenerate idle row and stay out of the head-count bookkeeping.  A
    singular system signals an inconsistent support guess; the caller
    eliminates and retries.
    """
    g, m = instance.n_groups, instance.n_tasks
    sup = np.zeros((g, m), dtype=bool)
    for i, tasks in enumerate(supports):
        for action in tasks:
            action = int(action)
            if action == 0:
                raise ValueError("busy support must exclude the idle action")
            sup[i, action - 1] = True
    if not sup.any():
        raise ValueError("at least one group must have a nonempty support")
    kept = [i for i in range(g) if sup[i].any()]
    if np.any(instance.counts[kept, 0] == 0):
        raise NoIdleRobots("a supported group has no idle robots")

    merged_idx, merged_counts = _merge_groups(instance.costs[kept], instance.counts[kept])
    gm = merged_counts.shape[0]
    sup_m = np.zeros((gm, m), dtype=bool)
    for pos, i in enumerate(kept):
        sup_m[merged_idx[pos]] |= sup[i]
    probs_m = _solve_modes(
        instance.gamma, instance.signals,
        instance.costs[np.asarray(kept)[_first_members(merged_idx, gm)]],
        merged_counts[:, 0].astype(float), instance.task_totals.astype(float),
        sup_m, np.ones(gm, dtype=bool),
    )
    probs = np.zeros((g, m + 1))
    probs[:, 0] = 1.0
    for pos, i in enumerate(kept):
        probs[i, 0] = 0.0
        probs[i, 1:] = _snap(probs_m[merged_idx[pos]])
    return MixedStrategy(probs)


# ---------------------------------------------------------------------------
# the support-iteration engine behind allocate


def _merge_groups(costs: np.ndarray, counts: np.ndarray):
    """Pool groups with bit-identical cost vectors (they are one group)."""
    index_of = {}
    merged_idx = np.empty(costs.shape[0], dtype=int)
    rows = []
    for i in range(costs.shape[0]):
        key = costs[i].tobytes()
        if key not in index_of:
            index_of[key] = len(rows)
            rows.append(counts[i].copy())
        else:
            rows[index_of[key]] += counts[i]
        merged_idx[i] = index_of[key]
    return merged_idx, np.array(rows)


def _first_members(merged_idx: np.ndarray, gm: int) -> np.ndarray:
    first = np.full(gm, -1, dtype=int)
    for i, mi in enumerate(merged_idx):
        if first[mi] < 0:
            first[mi] = i
    return first


def _support_adjacency(sup):
    """Support pattern as python lists (cheap to walk at any size)."""
    g, m = sup.shape
    tasks_of = [[] for _ in range(g)]
    groups_of = [[] for _ in range(m)]
    rows, cols = np.nonzero(sup)
    for i, k in zip(rows.tolist(), cols.tolist()):
        tasks_of[i].append(k)
        groups_of[k].append(i)
    return tasks_of, groups_of


def _support_components(tasks_of, groups_of, busy):
    """Partition supported tasks into blocks linked by busy groups.

    A busy group's equal-utility and normalization rows couple all of
    its supported tasks; nothing else couples distinct tasks, so the
    equilibrium system is block-diagonal over these components.
    """
    m = len(groups_of)
    comp = [-1] * m
    components = []
    for root in range(m):
        if comp[root] >= 0 or not groups_of[root]:
            continue
        cid = len(components)
        comp[root] = cid
        stack = [root]
        tasks = [root]
        while stack:
            j = stack.pop()
            for i in groups_of[j]:
                if not busy[i]:
                    continue
                for k in tasks_of[i]:
                    if comp[k] < 0:
                        comp[k] = cid
                        stack.append(k)
                        tasks.append(k)
        tasks.sort()
        components.append(tasks)
    return components, comp


def _solve_component(gamma, s, c, n0, ntask, busy, tasks, groups_of, probs):
    """Solve one component's square system and write masses into probs.

    Groups in idle mode pin every supported task's expected head count
    to its zero-utility level; busy groups contribute equal-utility rows
    plus a normalization row.  Entries can be negative (the caller
    eliminates).
    """
    idx = {}
    for k in tasks:
        for i in groups_of[k]:
            idx[(i, k)] = len(idx)
    dim = len(idx)
    a = np.zeros((dim, dim))
    b = np.zeros(dim)
    row = 0

    def q_coeffs(r, k, scale):
        for l in groups_of[k]:
            a[r, idx[(l, k)]] += scale * n0[l]

    busy_tasks = {}
    for k in tasks:
        idles = [i for i in groups_of[k] if not busy[i]]
        for i in groups_of[k]:
            if busy[i]:
                busy_tasks.setdefault(i, []).append(k)
        if not idles:
            continue
        pin = idles[0]
        q_coeffs(row, k, 1.0)
        b[row] = gamma[k] * (1.0 - s[k] - c[pin, k]) - ntask[k]
        row += 1
        for other in idles[1:]:
            a[row, idx[(pin, k)]] = 1.0
            a[row, idx[(other, k)]] = -1.0
            row += 1
    for i in sorted(busy_tasks):
        group_tasks = busy_tasks[i]
        j = group_tasks[0]
        for k in group_tasks[1:]:
            q_coeffs(row, j, 1.0 / gamma[j])
            q_coeffs(row, k, -1.0 / gamma[k])
            b[row] = (s[k] + c[i, k]) - (s[j] + c[i, j]) + ntask[k] / gamma[k] - ntask[j] / gamma[j]
            row += 1
        for k in group_tasks:
            a[row, idx[(i, k)]] = 1.0
        b[row] = 1.0
        row += 1
    assert row == dim, "support bookkeeping produced a non-square system"

    x = solve_linear(a, b)
    for (i, k), pos in idx.items():
        probs[i, k] = x[pos]


def _solve_modes(gamma, s, c, n0, ntask, sup, busy):
    """Solve the equilibrium equations for fixed supports and modes.

    The system splits into independent blocks (one per set of tasks
    linked by busy groups), so cost stays near-linear in the number of
    supported cells.  Returns the (g, M) task-probability matrix.
    """
    g, m = c.shape
    target = gamma * (1.0 - s) - ntask

    if not busy.any():
        # Pinned tasks are independent; no linear system needed.
        pool = (sup * n0[:, None]).sum(axis=0)
        cmin = np.where(sup, c, np.inf).min(axis=0)
        covered = pool > 0
        shared = np.where(covered,
                          (target - gamma * np.where(covered, cmin, 0.0))
                          / np.where(covered, pool, 1.0),
                          0.0)
        return sup * shared[None, :]

    tasks_of, groups_of = _support_adjacency(sup)
    components, _ = _support_components(tasks_of, groups_of, busy)
    probs = np.zeros((g, m))
    for tasks in components:
        _solve_component(gamma, s, c, n0, ntask, busy, tasks, groups_of, probs)
    return probs


def _reduce_idle_contenders(c, sup, busy):
    """Lemma-4 sweep: per task, idle-mode groups above the cheapest drop out."""
    idle_mask = sup & ~busy[:, None]
    if not idle_mask.any():
        return False
    costs = np.where(idle_mask, c, np.inf)
    cmin = costs.min(axis=0)
    drop = idle_mask & (costs > cmin[None, :])
    if drop.any():
        sup[drop] = False
        return True
    return False


def _break_degeneracy(c, sup, busy):
    """Resolve an unsolvable support pattern by evicting priced-out rows.

    Tasks sharing a busy group form a rigid component: the group's
    equal-utility rows fix every pairwise load difference, leaving one
    free level per component.  Each idle-mode row pins that level too,
    so two pins in one component overdetermine it.  Mass only pushes
    loads up, which means the pin demanding the highest level wins and
    the others sit strictly below water; drop them.  If no pin is
    strictly dominated the failure is a numerical tie, and dropping the
    costliest contender of a contested task breaks it instead.
    """
    tasks_of, groups_of = _support_adjacency(sup)
    components, comp_of = _support_components(tasks_of, groups_of, busy)

    # load offsets within each component, flooding across busy links
    offset = [0.0] * len(comp_of)
    for tasks in components:
        seen = {tasks[0]}
        stack = [tasks[0]]
        while stack:
            j = stack.pop()
            for i in groups_of[j]:
                if not busy[i]:
                    continue
                for k in tasks_of[i]:
                    if k not in seen:
                        seen.add(k)
                        offset[k] = offset[j] + c[i, j] - c[i, k]
                        stack.append(k)

    dropped = False
    for tasks in components:
        cells = [(i, k) for k in tasks for i in groups_of[k] if not busy[i]]
        if len(cells) < 2:
            continue
        base = {cell: 1.0 - c[cell] - offset[cell[1]] for cell in cells}
        top = max(base.values())
        for cell, level in base.items():
            if level < top - 1e-10:
                sup[cell] = False
                dropped = True
    if dropped:
        return True

    # Two busy groups spanning the same two tasks cannot both be
    # indifferent unless their cost gaps agree, so the group with the
    # more lopsided gap corners onto its comparatively cheaper task.
    busy_multi = [i for i in np.flatnonzero(busy) if len(tasks_of[i]) >= 2]
    best = None
    for a in range(len(busy_multi)):
        for b in range(a + 1, len(busy_multi)):
            i, l = busy_multi[a], busy_multi[b]
            shared = sorted(set(tasks_of[i]) & set(tasks_of[l]))
            for p in range(len(shared)):
                for q in range(p + 1, len(shared)):
                    j, k = shared[p], shared[q]
                    gap = (c[i, k] - c[i, j]) - (c[l, k] - c[l, j])
                    if abs(gap) <= 1e-10:
                        continue
                    corner_drop = k if gap > 0 else j
                    cand = (abs(gap), i, corner_drop)
                    if best is None or cand > best:
                        best = cand
    if best is not None:
        sup[best[1], best[2]] = False
        return True

    best = None
    for k, groups in enumerate(groups_of):
        if len(groups) < 2:
            continue
        for i in groups:
            key = (c[i, k], i, k)
            if best is None or key > best:
                best = key
    if best is None:
        return False
    sup[best[1], best[2]] = False
    return True


def _equilibrate(gamma, s, c, n0, ntask, sup, busy):
    """Iterate solve / eliminate / mode-flip until supports are stable."""
    g, m = c.shape
    cap = 4 * g * (m + 1) + 16
    probs = np.zeros((g, m))
    for _ in range(cap):
        changed = _reduce_idle_contenders(c, sup, busy)
        if not sup.any():
            return np.zeros((g, m))
        try:
            probs = _solve_modes(gamma, s, c, n0, ntask, sup, busy)
        except SingularSystem:
            if _break_degeneracy(c, sup, busy):
                continue
            raise
        drop = sup & (probs < EPS_ZERO)
        if drop.any():
            sup[drop] = False
            probs[drop] = 0.0
            changed = True
        task_mass = np.where(sup, probs, 0.0).sum(axis=1)
        overfull = ~busy & (task_mass > 1.0 + EPS_ZERO) & sup.any(axis=1)
        if overfull.any():
            busy[overfull] = True
            changed = True
        if busy.any():
            emptied = busy & ~sup.any(axis=1)
            if emptied.any():
                busy[emptied] = False
                changed = True
        if busy.any():
            q = n0 @ np.where(sup, probs, 0.0)
            load = (ntask + q) / gamma + s
            rows = np.flatnonzero(busy)
            first = sup[rows].argmax(axis=1)
            value = 1.0 - load[first] - c[rows, first]
            underwater = rows[value < -EPS_ZERO]
            if underwater.size:
                busy[underwater] = False
                changed = True
        if not changed:
            return np.where(sup, probs, 0.0)
    raise AllocationError("support iteration did not settle")


def allocate(instance: ProblemInstance, *, check: bool = True) -> AllocationResult:
    """Equilibrium assignment probabilities for one allocation round.

    Runs the full pipeline: groups without idle robots are dropped to
    degenerate idle rows, each task initially belongs to its cheapest
    idle-rich group(s), then supports shrink by eliminating negative
    probabilities and grow again on profitable deviations (a saturated
    cheap group hands overflow to the next cost tier) until the support
    structure is self-consistent.  With `check` the returned strategy is
    certified by the independent oracle; an all-idle degenerate strategy
    is returned when no group has idle robots.
    """
    m, g = instance.n_tasks, instance.n_groups
    merged_idx, merged_counts = _merge_groups(instance.costs, instance.counts)
    gm = merged_counts.shape[0]
    first = _first_members(merged_idx, gm)
    c = instance.costs[first]
    n0 = merged_counts[:, 0].astype(float)
    ntask = instance.task_totals.astype(float)
    gamma, s = instance.gamma, instance.signals
    active = n0 > 0

    probs_m = np.zeros((gm, m))
    busy = np.zeros(gm, dtype=bool)
    if active.any():
        costs_active = np.where(active[:, None], c, np.inf)
        cmin = costs_active.min(axis=0)
        sup = costs_active == cmin[None, :]
        admitted = np.zeros((gm, m), dtype=np.int64)
        for _ in range(gm * m + 8):
            probs_m = _equilibrate(gamma, s, c, n0, ntask, sup, busy)
            q = n0 @ probs_m
            load = (ntask + q) / gamma + s
            utils = 1.0 - load[None, :] - c
            value = np.zeros(gm)
            rows = np.flatnonzero(busy)
            if rows.size:
                first = sup[rows].argmax(axis=1)
                value[rows] = utils[rows, first]
            deviating = active[:, None] & ~sup & (utils > value[:, None] + _DEV_TOL)
            if not deviating.any():
                break
            for k in np.flatnonzero(deviating.any(axis=0)):
                contenders = np.flatnonzero(deviating[:, k])
                best = contenders[c[contenders, k] == c[contenders, k].min()]
                sup[best, k] = True
                admitted[best, k] += 1
                if np.any(admitted[best, k] > _MAX_READMIT):
                    raise AllocationError("support expansion cycled")
        else:
            raise AllocationError("support expansion did not settle")

    probs = np.zeros((g, m + 1))
    for i in range(g):
        if instance.counts[i, 0] > 0:
            row = _snap(probs_m[merged_idx[i]])
            mass = row.sum()
            p0 = 1.0 - mass
            if abs(p0) < EPS_ZERO:
                p0 = 0.0
            probs[i, 0] = p0
            probs[i, 1:] = row
        else:
            probs[i, 0] = 1.0
    strategy = MixedStrategy(probs)
    report = verify_equilibrium(instance, strategy) if check else None
    return AllocationResult(strategy, strategy.supports(), report)


# ---------------------------------------------------------------------------
# the oracle


def verify_equilibrium(instance: ProblemInstance, strategy: MixedStrategy) -> EquilibriumReport:
    """Check the equilibrium conditions directly from the definitions.

    For every group with idle robots: all supported actions must share
    one expected utility (within EPS_EQ) and no other action may beat
    that value by more than EPS_EQ.  Groups without idle robots make no
    decision, so their rows are only checked for well-formedness.  This
    is deliberately plain re-computation, independent of the solver.
    """
    strategy.validate(counts=instance.counts)
    if strategy.probs.shape != (instance.n_groups, instance.n_tasks + 1):
        raise ValueError("strategy dimensions do not match instance")
    worst_spread = 0.0
    worst_dominance = 0.0
    for i in range(instance.n_groups):
        if instance.counts[i, 0] == 0:
            continue
        row = strategy.probs[i]
        utilities = [expected_utility(instance, strategy, i, a)
                     for a in range(instance.n_tasks + 1)]
        supported = [a for a in range(instance.n_tasks + 1) if row[a] > EPS_ZERO]
        inside = [utilities[a] for a in supported]
        spread = max(inside) - min(inside)
        outside = [utilities[a] for a in range(instance.n_tasks + 1) if a not in supported]
        dominance = max(0.0, max(outside) - max(inside)) if outside else 0.0
        worst_spread = max(worst_spread, spread)
        worst_dominance = max(worst_dominance, dominance)
    valid = worst_spread <= EPS_EQ and worst_dominance <= EPS_EQ
    return EquilibriumReport(worst_spread, worst_dominance, valid)
