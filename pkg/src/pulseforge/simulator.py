"""Asynchronous network simulation over content-less pulses.

In-flight traffic is a nonnegative counter per directed edge: pulses
carry nothing and are attributed only to their arrival port, so a
multiset of them is fully described by its size. A scheduler picks
which nonempty directed edge delivers next; delivery invokes the
receiver's automaton and enqueues whatever it sends. On top of the
single-run loop sits an exhaustive explorer that walks every reachable
interleaving of small instances with memoized states.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from . import protocol
from .protocol import (
    CATEGORIES,
    LEADER,
    Declare,
    Halt,
    Send,
    compile_even_rules,
    compile_general_rules,
    OddDiameterError,
)
from .topology import layer_decomposition


class NoPulseInFlightError(ValueError):
    pass


class StateCapExceededError(RuntimeError):
    pass


class MissingIdsError(ValueError):
    pass


class DuplicateIdsError(ValueError):
    pass


def _normalize_ids(t, ids):
    if ids is None:
        raise MissingIdsError("stabilizing runs need one ID per vertex")
    if isinstance(ids, dict):
        try:
            ids = [ids[v] for v in range(t.n)]
        except KeyError as miss:
            raise MissingIdsError("no ID for vertex %s" % miss) from None
    ids = tuple(ids)
    if len(ids) != t.n:
        raise MissingIdsError("got %d IDs for %d vertices" % (len(ids), t.n))
    if any(not isinstance(x, int) or x < 1 for x in ids):
        raise MissingIdsError("IDs must be positive integers: %r" % (ids,))
    if len(set(ids)) != len(ids):
        raise DuplicateIdsError("IDs must be pairwise distinct: %r" % (ids,))
    return ids


class NetworkState:
    """Full simulation state: topology, node automata, pulse counters.

    Directed edge i runs from src[i] to dst[i]; the outgoing edges of
    vertex v occupy the contiguous index block starting at offset[v],
    in port order, so port p of v is edge offset[v] + p.
    """

    __slots__ = ("topology", "algorithm", "rules", "ids", "layering",
                 "node_states", "in_flight", "sent_edges", "delivered_edges",
                 "sent_by_category", "deliveries", "deliveries_to_halted",
                 "steps", "leader_step", "in_flight_at_leader", "violation",
                 "trace", "offset", "dir_edges")

    def __init__(self, topology, algorithm, rules, ids, layering,
                 record_trace=False):
        self.topology = topology
        self.algorithm = algorithm
        self.rules = rules
        self.ids = ids
        self.layering = layering
        offset = []
        total = 0
        for v in range(topology.n):
            offset.append(total)
            total += topology.degree(v)
        self.offset = tuple(offset)
        self.dir_edges = tuple(topology.directed_edges())
        self.node_states = []
        self.in_flight = [0] * total
        self.sent_edges = [0] * total
        self.delivered_edges = [0] * total
        self.sent_by_category = {cat: 0 for cat in CATEGORIES}
        self.deliveries = 0
        self.deliveries_to_halted = 0
        self.steps = 0
        self.leader_step = None
        self.in_flight_at_leader = None
        self.violation = None
        self.trace = [] if record_trace else None
        for v in range(topology.n):
            if algorithm == "stabilizing":
                state = protocol.stabilizing_state(topology.degree(v), ids[v])
                state, actions = protocol.stabilizing_step(state, ("init",))
            else:
                state, actions = protocol.init_node(topology.degree(v), rules)
            self.node_states.append(state)
            self._apply_sends(v, actions)

    def clone(self):
        c = NetworkState.__new__(NetworkState)
        c.topology = self.topology
        c.algorithm = self.algorithm
        c.rules = self.rules
        c.ids = self.ids
        c.layering = self.layering
        c.offset = self.offset
        c.dir_edges = self.dir_edges
        c.node_states = [s.copy() for s in self.node_states]
        c.in_flight = list(self.in_flight)
        c.sent_edges = list(self.sent_edges)
        c.delivered_edges = list(self.delivered_edges)
        c.sent_by_category = dict(self.sent_by_category)
        c.deliveries = self.deliveries
        c.deliveries_to_halted = self.deliveries_to_halted
        c.steps = self.steps
        c.leader_step = self.leader_step
        c.in_flight_at_leader = self.in_flight_at_leader
        c.violation = self.violation
        c.trace = None if self.trace is None else list(self.trace)
        return c

    def key(self):
        return (tuple(s.key() for s in self.node_states),
                tuple(self.in_flight))

    def edge_index(self, u, v):
        return self.offset[u] + self.topology.port_to(u, v)

    def enabled_edges(self):
        return [i for i, c in enumerate(self.in_flight) if c > 0]

    def total_in_flight(self):
        return sum(self.in_flight)

    def total_pulses(self):
        return sum(self.sent_edges)

    def leader_vertex(self):
        for v, s in enumerate(self.node_states):
            if s.output == LEADER:
                return v
        return None

    def leader_count(self):
        return sum(1 for s in self.node_states if s.output == LEADER)

    def all_halted(self):
        return all(s.halted for s in self.node_states)

    def outputs(self):
        return tuple(s.output for s in self.node_states)

    def blocked_vertices(self):
        """Nodes stuck waiting out an election they can no longer win."""
        return tuple(v for v, s in enumerate(self.node_states)
                     if s.needed is not None and not s.halted)

    def check_conservation(self):
        for i in range(len(self.in_flight)):
            if self.sent_edges[i] != self.delivered_edges[i] + self.in_flight[i]:
                raise AssertionError("conservation broken on edge %r"
                                     % (self.dir_edges[i],))

    def _apply_sends(self, sender, actions):
        for act in actions:
            if isinstance(act, Send):
                ei = self.offset[sender] + act.port
                self.in_flight[ei] += act.count
                self.sent_edges[ei] += act.count
                self.sent_by_category[act.category] += act.count

    def _deliver(self, ei):
        """Deliver one pulse along directed edge index ei (mutating)."""
        if self.in_flight[ei] == 0:
            raise NoPulseInFlightError("no pulse in flight on %r"
                                       % (self.dir_edges[ei],))
        u, v = self.dir_edges[ei]
        self.in_flight[ei] -= 1
        self.delivered_edges[ei] += 1
        self.deliveries += 1
        self.steps += 1
        port = self.topology.port_to(v, u)
        receiver = self.node_states[v]
        info = {"to_halted": False, "declared_leader": False,
                "in_flight_at_declare": None}
        if receiver.halted:
            # Halted means the device is off; the pulse is absorbed and
            # only the books remember it. For the quiescent algorithm
            # this should be unreachable, so the first hit is recorded.
            self.deliveries_to_halted += 1
            info["to_halted"] = True
            if self.algorithm == "general" and self.violation is None:
                self.violation = (v, self.steps)
            actions = []
        else:
            if self.algorithm == "stabilizing":
                new_state, actions = protocol.stabilizing_step(
                    receiver, ("deliver", port))
            else:
                new_state, actions = protocol.on_deliver(
                    receiver, self.rules, port)
            self.node_states[v] = new_state
            if any(isinstance(a, Declare) and a.output == LEADER
                   for a in actions):
                # Snapshot before the leader's own broadcast goes out:
                # this is the count the quiescence claim is about.
                self.leader_step = self.steps
                self.in_flight_at_leader = self.total_in_flight()
                info["declared_leader"] = True
                info["in_flight_at_declare"] = self.in_flight_at_leader
            self._apply_sends(v, actions)
        if self.trace is not None:
            self.trace.append({
                "step": self.steps,
                "edge": [u, v],
                "receiver_state_digest": _digest(self.node_states[v]),
                "actions": [_action_brief(a) for a in actions],
                "in_flight_total": self.total_in_flight(),
            })
        return info


def _digest(node_state):
    return hashlib.sha1(repr(node_state.key()).encode()).hexdigest()[:12]


def _action_brief(act):
    if isinstance(act, Send):
        return {"send": [act.port, act.count, act.category]}
    if isinstance(act, Declare):
        return {"declare": act.output}
    if isinstance(act, Halt):
        return {"halt": True}
    raise TypeError(act)


def new_simulation(t, algorithm, ids=None, *, matching="at_least",
                   record_trace=False):
    """Initialized NetworkState for one algorithm on one tree.

    The even algorithm needs an even diameter, the general one an
    asymmetric tree, the stabilizing one distinct positive IDs. All
    initialization pulses are already in flight on return.
    """
    if algorithm == "even":
        layering = layer_decomposition(t)
        if layering.diameter % 2 != 0:
            raise OddDiameterError(
                "tree has odd diameter %d" % layering.diameter)
        rules = compile_even_rules(layering.diameter, matching=matching)
        return NetworkState(t, algorithm, rules, None, layering,
                            record_trace)
    if algorithm == "general":
        rules = compile_general_rules(t, matching=matching)
        layering = layer_decomposition(t)
        return NetworkState(t, algorithm, rules, None, layering,
                            record_trace)
    if algorithm == "stabilizing":
        ids = _normalize_ids(t, ids)
        return NetworkState(t, algorithm, None, ids, None, record_trace)
    raise ValueError("unknown algorithm %r" % (algorithm,))


def step(state, edge):
    """Deliver one pulse along the directed edge (u, v), purely.

    Returns the successor NetworkState; the input state is untouched.
    """
    u, v = edge
    nxt = state.clone()
    nxt._deliver(nxt.edge_index(u, v))
    return nxt


class SeededRandom:
    """Uniform choice among nonempty directed edges; almost-surely fair."""

    def __init__(self, seed):
        self.seed = seed
        self._rng = random.Random(seed)

    def pick(self, state, enabled):
        return enabled[self._rng.randrange(len(enabled))]


class RoundRobin:
    """Cyclic scan over the directed edge list; deterministic and fair."""

    seed = None

    def __init__(self):
        self._cursor = -1

    def pick(self, state, enabled):
        m = len(state.in_flight)
        for i in range(1, m + 1):
            idx = (self._cursor + i) % m
            if state.in_flight[idx] > 0:
                self._cursor = idx
                return idx
        raise NoPulseInFlightError("nothing in flight")


class AdversaryScript:
    """Replays an explicit directed-edge sequence, then gives up.

    Exhausting the script ends the run as budget-exhausted; naming an
    empty edge is an error, since an adversary is expected to know what
    it is doing.
    """

    seed = None

    def __init__(self, edges):
        self._edges = list(edges)
        self._pos = 0

    def pick(self, state, enabled):
        if self._pos >= len(self._edges):
            return None
        u, v = self._edges[self._pos]
        self._pos += 1
        idx = state.edge_index(u, v)
        if state.in_flight[idx] == 0:
            raise NoPulseInFlightError("scripted edge %r has no pulse"
                                       % ((u, v),))
        return idx


@dataclass
class Outcome:
    status: str
    leader: int | None
    outputs: tuple
    pulses_by_category: dict
    total_pulses: int
    deliveries: int
    deliveries_to_halted: int
    in_flight_at_leader: int | None
    leader_step: int | None
    steps: int
    seed: int | None
    ids: tuple | None = None
    blocked: tuple = ()
    violation: tuple | None = None
    trace: list | None = None

    def to_dict(self):
        return {
            "status": self.status,
            "leader": self.leader,
            "outputs": list(self.outputs),
            "pulses_by_category": dict(self.pulses_by_category),
            "total_pulses": self.total_pulses,
            "deliveries": self.deliveries,
            "deliveries_to_halted": self.deliveries_to_halted,
            "in_flight_at_leader": self.in_flight_at_leader,
            "leader_step": self.leader_step,
            "steps": self.steps,
            "seed": self.seed,
            "ids": None if self.ids is None else list(self.ids),
            "blocked": list(self.blocked),
            "violation": None if self.violation is None else list(self.violation),
        }


def _is_stabilized(state):
    """True once outputs can no longer change under any schedule.

    Requires a leader plus the structural fact that every pulse still in
    flight is headed to a halted node or to an election loser that can
    never accumulate enough: such deliveries are absorbed or merely
    bump a counter that stays short of its target forever.
    """
    if state.leader_vertex() is None:
        return False
    incoming = [0] * state.topology.n
    for i, c in enumerate(state.in_flight):
        if c > 0:
            incoming[state.dir_edges[i][1]] += c
    for v, total in enumerate(incoming):
        if total == 0:
            continue
        s = state.node_states[v]
        if s.halted:
            continue
        if s.needed is not None and s.got + total < s.needed:
            continue
        return False
    return True


def run(state, scheduler, budget):
    """Deliver pulses under the scheduler until a verdict is reached.

    The caller's state is not modified. Ends with Terminated when every
    node has halted and nothing is in flight, Stabilized when outputs
    are provably frozen (stabilizing algorithm only), QuiescenceViolated
    the moment a halted node is hit under the quiescent algorithm, and
    BudgetExhausted when the delivery budget or an adversary script runs
    out first.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    state = state.clone()
    status = None
    while True:
        if state.all_halted() and state.total_in_flight() == 0:
            status = "terminated"
            break
        if state.algorithm == "stabilizing" and _is_stabilized(state):
            status = "stabilized"
            break
        if state.deliveries >= budget:
            status = "budget_exhausted"
            break
        enabled = state.enabled_edges()
        if not enabled:
            # Live nodes but nothing to deliver: no rule set compiled by
            # this package reaches here, but a scripted misuse might.
            status = "budget_exhausted"
            break
        picked = scheduler.pick(state, enabled)
        if picked is None:
            status = "budget_exhausted"
            break
        state._deliver(picked)
        if state.violation is not None:
            status = "quiescence_violated"
            break
    return Outcome(
        status=status,
        leader=state.leader_vertex(),
        outputs=state.outputs(),
        pulses_by_category=dict(state.sent_by_category),
        total_pulses=state.total_pulses(),
        deliveries=state.deliveries,
        deliveries_to_halted=state.deliveries_to_halted,
        in_flight_at_leader=state.in_flight_at_leader,
        leader_step=state.leader_step,
        steps=state.steps,
        seed=getattr(scheduler, "seed", None),
        ids=state.ids,
        blocked=state.blocked_vertices(),
        violation=state.violation,
        trace=state.trace,
    )


@dataclass
class TerminalClass:
    leader: int | None
    outputs: tuple
    per_edge_sent: tuple
    total_pulses: int
    deliveries_to_halted_min: int
    deliveries_to_halted_max: int
    blocked: tuple
    states: int

    def to_dict(self):
        return {
            "leader": self.leader,
            "outputs": list(self.outputs),
            "per_edge_sent": list(self.per_edge_sent),
            "total_pulses": self.total_pulses,
            "deliveries_to_halted": [self.deliveries_to_halted_min,
                                     self.deliveries_to_halted_max],
            "blocked": list(self.blocked),
            "states": self.states,
        }


@dataclass
class ModelCheckReport:
    algorithm: str
    states: int
    transitions: int
    terminal_classes: list
    confluent: bool
    leaders: tuple
    direction_violations: int
    halted_delivery_transitions: int
    nonquiescent_declarations: int
    multi_leader_states: int

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "states": self.states,
            "transitions": self.transitions,
            "terminal_classes": [c.to_dict() for c in self.terminal_classes],
            "confluent": self.confluent,
            "leaders": list(self.leaders),
            "direction_violations": self.direction_violations,
            "halted_delivery_transitions": self.halted_delivery_transitions,
            "nonquiescent_declarations": self.nonquiescent_declarations,
            "multi_leader_states": self.multi_leader_states,
        }


def explore_all_schedules(t, algorithm, ids=None, *, max_states=10 ** 6,
                          matching="at_least"):
    """Exhaustively walk every delivery interleaving of one instance.

    Depth-first with an explicit stack and a visited set keyed on node
    states plus in-flight counters; the branch point is which nonempty
    directed edge delivers next. Terminal states (nothing in flight)
    are grouped into classes by leader, outputs, and per-directed-edge
    send totals. Per-transition bookkeeping feeds the direction and
    quiescence checks. Raises StateCapExceededError beyond max_states.
    """
    root = new_simulation(t, algorithm, ids, matching=matching)
    layering = root.layering
    seen = {root.key()}
    stack = [root]
    classes = {}
    transitions = 0
    direction_violations = 0
    halted_deliveries = 0
    nonquiescent = 0
    multi_leader = 0
    while stack:
        state = stack.pop()
        enabled = state.enabled_edges()
        if not enabled:
            ck = (state.leader_vertex(), state.outputs(),
                  tuple(state.sent_edges))
            d2h = state.deliveries_to_halted
            cls = classes.get(ck)
            if cls is None:
                classes[ck] = [1, d2h, d2h, state.blocked_vertices()]
            else:
                cls[0] += 1
                cls[1] = min(cls[1], d2h)
                cls[2] = max(cls[2], d2h)
            continue
        pre_leader = state.leader_vertex() is None
        for ei in enabled:
            child = state.clone()
            info = child._deliver(ei)
            transitions += 1
            if pre_leader and layering is not None:
                u, v = child.dir_edges[ei]
                if layering.parent_of[u] != v:
                    direction_violations += 1
            if info["to_halted"]:
                halted_deliveries += 1
            if info["declared_leader"] and info["in_flight_at_declare"] != 0:
                nonquiescent += 1
            if child.leader_count() > 1:
                multi_leader += 1
            k = child.key()
            if k not in seen:
                if len(seen) >= max_states:
                    raise StateCapExceededError(
                        "more than %d states" % max_states)
                seen.add(k)
                stack.append(child)
    terminal_classes = [
        TerminalClass(
            leader=ck[0], outputs=ck[1], per_edge_sent=ck[2],
            total_pulses=sum(ck[2]),
            deliveries_to_halted_min=rec[1],
            deliveries_to_halted_max=rec[2],
            blocked=rec[3], states=rec[0])
        for ck, rec in sorted(classes.items(),
                              key=lambda kv: (str(kv[0][0]), kv[0][1]))
    ]
    leaders = tuple(sorted({c.leader for c in terminal_classes
                            if c.leader is not None}))
    return ModelCheckReport(
        algorithm=algorithm,
        states=len(seen),
        transitions=transitions,
        terminal_classes=terminal_classes,
        confluent=len(terminal_classes) == 1,
        leaders=leaders,
        direction_violations=direction_violations,
        halted_delivery_transitions=halted_deliveries,
        nonquiescent_declarations=nonquiescent,
        multi_leader_states=multi_leader,
    )
