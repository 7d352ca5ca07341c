"""
Service-robot scenario

A tick generator drives the mission tree. Its leaves talk to seven skills,
and the skills talk to three components: BatteryReader, Navigation and
Localization. Skills and components are written in the program-graph text
format below. Motion, battery drain and charging are native effects over the
shared variables robot_cell, heading, odometer, battery and clock.

WaitForUser and AtRechargingStation are reconstructed from the leaf
descriptions; they are only instantiated when the tree binds them.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from btrv.behavior_tree import (BT_PREFIX, HALT, BehaviorTreeDef, CompiledTree, NodeKind, action, compile_bt, condition,
                                fallback, sequence)
from btrv.bt_text import load_tree
from btrv.diagnostics import DiagnosticLog, IssueSeverity, IssueType
from btrv.engine import ExecutionTrace, RandomScheduler, RoundRobinScheduler, Scheduler, run
from btrv.errors import NotMonitorableError, ScenarioBuildError
from btrv.grid_world import DESTINATION, RECHARGING_STATION, GridWorld
from btrv.model_text import ModelParser
from btrv.monitors import MonitorGraph, attach, compile_from_scope, synthesize
from btrv.program_graph import Channel, ChannelId, ChannelSystem, Configuration, VarDecl
from btrv.scope_parser import NamedProperty, load_properties
from btrv.values import Symbol, IntDomain, symbols
from models.scenario_models import (ForceBatteryLevel, OverrideNavigation, ScenarioConfig, SchedulerKind,
                                    SkillThresholdBug)

logger = logging.getLogger(__name__)

TICK_GENERATOR = "TickGenerator"
BATTERY_READER = "BatteryReader"
NAVIGATION = "Navigation"
LOCALIZATION = "Localization"
COMPONENTS = (BATTERY_READER, NAVIGATION, LOCALIZATION)

COUNTER_LIMIT = 1_000_000_000

DEFAULT_PROPERTIES = """\
# The battery level read by BatteryLevel never drops below 20%.
param theta = 100;
phi1: always (BatteryReader, BatteryLevel, m[1] = <ok> implies m[2] >= 20);

# A low reading while driving to the destination sends the robot to the station within theta ticks.
phi2: always (((Navigation, GoToDestination, m[1] = <ok> and m[2] = <running>)
              and (BatteryReader, BatteryLevel, m[1] = <ok> and m[2] <= 30))
              implies time_until (GoToRechargingStation, Navigation,
                                  m[1] = <start_navigation> and m[2] = <RechargingStation>) < theta);
"""


class SkillKind(str, Enum):
    THRESHOLD = "threshold"
    CHARGING = "charging"
    LOCATION = "location"
    GOTO = "goto"
    WAIT = "wait"


@dataclass(frozen=True)
class SkillSpec:
    name: str
    kind: SkillKind
    component: Optional[str]
    leaf_kind: NodeKind
    target: Optional[str] = None
    reconstructed: bool = False


SKILLS: Dict[str, SkillSpec] = {s.name: s for s in [
    SkillSpec("BatteryLevel", SkillKind.THRESHOLD, BATTERY_READER, NodeKind.CONDITION),
    SkillSpec("BatteryNotRecharging", SkillKind.CHARGING, BATTERY_READER, NodeKind.CONDITION),
    SkillSpec("AtDestination", SkillKind.LOCATION, LOCALIZATION, NodeKind.CONDITION, DESTINATION),
    SkillSpec("AtRechargingStation", SkillKind.LOCATION, LOCALIZATION, NodeKind.CONDITION, RECHARGING_STATION,
              reconstructed=True),
    SkillSpec("GoToDestination", SkillKind.GOTO, NAVIGATION, NodeKind.ACTION, DESTINATION),
    SkillSpec("GoToRechargingStation", SkillKind.GOTO, NAVIGATION, NodeKind.ACTION, RECHARGING_STATION),
    SkillSpec("WaitForUser", SkillKind.WAIT, None, NodeKind.CONDITION, reconstructed=True),
]}


# Reference trees

def mission_tree() -> BehaviorTreeDef:
    """Go to the destination, recharging whenever the battery runs low"""
    return BehaviorTreeDef("Mission", fallback(
        "Root",
        sequence(
            "Mission",
            condition("BatteryNotRecharging", "BatteryNotRecharging"),
            condition("BatteryLevelAbove30", "BatteryLevel"),
            fallback(
                "ReachDestination",
                condition("AtDestination", "AtDestination"),
                action("GoToDestination", "GoToDestination"),
            ),
        ),
        sequence(
            "Recharge",
            action("GoToRechargingStation", "GoToRechargingStation"),
        ),
    ))


def wait_at_station_tree() -> BehaviorTreeDef:
    """Mission tree binding all seven skills; the robot waits for the user at the destination"""
    return BehaviorTreeDef("WaitAtStation", fallback(
        "Root",
        sequence(
            "Mission",
            condition("BatteryNotRecharging", "BatteryNotRecharging"),
            condition("BatteryLevelAbove30", "BatteryLevel"),
            fallback(
                "ReachDestination",
                condition("AtDestination", "AtDestination"),
                action("GoToDestination", "GoToDestination"),
            ),
            condition("WaitForUser", "WaitForUser", may_run=True),
        ),
        sequence(
            "Recharge",
            fallback(
                "ReachStation",
                condition("AtRechargingStation", "AtRechargingStation"),
                action("GoToRechargingStation", "GoToRechargingStation"),
            ),
        ),
    ))


BUILTIN_TREES: Dict[str, Callable[[], BehaviorTreeDef]] = {
    "mission": mission_tree,
    "wait_at_station": wait_at_station_tree,
}


def resolve_tree(name_or_path: str) -> BehaviorTreeDef:
    if name_or_path in BUILTIN_TREES:
        return BUILTIN_TREES[name_or_path]()
    if not Path(name_or_path).exists():
        raise ScenarioBuildError(f"unknown tree '{name_or_path}' (built-in: {', '.join(BUILTIN_TREES)})")
    return load_tree(name_or_path)


# Program graph templates

TICK_GENERATOR_TEXT = """
process TickGenerator
  var x : msg
  init Ready
  Ready --[ !(TickGenerator, {root}, [<tick>]) ]--> Wait
  Wait --[ ?({root}, TickGenerator, x) ]--> Advance
  Advance --[ clock := clock + 1 ]--> Ready
end
"""

_QUERY_CLIENT = """
  Idle --[ ?({leaf}, {skill}, [<tick>]) ]--> Query{i}
  Query{i} --[ !({skill}, {component}, {request}) ]--> Wait{i}
  Wait{i} --[ ?({component}, {skill}, x) ]--> Decide{i}
  Decide{i} --[ {holds} : !({skill}, {leaf}, [<success>]) ]--> Idle
  Decide{i} --[ not ({holds}) : !({skill}, {leaf}, [<failure>]) ]--> Idle
"""

_GOTO_CLIENT = """
  Idle --[ ?({leaf}, {skill}, [<tick>]) ]--> Tick{i}
  Idle --[ ?({leaf}, {skill}, [<halt>]) ]--> Halt{i}
  Tick{i} --[ not active : !({skill}, Navigation, [<start_navigation>, <{target}>]) ]--> Starting{i}
  Tick{i} --[ active : !({skill}, Navigation, [<get_status>]) ]--> Polling{i}
  Starting{i} --[ ?(Navigation, {skill}, x) ]--> Started{i}
  Started{i} --[ x[1] = <ok> : active := true ]--> Tick{i}
  Started{i} --[ not (x[1] = <ok>) : !({skill}, {leaf}, [<failure>]) ]--> Idle
  Polling{i} --[ ?(Navigation, {skill}, x) ]--> Polled{i}
  Polled{i} --[ x[1] = <ok> and x[2] = <running> : !({skill}, {leaf}, [<running>]) ]--> Idle
  Polled{i} --[ x[1] = <ok> and x[2] = <reached> : active := false ]--> Reached{i}
  Polled{i} --[ not (x[1] = <ok> and (x[2] = <running> or x[2] = <reached>)) : active := false ]--> Failed{i}
  Reached{i} --[ !({skill}, {leaf}, [<success>]) ]--> Idle
  Failed{i} --[ !({skill}, {leaf}, [<failure>]) ]--> Idle
  Halt{i} --[ active : !({skill}, Navigation, [<stop>]) ]--> Stopping{i}
  Halt{i} --[ not active : !({skill}, {leaf}, [<halted>]) ]--> Idle
  Stopping{i} --[ ?(Navigation, {skill}, x) ]--> Stopped{i}
  Stopped{i} --[ active := false ]--> Halt{i}
"""

_WAIT_CLIENT = """
  Idle --[ ?({leaf}, {skill}, [<tick>]) ]--> Reply{i}
  Reply{i} --[ !({skill}, {leaf}, [<running>]) ]--> Idle
"""

_BATTERY_CLIENT = """
  Idle --[ ?({client}, BatteryReader, x) ]--> Update{i}
  Update{i} --[ call battery_update ]--> Serve{i}
  Serve{i} --[ x[1] = <get_level> and forced >= 0 : !(BatteryReader, {client}, [<ok>, forced]) ]--> Idle
  Serve{i} --[ x[1] = <get_level> and forced < 0 : !(BatteryReader, {client}, [<ok>, battery]) ]--> Idle
  Serve{i} --[ x[1] = <get_charging> : !(BatteryReader, {client}, [<ok>, charging]) ]--> Idle
  Serve{i} --[ not (x[1] = <get_level> or x[1] = <get_charging>) : !(BatteryReader, {client}, [<error>]) ]--> Idle
"""

_NAVIGATION_CLIENT = """
  Idle --[ ?({client}, Navigation, x) ]--> Request{i}
  Request{i} --[ x[1] = <start_navigation> and x[2] = <Destination> : goal := {destination} ]--> Plan{i}
  Request{i} --[ x[1] = <start_navigation> and x[2] = <RechargingStation> : goal := {station} ]--> Plan{i}
  Request{i} --[ x[1] = <start_navigation> and not (x[2] = <Destination> or x[2] = <RechargingStation>) : active := false ]--> Refuse{i}
  Request{i} --[ x[1] = <get_status> : call navigation_advance ]--> Report{i}
  Request{i} --[ x[1] = <stop> : active := false ]--> Stopped{i}
  Request{i} --[ not (x[1] = <start_navigation> or x[1] = <get_status> or x[1] = <stop>) : skip ]--> Refuse{i}
  Plan{i} --[ call navigation_plan ]--> Planned{i}
  Planned{i} --[ active : !(Navigation, {client}, [<ok>]) ]--> Idle
  Planned{i} --[ not active : !(Navigation, {client}, [<path_not_found>]) ]--> Idle
  Report{i} --[ status = <running> : !(Navigation, {client}, [<ok>, <running>]) ]--> Idle
  Report{i} --[ status = <reached> : !(Navigation, {client}, [<ok>, <reached>]) ]--> Idle
  Report{i} --[ not (status = <running> or status = <reached>) : !(Navigation, {client}, [<path_not_found>]) ]--> Idle
  Stopped{i} --[ !(Navigation, {client}, [<ok>, <stopped>]) ]--> Idle
  Refuse{i} --[ !(Navigation, {client}, [<path_not_found>]) ]--> Idle
"""

_LOCALIZATION_CLIENT = """
  Idle --[ ?({client}, Localization, x) ]--> Serve{i}
  Serve{i} --[ x[1] = <get_pose> : !(Localization, {client}, [<ok>, robot_cell]) ]--> Idle
  Serve{i} --[ not (x[1] = <get_pose>) : !(Localization, {client}, [<error>]) ]--> Idle
"""


def _block(name: str, variables: Sequence[str], clients: str) -> str:
    lines = [f"process {name}"] + [f"  var {v}" for v in variables] + ["  init Idle"]
    return "\n".join(lines) + clients + "end\n"


def skill_text(spec: SkillSpec, leaves: Sequence[str], world: GridWorld, threshold: int) -> str:
    """Program graph of one skill serving the given leaf processes"""
    body = ""
    variables = ["x : msg"]
    for i, leaf in enumerate(leaves):
        fields = dict(leaf=leaf, skill=spec.name, component=spec.component, i=i)
        if spec.kind == SkillKind.THRESHOLD:
            body += _QUERY_CLIENT.format(request="[<get_level>]", holds="x[1] = <ok> and x[2] > threshold", **fields)
        elif spec.kind == SkillKind.CHARGING:
            body += _QUERY_CLIENT.format(request="[<get_charging>]", holds="x[1] = <ok> and x[2] = false", **fields)
        elif spec.kind == SkillKind.LOCATION:
            cell = world.index(world.locations[spec.target])
            body += _QUERY_CLIENT.format(request="[<get_pose>]", holds=f"x[1] = <ok> and x[2] = {cell}", **fields)
        elif spec.kind == SkillKind.GOTO:
            body += _GOTO_CLIENT.format(target=spec.target, **fields)
        else:
            body += _WAIT_CLIENT.format(**fields)
    if spec.kind == SkillKind.THRESHOLD:
        variables.append(f"threshold : int[0..100] = {threshold}")
    elif spec.kind == SkillKind.GOTO:
        variables.append("active : bool = false")
    return _block(spec.name, variables, body)


def component_text(component: str, clients: Sequence[str], world: GridWorld) -> str:
    body = ""
    if component == BATTERY_READER:
        for i, client in enumerate(clients):
            body += _BATTERY_CLIENT.format(client=client, i=i)
        variables = ["x : msg", "forced : int[-1..100] = -1", "charging : bool = false",
                     f"updated_at : int[0..{COUNTER_LIMIT}] = 0"]
    elif component == NAVIGATION:
        destination = world.index(world.locations[DESTINATION])
        station = world.index(world.locations[RECHARGING_STATION])
        for i, client in enumerate(clients):
            body += _NAVIGATION_CLIENT.format(client=client, i=i, destination=destination, station=station)
        variables = ["x : msg", "active : bool = false", f"goal : int[-1..{world.max_index}] = -1",
                     "status : sym{idle, running, reached, failed} = <idle>", "frozen : bool = false",
                     f"moved_at : int[-1..{COUNTER_LIMIT}] = -1"]
    else:
        for i, client in enumerate(clients):
            body += _LOCALIZATION_CLIENT.format(client=client, i=i)
        variables = ["x : msg"]
    return _block(component, variables, body)


# Native effects

class WorldEffects:
    """Motion, drain and charging over the shared variables"""

    def __init__(self, world: GridWorld, config: ScenarioConfig):
        self.world = world
        self.battery = config.battery
        self.station = world.index(world.locations[RECHARGING_STATION])

    def natives(self) -> Dict[str, Callable]:
        return {
            "battery_update": self.battery_update,
            "navigation_plan": self.navigation_plan,
            "navigation_advance": self.navigation_advance,
        }

    def battery_update(self, local, shared):
        at_station = shared["robot_cell"] == self.station
        elapsed = shared["clock"] - local["updated_at"]
        if at_station and elapsed > 0:
            shared["battery"] = min(100, shared["battery"] + self.battery.charge_per_tick * elapsed)
        local["updated_at"] = shared["clock"]
        local["charging"] = at_station and shared["battery"] < 100

    def navigation_plan(self, local, shared):
        here = self.world.cell(shared["robot_cell"])
        ok = self.world.distance(here, self.world.cell(local["goal"])) is not None
        local["active"] = ok
        local["status"] = Symbol("running" if ok else "failed")

    def navigation_advance(self, local, shared):
        goal = local["goal"]
        if not local["active"]:
            reached = goal >= 0 and shared["robot_cell"] == goal
            local["status"] = Symbol("reached" if reached else "failed")
            return
        if shared["robot_cell"] == goal:
            local["active"] = False
            local["status"] = Symbol("reached")
            return
        if local["frozen"] or local["moved_at"] == shared["clock"]:
            local["status"] = Symbol("running")
            return
        step = self.world.next_step(self.world.cell(shared["robot_cell"]), self.world.cell(goal))
        if step is None:
            local["active"] = False
            local["status"] = Symbol("failed")
            return
        cell, heading = step
        shared["robot_cell"] = self.world.index(cell)
        shared["heading"] = Symbol(heading)
        shared["odometer"] += 1
        if shared["odometer"] % self.battery.drain_every == 0:
            shared["battery"] = max(0, shared["battery"] - 1)
        local["moved_at"] = shared["clock"]
        if shared["robot_cell"] == goal:
            local["active"] = False
            local["status"] = Symbol("reached")
        else:
            local["status"] = Symbol("running")


# Fault injection

class FaultHook:
    """Applies scheduled faults when a tick is delivered"""

    def __init__(self, faults: Sequence):
        self.forced = [f for f in faults if isinstance(f, ForceBatteryLevel)]
        self.overrides = [f for f in faults if isinstance(f, OverrideNavigation)]

    def __call__(self, cfg: Configuration, tick: int):
        for fault in self.forced:
            if tick == fault.at_tick:
                cfg.local(BATTERY_READER)["forced"] = fault.value
                logger.info(f"Tick {tick}: battery reader forced to report {fault.value}")
        for fault in self.overrides:
            if tick == fault.from_tick:
                cfg.local(NAVIGATION)["frozen"] = True
                logger.info(f"Tick {tick}: navigation overridden until tick {fault.to_tick}")
            elif tick == fault.to_tick:
                cfg.local(NAVIGATION)["frozen"] = False


def _threshold_skill(fault: SkillThresholdBug, tree: BehaviorTreeDef) -> str:
    name = fault.skill
    node = tree.find(name)
    if node is not None and node.is_leaf:
        name = node.skill
    spec = SKILLS.get(name)
    if spec is None or spec.kind != SkillKind.THRESHOLD:
        raise ScenarioBuildError(f"fault names '{fault.skill}', which is not a threshold skill of the tree")
    if name not in tree.skills():
        raise ScenarioBuildError(f"fault names skill '{name}', which the tree does not use")
    return name


# Assembly

@dataclass
class Scenario:
    config: ScenarioConfig
    world: GridWorld
    tree: BehaviorTreeDef
    compiled: CompiledTree
    system: ChannelSystem
    properties: List[NamedProperty] = field(default_factory=list)
    monitors: List[MonitorGraph] = field(default_factory=list)
    rejected: List[Tuple[NamedProperty, NotMonitorableError]] = field(default_factory=list)
    diagnostics: DiagnosticLog = field(default_factory=DiagnosticLog)

    def instrumented(self) -> ChannelSystem:
        return attach(self.system, self.monitors)

    def scheduler(self, seed: Optional[int] = None) -> Scheduler:
        if self.config.scheduler == SchedulerKind.round_robin:
            return RoundRobinScheduler()
        return RandomScheduler(self.config.seed if seed is None else seed)

    def run(self, monitored: bool = True, horizon: Optional[int] = None, seed: Optional[int] = None,
            stop_on_violation: Optional[bool] = None) -> ExecutionTrace:
        cs = self.instrumented() if monitored else self.system
        seed = self.config.seed if seed is None else seed
        stop = self.config.stop_on_violation if stop_on_violation is None else stop_on_violation
        return run(cs, self.scheduler(seed), self.config.horizon if horizon is None else horizon,
                   stop_on_violation=stop, seed=seed)


def check_layering(cs: ChannelSystem, compiled: CompiledTree):
    """Every channel joins adjacent layers: tick source and root, BT nodes, leaf and skill, skill and component"""
    bound = {(BT_PREFIX + b.leaf, b.skill) for b in compiled.leaves.values()}
    skills = set(compiled.tree.skills())
    root = compiled.tree.root.process_name
    for cid in cs.channels:
        pair = {cid.source, cid.dest}
        if pair == {compiled.tree.tick_source, root}:
            continue
        if cid.source.startswith(BT_PREFIX) and cid.dest.startswith(BT_PREFIX):
            continue
        if (cid.source, cid.dest) in bound or (cid.dest, cid.source) in bound:
            continue
        if (cid.source in skills and cid.dest in COMPONENTS) or (cid.dest in skills and cid.source in COMPONENTS):
            continue
        raise ScenarioBuildError(f"channel {cid} crosses layers")


def _check_bindings(tree: BehaviorTreeDef):
    for leaf in tree.leaves():
        spec = SKILLS.get(leaf.skill)
        if spec is None:
            raise ScenarioBuildError(f"leaf '{leaf.name}' is bound to unknown skill '{leaf.skill}'")
        if spec.leaf_kind != leaf.kind:
            raise ScenarioBuildError(f"skill '{spec.name}' serves {spec.leaf_kind.value} leaves, "
                                     f"but '{leaf.name}' is a {leaf.kind.value}")
        if spec.kind == SkillKind.WAIT and not leaf.can_run:
            raise ScenarioBuildError(f"leaf '{leaf.name}' uses {spec.name} and must be declared running")
        if spec.kind == SkillKind.GOTO and tuple(leaf.halt_message) != HALT:
            raise ScenarioBuildError(f"leaf '{leaf.name}' must halt {spec.name} with the default halt message")


def _check_world(world: GridWorld, config: ScenarioConfig):
    start = world.start.cell
    for name in (DESTINATION, RECHARGING_STATION):
        if world.distance(start, world.locations[name]) is None:
            raise ScenarioBuildError(f"{name} is unreachable from the robot start {start}")
    world.check_reserve(RECHARGING_STATION, config.battery.reserve_moves)


def build_system(config: ScenarioConfig, tree: BehaviorTreeDef, world: GridWorld) -> Tuple[ChannelSystem, CompiledTree]:
    _check_bindings(tree)
    compiled = compile_bt(tree)
    if tree.tick_source != TICK_GENERATOR:
        raise ScenarioBuildError(f"the scenario ticks trees from {TICK_GENERATOR}, not {tree.tick_source}")

    clients: Dict[str, List[str]] = {}
    for binding in compiled.leaves.values():
        clients.setdefault(binding.skill, []).append(BT_PREFIX + binding.leaf)
    threshold = config.battery.threshold
    for fault in config.faults:
        if isinstance(fault, SkillThresholdBug):
            _threshold_skill(fault, tree)
            threshold = fault.wrong_threshold
    users: Dict[str, List[str]] = {}
    texts = [TICK_GENERATOR_TEXT.format(root=tree.root.process_name)]
    for skill in tree.skills():
        spec = SKILLS[skill]
        texts.append(skill_text(spec, clients[skill], world, threshold))
        if spec.component:
            users.setdefault(spec.component, []).append(skill)
    for component in COMPONENTS:
        if component in users:
            texts.append(component_text(component, users[component], world))

    for fault in config.faults:
        needed = BATTERY_READER if isinstance(fault, ForceBatteryLevel) else \
            NAVIGATION if isinstance(fault, OverrideNavigation) else None
        if needed and needed not in users:
            raise ScenarioBuildError(f"fault {fault.kind} needs the {needed} component, which the tree does not use")

    parser = ModelParser(WorldEffects(world, config).natives())
    graphs = parser.parse_graphs("\n".join(texts), file=f"<scenario {config.name}>")
    channels: List[Channel] = list(compiled.channels)
    for component, skills in users.items():
        for skill in skills:
            channels.append(Channel(ChannelId(skill, component), 1))
            channels.append(Channel(ChannelId(component, skill), 1))
    shared = [
        VarDecl("clock", IntDomain(0, COUNTER_LIMIT), 0),
        VarDecl("robot_cell", IntDomain(0, world.max_index), world.index(world.start.cell)),
        VarDecl("heading", symbols("N", "E", "S", "W"), Symbol(world.start.heading)),
        VarDecl("odometer", IntDomain(0, COUNTER_LIMIT), 0),
        VarDecl("battery", IntDomain(0, 100), config.battery.initial_level),
    ]
    processes = graphs[:1] + compiled.processes + graphs[1:]
    hooks = [FaultHook(config.faults)] if config.faults else []
    cs = ChannelSystem(config.name, processes, channels, shared, compiled.tick_channel, tick_hooks=hooks)
    check_layering(cs, compiled)
    return cs, compiled


def build_scenario(config: ScenarioConfig, properties_text: Optional[str] = None,
                   bindings: Optional[Dict[str, int]] = None) -> Scenario:
    """Assemble world, tree, channel system and monitors for one configuration"""
    world = GridWorld(config.map)
    _check_world(world, config)
    tree = resolve_tree(config.tree)
    system, compiled = build_system(config, tree, world)

    if properties_text is None:
        if config.properties:
            try:
                properties_text = Path(config.properties).read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError) as e:
                raise ScenarioBuildError(f"cannot read properties {config.properties}: {e}") from e
        else:
            properties_text = DEFAULT_PROPERTIES
    values = {"theta": config.theta}
    values.update(bindings or {})
    properties = load_properties(properties_text, values, processes=[p.name for p in system.processes],
                                 channels=list(system.channels))
    scenario = Scenario(config, world, tree, compiled, system, properties)
    for prop in properties:
        try:
            scenario.monitors.append(synthesize(compile_from_scope(prop.name, prop.formula, compiled.tick_channel)))
        except NotMonitorableError as e:
            logger.warning(f"Property {prop.name} is not monitorable: {e.reason}")
            scenario.rejected.append((prop, e))
            scenario.diagnostics.record(IssueType.NOT_MONITORABLE, IssueSeverity.CRITICAL, e.reason, prop.name,
                                        e.subformula)
    logger.info(f"Built scenario {config.name}: {len(system.processes)} processes, {len(system.channels)} channels, "
                f"{len(scenario.monitors)} monitors")
    return scenario


def robot_state(scenario: Scenario, cfg: Configuration) -> Dict[str, object]:
    return {
        "robot_cell": list(scenario.world.cell(cfg.shared["robot_cell"])),
        "battery_level": cfg.shared["battery"],
        "clock": cfg.shared["clock"],
    }
