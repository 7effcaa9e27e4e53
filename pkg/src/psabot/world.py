"""Deterministic simulated shuttle: topology, doors, sensors, clock.

Locations live on a 1-D coordinate line.  The world owns the single
mutable copy of the robot's position, door statuses and the simulated
clock; everything else (coordinates, sorts, sensor values, recorded
history) is fixed for a session.  Snapshots are value-semantics and
are what the evaluator threads through a dry run.

Configuration is a single INI-style document with dotted section names
(``[sensors.co2]``); ``load_config`` validates referential integrity
and reports the offending field path on failure.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources

DEFAULT_CONFIG_RESOURCE = "default_world.cfg"

SORTS = ("deck", "door", "seat", "location")


class InvalidConfig(Exception):
    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


class UnknownLocation(KeyError):
    pass


class UnknownSensor(KeyError):
    pass


class NoHistory(LookupError):
    pass


class EventRejected(ValueError):
    """An effector event whose guard the interpreter should have enforced."""


def parse_clock(text: str) -> float:
    """``HH:MM`` -> seconds since midnight."""
    try:
        hh, mm = text.strip().split(":")
        hour, minute = int(hh), int(mm)
    except ValueError:
        raise ValueError(f"bad clock time {text!r}")
    if not (0 <= hour <= 23 and 0 <= minute <= 59):
        raise ValueError(f"bad clock time {text!r}")
    return hour * 3600 + minute * 60


def format_clock(seconds: float) -> str:
    total = int(seconds) % 86400
    return f"{total // 3600:02d}:{(total % 3600) // 60:02d}"


@dataclass(frozen=True)
class SensorSpec:
    default: float
    unit: str
    confirm_phrase: str
    report_phrase: str
    surfaces: tuple[str, ...]
    overrides: dict[str, float] = field(default_factory=dict)

    def value_at(self, location: str) -> float:
        return self.overrides.get(location, self.default)


@dataclass(frozen=True)
class Durations:
    travel_per_unit: float = 30.0
    measure: float = 5.0
    door: float = 2.0
    history_query: float = 0.0


@dataclass(frozen=True)
class Report:
    """One sensor reading destined for the user; values always come from
    the world or its history, never from the generator."""

    sensor: str
    location: str
    value: float
    source: str  # "mobile" | "fixed"
    time_seconds: float | None = None  # None = current reading


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot of the mutable state vector."""

    position: float
    location: str | None  # named location if the robot is exactly at one
    doors: tuple[tuple[str, str], ...]  # sorted (door, status) pairs
    clock: float

    def door_status(self, door: str) -> str:
        for name, status in self.doors:
            if name == door:
                return status
        raise KeyError(door)

    def with_door(self, door: str, status: str) -> "WorldState":
        doors = tuple((d, status if d == door else s) for d, s in self.doors)
        return replace(self, doors=doors)

    def at(self, position: float, location: str | None) -> "WorldState":
        return replace(self, position=position, location=location)

    def plus_clock(self, seconds: float) -> "WorldState":
        return replace(self, clock=self.clock + seconds)


# Effector events accepted by WorldModel.apply().


@dataclass(frozen=True)
class Move:
    """Travel to a named location, or to a bare coordinate (interrupted
    travel stops between names).  ``fraction_of`` scales the charged
    duration when the move covers only part of a planned leg."""

    target: str | float


@dataclass(frozen=True)
class SetDoor:
    door: str
    status: str  # "open" | "closed"


@dataclass(frozen=True)
class AdvanceClock:
    seconds: float


class WorldModel:
    """The live world plus its fixed tables.  Single writer per session."""

    def __init__(
        self,
        locations: dict[str, float],
        sorts: dict[str, str],
        display_names: dict[str, str],
        doors: dict[str, str],
        sensors: dict[str, SensorSpec],
        history: dict[tuple[str, str], list[tuple[float, float]]],
        clock: float,
        robot_start: str,
        durations: Durations,
        confirm_threshold: float,
        pacing: str,
    ):
        self.locations = dict(locations)
        self.sorts = dict(sorts)
        self.display_names = dict(display_names)
        self.doors = dict(doors)
        self.sensors = dict(sensors)
        self.history = {k: sorted(v) for k, v in history.items()}
        self.clock = clock
        self.position = locations[robot_start]
        self.position_name: str | None = robot_start
        self.durations = durations
        self.confirm_threshold = confirm_threshold
        self.pacing = pacing
        self.apply_count = 0  # exposed so tests can spy on effector traffic

    # -- static queries ------------------------------------------------

    def extension(self, sort: str) -> list[str]:
        """All entities of a sort, in configuration order."""
        return [name for name in self.locations if self.sorts.get(name) == sort]

    def display(self, entity: str) -> str:
        return self.display_names.get(entity, entity.replace("_", " "))

    def nearest_location(self, position: float) -> str:
        return min(
            self.locations,
            key=lambda name: (abs(self.locations[name] - position), self.locations[name], name),
        )

    def travel_cost(self, origin: float, dest: float) -> float:
        return self.durations.travel_per_unit * abs(origin - dest)

    def read_sensor(self, sensor: str, location: str) -> float:
        if location not in self.locations:
            raise UnknownLocation(location)
        if sensor not in self.sensors:
            raise UnknownSensor(sensor)
        return self.sensors[sensor].value_at(location)

    def read_history(self, sensor: str, location: str, t_seconds: float) -> float:
        """Value recorded at the latest history timestamp <= t."""
        if location not in self.locations:
            raise UnknownLocation(location)
        if sensor not in self.sensors:
            raise UnknownSensor(sensor)
        records = self.history.get((sensor, location), [])
        best = None
        for stamp, value in records:
            if stamp <= t_seconds:
                best = value
            else:
                break
        if best is None:
            raise NoHistory(f"no {sensor} record at {location} at or before {format_clock(t_seconds)}")
        return best

    # -- the mutable state vector ---------------------------------------

    def snapshot(self) -> WorldState:
        return WorldState(
            position=self.position,
            location=self.position_name,
            doors=tuple(sorted(self.doors.items())),
            clock=self.clock,
        )

    def digest(self) -> tuple:
        """Hashable full-state fingerprint, for purity checks."""
        return (self.position, self.position_name, tuple(sorted(self.doors.items())), self.clock)

    def apply(self, event: Move | SetDoor | AdvanceClock) -> None:
        self.apply_count += 1
        if isinstance(event, Move):
            if isinstance(event.target, str):
                if event.target not in self.locations:
                    raise UnknownLocation(event.target)
                dest = self.locations[event.target]
                name = event.target
            else:
                dest = float(event.target)
                name = None
                for candidate, coord in self.locations.items():
                    if coord == dest:
                        name = candidate
                        break
            self.clock += self.travel_cost(self.position, dest)
            self.position = dest
            self.position_name = name
        elif isinstance(event, SetDoor):
            if event.door not in self.doors:
                raise UnknownLocation(event.door)
            if event.status not in ("open", "closed"):
                raise EventRejected(f"bad door status {event.status!r}")
            if self.doors[event.door] == event.status:
                raise EventRejected(f"{event.door} is already {event.status}")
            self.doors[event.door] = event.status
            self.clock += self.durations.door
        elif isinstance(event, AdvanceClock):
            self.clock += event.seconds
        else:
            raise TypeError(f"unknown event {event!r}")


# -- configuration ------------------------------------------------------


def _require(parser: configparser.ConfigParser, section: str) -> configparser.SectionProxy:
    if not parser.has_section(section):
        raise InvalidConfig(section, "missing section")
    return parser[section]


def load_config(text: str) -> WorldModel:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfig("(document)", str(exc))

    loc_section = _require(parser, "locations")
    locations: dict[str, float] = {}
    for name, raw in loc_section.items():
        try:
            locations[name] = float(raw)
        except ValueError:
            raise InvalidConfig(f"locations.{name}", f"not a coordinate: {raw!r}")
    if not locations:
        raise InvalidConfig("locations", "no locations defined")

    sorts: dict[str, str] = {}
    for name, sort in _require(parser, "sorts").items():
        if name not in locations:
            raise InvalidConfig(f"sorts.{name}", "names an unknown location")
        if sort not in SORTS:
            raise InvalidConfig(f"sorts.{name}", f"unknown sort {sort!r}")
        sorts[name] = sort
    for name in locations:
        if name not in sorts:
            raise InvalidConfig(f"sorts.{name}", "location has no sort")

    display_names = {}
    for name, display in parser.items("names") if parser.has_section("names") else []:
        if name not in locations:
            raise InvalidConfig(f"names.{name}", "names an unknown location")
        display_names[name] = display

    doors: dict[str, str] = {}
    for name, status in _require(parser, "doors").items():
        if name not in locations:
            raise InvalidConfig(f"doors.{name}", "names an unknown location")
        if sorts.get(name) != "door":
            raise InvalidConfig(f"doors.{name}", "entity is not of sort door")
        if status not in ("open", "closed"):
            raise InvalidConfig(f"doors.{name}", f"bad status {status!r}")
        doors[name] = status

    sensors: dict[str, SensorSpec] = {}
    for section in parser.sections():
        if not section.startswith("sensors."):
            continue
        sensor_id = section.split(".", 1)[1]
        body = parser[section]
        try:
            default = float(body.get("default"))
        except (TypeError, ValueError):
            raise InvalidConfig(f"{section}.default", "missing or not a number")
        overrides = {}
        for key, raw in body.items():
            if key in ("default", "unit", "confirm_phrase", "report_phrase", "surfaces"):
                continue
            if key not in locations:
                raise InvalidConfig(f"{section}.{key}", "override names an unknown location")
            overrides[key] = float(raw)
        surfaces = tuple(
            phrase.strip() for phrase in body.get("surfaces", sensor_id).split(",") if phrase.strip()
        )
        sensors[sensor_id] = SensorSpec(
            default=default,
            unit=body.get("unit", ""),
            confirm_phrase=body.get("confirm_phrase", sensor_id),
            report_phrase=body.get("report_phrase", sensor_id),
            surfaces=surfaces,
            overrides=overrides,
        )
    if not sensors:
        raise InvalidConfig("sensors", "no sensors defined")

    robot = _require(parser, "robot")
    start = robot.get("start")
    if start not in locations:
        raise InvalidConfig("robot.start", f"unknown location {start!r}")

    clock_section = _require(parser, "clock")
    try:
        clock = parse_clock(clock_section.get("initial", ""))
    except ValueError as exc:
        raise InvalidConfig("clock.initial", str(exc))

    history: dict[tuple[str, str], list[tuple[float, float]]] = {}
    if parser.has_section("history"):
        body = parser["history"]
        try:
            start_t = parse_clock(body.get("start", ""))
        except ValueError as exc:
            raise InvalidConfig("history.start", str(exc))
        try:
            interval = float(body.get("interval_minutes", "5")) * 60
        except ValueError:
            raise InvalidConfig("history.interval_minutes", "not a number")
        if interval <= 0:
            raise InvalidConfig("history.interval_minutes", "must be positive")
        t = start_t
        stamps = []
        while t <= clock:
            stamps.append(t)
            t += interval
        for sensor_id, spec in sensors.items():
            for name in locations:
                history[(sensor_id, name)] = [(s, spec.value_at(name)) for s in stamps]

    durations = Durations()
    if parser.has_section("durations"):
        body = parser["durations"]
        try:
            durations = Durations(
                travel_per_unit=float(body.get("travel_seconds_per_unit", "30")),
                measure=float(body.get("measure_seconds", "5")),
                door=float(body.get("door_seconds", "2")),
                history_query=float(body.get("history_query_seconds", "0")),
            )
        except ValueError:
            raise InvalidConfig("durations", "non-numeric duration")

    confirm_threshold = 10.0
    pacing = "instant"
    if parser.has_section("dialogue"):
        try:
            confirm_threshold = float(parser["dialogue"].get("confirm_threshold_seconds", "10"))
        except ValueError:
            raise InvalidConfig("dialogue.confirm_threshold_seconds", "not a number")
    if parser.has_section("execution"):
        pacing = parser["execution"].get("pacing", "instant")

    return WorldModel(
        locations=locations,
        sorts=sorts,
        display_names=display_names,
        doors=doors,
        sensors=sensors,
        history=history,
        clock=clock,
        robot_start=start,
        durations=durations,
        confirm_threshold=confirm_threshold,
        pacing=pacing,
    )


def default_config_text() -> str:
    return resources.files("psabot.data").joinpath(DEFAULT_CONFIG_RESOURCE).read_text()


def load_default() -> WorldModel:
    return load_config(default_config_text())
