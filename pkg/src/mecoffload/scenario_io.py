"""Flat text serialization of scenarios.

Format (versioned header, whitespace-separated tables, '#' comments):

    offload-scenario v1
    delta = 1.0
    slot_width = 0.05
    horizon = 2.5
    rng_seed = 42

    [channel]
    bandwidth = 7524766.0
    ...

    [channel ue=3]      # optional per-UE override

    [servers]
    # id cpu_frequency cpu_count
    0 2200000000.0 1

    [tasks]
    # id ue_id arrival size_bits cycles deadline processing_time urgent
    0 0 0.31 1500000.0 22000000.0 1.01 0.01 0

Floats are written with repr (shortest round-trip form), so
parse(serialize(s)) == s.
"""

from __future__ import annotations

from .errors import ScenarioFormatError
from .model import ChannelParams, Scenario, Server, Task

HEADER = "offload-scenario v1"

_CHANNEL_FIELDS = ("bandwidth", "tx_power", "gain", "noise_power", "bandwidth_cap")
_SERVER_COLUMNS = "# id cpu_frequency cpu_count"
_TASK_COLUMNS = "# id ue_id arrival size_bits cycles deadline processing_time urgent"


def _num(value: float) -> str:
    return repr(float(value))


def serialize_scenario(scenario: Scenario) -> str:
    lines = [HEADER]
    lines.append(f"delta = {_num(scenario.delta)}")
    lines.append(f"slot_width = {_num(scenario.slot_width)}")
    lines.append(f"horizon = {_num(scenario.horizon)}")
    lines.append(f"rng_seed = {scenario.rng_seed}")

    def channel_block(title: str, ch: ChannelParams):
        lines.append("")
        lines.append(f"[{title}]")
        for field in _CHANNEL_FIELDS:
            lines.append(f"{field} = {_num(getattr(ch, field))}")

    channel_block("channel", scenario.channel)
    for ue in sorted(scenario.channel_overrides):
        channel_block(f"channel ue={ue}", scenario.channel_overrides[ue])

    lines.append("")
    lines.append("[servers]")
    lines.append(_SERVER_COLUMNS)
    for srv in scenario.servers:
        lines.append(f"{srv.id} {_num(srv.cpu_frequency)} {srv.cpu_count}")

    lines.append("")
    lines.append("[tasks]")
    lines.append(_TASK_COLUMNS)
    for t in scenario.tasks:
        lines.append(" ".join([
            str(t.id), str(t.ue_id), _num(t.arrival), _num(t.size_bits),
            _num(t.cycles), _num(t.deadline), _num(t.processing_time),
            "1" if t.urgent else "0",
        ]))
    lines.append("")
    return "\n".join(lines)


def parse_scenario(text: str) -> Scenario:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise ScenarioFormatError(
            f"missing or unsupported header; expected {HEADER!r}")

    top: dict[str, str] = {}
    sections: list[tuple[str, list[str]]] = []
    current: list[str] | None = None
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            current = []
            sections.append((name, current))
            continue
        if current is None:
            if "=" not in line:
                raise ScenarioFormatError(f"line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            top[key.strip()] = value.strip()
        else:
            current.append(line)

    def need(key: str) -> str:
        if key not in top:
            raise ScenarioFormatError(f"missing top-level key {key!r}")
        return top[key]

    known = {"delta", "slot_width", "horizon", "rng_seed"}
    unknown = set(top) - known
    if unknown:
        raise ScenarioFormatError(f"unknown top-level keys: {sorted(unknown)}")

    def parse_channel(name: str, body: list[str]) -> ChannelParams:
        values: dict[str, float] = {}
        for line in body:
            if "=" not in line:
                raise ScenarioFormatError(f"[{name}]: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _CHANNEL_FIELDS:
                raise ScenarioFormatError(f"[{name}]: unknown field {key!r}")
            values[key] = float(value)
        missing = [f for f in _CHANNEL_FIELDS if f not in values]
        if missing:
            raise ScenarioFormatError(f"[{name}]: missing fields {missing}")
        return ChannelParams(**values)

    channel: ChannelParams | None = None
    overrides: dict[int, ChannelParams] = {}
    servers: list[Server] = []
    tasks: list[Task] = []
    seen = set()
    for name, body in sections:
        if name == "channel":
            channel = parse_channel(name, body)
        elif name.startswith("channel ue="):
            ue = int(name.split("=", 1)[1])
            overrides[ue] = parse_channel(name, body)
        elif name == "servers":
            for line in body:
                parts = line.split()
                if len(parts) != 3:
                    raise ScenarioFormatError(f"[servers]: expected 3 columns, got {line!r}")
                servers.append(Server(id=int(parts[0]),
                                      cpu_frequency=float(parts[1]),
                                      cpu_count=int(parts[2])))
        elif name == "tasks":
            for line in body:
                parts = line.split()
                if len(parts) != 8:
                    raise ScenarioFormatError(f"[tasks]: expected 8 columns, got {line!r}")
                if parts[7] not in ("0", "1"):
                    raise ScenarioFormatError(f"[tasks]: urgent flag must be 0 or 1, got {parts[7]!r}")
                tasks.append(Task(
                    id=int(parts[0]), ue_id=int(parts[1]),
                    arrival=float(parts[2]), size_bits=float(parts[3]),
                    cycles=float(parts[4]), deadline=float(parts[5]),
                    processing_time=float(parts[6]), urgent=parts[7] == "1",
                ))
        else:
            raise ScenarioFormatError(f"unknown section [{name}]")
        seen.add(name)
    if channel is None:
        raise ScenarioFormatError("missing [channel] section")
    if "servers" not in seen:
        raise ScenarioFormatError("missing [servers] section")
    if "tasks" not in seen:
        raise ScenarioFormatError("missing [tasks] section")

    return Scenario(
        tasks=tuple(tasks),
        servers=tuple(servers),
        channel=channel,
        delta=float(need("delta")),
        slot_width=float(need("slot_width")),
        horizon=float(need("horizon")),
        rng_seed=int(need("rng_seed")),
        channel_overrides=overrides,
    )


def write_scenario(scenario: Scenario, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(serialize_scenario(scenario))
    except OSError as exc:
        raise ScenarioFormatError(f"failed writing scenario to {path}: {exc}") from exc


def read_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioFormatError(f"failed reading scenario from {path}: {exc}") from exc
    return parse_scenario(text)
