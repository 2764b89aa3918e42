"""Live session orchestration: the tick loop that composes the plant,
controller, and monitor, applies operator actions at tick boundaries, and
feeds telemetry/alarm/query events to subscribers.

One writer (the tick loop) per session; readers take the session lock only
long enough to copy snapshots.  The knowledge graph is loaded read-only at
manager construction.
"""

from __future__ import annotations

import itertools
import threading
import time
import uuid
from dataclasses import dataclass

from . import monitor
from .corpus import reference_graph
from .monitor import chart_limits, trend_slope
from .plant import COOLANT_MAX, COOLANT_MIN
from .query import Query, QueryResult, result_to_dict, run_query
from .riskgraph import RiskGraph
from .scenario import ScenarioConfig, ScenarioEngine, default_config

__all__ = [
    "ServiceError",
    "UnknownSessionError",
    "ActionError",
    "SessionPausedError",
    "OperatorAction",
    "Session",
    "SessionManager",
    "ACTION_KINDS",
]

ACTION_KINDS = (
    "turn_off_heater",
    "set_coolant_valve",
    "acknowledge_alarm",
    "pause",
    "resume",
)


class ServiceError(Exception):
    pass


class UnknownSessionError(ServiceError):
    pass


class ActionError(ServiceError):
    pass


class SessionPausedError(ServiceError):
    pass


@dataclass(frozen=True)
class OperatorAction:
    kind: str
    issued_at: int
    target: float | None = None
    alarm_id: str | None = None

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise ActionError(f"unknown action kind {self.kind!r}")
        if self.kind == "set_coolant_valve" and self.target is None:
            raise ActionError("set_coolant_valve requires a target temperature")
        if self.kind == "acknowledge_alarm" and not self.alarm_id:
            raise ActionError("acknowledge_alarm requires an alarm id")


class Session:
    """A single closed-loop run plus its operator-facing logs."""

    def __init__(self, config: ScenarioConfig, graph: RiskGraph | None = None,
                 session_id: str | None = None):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.config = config
        self.graph = graph
        self.engine = ScenarioEngine(config)
        self.lock = threading.RLock()
        self.paused = True
        self.telemetry: list[dict] = []
        self.alarms: list[dict] = []
        self.action_log: list[dict] = []
        self.events: list[dict] = []
        self._event_seq = itertools.count(1)
        self._alarm_seq = itertools.count(1)
        self._channels: dict[str, list[float]] = {
            "time": [], "coolant_temp": [], "tank_temp": [], "tank_conc": [],
            "feed_temp": [],
        }
        self._chart_flags: dict[str, bool] = {}
        self._runner: threading.Thread | None = None

    # --- read side -------------------------------------------------------

    @property
    def tick(self) -> int:
        return self.engine.t

    @property
    def finished(self) -> bool:
        return self.engine.t >= self.config.duration

    def snapshot(self) -> dict:
        with self.lock:
            return {
                "session_id": self.id,
                "tick": self.engine.t,
                "paused": self.paused,
                "finished": self.finished,
                "duration": self.config.duration,
                "state": {"c_a": self.engine.state.c_a, "temp": self.engine.state.temp},
                "alarm_count": len(self.alarms),
                "unacknowledged": sum(1 for a in self.alarms if not a["acknowledged"]),
                "action_count": len(self.action_log),
            }

    def telemetry_since(self, since: int = 0) -> list[dict]:
        with self.lock:
            return [r for r in self.telemetry if r["t"] > since]

    def alarms_snapshot(self) -> list[dict]:
        with self.lock:
            return [dict(a) for a in self.alarms]

    def events_since(self, seq: int = 0) -> list[dict]:
        with self.lock:
            return [e for e in self.events if e["seq"] > seq]

    # --- actions ---------------------------------------------------------

    def apply_action(self, kind: str, target: float | None = None,
                     alarm_id: str | None = None) -> dict:
        """Validate and apply an operator action.

        Plant-affecting actions mutate the engine immediately but by
        construction only take effect at the next tick boundary; pause,
        resume, and acknowledge are bookkeeping and act at once.
        """
        with self.lock:
            action = OperatorAction(
                kind=kind, issued_at=self.engine.t, target=target, alarm_id=alarm_id
            )
            if kind in ("turn_off_heater", "set_coolant_valve") and self.paused:
                raise ActionError("session is paused; resume before plant actions")
            ack: dict = {"kind": kind, "issued_at": action.issued_at, "ok": True}
            if kind == "turn_off_heater":
                self.engine.turn_off_heater()
            elif kind == "set_coolant_valve":
                clamped = self.engine.set_coolant_override(float(target))
                ack["target"] = clamped
                if clamped != float(target):
                    ack["notice"] = (
                        f"target {target:g} K clamped to {clamped:g} K "
                        f"(valid range [{COOLANT_MIN:g}, {COOLANT_MAX:g}])"
                    )
            elif kind == "acknowledge_alarm":
                match = next((a for a in self.alarms if a["id"] == alarm_id), None)
                if match is None:
                    raise ActionError(f"unknown alarm id {alarm_id!r}")
                match["acknowledged"] = True
                ack["alarm_id"] = alarm_id
            elif kind == "pause":
                self.paused = True
            elif kind == "resume":
                self.paused = False
            self.action_log.append(dict(ack))
            self._push_event("action", dict(ack))
            return ack

    # --- tick loop -------------------------------------------------------

    def advance(self, ticks: int = 1) -> list[dict]:
        """Advance the loop; refused while paused or after the duration."""
        out = []
        for _ in range(ticks):
            with self.lock:
                if self.paused:
                    raise SessionPausedError(f"session {self.id} is paused")
                if self.finished:
                    raise ServiceError(f"session {self.id} already ran its duration")
                out.append(self._step_locked())
        return out

    def _step_locked(self) -> dict:
        sample = self.engine.step()
        record = {
            "t": sample.t,
            "coolant_temp": sample.inputs.t_c,
            "tank_temp": sample.state.temp,
            "tank_conc": sample.state.c_a,
            "feed_temp": sample.inputs.t_f,
        }
        self.telemetry.append(record)
        ch = self._channels
        ch["time"].append(float(sample.t))
        ch["coolant_temp"].append(sample.inputs.t_c)
        ch["tank_temp"].append(sample.state.temp)
        ch["tank_conc"].append(sample.state.c_a)
        ch["feed_temp"].append(sample.inputs.t_f)
        self._push_event("telemetry", record)
        for alarm in self._scan_tick(sample.t):
            self.alarms.append(alarm)
            self._push_event("alarm", dict(alarm))
            self._auto_query(alarm)
        return record

    def _scan_tick(self, t: int) -> list[dict]:
        """Incremental first-crossing detection, equivalent to a batch
        monitor.scan over the series so far."""
        found = []
        for chart in self.config.charts:
            values = self._channels.get(chart.channel)
            if values is None or len(values) < chart.window:
                continue
            window = values[-chart.window:]
            key = f"{chart.channel}/{chart.kind}"
            if chart.kind == "trend":
                slope, se, _ = trend_slope(window)
                bad = abs(slope) > chart.k_sigma * se
                value, limit, severity = slope, 0.0, "warning"
            else:
                if chart.kind == "mean":
                    value = sum(window) / len(window)
                else:
                    mean = sum(window) / len(window)
                    value = (
                        sum((v - mean) ** 2 for v in window) / (len(window) - 1)
                    ) ** 0.5
                limits = chart_limits(chart)
                bad = value < limits.lcl or value > limits.ucl
                limit = limits.ucl if value > limits.ucl else limits.lcl
                severity = "alarm"
            if bad and not self._chart_flags.get(key, False):
                found.append(self._alarm_dict(t, chart.channel, chart.kind,
                                              value, limit, severity))
            self._chart_flags[key] = bad
        sp = self.config.setpoint
        if sp is not None:
            values = self._channels.get(sp.channel)
            if values:
                threshold = sp.setpoint + sp.deadband
                bad = values[-1] > threshold
                key = f"{sp.channel}/setpoint"
                if bad and not self._chart_flags.get(key, False):
                    found.append(self._alarm_dict(t, sp.channel, "setpoint",
                                                  values[-1], threshold, "alarm"))
                self._chart_flags[key] = bad
        return found

    def _alarm_dict(self, t, channel, chart, value, limit, severity) -> dict:
        return {
            "id": f"a{next(self._alarm_seq):04d}",
            "t": float(t),
            "channel": channel,
            "chart": chart,
            "value": float(value),
            "limit": float(limit),
            "severity": severity,
            "acknowledged": False,
        }

    # --- knowledge graph -------------------------------------------------

    def query_graph(self, keywords, max_depth: int = 4) -> QueryResult:
        if self.graph is None:
            raise ServiceError("no knowledge graph loaded for this session")
        return run_query(self.graph, Query(keywords=tuple(keywords), max_depth=max_depth))

    def _auto_query(self, alarm: dict) -> None:
        """Alarm channel+direction -> keyword lookup -> pushed query event."""
        if alarm["chart"] == "setpoint":
            key = f"{alarm['channel']}:high"
        else:
            key = f"{alarm['channel']}:{alarm['chart']}"
        keywords = self.config.alarm_keywords.get(key)
        if not keywords or self.graph is None:
            self._push_event("log", {"message": f"no auto-query mapping for {key!r}"})
            return
        result = self.query_graph(keywords)
        self._push_event(
            "query",
            {"alarm_id": alarm["id"], "keywords": list(keywords),
             "result": result_to_dict(result)},
        )

    def _push_event(self, kind: str, payload: dict) -> None:
        self.events.append({"seq": next(self._event_seq), "type": kind,
                            "tick": self.engine.t, "payload": payload})

    # --- scripted replay -------------------------------------------------

    def run_script(self, script: dict[int, list[dict]] | None = None,
                   until: int | None = None) -> None:
        """Deterministic batch run: actions scheduled per tick, then step.

        `script` maps a tick number to the actions applied at that boundary
        (before the step that produces tick+1).
        """
        script = script or {}
        stop = until if until is not None else self.config.duration
        self.paused = False
        while self.engine.t < stop:
            for spec in script.get(self.engine.t, []):
                self.apply_action(**spec)
            if self.paused:
                break
            self.advance(1)


class SessionManager:
    """Owns sessions and their pacing threads; shares one read-only graph."""

    def __init__(self, graph: RiskGraph | None = None):
        self.graph = graph if graph is not None else reference_graph()
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, config: ScenarioConfig | None = None) -> Session:
        session = Session(config or default_config(), graph=self.graph)
        with self._lock:
            self.sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        return session

    def apply_action(self, session_id: str, kind: str, target=None, alarm_id=None) -> dict:
        session = self.get(session_id)
        ack = session.apply_action(kind, target=target, alarm_id=alarm_id)
        if kind == "resume":
            self._ensure_runner(session)
        return ack

    def _ensure_runner(self, session: Session) -> None:
        with session.lock:
            if session._runner is not None and session._runner.is_alive():
                return
            thread = threading.Thread(
                target=self._run_loop, args=(session,), daemon=True,
                name=f"session-{session.id}",
            )
            session._runner = thread
            thread.start()

    @staticmethod
    def _run_loop(session: Session) -> None:
        tps = session.config.ticks_per_second
        period = 1.0 / tps if tps > 0 else 0.0
        while True:
            with session.lock:
                if session.paused or session.finished:
                    return
                session._step_locked()
            if period:
                time.sleep(period)
