"""Line-oriented scenario scripts that drive an in-process engine.

::

    register <descriptor-file>
    query <agent-id> <Allowed|AccessDenied|SessionRevoked>[=<rows>] <query text...>
    revoke <agent-id>
    assert-audit <event> <count>

Descriptor paths resolve against the script's directory. ``Allowed=<n>``
additionally pins the number of returned rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from kgauthz.audit import EVENTS
from kgauthz.enforcement import Allowed
from kgauthz.service.config import EngineConfig
from kgauthz.service.engine import Engine
from kgauthz.session import AgentDescriptor, RegistrationError, load_descriptor

OUTCOME_KINDS = ("Allowed", "AccessDenied", "SessionRevoked")


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class RegisterStep:
    descriptor: AgentDescriptor
    line: int = 0


@dataclass(frozen=True)
class QueryStep:
    agent_id: str
    expect: str
    query: str
    rows: Optional[int] = None
    line: int = 0


@dataclass(frozen=True)
class RevokeStep:
    agent_id: str
    line: int = 0


@dataclass(frozen=True)
class AssertAuditStep:
    event: str
    count: int
    line: int = 0


Step = Union[RegisterStep, QueryStep, RevokeStep, AssertAuditStep]


@dataclass
class ScenarioScript:
    steps: list[Step] = field(default_factory=list)
    name: str = "<script>"


@dataclass
class ScenarioResult:
    passed: bool
    report: list[str]

    def __bool__(self) -> bool:
        return self.passed


def parse_script(text: str, base_dir: str | Path = ".", name: str = "<script>") -> ScenarioScript:
    base_dir = Path(base_dir)
    steps: list[Step] = []
    registered: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        args = rest.split()
        where = f"{name}:{lineno}"
        if head == "register":
            if len(args) != 1:
                raise ScriptError(f"{where}: register takes one descriptor path")
            try:
                desc = load_descriptor(base_dir / args[0])
            except (OSError, ValueError) as exc:
                raise ScriptError(f"{where}: bad descriptor: {exc}") from None
            registered.add(desc.agent_id)
            steps.append(RegisterStep(desc, lineno))
        elif head == "query":
            parts = rest.split(None, 2)
            if len(parts) != 3:
                raise ScriptError(f"{where}: query needs <agent> <expect> <query text>")
            agent, expect, query = parts
            kind, _, rows = expect.partition("=")
            if kind not in OUTCOME_KINDS:
                raise ScriptError(f"{where}: unknown expected outcome {kind!r}")
            if rows and (kind != "Allowed" or not rows.isdigit()):
                raise ScriptError(f"{where}: row counts only apply to Allowed")
            if agent not in registered:
                raise ScriptError(f"{where}: agent {agent!r} is not registered earlier in the script")
            steps.append(QueryStep(agent, kind, query, int(rows) if rows else None, lineno))
        elif head == "revoke":
            if len(args) != 1:
                raise ScriptError(f"{where}: revoke takes one agent id")
            if args[0] not in registered:
                raise ScriptError(f"{where}: agent {args[0]!r} is not registered earlier in the script")
            steps.append(RevokeStep(args[0], lineno))
        elif head == "assert-audit":
            if len(args) != 2 or args[0] not in EVENTS or not args[1].isdigit():
                raise ScriptError(f"{where}: expected 'assert-audit <event> <count>'")
            steps.append(AssertAuditStep(args[0], int(args[1]), lineno))
        else:
            raise ScriptError(f"{where}: unknown step {head!r}")
    return ScenarioScript(steps, name)


def load_script(path: str | Path) -> ScenarioScript:
    path = Path(path)
    return parse_script(path.read_text(encoding="utf-8"), path.parent, path.name)


def run_scenario(script: ScenarioScript, config: EngineConfig,
                 engine: Engine | None = None) -> ScenarioResult:
    """Run steps in order against a fresh engine; stop at the first mismatch."""
    engine = engine if engine is not None else Engine.from_config(config)
    tokens: dict[str, str] = {}
    report: list[str] = []

    def fail(step: Step, message: str) -> ScenarioResult:
        report.append(f"FAIL line {step.line}: {message}")
        return ScenarioResult(False, report)

    for step in script.steps:
        if isinstance(step, RegisterStep):
            try:
                session = engine.register(step.descriptor)
            except RegistrationError as exc:
                return fail(step, f"register {step.descriptor.agent_id}: {type(exc).__name__}: {exc}")
            tokens[step.descriptor.agent_id] = session.session_id
            report.append(f"ok   line {step.line}: register {step.descriptor.agent_id} "
                          f"granted {' '.join(sorted(p.text for p in session.granted))}")
        elif isinstance(step, QueryStep):
            if step.agent_id not in tokens:
                return fail(step, f"agent {step.agent_id} has no session")
            outcome = engine.query(tokens[step.agent_id], step.query)
            if outcome.kind != step.expect:
                return fail(step, f"expected {step.expect}, got {outcome}")
            if step.rows is not None and len(outcome.rows) != step.rows:
                return fail(step, f"expected {step.rows} rows, got {len(outcome.rows)}")
            extra = f" ({len(outcome.rows)} rows)" if isinstance(outcome, Allowed) else ""
            report.append(f"ok   line {step.line}: {step.agent_id} -> {outcome.kind}{extra}")
        elif isinstance(step, RevokeStep):
            if step.agent_id not in tokens:
                return fail(step, f"agent {step.agent_id} has no session")
            removed = engine.revoke(tokens[step.agent_id])
            report.append(f"ok   line {step.line}: revoke {step.agent_id} ({removed} removed)")
        else:
            count = engine.audit.count(step.event)
            if count != step.count:
                return fail(step, f"expected {step.count} {step.event} records, found {count}")
            report.append(f"ok   line {step.line}: audit {step.event} = {count}")
    return ScenarioResult(True, report)
