from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from kgauthz.formats import parse_kv
from kgauthz.session import DEFAULT_TTL_SECONDS


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class EngineConfig:
    kb_path: Path
    ontology_path: Path
    role_policy_path: Path
    session_ttl_seconds: int = DEFAULT_TTL_SECONDS
    listen_address: str = "127.0.0.1:8080"
    audit_export_path: Optional[Path] = None

    @property
    def host_port(self) -> tuple[str, int]:
        host, _, port = self.listen_address.rpartition(":")
        return host or "127.0.0.1", int(port)


_KEYS = {"kb", "ontology", "role_policy", "session_ttl_seconds", "listen", "audit_export"}


def parse_config(text: str, base_dir: Path, source: str = "<config>") -> EngineConfig:
    try:
        values = parse_kv(text, source)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    unknown = values.keys() - _KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
    missing = {"kb", "ontology", "role_policy"} - values.keys()
    if missing:
        raise ConfigError(f"{source}: missing keys {sorted(missing)}")

    def resolve(value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else base_dir / path

    try:
        ttl = int(values.get("session_ttl_seconds", DEFAULT_TTL_SECONDS))
    except ValueError:
        raise ConfigError(f"{source}: session_ttl_seconds must be an integer") from None
    if ttl <= 0:
        raise ConfigError(f"{source}: session_ttl_seconds must be positive")
    listen = values.get("listen", "127.0.0.1:8080")
    _, sep, port = listen.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"{source}: listen must be host:port")
    export = values.get("audit_export")
    return EngineConfig(
        kb_path=resolve(values["kb"]),
        ontology_path=resolve(values["ontology"]),
        role_policy_path=resolve(values["role_policy"]),
        session_ttl_seconds=ttl,
        listen_address=listen,
        audit_export_path=resolve(export) if export else None,
    )


def load_config(path: str | Path) -> EngineConfig:
    """Load a ``key = value`` config file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent, str(path))
