from kgauthz.service.config import ConfigError, EngineConfig, load_config
from kgauthz.service.engine import Engine, UnknownToken

__all__ = ["ConfigError", "Engine", "EngineConfig", "UnknownToken", "load_config"]
