from pathlib import Path

TOY6G = Path(__file__).parent / "toy6g"


def example_config_path() -> Path:
    return TOY6G / "engine.conf"


def scenario_path(name: str) -> Path:
    return TOY6G / "scenarios" / f"{name}.scn"
