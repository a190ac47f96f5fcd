"""Bundled desk-scale device models."""

from __future__ import annotations

from importlib import resources

from ..dsl import ModelDefinition, parse_model

NAMES = ("mini-ddr", "mini-ddr-bg", "mini-ddr-pwr", "guard-inhibitor", "guard-token")

# behavior-identical encodings of the same activation guard
EQUIVALENT_PAIR = ("guard-inhibitor", "guard-token")


def path(name: str):
    return resources.files(__name__).joinpath(f"{name}.dram")


def text(name: str) -> str:
    if name not in NAMES:
        raise KeyError(f"no bundled fixture {name!r}; choose from {', '.join(NAMES)}")
    return path(name).read_text(encoding="utf-8")


def load(name: str) -> ModelDefinition:
    return parse_model(text(name))


def load_all() -> dict[str, ModelDefinition]:
    return {n: load(n) for n in NAMES}
