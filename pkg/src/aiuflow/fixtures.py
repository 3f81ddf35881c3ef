"""Access to the bundled example specs and device profiles."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Union

from .metrics import DeviceProfile, parse_device_profile
from .model import ServiceSpec
from .parser import parse_spec

SPEC_SUFFIX = ".aiu.json"
DEVICE_SUFFIX = ".device.json"


def _root():
    return resources.files("aiuflow") / "fixtures"


def bundled_spec_names() -> list[str]:
    return sorted(
        entry.name[: -len(SPEC_SUFFIX)]
        for entry in _root().iterdir()
        if entry.name.endswith(SPEC_SUFFIX)
    )


def bundled_device_names() -> list[str]:
    return sorted(
        entry.name[: -len(DEVICE_SUFFIX)]
        for entry in (_root() / "devices").iterdir()
        if entry.name.endswith(DEVICE_SUFFIX)
    )


def load_bundled_spec(name: str) -> ServiceSpec:
    return parse_spec((_root() / f"{name}{SPEC_SUFFIX}").read_text(encoding="utf-8"))


def load_bundled_device(name: str) -> DeviceProfile:
    resource = _root() / "devices" / f"{name}{DEVICE_SUFFIX}"
    return parse_device_profile(resource.read_text(encoding="utf-8"))


def mutation_manifest() -> dict[str, str]:
    """Map of bundled mutation fixture name -> expected diagnostic code."""
    raw = (_root() / "mutations" / "manifest.json").read_text(encoding="utf-8")
    return json.loads(raw)


def load_mutation_source(name: str) -> str:
    return (_root() / "mutations" / f"{name}{SPEC_SUFFIX}").read_text(
        encoding="utf-8"
    )


def resolve_spec_arg(arg: Union[str, Path]) -> ServiceSpec:
    """Interpret a CLI argument as a spec file path or a bundled spec name."""
    path = Path(arg)
    if path.is_file():
        return parse_spec(path.read_text(encoding="utf-8"))
    name = str(arg)
    if name.endswith(SPEC_SUFFIX):
        name = name[: -len(SPEC_SUFFIX)]
    if name in bundled_spec_names():
        return load_bundled_spec(name)
    raise FileNotFoundError(f"no spec file or bundled spec named {arg!r}")


def resolve_device_arg(arg: Union[str, Path]) -> DeviceProfile:
    """Interpret a CLI argument as a profile file path or a bundled profile id."""
    path = Path(arg)
    if path.is_file():
        return parse_device_profile(path.read_text(encoding="utf-8"))
    name = str(arg)
    if name.endswith(DEVICE_SUFFIX):
        name = name[: -len(DEVICE_SUFFIX)]
    if name in bundled_device_names():
        return load_bundled_device(name)
    raise FileNotFoundError(f"no device file or bundled profile named {arg!r}")
