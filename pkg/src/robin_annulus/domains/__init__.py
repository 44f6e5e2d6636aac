"""Bundled test domains (convex outer polygon with polygonal holes)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..geometry import DomainWithHoles, parse_domain

THEOREM_DOMAINS = ("square_hole", "square_two_holes", "hexagon_hole", "near_annulus", "thin_rectangle_hole")


def names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files(__name__).iterdir() if p.name.endswith(".dom"))


def path(name: str) -> Path:
    p = resources.files(__name__) / f"{name}.dom"
    if not p.is_file():
        raise KeyError(f"no bundled domain {name!r}; available: {', '.join(names())}")
    return Path(str(p))


def load(name: str) -> DomainWithHoles:
    return parse_domain(path(name).read_text())
