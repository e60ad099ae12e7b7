"""Selection of alpha spheres from Voronoi vertices by radius."""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import VoronoiVertex


@dataclass(frozen=True)
class RadiusBand:
    r_min: float = 3.0
    r_max: float = 5.0

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max):
            raise ValueError(f"radius band needs 0 < r_min < r_max, got [{self.r_min}, {self.r_max}]")

    def __contains__(self, radius: float) -> bool:
        return self.r_min <= radius <= self.r_max


@dataclass(frozen=True)
class AlphaSphere:
    """Empty sphere centred on a Voronoi vertex, touching its four defining atoms."""

    center: tuple[float, float, float]
    radius: float
    defining_atoms: tuple[int, int, int, int]


def filter_alpha_spheres(vertices: list[VoronoiVertex], band: RadiusBand = RadiusBand()) -> list[AlphaSphere]:
    """Keep vertices whose radius lies in the closed interval [r_min, r_max], in order."""
    return [
        AlphaSphere(v.center, v.radius, v.defining_atoms)
        for v in vertices
        if band.r_min <= v.radius <= band.r_max
    ]
