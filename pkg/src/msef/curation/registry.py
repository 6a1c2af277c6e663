"""Named scoring dimensions and their permitted ranges."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError

SUBJECTIVE = (
    "accessibility",
    "cleanliness",
    "perceived_safety",
    "visual_richness",
    "commercial_convenience",
    "overall_satisfaction",
)

OBJECTIVE = (
    "sidewalk_width",
    "roadway_width",
    "greening_level",
    "motorization",
    "commercial_activity_density",
    "sky_openness",
    "public_facilities",
)

LIKERT_RANGE = (1.0, 5.0)
FEATURE_RANGE = (1.0, 7.0)


@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str  # "subjective" | "objective"
    lo: float
    hi: float
    scored: bool = True

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass
class DimensionRegistry:
    dims: dict[str, Dimension] = field(default_factory=dict)

    def __post_init__(self):
        for name, d in self.dims.items():
            if name != d.name:
                raise ValidationError(f"registry key {name!r} != dimension name {d.name!r}")
            if not d.lo < d.hi:
                raise ValidationError(f"empty range for {name!r}")

    @classmethod
    def default(cls) -> "DimensionRegistry":
        dims = [Dimension(n, "subjective", *LIKERT_RANGE) for n in SUBJECTIVE]
        dims += [Dimension(n, "objective", *FEATURE_RANGE) for n in OBJECTIVE]
        return cls({d.name: d for d in dims})

    @classmethod
    def from_dict(cls, data: dict) -> "DimensionRegistry":
        """``{"subjective": [...], "objective": [...], "ranges": {name: [lo, hi]}}``"""
        ranges = data.get("ranges", {})
        dims = {}
        for kind, default in (("subjective", LIKERT_RANGE), ("objective", FEATURE_RANGE)):
            for name in data.get(kind, []):
                if name in dims:
                    raise ValidationError(f"dimension {name!r} registered twice", field=name)
                lo, hi = ranges.get(name, default)
                dims[name] = Dimension(name, kind, float(lo), float(hi))
        return cls(dims)

    def __contains__(self, name: str) -> bool:
        return name in self.dims

    def __getitem__(self, name: str) -> Dimension:
        try:
            return self.dims[name]
        except KeyError:
            raise ValidationError(f"unknown dimension {name!r}", field="dimension") from None

    def names(self, kind: str | None = None) -> list[str]:
        return [n for n, d in self.dims.items() if kind is None or d.kind == kind]

    def ranges(self) -> dict[str, tuple[float, float]]:
        return {n: (d.lo, d.hi) for n, d in self.dims.items()}
