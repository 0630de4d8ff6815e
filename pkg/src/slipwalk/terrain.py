"""Parametric 1.5D height fields: flat ground, slopes, wave fields, stairs.

Height varies only along x.  Profiles are immutable after construction and
height queries are pure, so they are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class TerrainError(ValueError):
    pass


_MAX_ANGLE = math.radians(60.0)


@dataclass(frozen=True)
class Flat:
    z: float = 0.0


@dataclass(frozen=True)
class Slope:
    angle: float  # rad, height increases along x for positive angles
    x_start: float = 0.0
    length: float = 10.0


@dataclass(frozen=True)
class Wave:
    # successive (angle, length) ramps laid end to end
    sections: tuple[tuple[float, float], ...] = ()
    x_start: float = 0.0


@dataclass(frozen=True)
class Stairs:
    rises: tuple[float, ...] = ()
    tread: float = 0.30
    x_start: float = 0.0


@dataclass(frozen=True)
class TerrainProfile:
    """Composable height field.  Features are laid out along x; ground before
    the first feature is the base Flat height and the final height is held
    after the last feature ends."""

    base: Flat
    features: tuple[Slope | Wave | Stairs, ...] = ()
    extent: tuple[float, float] = (-10.0, 200.0)
    # (x_start, x_end, builder) per feature, precomputed
    _spans: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def height_at(self, x: float, y: float = 0.0) -> float:
        """Terrain height at (x, y).  At a stair edge the higher side wins."""
        lo, hi = self.extent
        if not (lo <= x <= hi):
            raise TerrainError(f"query x={x} outside terrain extent {self.extent}")
        z = self.base.z
        for feat, (xs, xe) in zip(self.features, self._spans):
            if x < xs:
                break
            z += _feature_height(feat, min(x, xe) - xs)
        return z

    def feature_end(self) -> float:
        """x coordinate where the last feature ends (extent lower bound if none)."""
        return self._spans[-1][1] if self._spans else self.extent[0]


def _feature_length(feat) -> float:
    if isinstance(feat, Slope):
        return feat.length
    if isinstance(feat, Wave):
        return sum(length for _, length in feat.sections)
    if isinstance(feat, Stairs):
        return feat.tread * len(feat.rises)
    raise TerrainError(f"unknown feature {feat!r}")


def _feature_height(feat, s: float) -> float:
    """Height gain of a feature at local coordinate s in [0, length]."""
    if isinstance(feat, Slope):
        return math.tan(feat.angle) * s
    if isinstance(feat, Wave):
        z = 0.0
        for angle, length in feat.sections:
            if s <= 0.0:
                break
            seg = min(s, length)
            z += math.tan(angle) * seg
            s -= length
        return z
    if isinstance(feat, Stairs):
        n = len(feat.rises)
        i = int(math.floor(s / feat.tread))
        if s == i * feat.tread:
            # exactly on an edge: the higher neighboring tread wins
            below = sum(feat.rises[: min(i, n)])
            above = sum(feat.rises[: min(i + 1, n)])
            return max(below, above)
        return sum(feat.rises[: min(i + 1, n)])
    raise TerrainError(f"unknown feature {feat!r}")


def build_profile(
    features,
    base_height: float = 0.0,
    extent: tuple[float, float] = (-10.0, 200.0),
) -> TerrainProfile:
    """Validate and assemble a terrain profile from an ordered feature list."""
    feats = tuple(features)
    if extent[0] >= extent[1]:
        raise TerrainError("extent must be an increasing x range")
    spans = []
    prev_end = extent[0]
    for feat in feats:
        if isinstance(feat, (Slope,)):
            _check_angle(feat.angle)
            if feat.length <= 0:
                raise TerrainError("slope length must be positive")
        elif isinstance(feat, Wave):
            if not feat.sections:
                raise TerrainError("wave field needs at least one section")
            for angle, length in feat.sections:
                _check_angle(angle)
                if length <= 0:
                    raise TerrainError("wave section length must be positive")
        elif isinstance(feat, Stairs):
            if not feat.rises:
                raise TerrainError("stairs need at least one rise")
            if feat.tread <= 0:
                raise TerrainError("stair tread must be positive")
            if not all(math.isfinite(r) for r in feat.rises):
                raise TerrainError("stair rises must be finite")
        else:
            raise TerrainError(f"unknown terrain feature {feat!r}")
        xs = feat.x_start
        xe = xs + _feature_length(feat)
        if xs < prev_end:
            raise TerrainError(f"feature starting at x={xs} overlaps previous segment")
        spans.append((xs, xe))
        prev_end = xe
    if prev_end > extent[1]:
        raise TerrainError("features extend past terrain extent")
    return TerrainProfile(base=Flat(base_height), features=feats, extent=extent, _spans=tuple(spans))


def _check_angle(angle: float):
    if not (-_MAX_ANGLE < angle < _MAX_ANGLE):
        raise TerrainError(f"slope angle {angle} rad outside (-60, 60) degrees")


def height_at(profile: TerrainProfile, x: float, y: float = 0.0) -> float:
    return profile.height_at(x, y)
