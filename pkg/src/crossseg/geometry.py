"""Cross-shape scribble geometry.

A cross scribble is two nearly perpendicular straight segments AB and CD
crossing at an interior point O.  The four arm lengths |OA|, |OB|, |OC|,
|OD| and a target direction vector fully determine the pseudo mask built
from the cross.  Coordinates are continuous (sub-pixel), x along image
columns and y along image rows.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DegenerateArm, InvalidRate, NoCrossing, ParallelSegments

# Hard floor on the crossing angle: below this the skewed basis becomes
# numerically singular.  A softer warning fires for clearly sloppy crosses.
MIN_CROSS_ANGLE_DEG = 5.0
WARN_CROSS_ANGLE_DEG = 30.0
MIN_ARM_PX = 0.5

_MIN_SIN = math.sin(math.radians(MIN_CROSS_ANGLE_DEG))
_WARN_SIN = math.sin(math.radians(WARN_CROSS_ANGLE_DEG))


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Segment:
    a: Point2
    b: Point2

    @property
    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)


@dataclass(frozen=True)
class CrossScribble:
    """Validated cross: segments, intersection, arm lengths and direction.

    ``seg_ab`` carries endpoints A (``a``) and B (``b``), ``seg_cd`` carries
    C and D.  ``direction`` is the unit vector the positive y arm (towards A)
    is rotated onto when the mask is rasterized; it defaults to unit(A-O).
    Instances are built through :func:`build_cross`, which enforces the
    invariants (O strictly interior, arms > 0, crossing angle >= 5 deg).
    """
    seg_ab: Segment
    seg_cd: Segment
    origin: Point2
    arm_oa: float
    arm_ob: float
    arm_oc: float
    arm_od: float
    direction: tuple[float, float]

    @property
    def arms(self) -> tuple[float, float, float, float]:
        return (self.arm_oa, self.arm_ob, self.arm_oc, self.arm_od)

    @property
    def crossing_sin(self) -> float:
        """|sin| of the angle between the two segments."""
        ux, uy = _unit(self.seg_ab.b.x - self.seg_ab.a.x,
                       self.seg_ab.b.y - self.seg_ab.a.y)
        vx, vy = _unit(self.seg_cd.b.x - self.seg_cd.a.x,
                       self.seg_cd.b.y - self.seg_cd.a.y)
        return abs(ux * vy - uy * vx)


def _unit(dx: float, dy: float) -> tuple[float, float]:
    n = math.hypot(dx, dy)
    if n == 0.0:
        raise ValueError("zero-length vector has no direction")
    return dx / n, dy / n


def intersect(seg1: Segment, seg2: Segment) -> tuple[Point2, float, float]:
    """Intersection point of two segments with both segment parameters.

    Solves the 2x2 linear system on the infinite lines, then checks that
    the solution lies strictly inside both segments.  Raises
    :class:`ParallelSegments` when the crossing angle is below 5 degrees,
    :class:`NoCrossing` when the lines meet outside a segment.
    """
    d1x = seg1.b.x - seg1.a.x
    d1y = seg1.b.y - seg1.a.y
    d2x = seg2.b.x - seg2.a.x
    d2y = seg2.b.y - seg2.a.y
    len1 = math.hypot(d1x, d1y)
    len2 = math.hypot(d2x, d2y)
    if len1 == 0.0 or len2 == 0.0:
        raise NoCrossing("degenerate segment (zero length)")

    det = d1x * d2y - d1y * d2x
    sin_theta = abs(det) / (len1 * len2)
    if sin_theta < _MIN_SIN:
        raise ParallelSegments(
            f"crossing angle {math.degrees(math.asin(min(sin_theta, 1.0))):.2f} deg "
            f"is below the {MIN_CROSS_ANGLE_DEG} deg minimum")

    # seg1.a + t1*d1 = seg2.a + t2*d2
    rx = seg2.a.x - seg1.a.x
    ry = seg2.a.y - seg1.a.y
    t1 = (rx * d2y - ry * d2x) / det
    t2 = (rx * d1y - ry * d1x) / det
    if not (0.0 < t1 < 1.0 and 0.0 < t2 < 1.0):
        raise NoCrossing(
            f"lines meet at t1={t1:.4f}, t2={t2:.4f}, outside (0,1)")

    point = Point2(seg1.a.x + t1 * d1x, seg1.a.y + t1 * d1y)
    return point, t1, t2


def build_cross(seg_ab: Segment, seg_cd: Segment,
                direction_override: float | None = None) -> CrossScribble:
    """Assemble a validated :class:`CrossScribble` from two segments.

    ``direction_override`` is an angle in degrees; when given, the target
    direction is the unit vector (cos, sin) at that angle instead of the
    default unit(A-O).
    """
    origin, _, _ = intersect(seg_ab, seg_cd)

    arms = (
        math.hypot(seg_ab.a.x - origin.x, seg_ab.a.y - origin.y),
        math.hypot(seg_ab.b.x - origin.x, seg_ab.b.y - origin.y),
        math.hypot(seg_cd.a.x - origin.x, seg_cd.a.y - origin.y),
        math.hypot(seg_cd.b.x - origin.x, seg_cd.b.y - origin.y),
    )
    for name, arm in zip(("OA", "OB", "OC", "OD"), arms):
        if arm < MIN_ARM_PX:
            raise DegenerateArm(f"arm {name} is {arm:.3f} px (< {MIN_ARM_PX})")

    if direction_override is None:
        direction = _unit(seg_ab.a.x - origin.x, seg_ab.a.y - origin.y)
    else:
        rad = math.radians(direction_override)
        direction = (math.cos(rad), math.sin(rad))

    cross = CrossScribble(seg_ab=seg_ab, seg_cd=seg_cd, origin=origin,
                          arm_oa=arms[0], arm_ob=arms[1],
                          arm_oc=arms[2], arm_od=arms[3],
                          direction=direction)
    if cross.crossing_sin < _WARN_SIN:
        warnings.warn(
            f"crossing angle below {WARN_CROSS_ANGLE_DEG} deg; "
            "the cross is far from perpendicular", stacklevel=2)
    return cross


def shrink_cross(cross: CrossScribble, rate: float) -> CrossScribble:
    """Scale all four arms by (1 - rate); origin and direction unchanged.

    Simulates rougher annotation.  Endpoints move towards O so the record
    stays self-consistent.
    """
    if not (0.0 <= rate < 1.0):
        raise InvalidRate(f"shrink rate {rate} outside [0, 1)")
    if rate == 0.0:
        return cross
    s = 1.0 - rate
    o = cross.origin

    def pull(p: Point2) -> Point2:
        return Point2(o.x + (p.x - o.x) * s, o.y + (p.y - o.y) * s)

    return CrossScribble(
        seg_ab=Segment(pull(cross.seg_ab.a), pull(cross.seg_ab.b)),
        seg_cd=Segment(pull(cross.seg_cd.a), pull(cross.seg_cd.b)),
        origin=o,
        arm_oa=cross.arm_oa * s,
        arm_ob=cross.arm_ob * s,
        arm_oc=cross.arm_oc * s,
        arm_od=cross.arm_od * s,
        direction=cross.direction,
    )
