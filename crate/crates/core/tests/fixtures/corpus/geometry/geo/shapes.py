import math
from typing import List, Tuple


class Point:
    def __init__(self, x: float, y: float):
        self.x = x
        self.y = y

    def distance(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def translate(self, dx: float, dy: float) -> "Point":
        return Point(self.x + dx, self.y + dy)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x, self.y)


class Polygon:
    def __init__(self, points: List[Point]):
        self.points = points

    def perimeter(self) -> float:
        total = 0.0
        n = len(self.points)
        for i in range(n):
            total += self.points[i].distance(self.points[(i + 1) % n])
        return total

    def area(self) -> float:
        s = 0.0
        n = len(self.points)
        for i in range(n):
            a = self.points[i]
            b = self.points[(i + 1) % n]
            s += a.x * b.y - b.x * a.y
        return abs(s) / 2

    def centroid(self) -> Point:
        xs = [p.x for p in self.points]
        ys = [p.y for p in self.points]
        return Point(sum(xs) / len(xs), sum(ys) / len(ys))

    def bounding_box(self) -> Tuple[Point, Point]:
        xs = [p.x for p in self.points]
        ys = [p.y for p in self.points]
        return Point(min(xs), min(ys)), Point(max(xs), max(ys))


class Circle:
    def __init__(self, center: Point, radius: float):
        self.center = center
        self.radius = radius

    def area(self) -> float:
        return math.pi * self.radius ** 2

    def contains(self, p: Point) -> bool:
        return self.center.distance(p) <= self.radius


def regular_polygon(sides: int, radius: float) -> Polygon:
    pts = []
    for k in range(sides):
        angle = 2 * math.pi * k / sides
        pts.append(Point(radius * math.cos(angle), radius * math.sin(angle)))
    return Polygon(pts)
