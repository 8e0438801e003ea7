"""Stochastic deployment geometry: roads, providers, RSUs, and cell areas.

Roads form a Manhattan grid seeded by two axis-aligned Poisson processes;
infrastructure providers are a planar Poisson process whose nearest-point
cells partition the plane; RSUs sit uniformly along the roads.  The typical
cell area follows a Gamma law, from which the expected RSU count per cell
has a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Window",
    "RoadNetwork",
    "Deployment",
    "CellAreaModel",
    "sample_mplp",
    "place_rsus",
    "sample_inps",
    "assign_cells",
    "sample_deployment",
    "pvt_cell_area_pdf",
    "expected_cell_area",
    "expected_nrsu",
]


@dataclass(frozen=True)
class Window:
    """Axis-aligned simulation rectangle, in meters."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("window must have positive width and height")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class RoadNetwork:
    """Avenues (west-east, fixed y) and streets (north-south, fixed x)."""

    avenues: tuple[float, ...]
    streets: tuple[float, ...]
    window: Window

    def __post_init__(self):
        w = self.window
        if any(not (w.y_min <= y <= w.y_max) for y in self.avenues):
            raise ValueError("avenue coordinate outside window")
        if any(not (w.x_min <= x <= w.x_max) for x in self.streets):
            raise ValueError("street coordinate outside window")

    @property
    def n_roads(self) -> int:
        return len(self.avenues) + len(self.streets)

    def road_length(self, road_id: int) -> float:
        """Length of the road inside the window (avenues first, then streets)."""
        if road_id < 0 or road_id >= self.n_roads:
            raise IndexError("road id out of range")
        return self.window.width if road_id < len(self.avenues) else self.window.height

    def road_point(self, road_id: int, offset: float) -> tuple[float, float]:
        """Planar position of a point at ``offset`` meters along a road."""
        w = self.window
        if road_id < len(self.avenues):
            return (w.x_min + offset, self.avenues[road_id])
        x = self.streets[road_id - len(self.avenues)]
        return (x, w.y_min + offset)

    def total_length(self) -> float:
        return len(self.avenues) * self.window.width + len(
            self.streets
        ) * self.window.height


@dataclass(frozen=True)
class Deployment:
    """Providers, RSUs on roads, and the nearest-provider cell assignment."""

    roads: RoadNetwork
    inp_positions: tuple[tuple[float, float], ...]
    rsu_positions: tuple[tuple[int, float], ...]
    cell_assignment: tuple[int, ...] = field(default=())

    def rsu_xy(self) -> np.ndarray:
        return np.array(
            [self.roads.road_point(rid, off) for rid, off in self.rsu_positions]
        ).reshape(-1, 2)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_mplp(
    density_x: float, density_y: float, window: Window, seed
) -> RoadNetwork:
    """Sample the Manhattan grid: Poisson line counts, uniform positions.

    ``density_x`` seeds north-south streets along the x-axis; ``density_y``
    seeds west-east avenues along the y-axis.  Deterministic per seed.
    """
    if density_x < 0 or density_y < 0:
        raise ValueError("line densities must be nonnegative")
    rng = _as_rng(seed)
    n_streets = rng.poisson(density_x * window.width)
    n_avenues = rng.poisson(density_y * window.height)
    streets = np.sort(rng.uniform(window.x_min, window.x_max, size=n_streets))
    avenues = np.sort(rng.uniform(window.y_min, window.y_max, size=n_avenues))
    return RoadNetwork(
        avenues=tuple(float(y) for y in avenues),
        streets=tuple(float(x) for x in streets),
        window=window,
    )


def place_rsus(
    roads: RoadNetwork, rho_rsu: float, seed
) -> tuple[tuple[int, float], ...]:
    """Scatter RSUs along every road: Poisson counts, uniform offsets."""
    if rho_rsu <= 0:
        raise ValueError("rho_rsu must be positive")
    rng = _as_rng(seed)
    out: list[tuple[int, float]] = []
    for rid in range(roads.n_roads):
        length = roads.road_length(rid)
        if length <= 0:
            continue
        n = rng.poisson(rho_rsu * length)
        for off in np.sort(rng.uniform(0.0, length, size=n)):
            out.append((rid, float(off)))
    return tuple(out)


def sample_inps(lambda_inp: float, window: Window, seed) -> np.ndarray:
    """Planar Poisson process of infrastructure providers."""
    if lambda_inp <= 0:
        raise ValueError("lambda_inp must be positive")
    rng = _as_rng(seed)
    n = rng.poisson(lambda_inp * window.area)
    xs = rng.uniform(window.x_min, window.x_max, size=n)
    ys = rng.uniform(window.y_min, window.y_max, size=n)
    return np.column_stack((xs, ys))


def _toroidal_dist2(points: np.ndarray, q: np.ndarray, window: Window) -> np.ndarray:
    dx = np.abs(points[:, 0] - q[0])
    dy = np.abs(points[:, 1] - q[1])
    dx = np.minimum(dx, window.width - dx)
    dy = np.minimum(dy, window.height - dy)
    return dx * dx + dy * dy


def assign_cells(
    rsu_xy: np.ndarray,
    inp_positions: np.ndarray,
    window: Window,
    toroidal: bool = True,
) -> tuple[int, ...]:
    """Nearest-provider index per RSU; ties resolve to the lowest index.

    Distances wrap around the window by default, suppressing edge effects.
    """
    if len(inp_positions) == 0:
        raise ValueError("no providers to assign to")
    out = []
    for q in np.atleast_2d(rsu_xy):
        if toroidal:
            d2 = _toroidal_dist2(inp_positions, q, window)
        else:
            diff = inp_positions - q
            d2 = np.einsum("ij,ij->i", diff, diff)
        out.append(int(np.argmin(d2)))  # argmin takes the first minimum
    return tuple(out)


def sample_deployment(
    density_x: float,
    density_y: float,
    lambda_inp: float,
    rho_rsu: float,
    window: Window,
    seed,
) -> Deployment:
    """Sample roads, providers and RSUs, then assign RSUs to providers."""
    rng = _as_rng(seed)
    roads = sample_mplp(density_x, density_y, window, rng)
    rsus = place_rsus(roads, rho_rsu, rng) if roads.n_roads else ()
    inps = sample_inps(lambda_inp, window, rng)
    dep = Deployment(roads=roads, inp_positions=tuple(map(tuple, inps)), rsu_positions=rsus)
    if len(rsus) and len(inps):
        cells = assign_cells(dep.rsu_xy(), inps, window)
    else:
        cells = ()
    return Deployment(
        roads=roads,
        inp_positions=tuple(map(tuple, inps)),
        rsu_positions=rsus,
        cell_assignment=cells,
    )


@dataclass(frozen=True)
class CellAreaModel:
    """Gamma model of the typical nearest-provider cell area.

    ``a`` is the shape and ``b * lambda_inp`` the inverse scale; the default
    shape/scale pair is the standard planar Voronoi fit.
    """

    lambda_inp: float
    rho_road: float
    a: float = 3.61
    b: float = 3.57

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("shape parameters must be positive")
        if self.lambda_inp <= 0:
            raise ValueError("lambda_inp must be positive")
        if self.rho_road < 0:
            raise ValueError("rho_road must be nonnegative")


def pvt_cell_area_pdf(x: float, model: CellAreaModel) -> float:
    """Density of the typical cell area at ``x`` square meters."""
    if x <= 0:
        raise ValueError("cell area must be positive")
    bl = model.b * model.lambda_inp
    log_pdf = (
        model.a * math.log(bl)
        - math.lgamma(model.a)
        + (model.a - 1.0) * math.log(x)
        - bl * x
    )
    return math.exp(log_pdf)


def expected_cell_area(model: CellAreaModel) -> float:
    """Mean of the Gamma cell-area law: a / (b * lambda_inp)."""
    return model.a / (model.b * model.lambda_inp)


def expected_nrsu(
    model: CellAreaModel, rho_rsu: float, literal_integrand: bool = False
) -> float:
    """Expected RSU count in a provider cell: rho_road * a / (b * lambda * rho_rsu).

    The mean road length per cell is (road density) * (mean cell area); one
    RSU covers 1/rho_rsu meters of road, with the division convention of the
    closed form kept as published.  ``literal_integrand=True`` evaluates the
    road-length integrand exactly as printed (the area factor dropped), which
    collapses the mean road length to ``rho_road`` alone.
    """
    if rho_rsu <= 0:
        raise ValueError("rho_rsu must be positive")
    road_per_cell = (
        model.rho_road
        if literal_integrand
        else model.rho_road * expected_cell_area(model)
    )
    return road_per_cell / rho_rsu
