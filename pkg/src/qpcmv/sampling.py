"""Sampling functions on the torus and the coefficient windows they generate.

A sampling function maps the torus into the open unit disk; evaluating it
along an orbit produces a window of Verblunsky coefficients.  Besides two
analytic families this module builds the piecewise "tube" functions that
are constant on the orbit tubes  U_l T^(j+lq) B  of a small ball B, the
construction that turns an even repetition time of the dynamics into an
exactly q-periodic stretch of coefficients.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .arith import as_fraction, dist_to_int
from .dynamics import Rotation, TorusDynamics, TorusPoint, iterate
from .errors import (
    ConstructionError,
    DegenerateOrbitError,
    DomainError,
    InvariantViolation,
    WindowError,
)

_RADIUS_FLOOR = Fraction(1, 10**30)
_RADIUS_MARGIN = Fraction(99, 100)  # stay off the exact disjointness bound


# ---------------------------------------------------------------------------
# Sampling functions
# ---------------------------------------------------------------------------


class ConstantFunction:
    """f == c."""

    kind = "constant"

    def __init__(self, value: complex):
        value = complex(value)
        if abs(value) >= 1:
            raise DomainError("constant value must lie in the open unit disk")
        self.value = value
        self.sup_norm = abs(value)

    def __call__(self, point: TorusPoint) -> complex:
        return self.value


class HarmonicFunction:
    """f(w) = coefficient * exp(2 pi i <modes, w>).

    sup |f| = |coefficient| exactly, so the norm needs no grid.
    """

    kind = "harmonic"

    def __init__(self, coefficient: complex, modes: Sequence[int] = (1,)):
        coefficient = complex(coefficient)
        if abs(coefficient) >= 1:
            raise DomainError("coefficient must lie in the open unit disk")
        self.coefficient = coefficient
        self.modes = tuple(int(m) for m in modes)
        self.sup_norm = abs(coefficient)

    def __call__(self, point: TorusPoint) -> complex:
        if point.dim < len(self.modes):
            raise DomainError("point dimension below mode count")
        phase = sum(m * float(c) for m, c in zip(self.modes, point.coords))
        return self.coefficient * cmath.exp(2j * math.pi * phase)


class TentBump:
    """h * max(0, 1 - dist(x, x0)/radius): a tent supported on a ball."""

    def __init__(self, center: TorusPoint, radius, amplitude: complex):
        self.center = center
        self.radius = as_fraction(radius)
        self.amplitude = complex(amplitude)
        if self.radius <= 0:
            raise DomainError("bump radius must be positive")

    def __call__(self, point: TorusPoint) -> complex:
        d = point.dist(self.center)
        if d >= self.radius:
            return 0j
        return self.amplitude * (1.0 - float(d / self.radius))


class PerturbedFunction:
    """base + bump, with the triangle-inequality norm bound."""

    kind = "perturbed"

    def __init__(self, base, bump: TentBump):
        self.base = base
        self.bump = bump
        self.sup_norm = base.sup_norm + abs(bump.amplitude)
        if self.sup_norm >= 1:
            raise DomainError("perturbation pushes the range onto the circle")

    def __call__(self, point: TorusPoint) -> complex:
        return self.base(point) + self.bump(point)


# ---------------------------------------------------------------------------
# Ball radius for the orbit-tube construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BallRadiusReport:
    radius: Fraction
    min_center_gap: Fraction
    tube_spread: Fraction
    disjoint_bound: Fraction
    containment_bound: Fraction
    verified: bool


def _pair_separations_rotation(system: Rotation, q: int):
    """Center separations for a rotation depend only on the index gap."""
    for m in range(1, 5 * q):
        yield m, tuple(dist_to_int(m * s) for s in system.shift)


def ball_radius(
    system: TorusDynamics,
    center: TorusPoint,
    q: int,
    epsilon,
    grid: int = 8,
) -> BallRadiusReport:
    """Radius r such that the closed images T^n B(c,r), n = 1..5q, are
    pairwise disjoint and every tube U_{l=0..4} T^(j+lq) B fits in a ball
    of radius 5 epsilon.

    Disjointness and containment are derived from exact center separations
    plus the bounding-box growth of the dynamics (rotations are isometries;
    the skew-shift shears the second coordinate by the iteration count),
    then re-verified on a boundary grid of the ball.
    """
    epsilon = as_fraction(epsilon)
    if q < 1:
        raise DomainError("q must be >= 1")
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")

    disjoint_bound: Optional[Fraction] = None
    min_gap: Optional[Fraction] = None

    if isinstance(system, Rotation):
        for m, seps in _pair_separations_rotation(system, q):
            cheb = max(seps)
            if cheb == 0:
                raise DegenerateOrbitError(
                    f"orbit returns exactly after {m} steps inside the 5q horizon"
                )
            if min_gap is None or cheb < min_gap:
                min_gap = cheb
        disjoint_bound = min_gap / 2
        orbit = [iterate(system, center, n) for n in range(0, 5 * q + 1)]
    else:
        orbit = [iterate(system, center, n) for n in range(0, 5 * q + 1)]
        for i in range(1, 5 * q + 1):
            for j in range(i + 1, 5 * q + 1):
                seps = [
                    dist_to_int(a - b)
                    for a, b in zip(orbit[i].coords, orbit[j].coords)
                ]
                cheb = max(seps)
                if cheb == 0:
                    raise DegenerateOrbitError(
                        f"orbit points {i} and {j} collide within the 5q horizon"
                    )
                if min_gap is None or cheb < min_gap:
                    min_gap = cheb
                # images stay in boxes of half-width r resp. (n+1) r; the
                # pair is split as soon as one coordinate separates them
                b1 = seps[0] / 2
                b2 = seps[1] / Fraction(i + j + 2)
                pair_bound = max(b1, b2)
                if disjoint_bound is None or pair_bound < disjoint_bound:
                    disjoint_bound = pair_bound

    contain_bound: Optional[Fraction] = None
    spread_max = Fraction(0)
    for j in range(1, q + 1):
        idx = [j + l * q for l in range(5)]
        spread = Fraction(0)
        for a in range(5):
            for b in range(a + 1, 5):
                d = orbit[idx[a]].dist(orbit[idx[b]])
                if d > spread:
                    spread = d
        spread_max = max(spread_max, spread)
        room = 5 * epsilon - spread / 2
        if room <= 0:
            raise DegenerateOrbitError(
                f"tube {j} centers alone spread beyond the 5*epsilon ball"
            )
        jb = room if isinstance(system, Rotation) else room / (idx[-1] + 1)
        if contain_bound is None or jb < contain_bound:
            contain_bound = jb

    radius = min(disjoint_bound * _RADIUS_MARGIN, contain_bound, Fraction(1, 8))
    if radius < _RADIUS_FLOOR:
        raise DegenerateOrbitError("no positive radius above the precision floor")
    if not verify_ball(system, center, q, epsilon, radius, grid):
        raise DegenerateOrbitError("boundary-grid verification failed")
    return BallRadiusReport(
        radius=radius,
        min_center_gap=min_gap,
        tube_spread=spread_max,
        disjoint_bound=disjoint_bound,
        containment_bound=contain_bound,
        verified=True,
    )


def _boundary_offsets(dim: int, radius: Fraction, grid: int):
    """Offsets from the center to boundary grid points of a max-metric ball."""
    if dim == 1:
        return [(-radius,), (radius,)]
    if dim == 2:
        ts = (
            [radius * Fraction(2 * t, grid - 1) - radius for t in range(grid)]
            if grid > 1
            else [Fraction(0)]
        )
        offs = []
        for t in ts:
            for e in (-radius, radius):
                offs.append((t, e))
                offs.append((e, t))
        return offs
    raise DomainError("boundary grid implemented for d <= 2")


def verify_ball(system, center, q, epsilon, radius, grid: int = 8) -> bool:
    """Grid re-verification of disjointness and 5-epsilon containment.

    Sampling can only falsify; a False here means the analytic bounds were
    wrong, so callers treat it as fatal.
    """
    epsilon = as_fraction(epsilon)
    radius = as_fraction(radius)
    offsets = _boundary_offsets(center.dim, radius, grid)
    offsets = offsets + [tuple(Fraction(0) for _ in range(center.dim))]
    half = Fraction(1, 2)
    ten_eps = min(2 * 5 * epsilon, half)

    if isinstance(system, Rotation):
        # separation of samples of T^i B and T^j B only depends on i - j
        deltas = [
            tuple(a - b for a, b in zip(o1, o2))
            for o1 in offsets
            for o2 in offsets
        ]
        for m in range(1, 5 * q):
            shift = [m * s for s in system.shift]
            for delta in deltas:
                d = max(
                    dist_to_int(sh + dl) for sh, dl in zip(shift, delta)
                )
                if d == 0:
                    return False
        # tube diameter likewise independent of the tube index
        diam = Fraction(0)
        for la in range(5):
            for lb in range(5):
                shift = [(la - lb) * q * s for s in system.shift]
                for delta in deltas:
                    d = max(
                        dist_to_int(sh + dl) for sh, dl in zip(shift, delta)
                    )
                    if d > diam:
                        diam = d
        return diam <= ten_eps

    points = [
        TorusPoint([c + o for c, o in zip(center.coords, off)])
        for off in offsets
    ]
    images = {
        n: [iterate(system, p, n) for p in points] for n in range(1, 5 * q + 1)
    }
    for i in range(1, 5 * q + 1):
        for j in range(i + 1, 5 * q + 1):
            for a in images[i]:
                for b in images[j]:
                    if a.dist(b) == 0:
                        return False
    for j in range(1, q + 1):
        tube = [p for l in range(5) for p in images[j + l * q]]
        for a in range(len(tube)):
            for b in range(a + 1, len(tube)):
                if tube[a].dist(tube[b]) > ten_eps:
                    return False
    return True


# ---------------------------------------------------------------------------
# Tube functions (piecewise members constant on orbit tubes)
# ---------------------------------------------------------------------------


class TubeFunction:
    """Continuous f equal to values[j-1] on the closed tube
    U_{l=0..4} T^(j+lq) B(center, radius), j = 1..q, and blended elsewhere.

    Membership tests are exact (rational arithmetic against the ball);
    off the tubes the value is an inverse-distance weighted blend of the
    tube values, which is continuous and stays inside the convex hull of
    the values, hence inside the disk.
    """

    kind = "tube"

    def __init__(self, system: TorusDynamics, center: TorusPoint, q: int,
                 radius, values: Sequence[complex]):
        if len(values) != q:
            raise ConstructionError(f"need exactly q={q} tube values")
        values = tuple(complex(v) for v in values)
        vmax = max(abs(v) for v in values)
        if vmax >= 1:
            raise ConstructionError("tube values must lie in the open disk")
        self.system = system
        self.center = center
        self.q = q
        self.radius = as_fraction(radius)
        self.values = values
        self.sup_norm = vmax
        self._orbit = [iterate(system, center, n) for n in range(0, 5 * q + 1)]
        self._orbit_f = np.array([p.as_floats() for p in self._orbit])
        self._check_disjoint()

    def _check_disjoint(self):
        two_r = 2 * self.radius
        if isinstance(self.system, Rotation):
            for m in range(1, 5 * self.q):
                if max(dist_to_int(m * s) for s in self.system.shift) <= two_r:
                    raise ConstructionError(
                        f"balls {m} apart overlap at radius {float(self.radius)}"
                    )
            return
        for i in range(1, 5 * self.q + 1):
            for j in range(i + 1, 5 * self.q + 1):
                if self._orbit[i].dist(self._orbit[j]) <= two_r:
                    raise ConstructionError(
                        f"balls {i} and {j} overlap at radius {float(self.radius)}"
                    )

    # -- geometry -----------------------------------------------------

    def ball_index(self, point: TorusPoint) -> Optional[int]:
        """n in [1, 5q] with point in closed T^n(B), or None (exact)."""
        if isinstance(self.system, Rotation):
            x = np.array(point.as_floats())
            d = self._cheb_float(x, self._orbit_f[1:])
            cand = np.nonzero(d <= float(self.radius) + 1e-9)[0]
            for k in cand:
                n = int(k) + 1
                if point.dist(self._orbit[n]) <= self.radius:
                    return n
            return None
        for n in range(1, 5 * self.q + 1):
            pre = iterate(self.system, point, -n)
            if pre.dist(self.center) <= self.radius:
                return n
        return None

    @staticmethod
    def _cheb_float(x: np.ndarray, pts: np.ndarray) -> np.ndarray:
        d = np.abs(pts - x[None, :])
        d = np.minimum(d, 1.0 - d)
        return d.max(axis=1)

    def tube_of(self, point: TorusPoint) -> Optional[int]:
        """Tube index j in [1, q] containing the point, or None."""
        n = self.ball_index(point)
        if n is None:
            return None
        return (n - 1) % self.q + 1

    def tube_balls(self, j: int) -> list[TorusPoint]:
        """Ball centers T^(j+lq) c, l = 0..4, of tube j."""
        if not (1 <= j <= self.q):
            raise DomainError("tube index out of range")
        return [self._orbit[j + l * self.q] for l in range(5)]

    def gordon_point(self, offset: Sequence = ()) -> TorusPoint:
        """The designated orbit point T^(2q)(center + offset).

        Starting the coefficient window there, the tube balls 1..5q line
        up exactly with orbit times -2q+1..3q, so the four block
        difference maxima and the certification window are all pinned by
        tube constancy.
        """
        if offset:
            base = TorusPoint(
                [c + as_fraction(o) for c, o in zip(self.center.coords, offset)]
            )
            if base.dist(self.center) > self.radius:
                raise DomainError("offset leaves the base ball")
        else:
            base = self.center
        return iterate(self.system, base, 2 * self.q)

    # -- evaluation ---------------------------------------------------

    def __call__(self, point: TorusPoint) -> complex:
        n = self.ball_index(point)
        if n is not None:
            return self.values[(n - 1) % self.q]
        if isinstance(self.system, Rotation):
            x = np.array(point.as_floats())
            d = self._cheb_float(x, self._orbit_f[1:]) - float(self.radius)
        else:
            d = np.array(
                [
                    float(iterate(self.system, point, -n).dist(self.center))
                    for n in range(1, 5 * self.q + 1)
                ]
            ) - float(self.radius)
        d = np.maximum(d, 1e-18)
        # flat index n-1 = (j-1) + l*q, so reshape(5, q) groups l-rows and
        # column j-1 collects the five balls of tube j
        tube_d = d.reshape(5, self.q).min(axis=0)
        w = 1.0 / tube_d
        vals = np.array(self.values)
        return complex(np.dot(w, vals) / w.sum())


def tube_function(
    system: TorusDynamics,
    center: TorusPoint,
    q: int,
    radius,
    values: Sequence[complex],
    fill: str = "blend",
) -> TubeFunction:
    """Build the piecewise-constant-on-tubes sampling function.

    ``radius`` should come from :func:`ball_radius`; overlapping tubes are
    a construction error.  Membership of the result in its own class is
    re-verified by sampling each tube.
    """
    if fill != "blend":
        raise ConstructionError(f"unknown fill rule {fill!r}")
    f = TubeFunction(system, center, q, radius, values)
    for j in range(1, q + 1):
        for p in f.tube_balls(j):
            if f(p) != f.values[j - 1]:
                raise ConstructionError(
                    f"tube {j} sample does not return its prescribed value"
                )
    return f


# ---------------------------------------------------------------------------
# Verblunsky windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VerblunskySequence:
    """Coefficients alpha(n) in the open disk on an integer window."""

    n_min: int
    n_max: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.n_max - self.n_min + 1,):
            raise WindowError("value array does not match the window")
        if np.any(np.abs(vals) >= 1):
            raise InvariantViolation("coefficients must lie inside the disk")
        object.__setattr__(self, "values", vals)

    def require(self, n_from: int, n_to: int):
        if n_from < self.n_min or n_to > self.n_max:
            raise WindowError(
                f"window [{self.n_min},{self.n_max}] does not cover "
                f"[{n_from},{n_to}]"
            )

    def alpha(self, n: int) -> complex:
        self.require(n, n)
        return complex(self.values[n - self.n_min])

    def rho(self, n: int) -> float:
        a = abs(self.alpha(n))
        return math.sqrt((1.0 - a) * (1.0 + a))

    def slice(self, n_from: int, n_to: int) -> np.ndarray:
        self.require(n_from, n_to)
        return self.values[n_from - self.n_min : n_to - self.n_min + 1]

    @staticmethod
    def constant(value: complex, n_min: int, n_max: int) -> "VerblunskySequence":
        vals = np.full(n_max - n_min + 1, complex(value))
        return VerblunskySequence(n_min, n_max, vals)

    @staticmethod
    def impurity(background: complex, site_value: complex, n_min: int,
                 n_max: int, site: int = 0) -> "VerblunskySequence":
        vals = np.full(n_max - n_min + 1, complex(background))
        vals[site - n_min] = complex(site_value)
        return VerblunskySequence(n_min, n_max, vals)

    def to_csv(self, path, seed: Optional[int] = None):
        with open(path, "w", newline="") as fh:
            if seed is not None:
                fh.write(f"# seed={seed}\n")
            w = csv.writer(fh)
            w.writerow(["n", "re_alpha", "im_alpha", "rho"])
            for n in range(self.n_min, self.n_max + 1):
                a = self.alpha(n)
                w.writerow([n, repr(a.real), repr(a.imag), repr(self.rho(n))])

    @staticmethod
    def from_csv(path) -> "VerblunskySequence":
        kept = []
        with open(path, newline="") as fh:
            for line in fh:
                if not line.startswith("#"):
                    kept.append(line)
        reader = csv.reader(kept)
        header = next(reader)
        if header[:3] != ["n", "re_alpha", "im_alpha"]:
            raise DomainError("coefficient csv must start with n,re_alpha,im_alpha")
        ns, vals = [], []
        for row in reader:
            if not row:
                continue
            ns.append(int(row[0]))
            vals.append(complex(float(row[1]), float(row[2])))
        if ns != list(range(ns[0], ns[0] + len(ns))):
            raise WindowError("coefficient csv rows must be consecutive in n")
        return VerblunskySequence(ns[0], ns[-1], np.array(vals))


def verblunsky_window(
    f,
    system: TorusDynamics,
    omega: TorusPoint,
    n_min: int,
    n_max: int,
) -> VerblunskySequence:
    """alpha(n) = f(T^n omega) for n in [n_min, n_max]."""
    if n_min > n_max:
        raise WindowError("n_min must be <= n_max")
    vals = np.empty(n_max - n_min + 1, dtype=complex)
    for k, n in enumerate(range(n_min, n_max + 1)):
        v = f(iterate(system, omega, n))
        if abs(v) >= 1:
            raise InvariantViolation(
                f"sampling function left the unit disk at n={n}"
            )
        vals[k] = v
    return VerblunskySequence(n_min, n_max, vals)


# ---------------------------------------------------------------------------
# Distance to the tube class (Chebyshev radii of value sets)
# ---------------------------------------------------------------------------


def _circumcircle(a: complex, b: complex, c: complex):
    d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag)
             + c.real * (a.imag - b.imag))
    if abs(d) < 1e-30:
        return None
    ux = (abs(a) ** 2 * (b.imag - c.imag) + abs(b) ** 2 * (c.imag - a.imag)
          + abs(c) ** 2 * (a.imag - b.imag)) / d
    uy = (abs(a) ** 2 * (c.real - b.real) + abs(b) ** 2 * (a.real - c.real)
          + abs(c) ** 2 * (b.real - a.real)) / d
    ctr = complex(ux, uy)
    return ctr, abs(a - ctr)


def _cross(o: complex, a: complex, b: complex) -> float:
    return ((a.real - o.real) * (b.imag - o.imag)
            - (a.imag - o.imag) * (b.real - o.real))


def min_enclosing_circle(points: Sequence[complex]) -> tuple[complex, float]:
    """Smallest circle containing the points (Welzl, deterministic order)."""
    pts = [complex(p) for p in points]
    if not pts:
        raise DomainError("no points")

    def contains(c, r, p):
        return abs(p - c) <= r + 1e-12 * (1 + r)

    def circle_two(p, q, support):
        c = (p + q) / 2
        r = abs(p - c)
        if all(contains(c, r, s) for s in support):
            return c, r
        left = None
        right = None
        for s in support:
            if contains(c, r, s):
                continue
            got = _circumcircle(p, q, s)
            if got is None:
                continue
            side = _cross(p, q, s)
            key = _cross(p, q, got[0])
            if side > 0 and (left is None or key > left[2]):
                left = (got[0], got[1], key)
            elif side < 0 and (right is None or key < right[2]):
                right = (got[0], got[1], key)
        if left is None and right is None:
            return c, r
        if left is None:
            return right[0], right[1]
        if right is None:
            return left[0], left[1]
        return (left[:2] if left[1] <= right[1] else right[:2])

    def circle_one(p, support):
        c, r = p, 0.0
        for i, s in enumerate(support):
            if contains(c, r, s):
                continue
            if r == 0.0:
                c, r = (p + s) / 2, abs(p - s) / 2
            else:
                c, r = circle_two(p, s, support[: i + 1])
        return c, r

    c, r = pts[0], 0.0
    for i, p in enumerate(pts):
        if not contains(c, r, p):
            c, r = circle_one(p, pts[:i])
    return c, r


def tube_sample_points(tubes: TubeFunction, j: int, grid: int) -> list[TorusPoint]:
    """Grid of points inside the closed balls of tube j."""
    pts = []
    r = tubes.radius
    offs = (
        [r * Fraction(2 * t, grid - 1) - r for t in range(grid)]
        if grid > 1
        else [Fraction(0)]
    )
    for c in tubes.tube_balls(j):
        if c.dim == 1:
            for t in offs:
                pts.append(TorusPoint([c.coords[0] + t]))
        else:
            for t in offs:
                for u in offs:
                    pts.append(TorusPoint([c.coords[0] + t, c.coords[1] + u]))
    return pts


@dataclass(frozen=True)
class TubeDistanceReport:
    distance: float
    per_tube: tuple[float, ...]
    grid: int


def distance_to_tubes(f, tubes: TubeFunction, grid: int = 5) -> TubeDistanceReport:
    """Upper bound on the sup-distance from f to the tube-constant class.

    The nearest constant-on-tubes function can match f exactly off the
    tubes, so the distance is the worst Chebyshev radius of f's value set
    over a single tube, estimated on a sample grid.
    """
    if grid < 1:
        raise DomainError("grid must be >= 1")
    radii = []
    for j in range(1, tubes.q + 1):
        vals = [f(p) for p in tube_sample_points(tubes, j, grid)]
        _, r = min_enclosing_circle(vals)
        radii.append(r)
    return TubeDistanceReport(
        distance=max(radii), per_tube=tuple(radii), grid=grid
    )


def tube_tolerance_verdict(f, tubes: TubeFunction, k: int, grid: int = 5):
    """Is f within half of (tolerance/4) of the tube-constant class?

    The tolerance is the coefficient perturbation budget from the transfer
    module at level k, period q, radius sup|f|.
    """
    from .transfer import coefficient_tolerance

    report = distance_to_tubes(f, tubes, grid)
    tol = coefficient_tolerance(k, tubes.q, f.sup_norm)
    threshold = 0.5 * (tol.value / 4.0)
    return report, tol, report.distance < threshold


def periodic_defect_maxima(f, system: TorusDynamics, omega: TorusPoint,
                           q: int) -> tuple[float, float, float, float]:
    """The four block-difference maxima across the window [-2q, 3q]:

        max_{1<=j<=q} |f(T^(j+m q) w) - f(T^(j+(m+1) q) w)|,  m = -2..1.

    For omega on the designated orbit point of a tube function these are
    exactly zero; for functions within d of the class they are < 2d.
    """
    out = []
    for m in (-2, -1, 0, 1):
        worst = 0.0
        for j in range(1, q + 1):
            a = f(iterate(system, omega, j + m * q))
            b = f(iterate(system, omega, j + (m + 1) * q))
            worst = max(worst, abs(a - b))
        out.append(worst)
    return tuple(out)
