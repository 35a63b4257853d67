"""Core numerical toolkit: complex-path quadrature, small Newton solves,
depressed cubics, adaptive complex ODE integration, and log-log decay fits.

Conventions
-----------
* Paths are piecewise-smooth curves in the complex plane built from line
  segments and circular arcs.  Quadrature is composite Gauss-Legendre of
  order 16 with recursive bisection; the error indicator on each panel is
  the difference between the order-16 and order-8 rules.
* The ODE stepper is an embedded Dormand-Prince 5(4) pair on a real path
  parameter, with complex state vectors.  Local error per step is held to
  ``rel_tol * (1 + |y|)``.
* All computations are double precision and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateInput,
    NonConvergence,
    SingularJacobian,
    StepUnderflow,
)

__all__ = [
    "Path",
    "FitResult",
    "OdeResult",
    "integrate_path",
    "newton2",
    "solve_depressed_cubic",
    "integrate_ode_complex",
    "fit_decay_exponent",
]


# ---------------------------------------------------------------------------
# paths

class _Line:
    __slots__ = ("z0", "z1")

    def __init__(self, z0: complex, z1: complex):
        self.z0 = complex(z0)
        self.z1 = complex(z1)

    def eval(self, u):
        """Map u in [0,1] to (z, dz/du)."""
        u = np.asarray(u)
        dz = self.z1 - self.z0
        return self.z0 + u * dz, np.broadcast_to(dz, u.shape).copy() if u.ndim else dz

    @property
    def start(self):
        return self.z0

    @property
    def end(self):
        return self.z1

    def length(self):
        return abs(self.z1 - self.z0)

    def reversed(self):
        return _Line(self.z1, self.z0)


class _Arc:
    """Circular arc: center + r*exp(i*theta), theta from theta0 to theta1."""

    __slots__ = ("center", "radius", "theta0", "theta1")

    def __init__(self, center: complex, radius: float, theta0: float, theta1: float):
        self.center = complex(center)
        self.radius = float(radius)
        self.theta0 = float(theta0)
        self.theta1 = float(theta1)

    def eval(self, u):
        u = np.asarray(u)
        th = self.theta0 + u * (self.theta1 - self.theta0)
        e = np.exp(1j * th)
        z = self.center + self.radius * e
        dz = 1j * self.radius * e * (self.theta1 - self.theta0)
        return z, dz

    @property
    def start(self):
        return self.center + self.radius * np.exp(1j * self.theta0)

    @property
    def end(self):
        return self.center + self.radius * np.exp(1j * self.theta1)

    def length(self):
        return abs(self.radius * (self.theta1 - self.theta0))

    def reversed(self):
        return _Arc(self.center, self.radius, self.theta1, self.theta0)


@dataclass
class Path:
    """Piecewise-smooth oriented path made of lines and circular arcs.

    Consecutive segment endpoints must coincide.  The global parameter runs
    over [0, n_segments]; segment k covers [k, k+1].
    """

    segments: list = field(default_factory=list)

    def __post_init__(self):
        if not self.segments:
            raise DegenerateInput("empty path")
        scale = max(1.0, max(abs(s.start) for s in self.segments))
        for a, b in zip(self.segments, self.segments[1:]):
            if abs(a.end - b.start) > 1e-9 * scale:
                raise DegenerateInput(
                    f"path segments disconnected: {a.end} -> {b.start}"
                )

    # -- constructors -------------------------------------------------------
    @staticmethod
    def line(z0: complex, z1: complex) -> "Path":
        return Path([_Line(z0, z1)])

    @staticmethod
    def circle(center: complex, radius: float, ccw: bool = True) -> "Path":
        sign = 1.0 if ccw else -1.0
        return Path([_Arc(center, radius, 0.0, sign * 2.0 * np.pi)])

    @staticmethod
    def ellipse(center: complex, half_u: complex, half_v: complex, n_arcs: int = 0) -> "Path":
        """Closed ellipse z = center + half_u*cos(th) + half_v*sin(th), ccw in th."""
        return Path([_Ellipse(center, half_u, half_v)])

    @staticmethod
    def polyline(points: Sequence[complex]) -> "Path":
        if len(points) < 2:
            raise DegenerateInput("polyline needs at least two points")
        return Path([_Line(a, b) for a, b in zip(points, points[1:])])

    @staticmethod
    def from_segments(segments) -> "Path":
        return Path(list(segments))

    # -- geometry -----------------------------------------------------------
    @property
    def start(self):
        return self.segments[0].start

    @property
    def end(self):
        return self.segments[-1].end

    def length(self):
        return sum(s.length() for s in self.segments)

    def reversed(self) -> "Path":
        return Path([s.reversed() for s in reversed(self.segments)])

    def eval(self, s: float):
        """Evaluate at global parameter s in [0, len(segments)]."""
        n = len(self.segments)
        k = min(int(np.floor(s)), n - 1)
        u = s - k
        return self.segments[k].eval(u)

    def points(self, per_segment: int = 33) -> np.ndarray:
        """Sample points along the path (for clearance checks and plotting)."""
        out = []
        u = np.linspace(0.0, 1.0, per_segment)
        for seg in self.segments:
            z, _ = seg.eval(u)
            out.append(np.atleast_1d(z))
        return np.concatenate(out)


class _Ellipse:
    """Full ellipse z(u) = c + hu*cos(2 pi u) + hv*sin(2 pi u), u in [0,1]."""

    __slots__ = ("center", "hu", "hv")

    def __init__(self, center: complex, hu: complex, hv: complex):
        self.center = complex(center)
        self.hu = complex(hu)
        self.hv = complex(hv)

    def eval(self, u):
        u = np.asarray(u)
        th = 2.0 * np.pi * u
        z = self.center + self.hu * np.cos(th) + self.hv * np.sin(th)
        dz = 2.0 * np.pi * (-self.hu * np.sin(th) + self.hv * np.cos(th))
        return z, dz

    @property
    def start(self):
        return self.center + self.hu

    @property
    def end(self):
        return self.center + self.hu

    def length(self):
        return 2.0 * np.pi * max(abs(self.hu), abs(self.hv))

    def reversed(self):
        return _Ellipse(self.center, self.hu, -self.hv)


# ---------------------------------------------------------------------------
# quadrature

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)
_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)


def _panel(f, seg, a: float, b: float):
    """Order-16 and order-8 Gauss-Legendre estimates on sub-interval [a,b] of seg.

    Returns (value16, value8, l1mass16) where the last entry estimates
    the integral of |f| |dz| and serves as the error scale.
    """
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    u16 = mid + half * _GL16_X
    z16, dz16 = seg.eval(u16)
    fd = np.asarray(f(z16)) * dz16
    v16 = half * np.dot(_GL16_W, fd)
    l1 = abs(half) * np.dot(_GL16_W, np.abs(fd))
    u8 = mid + half * _GL8_X
    z8, dz8 = seg.eval(u8)
    v8 = half * np.dot(_GL8_W, np.asarray(f(z8)) * dz8)
    return v16, v8, l1


def integrate_path(
    f: Callable[[np.ndarray], np.ndarray],
    path: Path,
    rel_tol: float = 1e-10,
    max_depth: int = 26,
) -> complex:
    """Integrate a vectorized complex function along a path.

    ``f`` must accept a numpy array of complex points and return the array of
    values.  The result carries an absolute tolerance of roughly
    ``rel_tol * (|integral| + path_scale)``.

    Raises NonConvergence if panel bisection exceeds ``max_depth`` levels,
    which in practice signals a (near-)singular integrand on the path.
    """
    if isinstance(path, (_Line, _Arc, _Ellipse)):
        path = Path([path])
    # first sweep: the L1 mass of the integrand sets the error scale, so a
    # closed contour whose exact value cancels to 0 still terminates
    scale = 1e-30
    for seg in path.segments:
        _, _, l1 = _panel(f, seg, 0.0, 1.0)
        scale = max(scale, float(l1))

    total = 0.0 + 0.0j
    for seg in path.segments:
        stack = [(0.0, 1.0, 0)]
        while stack:
            a, b, depth = stack.pop()
            v16, v8, _ = _panel(f, seg, a, b)
            err = abs(v16 - v8)
            frac = (b - a)
            if err <= rel_tol * scale * max(frac, 1e-3) or err <= 1e-16 * scale:
                total += v16
                continue
            if depth >= max_depth:
                raise NonConvergence(
                    f"quadrature bisection exceeded depth {max_depth} on "
                    f"[{seg.eval(a)[0]:.6g}, {seg.eval(b)[0]:.6g}]"
                )
            m = 0.5 * (a + b)
            stack.append((a, m, depth + 1))
            stack.append((m, b, depth + 1))
    return total


# ---------------------------------------------------------------------------
# Newton in 2 real dimensions

def newton2(
    g: Callable[[np.ndarray], np.ndarray],
    x0,
    tol: float = 1e-12,
    max_iter: int = 40,
    fd_step: float = 1e-7,
) -> np.ndarray:
    """Solve g(x) = 0 for x in R^2 by damped Newton with a central-difference
    Jacobian (step ``fd_step * (1 + |x_i|)`` per coordinate).

    Raises SingularJacobian on a numerically singular Jacobian and
    NonConvergence if the residual does not reach ``tol`` in ``max_iter``
    iterations.
    """
    x = np.array(x0, dtype=float).reshape(2)
    gx = np.asarray(g(x), dtype=float).reshape(2)
    for _ in range(max_iter):
        res = float(np.max(np.abs(gx)))
        if res <= tol:
            return x
        J = np.empty((2, 2))
        for i in range(2):
            h = fd_step * (1.0 + abs(x[i]))
            xp = x.copy(); xp[i] += h
            xm = x.copy(); xm[i] -= h
            J[:, i] = (np.asarray(g(xp), dtype=float) - np.asarray(g(xm), dtype=float)) / (2.0 * h)
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        scale = max(np.max(np.abs(J)), 1e-300) ** 2
        if abs(det) < 1e-14 * scale:
            raise SingularJacobian(x)
        dx = np.linalg.solve(J, -gx)
        # simple backtracking keeps continuation robust
        lam = 1.0
        for _ in range(6):
            xn = x + lam * dx
            gn = np.asarray(g(xn), dtype=float).reshape(2)
            if np.max(np.abs(gn)) < res or lam < 0.05:
                break
            lam *= 0.5
        x, gx = xn, gn
    if float(np.max(np.abs(gx))) <= tol:
        return x
    raise NonConvergence(f"newton2 stalled at x={x} with residual {np.max(np.abs(gx)):.3e}")


# ---------------------------------------------------------------------------
# depressed cubic

def solve_depressed_cubic(p: complex, q: complex) -> tuple[complex, complex, complex]:
    """Roots of lambda^3 + p*lambda + q = 0 (complex p, q).

    One Cardano evaluation followed by two Newton polish sweeps per root.
    Root order is unspecified; the three roots always sum to ~0.
    """
    p = complex(p)
    q = complex(q)
    if p == 0 and q == 0:
        return (0j, 0j, 0j)
    w = np.exp(2j * np.pi / 3.0)
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    s = np.sqrt(complex(disc))
    # pick the sqrt sign that avoids catastrophic cancellation in -q/2 + s
    if abs(-q / 2.0 + s) < abs(-q / 2.0 - s):
        s = -s
    u = (-q / 2.0 + s) ** (1.0 / 3.0)
    if abs(u) < 1e-140:  # p == 0 branch: three cube roots of -q
        r = (-q) ** (1.0 / 3.0)
        roots = [r, r * w, r * w ** 2]
    else:
        v = -p / (3.0 * u)
        roots = [u + v, u * w + v / w, u * w ** 2 + v / w ** 2]
    polished = []
    for r in roots:
        for _ in range(2):
            fr = r * r * r + p * r + q
            dr = 3.0 * r * r + p
            if abs(dr) > 1e-140:
                r = r - fr / dr
        polished.append(r)
    return tuple(polished)


# ---------------------------------------------------------------------------
# ODE integration along complex paths

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass
class OdeResult:
    """Checkpointed states of a complex ODE integration.

    checkpoints : list of (z, y) at the caller-requested path points
    steps       : list of (z, y) at every accepted step (when recorded)
    n_steps     : accepted step count
    n_rejected  : rejected step count
    """

    checkpoints: list
    steps: list | None
    n_steps: int
    n_rejected: int

    @property
    def final(self):
        return self.checkpoints[-1]


def integrate_ode_complex(
    rhs: Callable[[complex, np.ndarray], np.ndarray],
    path: Path,
    y0,
    rel_tol: float = 1e-10,
    checkpoints: Sequence[float] | None = None,
    fixed_step: float | None = None,
    record_steps: bool = False,
    max_steps: int = 2_000_000,
    blowup: float = 1e10,
) -> OdeResult:
    """Integrate dy/dz = rhs(z, y) along ``path`` with a Dormand-Prince 5(4)
    pair, parametrizing by the path's global parameter.

    ``checkpoints`` are global path parameters (ascending, within
    [0, n_segments]); the integrator lands on them exactly and records the
    state.  The path end is always recorded.  With ``fixed_step`` set, error
    control is disabled and the given parameter step is used (order checks).

    Raises StepUnderflow when the accepted step collapses below
    ``1e-13 * total parameter length`` or the state exceeds ``blowup``; the
    exception carries the current z location.
    """
    y = np.atleast_1d(np.asarray(y0, dtype=complex))
    n_param = float(len(path.segments))
    cps = sorted(float(c) for c in (checkpoints if checkpoints is not None else []))
    for c in cps:
        if c < -1e-12 or c > n_param + 1e-12:
            raise DegenerateInput(f"checkpoint parameter {c} outside [0, {n_param}]")
    targets = [c for c in cps if c > 1e-12]
    if not targets or abs(targets[-1] - n_param) > 1e-12:
        targets.append(n_param)

    def f(s: float, yv: np.ndarray) -> np.ndarray:
        z, dz = path.eval(s)
        return np.atleast_1d(np.asarray(rhs(z, yv), dtype=complex)) * dz

    out_checkpoints = []
    steps_rec = [] if record_steps else None
    s = 0.0
    if cps and abs(cps[0]) <= 1e-12:
        out_checkpoints.append((path.eval(0.0)[0], y.copy()))
    if record_steps:
        steps_rec.append((path.eval(0.0)[0], y.copy()))

    h = fixed_step if fixed_step is not None else min(0.05, n_param / 16.0)
    h_floor = 1e-13 * n_param
    k1 = f(s, y)
    n_acc = n_rej = 0
    ti = 0
    while ti < len(targets):
        if n_acc + n_rej > max_steps:
            raise NonConvergence("ODE step budget exhausted")
        target = targets[ti]
        h_try = min(h, target - s)
        if h_try <= h_floor:
            if target - s <= h_floor:  # already at target
                out_checkpoints.append((path.eval(target)[0], y.copy()))
                s = target
                ti += 1
                continue
            raise StepUnderflow(path.eval(s)[0])
        ks = [k1]
        failed = False
        for i in range(1, 7):
            yi = y + h_try * sum(a * k for a, k in zip(_DP_A[i], ks))
            if np.max(np.abs(yi)) > blowup:
                failed = True
                break
            ks.append(f(s + _DP_C[i] * h_try, yi))
        if not failed:
            karr = np.array(ks)
            y5 = y + h_try * np.tensordot(_DP_B5, karr, axes=1)
            y4 = y + h_try * np.tensordot(_DP_B4, karr, axes=1)
            err = float(np.max(np.abs(y5 - y4)))
            tol = rel_tol * (1.0 + float(np.max(np.abs(y5))))
            if np.max(np.abs(y5)) > blowup or not np.isfinite(err):
                failed = True
        if fixed_step is not None:
            if failed:
                raise StepUnderflow(path.eval(s)[0], "state blow-up at fixed step")
            s += h_try
            y = y5
            k1 = ks[6]  # FSAL
            n_acc += 1
            if record_steps:
                steps_rec.append((path.eval(s)[0], y.copy()))
            if abs(s - target) <= 1e-12:
                out_checkpoints.append((path.eval(target)[0], y.copy()))
                ti += 1
            continue
        if failed or err > tol:
            n_rej += 1
            h = max(0.25 * h_try, h_try * 0.9 * (tol / err) ** 0.2 if not failed and err > 0 else 0.25 * h_try)
            if h <= h_floor:
                raise StepUnderflow(path.eval(s)[0])
            continue
        # accept
        s += h_try
        y = y5
        k1 = ks[6]  # FSAL
        n_acc += 1
        if record_steps:
            steps_rec.append((path.eval(s)[0], y.copy()))
        if err > 0:
            h = min(h_try * min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2)), n_param)
        else:
            h = min(h_try * 5.0, n_param)
        if abs(s - target) <= 1e-12:
            out_checkpoints.append((path.eval(target)[0], y.copy()))
            ti += 1
    return OdeResult(out_checkpoints, steps_rec, n_acc, n_rej)


# ---------------------------------------------------------------------------
# decay-exponent fits

@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of log10|value| against log10|t|."""

    slope: float
    intercept: float
    max_residual: float
    n_points: int


def fit_decay_exponent(abscissae, values) -> FitResult:
    """Fit |values| ~ C * |t|^slope on a log-log scale by least squares.

    ``abscissae`` must be positive and strictly increasing, ``values``
    nonzero, with at least 3 samples; otherwise DegenerateInput is raised.
    """
    t = np.asarray(abscissae, dtype=float)
    v = np.abs(np.asarray(values))
    if t.size < 3:
        raise DegenerateInput("need at least 3 samples for a decay fit")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise DegenerateInput("abscissae must be positive and strictly increasing")
    if np.any(v == 0) or not np.all(np.isfinite(v)):
        raise DegenerateInput("values must be finite and nonzero")
    lt, lv = np.log10(t), np.log10(v)
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = lv - (slope * lt + intercept)
    return FitResult(float(slope), float(intercept), float(np.max(np.abs(resid))), int(t.size))
