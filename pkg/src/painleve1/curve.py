"""Modulus and period data for the elliptic curve w² = λ³ + (e^{iφ}/2)λ + A/4.

The direction φ fixes the curve up to the free constant A.  The value used
everywhere downstream is the one at which both actions have vanishing real
part:

    Re ∮_a w dλ = Re ∮_b w dλ = 0.

This module finds that A by Newton continuation, orders the branch points,
realizes the two cycles as concrete contours in the λ-plane, and packages
periods, actions, and the derived curve constants into an immutable
PhiContext.

Branch and cut conventions
--------------------------
w is single-valued off the cuts [λ₁, λ₂] and (−∞, λ₃]; each factor
√(λ−λ_j) carries its own ray cut, chosen so the product's cut system is
exactly those two sets, and the overall sign makes w ~ +λ^{3/2} for large
positive real λ.

The a-cycle is an ellipse enclosing λ₁ and λ₂ only, counterclockwise.  The
b-cycle crosses both sheets; it is computed as twice a one-sheet path from
λ₃ to λ₁ whose parametrization absorbs the inverse-square-root endpoint
singularities, with the orientation sign fixed by Im(ω_b/ω_a) > 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DegenerateCurve,
    InvariantViolation,
    NonConvergence,
    OnCut,
)
from .numerics import Path, integrate_path, newton2, solve_depressed_cubic

__all__ = [
    "PhiContext",
    "branch_points",
    "w_on_gamma_plus",
    "cycle_integrals",
    "boutroux_residual",
    "solve_A",
    "build_context",
]

PHI_MAX = np.pi / 5.0  # the construction is specific to |phi| < pi/5


# ---------------------------------------------------------------------------
# branch points and the two-sheet square root

def branch_points(phi: float, A: complex):
    """Roots of λ³ + (e^{iφ}/2)λ + A/4, ordered like the φ=0 configuration.

    λ₃ is the root with the most negative real part; of the remaining two,
    λ₁ has the larger imaginary part.  At φ=0 this gives λ₁ in the upper
    right, λ₂ its mirror below, λ₃ on the negative real axis, and the
    labels move continuously over the φ range handled here.
    """
    roots = np.array(solve_depressed_cubic(np.exp(1j * phi) / 2.0, A / 4.0))
    scale = 1.0 + np.max(np.abs(roots))
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(roots[i] - roots[j]) < 1e-8 * scale:
                raise DegenerateCurve(
                    f"branch points collide: {roots[i]:.9g} ~ {roots[j]:.9g}"
                )
    i3 = int(np.argmin(roots.real))
    rest = np.delete(roots, i3)
    lam1, lam2 = (rest[0], rest[1]) if rest[0].imag >= rest[1].imag else (rest[1], rest[0])
    return lam1, lam2, complex(roots[i3])


def _sqrt_ray(w, theta_cut: float):
    """Square root with branch cut along the ray arg = theta_cut."""
    psi = theta_cut - np.pi
    return np.exp(0.5j * psi) * np.sqrt(w * np.exp(-1j * psi))


def _make_w(lam1: complex, lam2: complex, lam3: complex) -> Callable:
    """Vectorized w(λ) on the first sheet, cuts [λ₁,λ₂] and (−∞,λ₃]."""
    th12 = np.angle(lam2 - lam1)

    def raw(lam):
        f1 = _sqrt_ray(lam - lam1, th12)
        f2 = _sqrt_ray(lam - lam2, th12)
        f3 = _sqrt_ray(lam - lam3, np.pi)
        return f1 * f2 * f3

    # fix the overall sign on the large positive real axis
    lam_ref = 10.0 * (1.0 + max(abs(lam1), abs(lam2), abs(lam3)))
    ratio = lam_ref**1.5 / raw(lam_ref)
    sign = 1.0 if ratio.real > 0 else -1.0

    def w(lam):
        return sign * raw(lam)

    return w


def _dist_segment(z, a: complex, b: complex):
    """Distance from z to the segment [a, b]."""
    z = np.asarray(z)
    d = b - a
    t = np.clip(((z - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(z - (a + t * d))


def _dist_left_ray(z, tip: complex):
    """Distance from z to the horizontal ray going left from tip."""
    z = np.asarray(z)
    u = z - tip
    return np.where(u.real >= 0, np.abs(u), np.abs(u.imag))


def _cut_distance(lam, lam1, lam2, lam3):
    return np.minimum(_dist_segment(lam, lam1, lam2), _dist_left_ray(lam, lam3))


def w_on_gamma_plus(lam, ctx: "PhiContext"):
    """The first-sheet branch of w at λ (scalar or array).

    Raises OnCut when λ comes within 1e-10 of the cut system; elsewhere
    w(λ)² = λ³ + (e^{iφ}/2)λ + A/4 and w ~ +λ^{3/2} on the far positive
    real axis.
    """
    lam1, lam2, lam3 = ctx.lam
    d = _cut_distance(lam, lam1, lam2, lam3)
    if np.any(d < 1e-10):
        raise OnCut(f"λ={lam} lies on a branch cut (distance {np.min(d):.3e})")
    return ctx._w(lam)


# ---------------------------------------------------------------------------
# cycle contours

_K_MAJOR = 1.25   # ellipse long semi-axis in units of |λ₁−λ₂|/2
_C_MINOR = 0.45   # short semi-axis as a fraction of the clearance to the λ₃ cut


def _a_contour(lam1, lam2, lam3, k_major=_K_MAJOR, c_minor=_C_MINOR) -> Path:
    """Counterclockwise ellipse around the cut [λ₁, λ₂], excluding λ₃.

    The nominal shape is set by k_major and c_minor.  Near the admissible
    angle boundary the branch points crowd together and the nominal ellipse
    can clip the λ₃ cut ray, so the minor radius (and, as a last resort,
    the major overshoot) is shrunk until the sampled contour keeps a margin
    of 4 percent of the half-span from the ray.
    """
    m = 0.5 * (lam1 + lam2)
    d = 0.5 * (lam1 - lam2)
    scale = abs(d)
    clearance = float(_dist_left_ray(m, lam3))
    r_minor = c_minor * clearance
    if r_minor < 1e-6 * scale:
        raise DegenerateCurve("a-cycle ellipse collapses against the λ₃ cut")
    theta = np.linspace(0.0, 2.0 * np.pi, 721)
    unit = d / scale
    for _ in range(80):
        pts = m + k_major * d * np.cos(theta) + 1j * unit * r_minor * np.sin(theta)
        margin = float(np.min(_dist_left_ray(pts, lam3)))
        if margin > 0.04 * scale:
            return Path.ellipse(m, k_major * d, 1j * unit * r_minor)
        if r_minor > 0.05 * clearance:
            r_minor *= 0.8
        elif k_major > 1.02:
            k_major = 1.0 + 0.85 * (k_major - 1.0)
        else:
            break
    raise DegenerateCurve("a-cycle ellipse cannot clear the λ₃ cut")


class _CosChord:
    """Path from λ₃ to λ₁ with square-root endpoint behavior absorbed.

    λ(u) = midpoint − halfspan·cos(πu) + bump·sin²(πu); near both endpoints
    λ − λ_end vanishes quadratically in the parameter, so dλ/w stays bounded
    even though w vanishes like a square root there.
    """

    __slots__ = ("lam3", "lam1", "bump")

    def __init__(self, lam3: complex, lam1: complex, bump: complex = 0.0):
        self.lam3 = complex(lam3)
        self.lam1 = complex(lam1)
        self.bump = complex(bump)

    def eval(self, u):
        u = np.asarray(u)
        mid = 0.5 * (self.lam1 + self.lam3)
        half = 0.5 * (self.lam1 - self.lam3)
        s, c = np.sin(np.pi * u), np.cos(np.pi * u)
        z = mid - half * c + self.bump * s * s
        dz = np.pi * half * s + np.pi * self.bump * 2.0 * s * c
        return z, dz

    @property
    def start(self):
        return self.lam3

    @property
    def end(self):
        return self.lam1

    def length(self):
        return 0.5 * np.pi * abs(self.lam1 - self.lam3) + 2.0 * abs(self.bump)

    def reversed(self):
        return _CosChord(self.lam1, self.lam3, self.bump)  # same trace, swapped ends


def _b_chord(lam1, lam3, bump_frac: float = 0.0) -> Path:
    span = lam1 - lam3
    bump = bump_frac * abs(span) * 1j * span / abs(span)
    return Path([_CosChord(lam3, lam1, bump)])


@dataclass(frozen=True)
class _RawCycles:
    """Periods/actions of the geometric contours, before basis selection.

    omega_* are periods of dλ/√P (√P = 2w), J_* of √P dλ = 2w dλ; the b
    entries already include the two-sheet doubling and the orientation sign
    making Im(omega_b/omega_a) > 0.
    """

    omega_a: complex
    omega_b: complex
    J_a: complex
    J_b: complex
    lam_a: complex   # period of λ dλ/√P over the a-contour
    lam_b: complex   # same over the doubled chord
    a_contour: Path
    b_chord: Path
    b_sign: float


def _raw_cycles(phi: float, A: complex, k_major=_K_MAJOR, c_minor=_C_MINOR,
                bump_frac: float = 0.0, rel_tol: float = 1e-11) -> _RawCycles:
    lam1, lam2, lam3 = branch_points(phi, A)
    w = _make_w(lam1, lam2, lam3)
    ell = _a_contour(lam1, lam2, lam3, k_major, c_minor)
    chord = _b_chord(lam1, lam3, bump_frac)

    inv_a = integrate_path(lambda z: 1.0 / w(z), ell, rel_tol)
    act_a = integrate_path(w, ell, rel_tol)
    lam_a = integrate_path(lambda z: z / w(z), ell, rel_tol)
    inv_b = integrate_path(lambda z: 1.0 / w(z), chord, rel_tol)
    act_b = integrate_path(w, chord, rel_tol)
    lam_b = integrate_path(lambda z: z / w(z), chord, rel_tol)

    omega_a, J_a = 0.5 * inv_a, 2.0 * act_a
    omega_b, J_b = inv_b, 4.0 * act_b
    lam_a = 0.5 * lam_a
    # lam_b doubles over the two sheets like omega_b: 2 * (1/2) * integral
    sign = 1.0
    if (omega_b / omega_a).imag < 0:
        sign = -1.0
        omega_b, J_b, lam_b = -omega_b, -J_b, -lam_b
    return _RawCycles(omega_a, omega_b, J_a, J_b, lam_a, lam_b, ell, chord, sign)


def cycle_integrals(phi: float, A: complex, rel_tol: float = 1e-11):
    """Periods and actions (ω_a, ω_b, J_a, J_b) of the geometric cycles.

    ω_c = (1/2)∮_c dλ/w and J_c = 2∮_c w dλ; the b-cycle values include the
    two-sheet doubling, with orientation such that Im(ω_b/ω_a) > 0.
    """
    raw = _raw_cycles(phi, A, rel_tol=rel_tol)
    return raw.omega_a, raw.omega_b, raw.J_a, raw.J_b


# ---------------------------------------------------------------------------
# the modulus A

def boutroux_residual(phi: float, A: complex, rel_tol: float = 1e-11):
    """(Re ∮_a w dλ, Re ∮_b w dλ) at the given trial modulus."""
    lam1, lam2, lam3 = branch_points(phi, A)
    w = _make_w(lam1, lam2, lam3)
    act_a = integrate_path(w, _a_contour(lam1, lam2, lam3), rel_tol)
    act_b = 2.0 * integrate_path(w, _b_chord(lam1, lam3), rel_tol)
    return float(act_a.real), float(act_b.real)


def solve_A(phi: float, seed: complex | None = None, step: float = 0.02) -> complex:
    """The unique modulus with vanishing real actions, by Newton continuation.

    Starting from the known real solution near 0.36 at φ=0, the direction is
    walked to the requested φ in increments of at most ``step`` radians,
    re-solving at each stage.  A caller-provided ``seed`` skips the walk.
    """
    if abs(phi) >= PHI_MAX:
        raise DegenerateCurve(f"|phi| = {abs(phi):.4f} outside (−π/5, π/5)")

    def solve_at(ph, a0):
        def g(x):
            return np.array(boutroux_residual(ph, complex(x[0], x[1])))

        x = newton2(g, [a0.real, a0.imag], tol=1e-11)
        return complex(x[0], x[1])

    if seed is not None:
        return solve_at(phi, complex(seed))
    A = solve_at(0.0, 0.36 + 0.0j)
    n = int(np.ceil(abs(phi) / step))
    for k in range(1, n + 1):
        A = solve_at(phi * k / n, A)
    return A


# ---------------------------------------------------------------------------
# context assembly

@dataclass(frozen=True)
class PhiContext:
    """Immutable bundle of curve data for one direction φ.

    lam holds (λ₁, λ₂, λ₃) with λ₁ = ℘(ω_a/2), λ₂ = ℘(−ω_a/2−ω_b/2),
    λ₃ = ℘(ω_b/2) for the Weierstrass function of the lattice generated by
    (omega_a, omega_b); gamma holds γ_j = (λ_j−λ_{j+1})(λ_j−λ_{j+2}) with
    cyclic indices.
    """

    phi: float
    A: complex
    lam: tuple
    g2: complex
    g3: complex
    omega_a: complex
    omega_b: complex
    J_a: complex
    J_b: complex
    tau: complex
    nu: complex
    c0: complex
    gamma: tuple
    Gamma0: complex
    Gamma1: complex
    gamma0: complex
    a_contour: Path
    b_chord: Path
    basis: tuple
    _w: Callable

    def __repr__(self):
        return (f"PhiContext(phi={self.phi:.6g}, A={self.A:.12g}, "
                f"tau={self.tau:.6g}, basis={self.basis})")


def _check(name, ok, detail=""):
    if not ok:
        raise InvariantViolation(name, detail)


def build_context(phi: float, A: complex | None = None,
                  rel_tol: float = 1e-11) -> PhiContext:
    """Solve for the modulus (unless given) and assemble the full context.

    Picks the period basis: among integer recombinations (with determinant
    ±1, coefficients up to 2) of the two geometric cycle classes, the one
    whose half-periods satisfy ℘(ω_a/2) = λ₁ and ℘(ω_b/2) = λ₃ with
    Im(ω_b/ω_a) > 0.  Actions transform by the same recombination.  Every
    stored invariant is verified; violations raise with the identity named.
    """
    from .elliptic import EllipticKernel, wp  # local: elliptic never imports curve

    if A is None:
        A = solve_A(phi)
    A = complex(A)
    lam1, lam2, lam3 = branch_points(phi, A)
    g2 = -2.0 * np.exp(1j * phi)
    g3 = -A
    raw = _raw_cycles(phi, A, rel_tol=rel_tol)

    # residual at the stored modulus
    res = boutroux_residual(phi, A)
    _check("boutroux-residual", max(abs(res[0]), abs(res[1])) <= 1e-9,
           f"residual={res}")

    # symmetric functions of the roots
    s = 1.0 + max(abs(lam1), abs(lam2), abs(lam3))
    _check("root-sum", abs(lam1 + lam2 + lam3) <= 1e-11 * s)
    e2 = lam1 * lam2 + lam2 * lam3 + lam3 * lam1
    _check("root-pair-sum", abs(e2 + g2 / 4.0) <= 1e-11 * s * s)
    _check("root-product", abs(lam1 * lam2 * lam3 - g3 / 4.0) <= 1e-11 * s**3)
    disc = (g2**3 - 27.0 * g3**2) / 16.0
    prod2 = ((lam2 - lam3) * (lam3 - lam1) * (lam1 - lam2)) ** 2
    _check("discriminant", abs(prod2 - disc) <= 1e-10 * abs(disc))

    gamma = (
        (lam1 - lam2) * (lam1 - lam3),
        (lam2 - lam3) * (lam2 - lam1),
        (lam3 - lam1) * (lam3 - lam2),
    )
    gamma0 = 5.0 / (g2**3 - 27.0 * g3**2)
    gamma0_alt = -5.0 / (8.0 * np.exp(3j * phi) + 27.0 * A * A)
    _check("gamma0-two-forms", abs(gamma0 - gamma0_alt) <= 1e-12 * abs(gamma0))
    _check("prefactor-sign",
           abs((8.0 * np.exp(3j * phi) + 27.0 * A * A) + (g2**3 - 27.0 * g3**2))
           <= 1e-12 * abs(g2**3 - 27.0 * g3**2))
    Gamma0 = 9.0 * g3 / (g2**3 - 27.0 * g3**2)
    sum_gm2 = sum(1.0 / g**2 for g in gamma)
    _check("Gamma0-partial-fractions",
           abs(Gamma0 - (3.0 * g3 / (8.0 * g2)) * sum_gm2) <= 1e-10 * max(abs(Gamma0), 1e-3))
    d12, d23, d31 = lam1 - lam2, lam2 - lam3, lam3 - lam1
    Gamma1 = 7.0 * (d23**4 * lam1**2 + d31**4 * lam2**2 + d12**4 * lam3**2) / (
        d23**4 * d31**4 * d12**4)

    if phi == 0.0:
        _check("phi0-real-modulus", abs(A.imag) <= 1e-10, f"Im A={A.imag:.3e}")
        _check("phi0-conjugate-pair", abs(lam2 - np.conj(lam1)) <= 1e-9 * s)
        _check("phi0-negative-root",
               abs(lam3.imag) <= 1e-9 * s and lam3.real < 0.0)

    # contour containment: a-cycle encloses λ₁, λ₂ once, never λ₃
    for pt, wind in ((lam1, 1.0), (lam2, 1.0), (lam3, 0.0)):
        got = integrate_path(lambda z, pt=pt: 1.0 / (z - pt), raw.a_contour,
                             1e-9) / (2j * np.pi)
        _check("a-contour-winding", abs(got - wind) <= 1e-6,
               f"winding({pt:.4g})={got:.4g}")

    # half-period values of the lattice shared by every admissible basis
    probe = _ContextSeed(phi, A, lam=(lam1, lam2, lam3), g2=g2, g3=g3,
                         omega_a=raw.omega_a, omega_b=raw.omega_b,
                         J_a=raw.J_a,
                         tau=raw.omega_b / raw.omega_a,
                         c0=-5.0 * raw.J_a / (2.0 * g2 * raw.omega_a)
                            - 3.0 * g3 / (2.0 * g2))
    probe_kernel = EllipticKernel(probe)
    half_vals = {
        (1, 0): wp(raw.omega_a / 2.0, probe_kernel),
        (0, 1): wp(raw.omega_b / 2.0, probe_kernel),
        (1, 1): wp((raw.omega_a + raw.omega_b) / 2.0, probe_kernel),
    }

    def half_class(p, q):
        return (p % 2, q % 2)

    lam_of = {}
    for cls, val in half_vals.items():
        dists = [abs(val - t) for t in (lam1, lam2, lam3)]
        j = int(np.argmin(dists))
        _check("half-period-matching", dists[j] <= 1e-8 * s,
               f"℘ at class {cls} = {val:.8g} matches no branch point")
        lam_of[cls] = j
    _check("half-period-matching", set(lam_of.values()) == {0, 1, 2},
           f"classes map to {lam_of}")

    best = None
    rng = range(-2, 3)
    for p in rng:
        for q in rng:
            if half_class(p, q) not in lam_of or lam_of[half_class(p, q)] != 0:
                continue
            for r in rng:
                for ss in rng:
                    if p * ss - q * r not in (-1, 1):
                        continue
                    if lam_of.get(half_class(r, ss)) != 2:
                        continue
                    W_a = p * raw.omega_a + q * raw.omega_b
                    W_b = r * raw.omega_a + ss * raw.omega_b
                    if (W_b / W_a).imag <= 1e-9:
                        continue
                    key = (abs(p) + abs(q) + abs(r) + abs(ss),
                           0 if W_a.real > 0 else 1,
                           p, q, r, ss)
                    if best is None or key < best[0]:
                        best = (key, (p, q, r, ss))
    _check("half-period-matching", best is not None, "no admissible basis")
    p, q, r, ss = best[1]
    omega_a = p * raw.omega_a + q * raw.omega_b
    omega_b = r * raw.omega_a + ss * raw.omega_b
    J_a = p * raw.J_a + q * raw.J_b
    J_b = r * raw.J_a + ss * raw.J_b
    lam_per_a = p * raw.lam_a + q * raw.lam_b
    tau = omega_b / omega_a
    _check("positive-imag-tau", tau.imag > 0, f"tau={tau:.6g}")
    nu = (1.0 + tau) / 2.0
    c0 = -5.0 * J_a / (2.0 * g2 * omega_a) - 3.0 * g3 / (2.0 * g2)

    # c₀ against its defining period: ∮_a λ dλ/√P = c₀ ω_a
    _check("c0-period", abs(lam_per_a - c0 * omega_a) <= 1e-8 * (1 + abs(c0 * omega_a)),
           f"period={lam_per_a:.10g} c0*omega_a={c0 * omega_a:.10g}")

    # Bilinear pairing of the period and action differentials.  The only
    # pole of w dlam sits at infinity, where the local expansion gives the
    # residue (4/5)e^{i phi}; any homology-inconsistent normalization of
    # the cycle integrals breaks this by an O(1) amount.
    legendre = omega_a * J_b - omega_b * J_a
    target = 8j * np.pi / 5.0 * np.exp(1j * phi)
    _check("action-period-pairing", abs(legendre - target) <= 1e-8 * abs(target),
           f"pairing={legendre:.10g} expected={target:.10g}")

    ctx = PhiContext(
        phi=float(phi), A=A, lam=(lam1, lam2, lam3), g2=g2, g3=g3,
        omega_a=omega_a, omega_b=omega_b, J_a=J_a, J_b=J_b, tau=tau, nu=nu,
        c0=c0, gamma=gamma, Gamma0=Gamma0, Gamma1=Gamma1, gamma0=gamma0,
        a_contour=raw.a_contour, b_chord=raw.b_chord, basis=(p, q, r, ss),
        _w=_make_w(lam1, lam2, lam3),
    )

    # final kernel-level confirmation of the half-period convention
    kernel = EllipticKernel(ctx)
    _check("half-period-matching",
           abs(wp(omega_a / 2.0, kernel) - lam1) <= 1e-8 * s
           and abs(wp(omega_b / 2.0, kernel) - lam3) <= 1e-8 * s
           and abs(wp(-omega_a / 2.0 - omega_b / 2.0, kernel) - lam2) <= 1e-8 * s,
           "matched basis fails half-period values")
    return ctx


@dataclass(frozen=True)
class _ContextSeed:
    """Minimal stand-in for PhiContext during basis selection."""

    phi: float
    A: complex
    lam: tuple
    g2: complex
    g3: complex
    omega_a: complex
    omega_b: complex
    J_a: complex
    tau: complex
    c0: complex

    @property
    def nu(self):
        return (1.0 + self.tau) / 2.0
