"""Theta engine and the Weierstrass layer built on a PhiContext.

The only special function underneath everything is

    ϑ(z, τ) = Σ_{n∈ℤ} exp(πiτn² + 2πizn),   Im τ > 0,

truncated symmetrically with an explicit tail bound.  The Weierstrass
function is the log-derivative identity

    ℘(z) = c₀ − (1/ω_a) ∂_z (ϑ'/ϑ)(z/ω_a + ν, τ),    ν = (1+τ)/2,

whose constant c₀ comes with the curve context; ℘' uses one more theta
derivative.  On top of those sit the bounded quasi-period combination 𝔟
and closed-form primitives of 1/P(℘), 1/P(℘)², and ℘^k℘'/P(℘), where
P(λ) = 4λ³ − g₂λ − g₃.

Arguments are lattice-reduced before series evaluation (exactly, using the
quasi-periodicity laws), so the series stays at a dozen terms regardless of
where the caller sits in the plane.  All evaluators accept scalars or numpy
arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchPointProximity,
    NonPositiveImagTau,
    PoleProximity,
    ThetaZeroProximity,
)
from .numerics import FitResult, Path, fit_decay_exponent, integrate_path

__all__ = [
    "EllipticKernel",
    "LogBranchState",
    "theta",
    "wp",
    "wp_prime",
    "frak_b",
    "primitive_invP",
    "primitive_invP2",
    "primitive_log",
    "lemma53_check",
]

_TAIL = 18.0 * np.log(10.0)  # series tail target 1e-18


# ---------------------------------------------------------------------------
# raw theta series

def theta(z, tau, derivative_order: int = 0, n_terms: int | None = None):
    """ϑ and its z-derivatives by symmetric truncated summation.

    No argument reduction is performed here; the truncation grows with
    |Im z| so the raw series stays accurate anywhere.  Orders 0..3.
    """
    tau = complex(tau)
    if tau.imag <= 0:
        raise NonPositiveImagTau(f"Im tau = {tau.imag:.3e} <= 0")
    if not 0 <= derivative_order <= 3:
        raise ValueError("derivative_order must be in 0..3")
    z = np.asarray(z, dtype=complex)
    if n_terms is None:
        b = np.max(np.abs(z.imag)) if z.size else 0.0
        n_terms = int(np.ceil((b + np.sqrt(b * b + _TAIL * tau.imag / np.pi))
                              / tau.imag)) + 2
    n = np.arange(-n_terms, n_terms + 1)
    expo = 1j * np.pi * tau * n**2 + 2j * np.pi * np.multiply.outer(z, n)
    terms = np.exp(expo) * (2j * np.pi * n) ** derivative_order
    out = terms.sum(axis=-1)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# kernel

@dataclass(frozen=True)
class EllipticKernel:
    """Evaluation kernel for one curve context.

    theta_truncation is the symmetric series cutoff (auto-sized when None so
    the bound exp(−π Im τ (N² − 1.1 N)) < 1e-18 holds, valid for arguments
    reduced to the fundamental cell); lattice_reduction can be disabled for
    diagnostics, at the price of a larger effective truncation need.
    """

    ctx: object
    theta_truncation: int | None = None
    lattice_reduction: bool = True

    def __post_init__(self):
        tau = complex(self.ctx.tau)
        if tau.imag <= 0:
            raise NonPositiveImagTau(f"Im tau = {tau.imag:.3e} <= 0")
        if self.theta_truncation is None:
            n = 2
            while np.pi * tau.imag * (n * n - 1.1 * n) < _TAIL:
                n += 1
            object.__setattr__(self, "theta_truncation", n + 2)
        # coefficient solve for reduction: [Re u; Im u] = M [alpha; beta]
        m_tau = np.array([[1.0, tau.real], [0.0, tau.imag]])
        object.__setattr__(self, "_tau_inv", np.linalg.inv(m_tau))
        oa, ob = complex(self.ctx.omega_a), complex(self.ctx.omega_b)
        m_z = np.array([[oa.real, ob.real], [oa.imag, ob.imag]])
        object.__setattr__(self, "_lat_inv", np.linalg.inv(m_z))

    # -- lattice bookkeeping -------------------------------------------------
    def lattice_coords(self, z):
        """Real coefficients (α, β) with z = α ω_a + β ω_b."""
        z = np.asarray(z, dtype=complex)
        flat = np.stack([z.real.ravel(), z.imag.ravel()])
        ab = self._lat_inv @ flat
        return ab[0].reshape(z.shape), ab[1].reshape(z.shape)

    def lattice_distance(self, z):
        """Distance from z to the nearest period-lattice point."""
        a, b = self.lattice_coords(z)
        res = (np.asarray(z, dtype=complex)
               - np.round(a) * self.ctx.omega_a - np.round(b) * self.ctx.omega_b)
        return np.abs(res)

    def _reduce_u(self, u):
        """u = u_red + m + n τ with coefficients of u_red in [−1/2, 1/2]."""
        u = np.asarray(u, dtype=complex)
        tau = complex(self.ctx.tau)
        flat = np.stack([u.real.ravel(), u.imag.ravel()])
        ab = self._tau_inv @ flat
        alpha = ab[0].reshape(u.shape)
        beta = ab[1].reshape(u.shape)
        m, n = np.round(alpha), np.round(beta)
        return u - m - n * tau, n

    def _theta_all(self, u):
        """(ϑ, ϑ', ϑ'', ϑ''') at the (possibly reduced) argument.

        Returns (t0, t1, t2, t3, n) where n is the τ-direction reduction
        count; the log-derivative layer needs only n, since the exponential
        prefactors cancel in every ϑ^{(k)}/ϑ combination it forms.
        """
        u = np.asarray(u, dtype=complex)
        if self.lattice_reduction:
            u_red, n_shift = self._reduce_u(u)
        else:
            u_red, n_shift = u, np.zeros(u.shape)
        N = self.theta_truncation
        n = np.arange(-N, N + 1)
        expo = 1j * np.pi * complex(self.ctx.tau) * n**2 \
            + 2j * np.pi * np.multiply.outer(u_red, n)
        e = np.exp(expo)
        fac = 2j * np.pi * n
        t0 = e.sum(axis=-1)
        t1 = (e * fac).sum(axis=-1)
        t2 = (e * fac**2).sum(axis=-1)
        t3 = (e * fac**3).sum(axis=-1)
        return t0, t1, t2, t3, n_shift

    def L_all(self, u):
        """(L, L', L'') with L = ϑ'/ϑ, honoring L(u+m+nτ) = L(u) − 2πin.

        L' and L'' are fully lattice-periodic, so only L itself carries the
        reduction correction.
        """
        t0, t1, t2, t3, n_shift = self._theta_all(u)
        r1 = t1 / t0
        r2 = t2 / t0
        r3 = t3 / t0
        L = r1 - 2j * np.pi * n_shift
        Lp = r2 - r1 * r1
        Lpp = r3 - 3.0 * r2 * r1 + 2.0 * r1**3
        return L, Lp, Lpp


# ---------------------------------------------------------------------------
# Weierstrass layer

def _pole_check(z, kernel, shift=0.0, tol=1e-8, what="℘ pole"):
    d = kernel.lattice_distance(np.asarray(z, dtype=complex) - shift)
    if np.any(d < tol):
        raise PoleProximity(f"{what}: argument within {np.min(d):.2e} of the lattice")


def _wp_pair(z, kernel):
    """(℘(z), ℘'(z)) sharing one theta pass.  No proximity checks."""
    ctx = kernel.ctx
    u = np.asarray(z, dtype=complex) / ctx.omega_a + ctx.nu
    _, Lp, Lpp = kernel.L_all(u)
    wp_val = ctx.c0 - Lp / ctx.omega_a**2
    wp_prime_val = -Lpp / ctx.omega_a**3
    return wp_val, wp_prime_val


def wp(z, kernel: EllipticKernel):
    """Weierstrass ℘ for the kernel's lattice and curve constants."""
    _pole_check(z, kernel)
    val, _ = _wp_pair(z, kernel)
    return val if np.ndim(z) else complex(val)


def wp_prime(z, kernel: EllipticKernel):
    """℘', from the third theta derivative."""
    _pole_check(z, kernel)
    _, val = _wp_pair(z, kernel)
    return val if np.ndim(z) else complex(val)


def frak_b(sigma, kernel: EllipticKernel):
    """The bounded combination 𝔟(σ) = −(5/4)e^{−iφ}J_a σ + (ϑ'/ϑ)(σ/ω_a+ν).

    Its derivative is −ω_a(℘(σ) + (3/4)e^{−iφ}A): the linear slope −(5/4)
    e^{−iφ}J_a cancels against the J_a part of ω_a c₀, so only the branch
    constant survives.  Growth along the relevant lines comes entirely from
    the theta part's quasi-period jumps, which stay bounded in the strip.
    """
    ctx = kernel.ctx
    sigma = np.asarray(sigma, dtype=complex)
    _pole_check(sigma, kernel, what="theta zero", tol=1e-8 * abs(ctx.omega_a))
    u = sigma / ctx.omega_a + ctx.nu
    L, _, _ = kernel.L_all(u)
    slope = -1.25 * np.exp(-1j * ctx.phi) * ctx.J_a
    out = slope * sigma + L
    return out if out.ndim else complex(out)


def _frak_b_prime(sigma, kernel):
    """𝔟'(σ) = −(5/4)e^{−iφ}J_a + ω_a(c₀ − ℘(σ)), vectorized, unchecked."""
    ctx = kernel.ctx
    val, _ = _wp_pair(sigma, kernel)
    slope = -1.25 * np.exp(-1j * ctx.phi) * ctx.J_a
    return slope + ctx.omega_a * (ctx.c0 - val)


# ---------------------------------------------------------------------------
# primitives of 1/P, 1/P², ℘^k ℘'/P

def _P_of(ctx, lam):
    return 4.0 * lam**3 - ctx.g2 * lam - ctx.g3


_SHIFT_KEYS = ("tau_half", "zero", "one_half")


def _shifts(ctx):
    """Theta-argument offsets of the three bracket terms, as printed:
    τ/2, 0, 1/2 pair with γ₁, γ₂, γ₃ and put the term poles at ω₁, ω₂, ω₃."""
    return (ctx.tau / 2.0, 0.0, 0.5)


def _half_periods(ctx):
    w1 = ctx.omega_a / 2.0
    w3 = ctx.omega_b / 2.0
    return (w1, -w1 - w3, w3)


def primitive_invP(z, kernel: EllipticKernel):
    """A primitive of 1/P(℘(z)), additive constant fixed to zero.

    Equals −(1/4ω_a) Σ_j γ_j⁻² [ (5J_a/2g₂) z + (ϑ'/ϑ)(z/ω_a + s_j) ]
    with s = (τ/2, 0, 1/2).
    """
    ctx = kernel.ctx
    z = np.asarray(z, dtype=complex)
    for wj in _half_periods(ctx):
        _pole_check(z, kernel, shift=wj, what="bracket pole")
    lin = (5.0 * ctx.J_a / (2.0 * ctx.g2)) * z
    total = 0.0
    for gj, sj in zip(ctx.gamma, _shifts(ctx)):
        L, _, _ = kernel.L_all(z / ctx.omega_a + sj)
        total = total + (lin + L) / gj**2
    out = -total / (4.0 * ctx.omega_a)
    return out if out.ndim else complex(out)


def primitive_invP2(z, kernel: EllipticKernel):
    """A primitive of 1/P(℘(z))², additive constant fixed to zero.

    Equals γ₀ z − (1/96ω_a) Σ_j γ_j⁻⁴ (∂_z² − 48λ_j)[(5J_a/2g₂) z +
    (ϑ'/ϑ)(z/ω_a + s_j)]; the second derivative needs theta order 3.
    """
    ctx = kernel.ctx
    z = np.asarray(z, dtype=complex)
    for wj in _half_periods(ctx):
        _pole_check(z, kernel, shift=wj, what="bracket pole")
    lin = (5.0 * ctx.J_a / (2.0 * ctx.g2)) * z
    total = 0.0
    for gj, sj, lamj in zip(ctx.gamma, _shifts(ctx), ctx.lam):
        L, Lp, Lpp = kernel.L_all(z / ctx.omega_a + sj)
        bracket = Lpp / ctx.omega_a**2 - 48.0 * lamj * (lin + L)
        total = total + bracket / gj**4
    out = ctx.gamma0 * z - total / (96.0 * ctx.omega_a)
    return out if out.ndim else complex(out)


@dataclass
class LogBranchState:
    """Continuation record for the log primitives along a path.

    Holds the last arguments w_j = ℘(z) − λ_j and their accumulated
    (unwrapped) phases; successive calls must be close enough along the
    path that each w_j rotates by less than π between them.
    """

    w: np.ndarray
    args: np.ndarray


def primitive_log(z, k: int, kernel: EllipticKernel,
                  state: LogBranchState | None = None):
    """A primitive of ℘^k ℘' / P(℘) (k = 0, 1, 2), with branch tracking.

    Returns (value, state).  The value is (1/4) Σ_j γ_j⁻¹ λ_j^k
    log(℘(z) − λ_j); a fresh call (state=None) takes principal branches,
    and passing the returned state back in keeps every log continuous
    along the caller's path.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1, or 2")
    ctx = kernel.ctx
    wp_val, _ = _wp_pair(z, kernel)
    lam = np.array(ctx.lam)
    wnew = wp_val - lam
    scale = 1.0 + float(np.max(np.abs(lam)))
    if np.min(np.abs(wnew)) < 1e-8 * scale:
        raise BranchPointProximity(
            f"℘(z) within {np.min(np.abs(wnew)):.2e} of a branch point")
    if state is None:
        args = np.angle(wnew)
    else:
        args = state.args + np.angle(wnew / state.w)
    logs = np.log(np.abs(wnew)) + 1j * args
    value = 0.25 * np.sum(lam**k * logs / np.array(ctx.gamma))
    return complex(value), LogBranchState(w=wnew, args=args)


# ---------------------------------------------------------------------------
# bounded-sum tail check

def lemma53_check(alpha0: complex, kernel: EllipticKernel, T: float,
                  n_fit: int = 9) -> FitResult:
    """Decay fit for tails of ∫ [𝔟'(σ−α₀) + 𝔟'(σ+α₀)] 𝔟(σ) dσ/σ.

    The path runs parallel to the real axis through a generic complex
    offset (so it never meets lattice points), from s out to 8T; the
    returned fit is of log|tail(s)| against log s over s in [T/8, T].
    A slope near −1 is the expected boundedness signature.
    """
    ctx = kernel.ctx
    direction = np.exp(1j * ctx.phi)
    horizon = 8.0 * T

    # Pole positions that matter: 𝔟 blows up on the period lattice, the
    # shifted derivative factors on the lattice translated by ∓α₀.
    reach = int(horizon / min(abs(ctx.omega_a), abs(ctx.omega_b))) + 4
    m, n = np.meshgrid(np.arange(-4, reach + 1), np.arange(-reach - 1, reach + 2))
    lattice = (m * ctx.omega_a + n * ctx.omega_b).ravel()
    poles = np.concatenate([lattice, lattice - alpha0, lattice + alpha0])
    local = poles[np.abs(np.real(np.conj(direction) * poles)) < horizon + 12.0]

    def clearance(off, lo, hi):
        rel = np.conj(direction) * (local - off)
        mask = (rel.real > lo - 2.0) & (rel.real < hi + 2.0)
        if not np.any(mask):
            return np.inf
        return float(np.min(np.abs(rel.imag[mask])))

    # Choose the sweep line: offsets transverse to the line direction,
    # keeping the whole sweep as far from every pole as possible.
    heights = np.linspace(0.12, 0.95, 41) * abs(ctx.omega_a)
    off = max(((h * 1j + 0.31) * direction for h in heights),
              key=lambda o: clearance(o, T / 8.0, horizon))

    def integrand(sig):
        d = _frak_b_prime(sig - alpha0, kernel) + _frak_b_prime(sig + alpha0, kernel)
        u = sig / ctx.omega_a + ctx.nu
        L, _, _ = kernel.L_all(u)
        b = (-1.25 * np.exp(-1j * ctx.phi) * ctx.J_a) * sig + L
        return d * b / sig

    # The truncated tail oscillates with the lattice phase of its boundary
    # point, so the fit tracks an envelope: at each fitting scale the tail
    # is evaluated across one near-period of truncation points and the
    # median magnitude is kept.  The envelope of a convergent tail decays
    # like 1/s; fitting a single phase per scale would alias the
    # oscillation into the slope, and taking the maximum instead of the
    # median is spike-dominated when the sweep direction is incommensurate
    # with the lattice (the line then drifts arbitrarily close to poles).
    # The window is the lattice vector most nearly parallel to the line.
    best = None
    for mm in range(-6, 7):
        for nn in range(-6, 7):
            vec = np.conj(direction) * (mm * ctx.omega_a + nn * ctx.omega_b)
            if abs(vec) < 1.5 or abs(vec) > 25.0:
                continue
            key = abs(vec.imag) / abs(vec)
            if best is None or key < best[0]:
                best = (key, abs(vec.real))
    window = best[1]

    n_phase = 15
    phases = np.arange(n_phase) * window / n_phase
    s_grid = np.geomspace(T / 8.0, T, n_fit)
    nodes = np.unique(np.concatenate([(s_grid[:, None] + phases[None, :]).ravel(),
                                      [horizon]]))
    pieces = [integrate_path(integrand,
                             Path.line(off + a * direction, off + b * direction),
                             rel_tol=1e-9)
              for a, b in zip(nodes[:-1], nodes[1:])]
    suffix = np.concatenate([np.cumsum(np.array(pieces)[::-1])[::-1], [0.0]])
    tail_at = dict(zip(nodes, suffix))
    tails = np.array([np.median([abs(tail_at[s + w]) for w in phases])
                      for s in s_grid])
    return fit_decay_exponent(s_grid + window / 2.0, tails)
