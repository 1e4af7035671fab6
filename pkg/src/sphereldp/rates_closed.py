"""Closed-form rate functions for a semicircle spectrum (GOE / Wigner limits).

Rates are parametrized by alpha, beta >= 1 with theta = alpha + 1/alpha and
psi = beta + 1/beta. Below the domain the rates are +inf.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import UsageError
from .measures import j1
from .semicircle import alpha_of

PHASE_I = "I"
PHASE_II = "II"
PHASE_III = "III"
PHASE_ANNEALED_TAIL = "annealed-tail"
PHASE_NONE = "none"

SQRT_CLAMP = 1e-14


@dataclass(frozen=True)
class PhaseConstants:
    gamma: float
    m_c: float
    m_L: float
    m_bar: float
    m_U: float

    @property
    def eta(self) -> float:
        return self.gamma / (1.0 + self.gamma)


@dataclass(frozen=True)
class RateCurvePoint:
    """One point of a rate curve with the parameters that produced it."""

    m: float
    value: float
    alpha: float
    beta: float
    theta: float
    psi: float
    t: float
    phase: str

    def as_row(self) -> dict:
        return asdict(self)


def _check_gamma(gamma: float) -> None:
    if not (gamma > 0 and math.isfinite(gamma)):
        raise UsageError(f"gamma must be a positive finite number, got {gamma!r}")


def phase_constants(gamma: float) -> PhaseConstants:
    _check_gamma(gamma)
    return PhaseConstants(
        gamma=gamma,
        m_c=math.sqrt((1.0 + 2.0 * gamma) / (1.0 + gamma)),
        m_L=1.0 + gamma / (2.0 * (1.0 + gamma)),
        m_bar=math.sqrt(1.0 + gamma),
        m_U=1.0 + gamma * (1.0 + 2.0 * gamma) / (2.0 * (1.0 + gamma)),
    )


def ie(psi: float) -> float:
    """Energy cost of pulling the top eigenvalue to psi: 1/4 (beta^2 - beta^-2) - log(beta)."""
    if psi < 2.0:
        return math.inf
    beta = alpha_of(psi)
    return 0.25 * (beta * beta - 1.0 / (beta * beta)) - math.log(beta)


def script_i(alpha: float, beta: float) -> float:
    """J1(alpha/beta) - (1/alpha - 1/beta)^2 / 4."""
    if not (alpha > 0 and beta > 0):
        raise UsageError("script_i needs positive alpha and beta")
    if math.isinf(beta):
        return j1(0.0)
    return j1(alpha / beta) - 0.25 * (1.0 / alpha - 1.0 / beta) ** 2


def frak_t(alpha: float, m: float, gamma: float) -> float:
    """Atom mass at the top edge: gamma^-1 (alpha + 1/alpha - 2)(2m - alpha - 1/alpha - gamma)."""
    _check_gamma(gamma)
    theta = alpha + 1.0 / alpha
    return (theta - 2.0) * (2.0 * m - theta - gamma) / gamma


def _root_gap(m: float, m_c: float) -> float:
    """sqrt(m^2 - m_c^2), clamped to zero within roundoff of m_c."""
    d = m * m - m_c * m_c
    if abs(m - m_c) <= SQRT_CLAMP or d < 0:
        return 0.0
    return math.sqrt(d)


def _phase_two_params(m: float, pc: PhaseConstants) -> tuple[float, float]:
    """(alpha, 1/beta_a) from the quadratic m_c^2 a^2 - 2 m a + 1 = 0 branch."""
    s = _root_gap(m, pc.m_c)
    return (m + s) / (pc.m_c * pc.m_c), (1.0 + pc.gamma) * (m - s)


def _point(m, value, alpha, beta, t, phase) -> RateCurvePoint:
    return RateCurvePoint(
        m=m,
        value=value,
        alpha=alpha,
        beta=beta,
        theta=alpha + 1.0 / alpha,
        psi=beta + 1.0 / beta if math.isfinite(beta) else math.inf,
        t=t,
        phase=phase,
    )


def quenched_gauss_semicircle(m: float, gamma: float) -> RateCurvePoint:
    """Quenched rate for a Gaussian field and semicircle spectrum, edges at +-2."""
    pc = phase_constants(gamma)
    if m <= 1.0:
        return RateCurvePoint(m, math.inf, math.nan, math.nan, math.nan, math.nan, 0.0, PHASE_NONE)
    if m <= pc.m_L:
        beta = gamma / (2.0 * (m - 1.0))
        return _point(m, script_i(1.0, beta), 1.0, beta, 0.0, PHASE_I)
    if m < pc.m_U:
        alpha, beta = _phase_two_params(m, pc)
        return _point(m, script_i(alpha, beta), alpha, beta, 0.0, PHASE_II)
    disc = max((m + 1.0) ** 2 - 4.0 - 2.0 * gamma, 0.0)
    alpha = 0.5 * ((m + 1.0) + math.sqrt(disc))
    t = frak_t(alpha, m, gamma)
    return _point(m, script_i(alpha, 1.0) + 0.5 * t, alpha, 1.0, t, PHASE_III)


def annealed_gauss(m: float, gamma: float) -> RateCurvePoint:
    """Annealed rate for a Gaussian field and GOE matrix; equals the quenched rate up to m_U."""
    pc = phase_constants(gamma)
    if m <= pc.m_U:
        return quenched_gauss_semicircle(m, gamma)
    alpha, beta_inv = _phase_two_params(m, pc)
    beta = 1.0 / beta_inv
    theta, psi = alpha + 1.0 / alpha, beta + 1.0 / beta
    t = (theta - psi) * (beta - 1.0 / beta)
    return RateCurvePoint(
        m=m,
        value=script_i(alpha, beta_inv),
        alpha=alpha,
        beta=beta,
        theta=theta,
        psi=psi,
        t=t,
        phase=PHASE_ANNEALED_TAIL,
    )


def fld_rate(m: float, gamma: float) -> float:
    """The replica prediction for the annealed rate; +inf at and below m_c."""
    pc = phase_constants(gamma)
    if m <= pc.m_c:
        return math.inf
    s = _root_gap(m, pc.m_c)
    linear = m / (1.0 + 2.0 * gamma) * (-m * gamma + (1.0 + gamma) * s)
    return linear - math.log(math.sqrt(1.0 + gamma) / (1.0 + 2.0 * gamma) * (m + s))


def annealed_haar(m: float, gamma: float, n_atoms: int | None = None) -> float:
    """Annealed rate for a Haar field and GOE matrix (outer infimum over the shifted edge)."""
    from .rates_variational import annealed_general_haar

    _check_gamma(gamma)
    return annealed_general_haar(m, gamma, n_atoms=n_atoms).value
