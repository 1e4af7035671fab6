"""Rate functions for a general limiting spectral measure q.

The optimal tilted measure is nu* = phi* q + t delta_{psi*} with
phi*(x) = (theta - x) / (a - b x), where b is the mass multiplier
(b = 1 for a Gaussian field) and a = b psi stays finite when b crosses 0.
For the Gaussian flavor the value equation fixes theta as an increasing
function of a, and the stationarity equation is then strictly decreasing
in a, so the solution is a single bracketed root. The Haar flavor walks a
one-parameter family of tilt shapes along which F increases from m*_- to
m*_+ and brackets m on it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import bisect, brentq, minimize_scalar

from .errors import NumericError, UsageError
from .measures import ATOM_TOL, DiscreteMeasure, j1, logpot_diff_discrete, relative_entropy, stieltjes_discrete
from .rates_closed import ie
from .semicircle import discretize
from .sphereopt import big_f, m_star_minus, m_star_plus, minimize_f

logger = logging.getLogger(__name__)

EDGE_PLUS = "plus"
EDGE_MINUS = "minus"
EDGE_NONE = "none"

MBAR_TOL = 1e-13
RESIDUAL_TOL = 1e-9
DEFAULT_ATOMS = 2000
NEWTON_HALVINGS = 40
NEWTON_ITERATIONS = 20
# pushes toward an open end of the Haar path; 2 (1 - 2**-50) is still below 2 in double precision
PATH_PUSHES = 50


@dataclass(frozen=True)
class LagrangeState:
    """Multipliers of the optimal tilt phi*(x) = (theta - x)/(a - b x) plus an atom t at psi_star."""

    b: float
    theta: float
    psi: float
    t: float
    pinned_edge: str
    a: float
    psi_star: float
    theta_at_edge: bool = False
    residual: float = 0.0

    def phi(self, x):
        """The tilt at x, evaluated as (theta - x)/(b (psi - x)) so a - b x keeps its precision near psi."""
        x = np.asarray(x, dtype=float)
        if self.b == 0 or not math.isfinite(self.psi):
            return (self.theta - x) / (self.a - self.b * x)
        return (self.theta - x) / (self.b * (self.psi - x))


@dataclass(frozen=True)
class AnnealedResult:
    value: float
    psi_star: float
    state: LagrangeState | None


@dataclass(frozen=True)
class OracleResult:
    value: float
    nu: DiscreteMeasure | None
    multiplier: float
    theta: float


@dataclass(frozen=True)
class _Tilt:
    theta: float
    a: float
    b: float
    t: float
    atom: float
    theta_at_edge: bool


def _root_decreasing(fun, lower: float, scale: float, what: str) -> float:
    """Root of a decreasing function on (lower, inf) that is positive just above ``lower``."""
    step = max(scale, 1e-12)
    hi = lower + step
    for _ in range(400):
        value = fun(hi)
        if value < 0:
            break
        step *= 2.0
        hi = lower + step
    else:
        raise NumericError(f"{what}: no sign change above {lower!r}")

    gap = hi - lower
    for _ in range(2200):
        gap *= 0.5
        lo = lower + gap
        if lo <= lower:
            raise NumericError(f"{what}: bracket collapsed onto {lower!r}")
        with np.errstate(divide="ignore", invalid="ignore"):
            value = fun(lo)
        if value > 0 and math.isfinite(value):
            break
        if value > 0 or math.isnan(value):
            # singular this close to the floor: raise the floor and keep halving toward it
            lower = lo
            gap = hi - lower
            continue
        hi = lo
    else:
        raise NumericError(f"{what}: no positive value above {lower!r}")

    tol = 1e-15 * max(1.0, abs(lo), abs(hi))
    return brentq(fun, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


class _TiltSystem:
    """Sums over the atoms of q entering the value and stationarity equations of the Gaussian flavor."""

    def __init__(self, q: DiscreteMeasure, edge: float, gamma: float, m: float):
        keep = q.weights > 0
        self.x = q.atoms[keep]
        self.w = q.weights[keep]
        self.q = DiscreteMeasure(self.x, self.w)
        self.edge = edge
        self.gamma = gamma
        self.m = m

    def s1(self, a: float, b: float) -> float:
        with np.errstate(divide="ignore"):
            return float(np.sum(self.w / (a - b * self.x)))

    def s2(self, a: float, b: float, theta: float) -> float:
        """sum w / ((a - b x)(theta - x)); +inf unless theta lies above every atom."""
        gap = theta - self.x
        if np.any(gap <= 0):
            return math.inf
        with np.errstate(divide="ignore"):
            return float(np.sum(self.w / ((a - b * self.x) * gap)))

    def feasible_floor(self, b: float) -> float:
        """Infimum of a keeping a - b x > 0 on every atom."""
        return float(np.max(b * self.x))

    def residuals(self, tilt: _Tilt) -> tuple[float, float]:
        """(value, stationarity) residuals; stationarity is 0 when theta sits at the edge and is slack."""
        g = self.gamma
        atom_term = g * tilt.t / (tilt.theta - tilt.atom) if tilt.t > 0 else 0.0
        value = tilt.theta + g * self.s1(tilt.a, tilt.b) + atom_term - 2.0 * self.m
        stat_atom = atom_term / (tilt.theta - tilt.atom) if tilt.t > 0 else 0.0
        stationarity = g * self.s2(tilt.a, tilt.b, tilt.theta) + stat_atom - 1.0
        if tilt.theta_at_edge:
            stationarity = max(stationarity, 0.0)
        return value, stationarity

    def solve(self, b: float, atom: float) -> _Tilt:
        """Solve the value and stationarity equations at mass multiplier ``b``.

        ``atom`` is where a singular part may sit (a = b * atom).
        """
        g, m, edge = self.gamma, self.m, self.edge
        if 2.0 * m <= edge:
            raise UsageError(f"m={m!r} is not above half the edge {edge!r}")
        floor = self.feasible_floor(b)
        a_lo = max(b * atom, floor)
        singular_lo = a_lo <= floor + ATOM_TOL * max(1.0, abs(floor))
        scale = 1.0 + abs(b) * (1.0 + abs(edge) + math.sqrt(g)) + abs(m)

        def theta_of(a: float) -> float:
            return 2.0 * m - g * self.s1(a, b)

        def below_edge(a: float) -> float:
            return edge - theta_of(a)

        def stationarity(a: float) -> float:
            return g * self.s2(a, b, theta_of(a)) - 1.0

        if singular_lo or below_edge(a_lo) > 0:
            a_edge = _root_decreasing(below_edge, a_lo, scale, "edge multiplier")
            # an atom of q at the edge makes G' infinite there: theta must move above it
            if not singular_lo and g * self.s2(a_edge, b, edge) - 1.0 <= 0:
                return _Tilt(edge, a_edge, b, 0.0, atom, theta_at_edge=True)
            a = _root_decreasing(stationarity, a_edge, scale, "interior multiplier")
            return _Tilt(theta_of(a), a, b, 0.0, atom, theta_at_edge=False)

        if stationarity(a_lo) > 0:
            a = _root_decreasing(stationarity, a_lo, scale, "interior multiplier")
            return _Tilt(theta_of(a), a, b, 0.0, atom, theta_at_edge=False)

        return self._solve_with_atom(b, a_lo, atom)

    def _solve_with_atom(self, b: float, a: float, atom: float) -> _Tilt:
        """Theta and the atom weight when a is pinned at b * atom; the atom sits at the edge."""
        g, m = self.gamma, self.m
        s1 = self.s1(a, b)
        theta_top = 2.0 * m - g * s1
        if theta_top <= atom:
            return _Tilt(atom, a, b, 0.0, atom, theta_at_edge=True)

        def excess(theta: float) -> float:
            c = 2.0 * m - theta - g * s1
            return g * self.s2(a, b, theta) + c / (theta - atom) - 1.0

        if excess(theta_top) >= 0:
            theta = theta_top
        else:
            gap = theta_top - atom
            for _ in range(2200):
                gap *= 0.5
                lo = atom + gap
                if lo <= atom:
                    raise NumericError("atom case: bracket collapsed onto the edge")
                value = excess(lo)
                if value > 0 and math.isfinite(value):
                    break
            else:
                raise NumericError("atom case: no bracket above the edge")
            tol = 1e-15 * max(1.0, abs(theta_top))
            theta = brentq(excess, lo, theta_top, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
        t = max((2.0 * m - theta - g * s1) * (theta - atom) / g, 0.0)
        return _Tilt(theta, a, b, t, atom, theta_at_edge=False)


def _damped_newton(residual, x0: np.ndarray) -> np.ndarray:
    """Newton iterations with a finite-difference Jacobian; steps halve while the residual norm grows."""
    x = np.asarray(x0, dtype=float)
    r = residual(x)
    norm = float(np.linalg.norm(r))
    for _ in range(NEWTON_ITERATIONS):
        if not np.isfinite(norm) or norm < 1e-15:
            break
        jac = np.empty((r.size, x.size))
        for j in range(x.size):
            h = 1e-7 * max(1.0, abs(x[j]))
            e = np.zeros_like(x)
            e[j] = h
            jac[:, j] = (residual(x + e) - residual(x - e)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            break
        accepted = False
        for _ in range(NEWTON_HALVINGS):
            candidate = x + step
            with np.errstate(all="ignore"):
                r_new = residual(candidate)
            n_new = float(np.linalg.norm(r_new))
            if np.isfinite(n_new) and n_new < norm:
                x, r, norm = candidate, r_new, n_new
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return x


def _polish(system: _TiltSystem, tilt: _Tilt) -> _Tilt:
    """Refine an interior (t = 0, theta above the edge) solution on the value and stationarity equations."""
    if tilt.t > 0 or tilt.theta_at_edge:
        return tilt

    def pack(v):
        return _Tilt(v[0], v[1], tilt.b, 0.0, tilt.atom, False)

    def residual(v):
        cand = pack(v)
        if not (cand.theta > system.edge and np.all(cand.a - cand.b * system.x > 0)):
            return np.full(2, np.inf)
        return np.array(system.residuals(cand))

    return pack(_damped_newton(residual, np.array([tilt.theta, tilt.a])))


def _state(system: _TiltSystem, tilt: _Tilt) -> LagrangeState:
    value, stat = system.residuals(tilt)
    psi = tilt.atom if tilt.t > 0 else tilt.a / tilt.b
    return LagrangeState(
        b=tilt.b,
        theta=tilt.theta,
        psi=psi,
        t=tilt.t,
        pinned_edge=EDGE_PLUS if tilt.t > 0 else EDGE_NONE,
        a=tilt.a,
        psi_star=tilt.atom,
        theta_at_edge=tilt.theta_at_edge,
        residual=max(abs(value), abs(stat)),
    )


def _zero_state(q: DiscreteMeasure, edge: float, gamma: float, atom: float) -> LagrangeState:
    theta = minimize_f(edge, q, gamma).theta
    return LagrangeState(
        b=1.0, theta=theta, psi=theta, t=0.0, pinned_edge=EDGE_NONE, a=theta, psi_star=atom,
        theta_at_edge=theta <= edge, residual=0.0,
    )


def _validate(q: DiscreteMeasure, lambda_minus: float, lambda_plus: float, gamma: float) -> None:
    if not q.is_probability:
        raise UsageError("q must be a probability measure")
    if not gamma > 0:
        raise UsageError(f"gamma must be positive, got {gamma!r}")
    if lambda_minus > lambda_plus:
        raise UsageError("lambda_minus must not exceed lambda_plus")
    if q.top > lambda_plus + ATOM_TOL or q.bottom < lambda_minus - ATOM_TOL:
        raise UsageError(f"q is not supported in [{lambda_minus!r}, {lambda_plus!r}]")


def tilt_profile(state: LagrangeState, q: DiscreteMeasure) -> DiscreteMeasure:
    """The optimal measure phi* q + t delta_{psi*}."""
    keep = q.weights > 0
    phi = state.phi(q.atoms[keep])
    nu = DiscreteMeasure(q.atoms[keep], q.weights[keep] * phi)
    if state.t > 0:
        nu = nu.with_atom(state.psi_star, state.t)
    return nu


def quenched_gauss_general(
    q: DiscreteMeasure, lambda_minus: float, lambda_plus: float, gamma: float, m: float
) -> tuple[float, LagrangeState | None]:
    """Quenched rate for a Gaussian field and limiting spectral measure q with top edge lambda_plus."""
    _validate(q, lambda_minus, lambda_plus, gamma)
    if m <= 0.5 * lambda_plus:
        return math.inf, None
    m_bar = big_f(lambda_plus, q, gamma)
    if abs(m - m_bar) <= MBAR_TOL * max(1.0, abs(m_bar)):
        return 0.0, _zero_state(q, lambda_plus, gamma, lambda_plus)

    system = _TiltSystem(q, lambda_plus, gamma, m)
    tilt = _polish(system, system.solve(1.0, lambda_plus))
    state = _state(system, tilt)
    logger.debug("gauss rate m=%r: theta=%r psi=%r t=%r", m, state.theta, state.psi, state.t)

    psi = tilt.a
    value = 0.5 * (
        (tilt.theta - psi) * stieltjes_discrete(system.q, psi)
        + tilt.t
        + logpot_diff_discrete(system.q, tilt.theta, psi)
    )
    return max(value, 0.0), state


@dataclass(frozen=True)
class _PathPoint:
    s: float
    theta: float
    alpha: float
    t: float
    theta_at_edge: bool
    m: float


class _HaarPath:
    """Haar optima along a one-parameter family of tilt shapes, in increasing order of F.

    On the path phi(x) = (theta - x) / (alpha D(x)). For s in [0, 1] the shape D blends
    from 1 toward the distance to the upper anchor psi*_+; for s in [1, 2) it keeps that
    shape while an atom of weight s - 1 grows at psi*_+. Negative s mirrors this at the
    lower anchor psi*_-. Each shape fixes theta through stationarity and alpha through
    the unit mass, and F(psi*_+, nu) runs from m*_- to m*_+ as s crosses (-2, 2). An
    anchor that q charges cannot hold a separate atom, so that side of the path ends at 1.
    """

    def __init__(self, q: DiscreteMeasure, plus: float, minus: float, gamma: float):
        keep = q.weights > 0
        self.x = q.atoms[keep]
        self.w = q.weights[keep]
        self.plus = plus
        self.minus = minus
        self.gamma = gamma
        self.width = plus - minus if plus > minus else 1.0
        self.plus_open = plus - self.x[-1] <= ATOM_TOL * max(1.0, abs(plus))
        self.minus_open = self.x[0] - minus <= ATOM_TOL * max(1.0, abs(minus))

    def _shape(self, s: float) -> tuple[float, float, float, float]:
        """(side sign, blend r, atom weight t, anchor) at path coordinate s."""
        sign = 1.0 if s >= 0 else -1.0
        anchor = self.plus if s >= 0 else self.minus
        return sign, min(abs(s), 1.0), max(abs(s) - 1.0, 0.0), anchor

    def _denominators(self, s: float) -> np.ndarray:
        sign, r, _, anchor = self._shape(s)
        return (1.0 - r) + r * sign * (anchor - self.x) / self.width

    def point(self, s: float) -> _PathPoint:
        _, _, t, anchor = self._shape(s)
        d = self._denominators(s)
        if np.any(d <= 0):
            raise NumericError(f"haar path: tilt shape vanishes on the support at s={s!r}")
        x, w, g = self.x, self.w, self.gamma

        def stationarity(theta: float) -> float:
            gap = theta - x
            if np.any(gap <= 0):
                return math.inf
            excess = g * (1.0 - t) * float(np.sum(w / (d * gap))) / float(np.sum(w * gap / d)) - 1.0
            if t > 0:
                atom_gap = (theta - anchor) ** 2
                if atom_gap == 0.0:
                    return math.inf
                excess += g * t / atom_gap
            return excess

        edge = self.plus
        at_edge = stationarity(edge) <= 0
        theta = edge if at_edge else _root_decreasing(stationarity, edge, 1.0 + math.sqrt(g), "haar theta")
        p = float(np.sum(w * (theta - x) / d))
        m = 0.5 * (theta + g * (1.0 - t) * float(np.sum(w / d)) / p)
        if t > 0:
            m += 0.5 * g * t / (theta - anchor)
        return _PathPoint(s, theta, p / (1.0 - t), t, at_edge, m)

    def _bracket(self, excess, end: float, start_positive: bool) -> tuple[float, float]:
        """Walk from s = 0 toward ``end`` until ``excess`` changes sign."""
        previous = 0.0
        for k in range(1, PATH_PUSHES + 1):
            s = end * (1.0 - 0.5**k)
            try:
                value = excess(s)
            except NumericError as e:
                logger.debug("haar path: walk toward %r stopped at s=%r: %s", end, s, e)
                break
            if (value > 0) != start_positive or value == 0:
                return previous, s
            previous = s
        raise NumericError(f"haar path: F does not cross the target between s=0 and s={end!r}")

    def solve(self, m: float) -> _PathPoint:
        """The path point with F = m; m must lie strictly between m*_- and m*_+."""

        def excess(s: float) -> float:
            return self.point(s).m - m

        at_zero = excess(0.0)
        if at_zero == 0.0:
            return self.point(0.0)
        if at_zero < 0:
            end = 1.0 if self.plus_open else 2.0
        else:
            end = -1.0 if self.minus_open else -2.0
        lo, hi = sorted(self._bracket(excess, end, at_zero > 0))
        s = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        return self.point(s)

    def state(self, point: _PathPoint, m: float) -> LagrangeState:
        """Multipliers of the tilt at ``point`` with its worst residual on the mass, value and stationarity equations."""
        sign, r, t, anchor = self._shape(point.s)
        b = sign * point.alpha * r / self.width
        psi = anchor + sign * (1.0 - r) * self.width / r if r > 0 else math.inf
        state = LagrangeState(
            b=b,
            theta=point.theta,
            psi=psi,
            t=t,
            pinned_edge=(EDGE_PLUS if sign > 0 else EDGE_MINUS) if t > 0 else EDGE_NONE,
            a=point.alpha * (1.0 - r) + b * anchor,
            psi_star=anchor,
            theta_at_edge=point.theta_at_edge,
        )
        g = self.gamma
        phi = state.phi(self.x)
        gap = point.theta - self.x
        atom_value = t / (point.theta - anchor) if t > 0 else 0.0
        atom_slope = atom_value / (point.theta - anchor) if t > 0 else 0.0
        mass = float(np.sum(self.w * phi)) + t - 1.0
        value = point.theta + g * (float(np.sum(self.w * phi / gap)) + atom_value) - 2.0 * m
        stationarity = g * (float(np.sum(self.w * phi / gap**2)) + atom_slope) - 1.0
        if point.theta_at_edge:
            stationarity = max(stationarity, 0.0)
        return replace(state, residual=max(abs(mass), abs(value), abs(stationarity)))


def solve_haar_shifted_edge(
    q: DiscreteMeasure, psi_star_plus: float, psi_star_minus: float, gamma: float, m: float
) -> tuple[float, LagrangeState | None]:
    """Haar rate and its Lagrange state; the singular atom may sit at psi_star_plus or psi_star_minus."""
    if not q.is_probability:
        raise UsageError("q must be a probability measure")
    if psi_star_plus < q.top - ATOM_TOL:
        raise UsageError(f"psi_star_plus={psi_star_plus!r} lies below the top of q ({q.top!r})")
    if psi_star_minus > q.bottom + ATOM_TOL:
        raise UsageError(f"psi_star_minus={psi_star_minus!r} lies above the bottom of q ({q.bottom!r})")
    if not gamma > 0:
        raise UsageError(f"gamma must be positive, got {gamma!r}")

    edge = psi_star_plus
    if not m_star_minus(psi_star_minus, edge, gamma) < m < m_star_plus(edge, gamma):
        return math.inf, None
    m_bar = big_f(edge, q, gamma)
    if abs(m - m_bar) <= MBAR_TOL * max(1.0, abs(m_bar)):
        return 0.0, _zero_state(q, edge, gamma, edge)

    path = _HaarPath(q, psi_star_plus, psi_star_minus, gamma)
    state = path.state(path.solve(m), m)
    logger.debug("haar rate m=%r: b=%r theta=%r psi=%r t=%r", m, state.b, state.theta, state.psi, state.t)

    phi = state.phi(path.x)
    if not np.all(np.isfinite(phi) & (phi > 0)):
        raise NumericError(f"haar rate m={m!r}: the tilt is not positive on the support of q")
    if not state.residual <= RESIDUAL_TOL * max(1.0, abs(m)):
        raise NumericError(f"haar rate m={m!r}: residual {state.residual:.2e} above {RESIDUAL_TOL:.0e}")
    value = float(np.sum(path.w * j1(phi))) + 0.5 * state.t
    return max(value, 0.0), state


def quenched_haar_general(
    q: DiscreteMeasure, lambda_minus: float, lambda_plus: float, gamma: float, m: float
) -> tuple[float, LagrangeState | None]:
    """Quenched rate for a Haar field; the edges must be the support endpoints of q."""
    _validate(q, lambda_minus, lambda_plus, gamma)
    if abs(q.top - lambda_plus) > ATOM_TOL or abs(q.bottom - lambda_minus) > ATOM_TOL:
        raise UsageError(
            "quenched_haar_general needs edges equal to the support endpoints of q; "
            "use quenched_haar_shifted_edge for shifted edges"
        )
    return solve_haar_shifted_edge(q, lambda_plus, lambda_minus, gamma, m)


def quenched_haar_shifted_edge(
    q: DiscreteMeasure, psi_star_plus: float, psi_star_minus: float, gamma: float, m: float
) -> float:
    """Haar rate with F evaluated at psi_star_plus and the singular atom allowed at either shifted edge."""
    return solve_haar_shifted_edge(q, psi_star_plus, psi_star_minus, gamma, m)[0]


def _haar_rate_or_inf(q: DiscreteMeasure, plus: float, minus: float, gamma: float, m: float) -> float:
    """Haar rate for outer scans, where a solver failure at one grid point only drops that point."""
    try:
        return solve_haar_shifted_edge(q, plus, minus, gamma, m)[0]
    except NumericError as e:
        logger.debug("haar rate skipped at gamma=%r, edges (%r, %r): %s", gamma, plus, minus, e)
        return math.inf


def quenched_gauss_via_haar(
    q: DiscreteMeasure, lambda_minus: float, lambda_plus: float, gamma: float, m: float
) -> float:
    """inf over y > 0 of the Haar rate at gamma * y plus J1(y)."""
    _validate(q, lambda_minus, lambda_plus, gamma)

    def objective(log_y: float) -> float:
        y = math.exp(log_y)
        return _haar_rate_or_inf(q, lambda_plus, lambda_minus, gamma * y, m) + 0.5 * (y - 1.0 - log_y)

    value, _ = _minimize_on_interval(objective, -8.0, 8.0)
    return value


def _minimize_on_interval(fun, lo: float, hi: float, n_scan: int = 64, xatol: float = 1e-10) -> tuple[float, float]:
    """Global scan followed by a bounded Brent refinement around the best scan point; +inf tolerated."""
    grid = np.linspace(lo, hi, n_scan)
    values = np.array([fun(x) for x in grid])
    if not np.any(np.isfinite(values)):
        return math.inf, float(grid[0])
    best = int(np.nanargmin(np.where(np.isfinite(values), values, np.inf)))
    left, right = grid[max(best - 1, 0)], grid[min(best + 1, n_scan - 1)]
    best_x, best_value = float(grid[best]), float(values[best])

    def guarded(x: float) -> float:
        v = fun(x)
        return v if math.isfinite(v) else 1e300

    refined = minimize_scalar(guarded, bounds=(left, right), method="bounded", options={"xatol": xatol})
    if refined.success and refined.fun < best_value:
        best_x, best_value = float(refined.x), float(refined.fun)
    return best_value, best_x


def annealed_general_gauss(m: float, gamma: float, n_atoms: int | None = None) -> AnnealedResult:
    """inf over psi* >= 2 of the Gaussian quenched rate at edges +-psi* plus ie(psi*), for q = sigma."""
    if not gamma > 0:
        raise UsageError(f"gamma must be positive, got {gamma!r}")
    sigma = discretize(n_atoms or DEFAULT_ATOMS)

    def objective(psi_star: float) -> float:
        psi_star = max(psi_star, 2.0)
        return quenched_gauss_general(sigma, -psi_star, psi_star, gamma, m)[0] + ie(psi_star)

    value, psi_star = _minimize_on_interval(objective, 2.0, 2.0 + 2.0 * max(m, 0.0) + math.sqrt(gamma))
    at_two = objective(2.0)
    if at_two <= value:
        value, psi_star = at_two, 2.0
    state = quenched_gauss_general(sigma, -psi_star, psi_star, gamma, m)[1] if math.isfinite(value) else None
    return AnnealedResult(value=value, psi_star=psi_star, state=state)


def _clearing_shift(m: float, gamma: float) -> float | None:
    """Smallest s >= 2 with m*_-(-s, 2) < m, or None when no lower edge goes low enough."""

    def clearance(shift: float) -> float:
        return m - m_star_minus(-shift, 2.0, gamma)

    if clearance(2.0) > 0:
        return 2.0
    far = 4.0
    for _ in range(60):
        if clearance(far) > 0:
            return brentq(clearance, 2.0, far, xtol=1e-12)
        far *= 2.0
    return None


def annealed_general_haar(m: float, gamma: float, n_atoms: int | None = None) -> AnnealedResult:
    """Annealed Haar rate for q = sigma: one edge stays at +-2, the other is optimized with its ie cost."""
    if not gamma > 0:
        raise UsageError(f"gamma must be positive, got {gamma!r}")
    sigma = discretize(n_atoms or DEFAULT_ATOMS)
    upper = m >= big_f(2.0, sigma, gamma)

    def edges(shift: float) -> tuple[float, float]:
        shift = max(shift, 2.0)
        return (shift, -2.0) if upper else (2.0, -shift)

    def objective(shift: float) -> float:
        return _haar_rate_or_inf(sigma, *edges(shift), gamma, m) + ie(max(shift, 2.0))

    lo, hi = 2.0, 2.0 + 2.0 * max(m, 0.0) + math.sqrt(gamma)
    if not upper:
        lo = _clearing_shift(m, gamma)
        if lo is None:
            return AnnealedResult(value=math.inf, psi_star=-2.0, state=None)
        hi = max(hi, 2.0 * lo)
    value, shift = _minimize_on_interval(objective, lo, hi)
    at_two = objective(2.0)
    if at_two <= value:
        value, shift = at_two, 2.0
    state = solve_haar_shifted_edge(sigma, *edges(shift), gamma, m)[1] if math.isfinite(value) else None
    return AnnealedResult(value=value, psi_star=shift if upper else -shift, state=state)


# --- independent oracle -------------------------------------------------------------------------


def _oracle_gauss_measure(x, w, lambda_plus, psi_star, gamma, A):
    """Closed-form minimizer of the relaxed problem at value multiplier A (mass unconstrained)."""
    shift = A * gamma
    theta_lo = max(lambda_plus, psi_star + shift) if A > 0 else lambda_plus

    def d_of(theta):
        with np.errstate(divide="ignore"):
            return gamma * float(np.sum(w / ((theta - x) * (theta - x - shift)))) - 1.0

    floor_ok = np.all(theta_lo - x - shift > 0)
    if floor_ok and d_of(theta_lo) <= 0:
        theta = theta_lo
    else:
        theta = _root_decreasing(d_of, theta_lo, 1.0 + math.sqrt(gamma), "oracle theta")
    phi = (theta - x) / (theta - x - shift)
    t = 0.0
    if A > 0 and theta == theta_lo and psi_star + shift > lambda_plus:
        t = -d_of(theta) * (theta - psi_star) ** 2 / gamma
    return theta, phi, max(t, 0.0)


def _oracle_haar_profile(x, w, psi_star, gamma, A, theta):
    """Mass multiplier B and atom t for fixed (A, theta) on probability measures."""
    shift = A * gamma
    b_atoms = float(np.max(shift / (theta - x)))
    b_t = shift / (theta - psi_star) if theta - psi_star > ATOM_TOL else math.inf
    t_allowed = math.isfinite(b_t) and b_t > b_atoms

    def mass_excess(B):
        return float(np.sum(w * (theta - x) / (B * (theta - x) - shift))) - 1.0

    if t_allowed:
        at_t = mass_excess(b_t)
        if at_t <= 0:
            B = b_t
            return B, (theta - x) / (B * (theta - x) - shift), -at_t
        lower = b_t
    else:
        lower = b_atoms
    B = _root_decreasing(mass_excess, lower, 1.0 + abs(lower), "oracle mass multiplier")
    return B, (theta - x) / (B * (theta - x) - shift), 0.0


def _oracle_haar_measure(x, w, lambda_plus, psi_star, gamma, A):
    def d_of(theta):
        _, phi, t = _oracle_haar_profile(x, w, psi_star, gamma, A, theta)
        d = gamma * float(np.sum(w * phi / (theta - x) ** 2))
        if t > 0:
            d += gamma * t / (theta - psi_star) ** 2
        return d - 1.0

    if lambda_plus - x[-1] > ATOM_TOL and d_of(lambda_plus) <= 0:
        theta = lambda_plus
    else:
        theta = _root_decreasing(d_of, lambda_plus, math.sqrt(gamma), "oracle theta")
    _, phi, t = _oracle_haar_profile(x, w, psi_star, gamma, A, theta)
    return theta, phi, t


def oracle_measure(
    q: DiscreteMeasure, lambda_plus: float, psi_star: float, gamma: float, m: float, flavor: str
) -> OracleResult:
    """Minimize sum q J1(phi) + t/2 subject to F(lambda_plus, phi q + t delta_psi_star) = m by multiplier bisection."""
    if flavor not in ("gauss", "haar"):
        raise UsageError(f"unknown flavor {flavor!r}")
    if not q.is_probability:
        raise UsageError("q must be a probability measure")
    if q.size > 5000:
        raise UsageError("the oracle is limited to 5000 atoms")
    if not gamma > 0:
        raise UsageError(f"gamma must be positive, got {gamma!r}")
    keep = q.weights > 0
    x, w = q.atoms[keep], q.weights[keep]
    if x[-1] > lambda_plus + ATOM_TOL:
        raise UsageError("q has atoms above lambda_plus")
    if flavor == "gauss" and not x[-1] - ATOM_TOL <= psi_star <= lambda_plus + ATOM_TOL:
        raise UsageError("psi_star must lie between the top atom and lambda_plus for the gauss flavor")
    if x[0] + ATOM_TOL < psi_star < x[-1] - ATOM_TOL:
        raise UsageError("psi_star must lie outside the support of q")
    if flavor == "gauss" and m <= 0.5 * lambda_plus:
        return OracleResult(math.inf, None, math.nan, math.nan)

    build = _oracle_gauss_measure if flavor == "gauss" else _oracle_haar_measure

    def measure(A: float) -> tuple[DiscreteMeasure, float]:
        theta, phi, t = build(x, w, lambda_plus, psi_star, gamma, A)
        nu = DiscreteMeasure(x, w * phi)
        if t > 0:
            nu = nu.with_atom(psi_star, t)
        return nu, theta

    def excess(A: float) -> float:
        return big_f(lambda_plus, measure(A)[0], gamma) - m

    m_bar = big_f(lambda_plus, q, gamma)
    if abs(m - m_bar) <= MBAR_TOL * max(1.0, abs(m_bar)):
        return OracleResult(0.0, q, 0.0, minimize_f(lambda_plus, q, gamma).theta)

    sign = 1.0 if m > m_bar else -1.0
    far = sign * 1e3
    for _ in range(12):
        try:
            reached = sign * excess(far) > 0
        except NumericError:
            reached = False
        if reached:
            break
        far *= 10.0
    else:
        return OracleResult(math.inf, None, math.nan, math.nan)

    lo, hi = sorted((0.0, far))
    A = bisect(excess, lo, hi, xtol=1e-14 * abs(far), rtol=4 * np.finfo(float).eps, maxiter=400)
    nu, theta = measure(A)
    value = 0.5 * relative_entropy(q, nu)
    return OracleResult(value=value, nu=nu, multiplier=A, theta=theta)


def direct_minimize_oracle(
    q: DiscreteMeasure, lambda_plus: float, psi_star: float, gamma: float, m: float, flavor: str
) -> float:
    """Independent brute-force evaluation of the Gaussian or Haar quenched rate."""
    return oracle_measure(q, lambda_plus, psi_star, gamma, m, flavor).value
