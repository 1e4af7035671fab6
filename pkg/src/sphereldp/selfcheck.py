"""Cross-validation suite run by ``sphereldp selfcheck``.

Each check compares two independent computations (closed form against the
general solver, solver against oracle, formula against quadrature) and
raises CheckFailed with the worst discrepancy when a tolerance is missed.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .config import Settings
from .ensembles import RngSeed, f_value, sample_goe
from .errors import SphereLdpError
from .measures import DiscreteMeasure
from .rates_closed import annealed_gauss, fld_rate, ie, phase_constants, quenched_gauss_semicircle
from .rates_variational import (
    annealed_general_gauss,
    annealed_general_haar,
    direct_minimize_oracle,
    quenched_gauss_general,
    quenched_haar_general,
    quenched_haar_shifted_edge,
)
from .semicircle import discretize
from .sphereopt import OrderedSpectrum, big_f, m_star_minus, m_star_plus, mbar, solve_secular

logger = logging.getLogger(__name__)

SELFCHECK_SEED = RngSeed(20240611)
ORDERING_SLACK = 1e-8
RESIDUAL_TOL = 1e-9


class CheckFailed(AssertionError):
    pass


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


@dataclass(frozen=True)
class _Check:
    name: str
    fn: Callable[[Settings], str]
    full_only: bool


_CHECKS: list[_Check] = []


def check(name: str, full_only: bool = False):
    def register(fn):
        _CHECKS.append(_Check(name, fn, full_only))
        return fn

    return register


def expect(condition: bool, message: str) -> None:
    if not condition:
        raise CheckFailed(message)


def _rng(stream: int) -> np.random.Generator:
    return SELFCHECK_SEED.with_stream(stream).generator()


def fibonacci_sphere(n_points: int) -> np.ndarray:
    """Quasi-uniform points on the 2-sphere."""
    i = np.arange(n_points) + 0.5
    z = 1.0 - 2.0 * i / n_points
    r = np.sqrt(1.0 - z * z)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def sphere_oracle(lam: np.ndarray, h: np.ndarray, points: np.ndarray, steps: int = 2000) -> float:
    """max of 1/2 <lam, x^2> + <h, x> on the 2-sphere: grid search refined by projected gradient ascent."""
    values = 0.5 * (points**2 @ lam) + points @ h
    x = points[int(np.argmax(values))].copy()
    step = 0.1 / (1.0 + float(np.max(np.abs(lam))) + float(np.linalg.norm(h)))
    for _ in range(steps):
        x = x + step * (lam * x + h)
        x /= np.linalg.norm(x)
    return float(0.5 * lam @ (x * x) + h @ x)


def ie_quadrature(psi: float) -> float:
    """Adaptive quadrature of int_2^psi sqrt((u/2)^2 - 1) du."""
    value, _ = integrate.quad(lambda u: math.sqrt(max((0.5 * u) ** 2 - 1.0, 0.0)), 2.0, psi, epsabs=1e-13, epsrel=1e-13)
    return value


def random_probability_measure(rng: np.random.Generator, size: int, low: float = -2.0, high: float = 2.0):
    atoms = rng.uniform(low, high, size)
    weights = rng.dirichlet(np.ones(size))
    return DiscreteMeasure.build(atoms, weights / weights.sum())


# --- closed forms -------------------------------------------------------------------------------


@check("phase-constants")
def _phase_constants(settings: Settings) -> str:
    pc = phase_constants(1.0)
    expect(abs(pc.m_L - 1.25) <= 1e-15 and abs(pc.m_U - 1.75) <= 1e-15, f"gamma=1: m_L={pc.m_L}, m_U={pc.m_U}")
    pc10 = phase_constants(10.0)
    expect(abs(pc10.m_c - 1.382) <= 1e-3 and abs(pc10.m_L - 1.454) <= 1e-3, f"gamma=10: {pc10}")
    for gamma in (0.1, 1.0, 10.0):
        p = phase_constants(gamma)
        expect(1 < p.m_c < p.m_L < p.m_bar < p.m_U, f"ordering fails at gamma={gamma}")
        expect(abs(p.m_c**2 - (1.0 + gamma / (1.0 + gamma))) <= 1e-14, f"m_c identity fails at gamma={gamma}")
    return "m_L=1.25, m_U=1.75 at gamma=1"


@check("fld-agreement")
def _fld_agreement(settings: Settings) -> str:
    worst = 0.0
    for gamma in (1.0, 10.0):
        pc = phase_constants(gamma)
        for m in np.linspace(pc.m_L, 3.0, 500):
            worst = max(worst, abs(annealed_gauss(m, gamma).value - fld_rate(m, gamma)))
    expect(worst <= 1e-9, f"max |annealed - fld| = {worst:.3e} on [m_L, 3]")
    pc = phase_constants(10.0)
    gaps = [fld_rate(m, 10.0) - annealed_gauss(m, 10.0).value for m in np.linspace(pc.m_c + 1e-3, pc.m_L - 1e-3, 200)]
    expect(min(gaps) > 0, f"fld - annealed = {min(gaps):.3e} on (m_c, m_L) at gamma=10")
    return f"max deviation {worst:.1e}; smallest correction {min(gaps):.2e}"


@check("ie-quadrature")
def _ie_quadrature(settings: Settings) -> str:
    worst = max(abs(ie(psi) - ie_quadrature(psi)) for psi in np.linspace(2.0, 6.0, 81))
    expect(worst <= 1e-8, f"max |ie - quadrature| = {worst:.3e}")
    return f"max deviation {worst:.1e}"


@check("annealed-equals-quenched")
def _annealed_equals_quenched(settings: Settings) -> str:
    pc = phase_constants(1.0)
    worst = max(
        abs(annealed_gauss(m, 1.0).value - quenched_gauss_semicircle(m, 1.0).value)
        for m in np.linspace(1.01, pc.m_U, 200)
    )
    expect(worst <= 1e-12, f"max difference {worst:.3e} on [1.01, m_U]")
    return f"max difference {worst:.1e}"


@check("m_L-smoothness")
def _m_l_smoothness(settings: Settings) -> str:
    m_l, h = 1.25, 1e-6
    value = annealed_gauss(m_l, 1.0).value
    expect(abs(value - 0.5 * (math.log(2.0) - 0.625)) <= 1e-9, f"value at m_L = {value!r}")
    slope = (annealed_gauss(m_l + h, 1.0).value - annealed_gauss(m_l - h, 1.0).value) / (2 * h)
    expect(abs(slope + 0.5) <= 1e-5, f"slope at m_L = {slope!r}")
    return f"value {value:.9f}, slope {slope:.7f}"


@check("closed-form-shape")
def _closed_form_shape(settings: Settings) -> str:
    gamma = 1.0
    pc = phase_constants(gamma)
    grid = np.linspace(1.02, 3.0, 400)
    annealed = np.array([annealed_gauss(m, gamma).value for m in grid])
    second = annealed[2:] - 2 * annealed[1:-1] + annealed[:-2]
    expect(np.all(second > 0), "annealed rate is not strictly convex on the grid")
    quenched = np.array([quenched_gauss_semicircle(m, gamma).value for m in grid])
    left, right = grid <= pc.m_bar, grid >= pc.m_bar
    expect(np.all(np.diff(quenched[left]) <= 0), "quenched rate increases below m_bar")
    expect(np.all(np.diff(quenched[right]) > 0), "quenched rate is not increasing above m_bar")
    for edge in (pc.m_L, pc.m_U):
        below = quenched_gauss_semicircle(edge - 1e-12, gamma).value
        above = quenched_gauss_semicircle(edge + 1e-12, gamma).value
        expect(abs(below - above) <= 1e-10, f"branch jump {abs(below - above):.2e} at m={edge}")
    return "convex, monotone, continuous across m_L and m_U"


# --- exact solver -------------------------------------------------------------------------------


@check("secular-oracle")
def _secular_oracle(settings: Settings) -> str:
    rng = _rng(1)
    points = fibonacci_sphere(200_000)
    worst = 0.0
    for _ in range(100):
        spec, order = OrderedSpectrum.from_unsorted(rng.normal(size=3))
        h = rng.normal(size=3)
        exact = solve_secular(spec, h).f_star
        oracle = sphere_oracle(spec.values, h, points)
        worst = max(worst, abs(exact - oracle))
    expect(worst <= 1e-3, f"max |solver - sphere oracle| = {worst:.3e}")
    return f"max deviation {worst:.1e} on 100 instances"


@check("secular-big-f")
def _secular_big_f(settings: Settings) -> str:
    rng = _rng(2)
    worst = 0.0
    for k in range(100):
        n = int(rng.integers(1, 21))
        spec, _ = OrderedSpectrum.from_unsorted(rng.normal(size=n))
        h = rng.normal(size=n)
        if k % 3 == 0:
            h[0] = 0.0
        if not np.any(h):
            h[-1] = 1.0
        gamma = float(h @ h)
        nu = DiscreteMeasure.build(spec.values, h * h / gamma)
        a = solve_secular(spec, h).f_star
        b = big_f(spec.lambda1, nu, gamma)
        worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    expect(worst <= 1e-9, f"max relative |solve_secular - big_f| = {worst:.3e}")
    return f"max deviation {worst:.1e} on 100 instances"


@check("solver-invariances")
def _solver_invariances(settings: Settings) -> str:
    rng = _rng(3)
    worst_shift = worst_conj = 0.0
    for k in range(20):
        n = int(rng.integers(2, 12))
        spec, _ = OrderedSpectrum.from_unsorted(rng.normal(size=n))
        h = rng.normal(size=n)
        c = float(rng.normal())
        shifted = solve_secular(spec.shifted(c), h).f_star - solve_secular(spec, h).f_star - 0.5 * c
        worst_shift = max(worst_shift, abs(shifted))
        w = sample_goe(n, SELFCHECK_SEED.with_stream(100 + k))
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        base = f_value(w, h, settings.eigensolver, settings.jacobi_tol)
        rotated = f_value(w.conjugated(q), q.T @ h, settings.eigensolver, settings.jacobi_tol)
        worst_conj = max(worst_conj, abs(base - rotated))
    expect(worst_shift <= 1e-9, f"shift covariance off by {worst_shift:.2e}")
    expect(worst_conj <= 1e-8, f"conjugation invariance off by {worst_conj:.2e}")
    return f"shift {worst_shift:.1e}, conjugation {worst_conj:.1e}"


# --- general solvers ----------------------------------------------------------------------------


@check("closed-vs-variational")
def _closed_vs_variational(settings: Settings) -> str:
    sigma = discretize(settings.discretization_atoms)
    worst = 0.0
    for m in (1.1, 1.3, 1.5, 2.0, 2.5):
        value, state = quenched_gauss_general(sigma, -2.0, 2.0, 1.0, m)
        expect(state.residual <= RESIDUAL_TOL, f"residual {state.residual:.2e} at m={m}")
        worst = max(worst, abs(value - quenched_gauss_semicircle(m, 1.0).value))
        worst = max(worst, abs(annealed_general_gauss(m, 1.0, settings.discretization_atoms).value
                               - annealed_gauss(m, 1.0).value))  # fmt: skip
    expect(worst <= 2e-3, f"max |closed - variational| = {worst:.3e}")
    return f"max deviation {worst:.1e}"


@check("newton-vs-oracle")
def _newton_vs_oracle(settings: Settings) -> str:
    rng = _rng(4)
    worst = 0.0
    for _ in range(20):
        q = random_probability_measure(rng, 50)
        gamma = float(rng.uniform(0.5, 2.0))
        top, bottom = q.top, q.bottom
        m_bar = mbar(q, top, gamma)

        lower = 0.5 * top + 0.1 * (m_bar - 0.5 * top)
        m = float(rng.uniform(lower, m_bar + 0.8))
        value, state = quenched_gauss_general(q, bottom, top, gamma, m)
        expect(state.residual <= RESIDUAL_TOL, f"gauss residual {state.residual:.2e}")
        worst = max(worst, abs(value - direct_minimize_oracle(q, top, top, gamma, m, "gauss")))

        lo, hi = m_star_minus(bottom, top, gamma), m_star_plus(top, gamma)
        m = float(rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo)))
        value, state = quenched_haar_general(q, bottom, top, gamma, m)
        expect(state.residual <= RESIDUAL_TOL, f"haar residual {state.residual:.2e}")
        psi_star = top if m > m_bar else bottom
        worst = max(worst, abs(value - direct_minimize_oracle(q, top, psi_star, gamma, m, "haar")))
    expect(worst <= 1e-6, f"max |solver - oracle| = {worst:.3e}")
    return f"max deviation {worst:.1e} on 20 measures"


def _ordering_chain(points: int, n_atoms: int) -> str:
    gamma = 1.0
    sigma = discretize(n_atoms)
    lo, hi = m_star_minus(-2.0, 2.0, gamma), m_star_plus(2.0, gamma)
    worst = math.inf
    for m in np.linspace(lo, hi, points + 2)[1:-1]:
        a_gauss = annealed_general_gauss(m, gamma, n_atoms).value
        a_haar = annealed_general_haar(m, gamma, n_atoms).value
        q_gauss = quenched_gauss_general(sigma, -2.0, 2.0, gamma, m)[0]
        q_haar = quenched_haar_shifted_edge(sigma, 2.0, -2.0, gamma, m)
        slack = min(min(a_haar, q_gauss) - a_gauss, q_haar - max(a_haar, q_gauss))
        worst = min(worst, slack)
    expect(worst >= -ORDERING_SLACK, f"ordering violated by {-worst:.3e}")
    return f"smallest slack {worst:.1e} on {points} points"


@check("ordering-chain")
def _ordering_chain_quick(settings: Settings) -> str:
    return _ordering_chain(25, min(settings.discretization_atoms, 400))


@check("ordering-chain-full", full_only=True)
def _ordering_chain_full(settings: Settings) -> str:
    return _ordering_chain(100, settings.discretization_atoms)


# --- Monte Carlo ---------------------------------------------------------------------------------


@check("mc-concentration", full_only=True)
def _mc_concentration(settings: Settings) -> str:
    from .mc import ExperimentConfig, run_annealed_experiment

    means = {}
    for mode, offdiag in (("annealed-goe", "gaussian"), ("annealed-wigner", "rademacher")):
        config = ExperimentConfig(
            mode=mode, field="gauss", gamma=1.0, n_list=(500,), samples_per_n=200, delta=0.05,
            m_grid=(math.sqrt(2.0),), seed=SELFCHECK_SEED.with_stream(5), diag_dist="gaussian", offdiag_dist=offdiag,
        )  # fmt: skip
        means[mode] = run_annealed_experiment(config, settings).samples[0].mean_f
        expect(abs(means[mode] - math.sqrt(2.0)) <= 0.05, f"{mode}: mean F = {means[mode]:.4f}")
    return ", ".join(f"{k} mean F {v:.4f}" for k, v in means.items())


@check("mc-rate-slope", full_only=True)
def _mc_rate_slope(settings: Settings) -> str:
    from .mc import TAIL, ExperimentConfig, run_quenched_experiment

    config = ExperimentConfig(
        mode="quenched-fixed-spectrum", field="gauss", gamma=1.0, n_list=(10, 40), samples_per_n=1_000_000,
        delta=0.05, m_grid=(1.8,), seed=SELFCHECK_SEED.with_stream(6),
    )  # fmt: skip
    estimates = [e for e in run_quenched_experiment(config, settings).estimates if e.convention == TAIL]
    reference = quenched_gauss_semicircle(1.8, 1.0).value
    by_n = {e.n: e.rate_hat for e in estimates}
    expect(abs(by_n[40] - reference) <= 0.3 * reference, f"n=40 rate {by_n[40]:.4f} vs {reference:.4f}")
    expect(abs(by_n[40] - reference) < abs(by_n[10] - reference), "n=40 is not closer than n=10")
    return f"rate n=10 {by_n[10]:.4f}, n=40 {by_n[40]:.4f}, limit {reference:.4f}"


@check("chi-square-blocks", full_only=True)
def _chi_square_blocks(settings: Settings) -> str:
    from .mc import chi_square_block_check

    result = chi_square_block_check(2, (0.5, 0.5), 200, 10_000_000, SELFCHECK_SEED.with_stream(7), settings=settings)
    target = 0.25 * math.log(4.0 / 3.0)
    row = min(result.bins, key=lambda r: abs(r.x[0] - 0.75))
    expect(abs(row.x[0] - 0.75) <= 1e-9, "no bin centered at x = (3/4, 1/4)")
    expect(abs(row.predicted_rate - target) <= 1e-12, f"predicted {row.predicted_rate!r}")
    expect(abs(row.empirical_rate - target) <= 0.25 * target, f"empirical {row.empirical_rate:.4f} vs {target:.4f}")
    return f"empirical {row.empirical_rate:.4f} vs predicted {target:.4f} ({row.count} hits)"


def available_checks(full: bool = False) -> list[str]:
    return [c.name for c in _CHECKS if full or not c.full_only]


def run_checks(full: bool = False, settings: Settings | None = None, only: list[str] | None = None):
    """Run the registered checks, yielding a CheckResult per check."""
    settings = settings or Settings()
    for c in _CHECKS:
        if c.full_only and not full:
            continue
        if only and c.name not in only:
            continue
        start = time.perf_counter()
        try:
            detail = c.fn(settings)
            passed = True
        except (CheckFailed, SphereLdpError, ArithmeticError, ValueError) as e:
            detail, passed = str(e), False
        elapsed = time.perf_counter() - start
        logger.debug("check %s: %s in %.2fs", c.name, "pass" if passed else "FAIL", elapsed)
        yield CheckResult(c.name, passed, detail, elapsed)

