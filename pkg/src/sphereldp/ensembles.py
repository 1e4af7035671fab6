"""Reproducible GOE/Wigner matrices, external fields and symmetric eigendecomposition.

Every draw comes from a Philox counter-based generator keyed by (seed, stream);
the counter block selects an independent slice of the stream, so any sample
chunk is addressable without replaying earlier draws. Normal variates are made
by inverse CDF from open-interval uniforms so that every entry consumes exactly
one 64-bit word.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import NumericError, UsageError
from .sphereopt import OrderedSpectrum, solve_secular

logger = logging.getLogger(__name__)

UINT64_LIMIT = 2**64
_MANTISSA = 2**53

EIGENSOLVERS = ("lapack", "jacobi")
DISTRIBUTIONS = ("gaussian", "rademacher", "uniform")
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class RngSeed:
    """Address of a random stream: a 64-bit seed and a 64-bit sub-stream index."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= int(value) < UINT64_LIMIT:
                raise UsageError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self, block: int = 0) -> np.random.Generator:
        """Generator positioned at counter block ``block`` (each block is 2**128 draws apart)."""
        key = (int(self.stream) << 64) | int(self.seed)
        return np.random.Generator(np.random.Philox(key=key, counter=int(block) << 128))

    def with_stream(self, stream: int) -> RngSeed:
        return RngSeed(self.seed, stream)


def uniforms(gen: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1), 53 bits each."""
    return (gen.integers(0, _MANTISSA, size=size, dtype=np.int64) + 0.5) / _MANTISSA


def standard_normals(gen: np.random.Generator, size) -> np.ndarray:
    return ndtri(uniforms(gen, size))


@dataclass(frozen=True)
class SymmetricMatrix:
    """Real symmetric matrix stored as its upper triangle, row-major."""

    n: int
    upper: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("matrix order must be at least 1")
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        expected = self.n * (self.n + 1) // 2
        if upper.size != expected:
            raise UsageError(f"order {self.n} needs {expected} upper-triangle entries, got {upper.size}")
        upper.setflags(write=False)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_dense(cls, a) -> SymmetricMatrix:
        """Take the upper triangle of a square array; the lower triangle is ignored."""
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise UsageError(f"expected a square matrix, got shape {a.shape}")
        n = a.shape[0]
        return cls(n, a[np.triu_indices(n)])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        rows, cols = np.triu_indices(self.n)
        out[rows, cols] = self.upper
        out[cols, rows] = self.upper
        return out

    def conjugated(self, q: np.ndarray) -> SymmetricMatrix:
        """Q^T W Q."""
        dense = self.to_dense()
        return SymmetricMatrix.from_dense(q.T @ dense @ q)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.upper)))


def _parse_distribution(spec: str) -> tuple[str, float]:
    """'name' or 'name:variance' -> (name, variance)."""
    name, _, variance = spec.strip().lower().partition(":")
    if name not in DISTRIBUTIONS:
        raise UsageError(f"unknown distribution {spec!r} (expected one of {', '.join(DISTRIBUTIONS)})")
    try:
        var = float(variance) if variance else 1.0
    except ValueError as e:
        raise UsageError(f"bad variance in distribution spec {spec!r}") from e
    if not var > 0:
        raise UsageError(f"variance must be positive in {spec!r}")
    return name, var


def _transform(u: np.ndarray, name: str, variance: float) -> np.ndarray:
    """Map uniforms to unit-variance draws of the named law, then scale."""
    if name == "gaussian":
        z = ndtri(u)
    elif name == "rademacher":
        z = np.where(u < 0.5, -1.0, 1.0)
    else:
        z = math.sqrt(3.0) * (2.0 * u - 1.0)
    return math.sqrt(variance) * z


def wigner_from_generator(gen: np.random.Generator, n: int, diag_dist: str, offdiag_dist: str) -> SymmetricMatrix:
    diag_name, diag_var = _parse_distribution(diag_dist)
    off_name, off_var = _parse_distribution(offdiag_dist)
    if n < 1:
        raise UsageError("n must be at least 1")
    u = uniforms(gen, n * (n + 1) // 2)
    rows, cols = np.triu_indices(n)
    on_diag = rows == cols
    entries = np.empty_like(u)
    entries[on_diag] = _transform(u[on_diag], diag_name, diag_var)
    entries[~on_diag] = _transform(u[~on_diag], off_name, off_var)
    return SymmetricMatrix(n, entries / math.sqrt(n))


def sample_wigner(n: int, diag_dist: str, offdiag_dist: str, seed: RngSeed) -> SymmetricMatrix:
    """Wigner matrix with entries per the given specs, scaled by 1/sqrt(n).

    Specs are ``gaussian``, ``rademacher`` or ``uniform``, optionally with a variance
    suffix (``gaussian:2``). Each law is drawn at unit variance before scaling.
    """
    return wigner_from_generator(seed.generator(), n, diag_dist, offdiag_dist)


def sample_goe(n: int, seed: RngSeed) -> SymmetricMatrix:
    """GOE: off-diagonal variance 1/n, diagonal variance 2/n."""
    if n < 1:
        raise UsageError("n must be at least 1")
    return sample_wigner(n, "gaussian:2", "gaussian", seed)


def fields_from_generator(gen: np.random.Generator, kind: str, n: int, gamma: float, count: int) -> np.ndarray:
    """``count`` fields as rows: Haar on the radius-sqrt(gamma) sphere, or i.i.d. N(0, gamma/n)."""
    if n < 1:
        raise UsageError("n must be at least 1")
    if not gamma > 0:
        raise UsageError(f"gamma must be positive, got {gamma!r}")
    g = standard_normals(gen, (count, n))
    if kind == "gauss":
        return math.sqrt(gamma / n) * g
    if kind == "haar":
        return math.sqrt(gamma) * g / np.linalg.norm(g, axis=1, keepdims=True)
    raise UsageError(f"unknown field kind {kind!r} (expected haar or gauss)")


def sample_haar_sphere(n: int, gamma: float, seed: RngSeed) -> np.ndarray:
    return fields_from_generator(seed.generator(), "haar", n, gamma, 1)[0]


def sample_gauss_field(n: int, gamma: float, seed: RngSeed) -> np.ndarray:
    return fields_from_generator(seed.generator(), "gauss", n, gamma, 1)[0]


def sample_gauss_field_with_radius(n: int, gamma: float, seed: RngSeed) -> tuple[np.ndarray, float]:
    """The Gaussian field split as (Haar direction on the sqrt(gamma) sphere, Y) with field = direction * sqrt(Y).

    n * Y is chi-square with n degrees of freedom; the product equals ``sample_gauss_field`` for the same seed.
    """
    g = standard_normals(seed.generator(), (1, n))[0]
    norm = float(np.linalg.norm(g))
    return math.sqrt(gamma) * g / norm, norm * norm / n


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns (eigenvalues, V) with a = V diag(eigenvalues) V^T, unsorted. Sweeps
    stop once the off-diagonal Frobenius norm is below tol * ||a||_F.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    if n == 1 or scale == 0.0:
        return np.diag(a).copy(), v

    for sweep in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(float(np.sum(a * a)) - float(np.sum(np.diag(a) ** 2)), 0.0))
        if off <= tol * scale:
            logger.debug("jacobi converged after %d sweeps (n=%d)", sweep, n)
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    raise NumericError(f"jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (n={n})")


def spectrum(w: SymmetricMatrix, eigensolver: str = "lapack", tol: float = 1e-12) -> tuple[OrderedSpectrum, np.ndarray]:
    """Descending eigenvalues and the orthogonal O with W = O^T diag(lambda) O (rows of O are eigenvectors)."""
    if not np.all(np.isfinite(w.upper)):
        raise UsageError("matrix entries must be finite")
    dense = w.to_dense()
    if eigensolver == "lapack":
        values, vectors = np.linalg.eigh(dense)
    elif eigensolver == "jacobi":
        values, vectors = jacobi_eigh(dense, tol)
    else:
        raise UsageError(f"unknown eigensolver {eigensolver!r} (expected one of {', '.join(EIGENSOLVERS)})")
    order = np.argsort(-values, kind="stable")
    return OrderedSpectrum(values[order]), vectors[:, order].T


def f_value(w: SymmetricMatrix, h, eigensolver: str = "lapack", tol: float = 1e-12) -> float:
    """sup over the unit sphere of 1/2 x^T W x + h^T x."""
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != w.n:
        raise UsageError(f"field has length {h.size}, matrix has order {w.n}")
    spec, o = spectrum(w, eigensolver, tol)
    return solve_secular(spec, o @ h).f_star
