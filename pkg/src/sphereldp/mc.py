"""Monte Carlo estimates of the finite-n rates -(1/n) log P(event).

Samples are produced in fixed-size chunks; chunk c of dimension n draws from
counter block (n << 32) | c of the configured stream. Results therefore do not
depend on how chunks are spread over worker processes.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ConfigValue, Settings
from .ensembles import RngSeed, fields_from_generator, spectrum, wigner_from_generator
from .errors import NumericError, ParseError, UsageError
from .io import read_spectrum_file
from .rates_closed import annealed_gauss, annealed_haar, quenched_gauss_semicircle
from .rates_variational import quenched_gauss_general, quenched_haar_general, quenched_haar_shifted_edge
from .semicircle import discretize, quantiles
from .sphereopt import OrderedSpectrum, mbar, solve_secular, solve_secular_batch

logger = logging.getLogger(__name__)

MODES = ("quenched-fixed-spectrum", "annealed-goe", "annealed-wigner")
FIELDS = ("haar", "gauss")
WINDOW = "window"
TAIL = "tail"

Z_95 = 1.959963984540054  # N(0,1) quantile for a 95% interval
SANDWICH_TOL = 1e-9

RESULT_COLUMNS = [
    "mode", "field", "gamma", "n", "m", "delta", "convention",
    "count", "total", "rate_hat", "wilson_low", "wilson_high", "reference_rate",
]  # fmt: skip
SAMPLE_COLUMNS = ["sample_index", "lambda1", "F"]


def wilson_interval(count: int, total: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        raise UsageError("total must be positive")
    if not 0 <= count <= total:
        raise UsageError(f"count {count} outside [0, {total}]")
    p = count / total
    denominator = 1.0 + z * z / total
    center = (p + z * z / (2.0 * total)) / denominator
    spread = z * math.sqrt(p * (1.0 - p) / total + z * z / (4.0 * total * total)) / denominator
    # the closed ends are exact; center - spread only cancels to rounding error
    low = 0.0 if count == 0 else max(0.0, center - spread)
    high = 1.0 if count == total else min(1.0, center + spread)
    return low, high


def empirical_rate(count: int, total: int, n: int) -> float:
    """-(1/n) log(count/total); +inf when nothing was observed."""
    if count == 0:
        return math.inf
    p = count / total
    return -math.log(p) / n if p < 1.0 else 0.0


def _parse_list(text: str, kind: type, key: str, source: str, line: int | None) -> tuple:
    try:
        return tuple(kind(tok) for tok in text.replace(" ", "").split(",") if tok)
    except ValueError as e:
        raise ParseError(source, line, f"{key}: expected a comma-separated list of {kind.__name__}") from e


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    field: str
    gamma: float
    n_list: tuple[int, ...]
    samples_per_n: int
    delta: float
    m_grid: tuple[float, ...]
    seed: RngSeed = RngSeed(0)
    spectrum_file: str | None = None
    diag_dist: str = "gaussian:2"
    offdiag_dist: str = "gaussian"
    dump_samples: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r} (expected one of {', '.join(MODES)})")
        if self.field not in FIELDS:
            raise UsageError(f"unknown field {self.field!r} (expected haar or gauss)")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise UsageError("gamma must be a positive finite number")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise UsageError("n_list must hold positive integers")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise UsageError("n_list must be strictly ascending")
        if self.samples_per_n < 1:
            raise UsageError("samples_per_n must be at least 1")
        if not self.delta > 0:
            raise UsageError("delta must be positive")
        if not self.m_grid:
            raise UsageError("m_grid must not be empty")
        if self.spectrum_file is not None and self.mode != "quenched-fixed-spectrum":
            raise UsageError("spectrum_file only applies to the quenched-fixed-spectrum mode")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, ConfigValue | str], source: str = "<config>") -> ExperimentConfig:
        """Build a config from key=value entries (as read by ``read_key_value_file``)."""
        entries = {k: v if isinstance(v, ConfigValue) else ConfigValue(str(v), None) for k, v in mapping.items()}
        known = {
            "mode", "field", "gamma", "n_list", "samples_per_n", "delta", "m_grid",
            "seed", "stream", "spectrum", "spectrum_file", "diag_dist", "offdiag_dist", "dump_samples",
        }  # fmt: skip
        for key, entry in entries.items():
            if key not in known:
                raise ParseError(source, entry.line, f"unknown key {key!r}")
        for key in ("mode", "field", "gamma", "n_list", "samples_per_n", "delta", "m_grid"):
            if key not in entries:
                raise ParseError(source, None, f"missing required key {key!r}")

        def scalar(key, kind, default=None):
            if key not in entries:
                return default
            entry = entries[key]
            try:
                return kind(entry.text)
            except ValueError as e:
                raise ParseError(source, entry.line, f"{key}: expected {kind.__name__}, got {entry.text!r}") from e

        spectrum_kind = scalar("spectrum", str, "quantiles")
        spectrum_file = scalar("spectrum_file", str)
        if spectrum_kind not in ("quantiles", "file"):
            raise ParseError(source, entries["spectrum"].line, "spectrum must be 'quantiles' or 'file'")
        if spectrum_kind == "file" and not spectrum_file:
            raise ParseError(source, entries["spectrum"].line, "spectrum = file needs spectrum_file")

        try:
            return cls(
                mode=scalar("mode", str),
                field=scalar("field", str),
                gamma=scalar("gamma", float),
                n_list=_parse_list(entries["n_list"].text, int, "n_list", source, entries["n_list"].line),
                samples_per_n=scalar("samples_per_n", int),
                delta=scalar("delta", float),
                m_grid=_parse_list(entries["m_grid"].text, float, "m_grid", source, entries["m_grid"].line),
                seed=RngSeed(scalar("seed", int, 0), scalar("stream", int, 0)),
                spectrum_file=spectrum_file,
                diag_dist=scalar("diag_dist", str, "gaussian:2"),
                offdiag_dist=scalar("offdiag_dist", str, "gaussian"),
                dump_samples=scalar("dump_samples", str),
            )
        except ParseError:
            raise
        except UsageError as e:
            raise ParseError(source, None, str(e)) from e


@dataclass(frozen=True)
class RateEstimate:
    """Empirical rate of one event with its 95% Wilson interval on the probability."""

    mode: str
    field: str
    gamma: float
    n: int
    m: float
    delta: float
    convention: str
    count: int
    total: int
    rate_hat: float
    wilson_low: float
    wilson_high: float
    reference_rate: float = math.nan

    def as_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SampleBlock:
    """Per-sample top eigenvalue and optimum for one dimension n."""

    n: int
    lambda1: np.ndarray
    f: np.ndarray

    @property
    def mean_f(self) -> float:
        return float(np.mean(self.f))

    def rows(self):
        for i, (lam, f) in enumerate(zip(self.lambda1, self.f)):
            yield {"sample_index": i, "lambda1": float(lam), "F": float(f)}


@dataclass
class ExperimentResult:
    estimates: list[RateEstimate] = field(default_factory=list)
    samples: list[SampleBlock] = field(default_factory=list)


def _chunks(total: int, chunk_size: int) -> list[tuple[int, int]]:
    """(chunk index, sample count) covering ``total`` samples."""
    return [(c, min(chunk_size, total - start)) for c, start in enumerate(range(0, total, chunk_size))]


def _block(n: int, chunk: int) -> int:
    return (n << 32) | chunk


def _map_chunks(fn: Callable, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _check_sandwich(lambda1: np.ndarray, f: np.ndarray, norms: np.ndarray) -> None:
    """Every optimum lies between lambda1/2 and lambda1/2 + |h|."""
    slack = SANDWICH_TOL * np.maximum(1.0, np.abs(lambda1) + norms)
    low = f < 0.5 * lambda1 - slack
    high = f > 0.5 * lambda1 + norms + slack
    if np.any(low | high):
        bad = int(np.flatnonzero(low | high)[0])
        raise NumericError(f"sample {bad}: F={f[bad]!r} outside [lambda1/2, lambda1/2 + |h|]")


def _quenched_chunk(task) -> np.ndarray:
    values, kind, gamma, seed, block, count = task
    spec = OrderedSpectrum(values)
    fields = fields_from_generator(seed.generator(block), kind, spec.n, gamma, count)
    f = solve_secular_batch(spec, fields)
    norms = np.linalg.norm(fields, axis=1)
    _check_sandwich(np.full(count, spec.lambda1), f, norms)
    return f


def _annealed_chunk(task) -> tuple[np.ndarray, np.ndarray]:
    n, kind, gamma, diag, offdiag, seed, block, count, eigensolver, tol = task
    gen = seed.generator(block)
    lambda1 = np.empty(count)
    f = np.empty(count)
    norms = np.empty(count)
    for i in range(count):
        w = wigner_from_generator(gen, n, diag, offdiag)
        h = fields_from_generator(gen, kind, n, gamma, 1)[0]
        spec, o = spectrum(w, eigensolver, tol)
        lambda1[i] = spec.lambda1
        f[i] = solve_secular(spec, o @ h).f_star
        norms[i] = float(np.linalg.norm(h))
    _check_sandwich(lambda1, f, norms)
    return lambda1, f


def _estimates(config: ExperimentConfig, n: int, f: np.ndarray, reference: Callable) -> list[RateEstimate]:
    total = int(f.size)
    out = []
    for m in config.m_grid:
        for convention in (WINDOW, TAIL):
            if convention == WINDOW:
                count = int(np.count_nonzero(np.abs(f - m) < config.delta))
            else:
                count = int(np.count_nonzero(f >= m))
            low, high = wilson_interval(count, total)
            out.append(
                RateEstimate(
                    mode=config.mode,
                    field=config.field,
                    gamma=config.gamma,
                    n=n,
                    m=m,
                    delta=config.delta,
                    convention=convention,
                    count=count,
                    total=total,
                    rate_hat=empirical_rate(count, total, n),
                    wilson_low=low,
                    wilson_high=high,
                    reference_rate=reference(m, convention),
                )
            )
    return out


def _reference(rate: Callable[[float], float], zero: float) -> Callable[[float, str], float]:
    """Limit rate for each convention: the window rate is I(m); the upper tail rate is 0 below the zero."""
    cache: dict[float, float] = {}

    def lookup(m: float, convention: str) -> float:
        if convention == TAIL and m <= zero:
            return 0.0
        if m not in cache:
            try:
                cache[m] = rate(m)
            except (NumericError, UsageError) as e:
                logger.debug("reference rate unavailable at m=%r: %s", m, e)
                cache[m] = math.nan
        return cache[m]

    return lookup


def _fixed_spectrum(config: ExperimentConfig, n: int) -> OrderedSpectrum:
    if config.spectrum_file is None:
        return quantiles(n)
    spec = read_spectrum_file(config.spectrum_file)
    if spec.n != n:
        raise UsageError(f"spectrum file has {spec.n} values but n_list asks for n={n}")
    return spec


def run_quenched_experiment(config: ExperimentConfig, settings: Settings | None = None) -> ExperimentResult:
    """Fixed spectrum per n; only the field is random."""
    if config.mode != "quenched-fixed-spectrum":
        raise UsageError(f"run_quenched_experiment needs the quenched-fixed-spectrum mode, got {config.mode!r}")
    settings = settings or Settings()
    gamma = config.gamma

    result = ExperimentResult()
    for n in config.n_list:
        spec = _fixed_spectrum(config, n)
        if config.spectrum_file is None:
            zero = math.sqrt(1.0 + gamma)
            if config.field == "gauss":
                rate = lambda m: quenched_gauss_semicircle(m, gamma).value  # noqa: E731
            else:
                sigma = discretize(settings.discretization_atoms)
                rate = lambda m: quenched_haar_shifted_edge(sigma, 2.0, -2.0, gamma, m)  # noqa: E731
        else:
            q = spec.empirical_measure()
            zero = mbar(q, spec.lambda1, gamma)
            solver = quenched_gauss_general if config.field == "gauss" else quenched_haar_general
            rate = lambda m, q=q, spec=spec: solver(q, spec.lambda_n, spec.lambda1, gamma, m)[0]  # noqa: E731

        tasks = [
            (spec.values, config.field, gamma, config.seed, _block(n, c), count)
            for c, count in _chunks(config.samples_per_n, settings.chunk_size)
        ]
        f = np.concatenate(_map_chunks(_quenched_chunk, tasks, settings.workers))
        logger.info("quenched n=%d: %d samples, mean F=%.6f", n, f.size, float(f.mean()))
        result.samples.append(SampleBlock(n, np.full(f.size, spec.lambda1), f))
        result.estimates.extend(_estimates(config, n, f, _reference(rate, zero)))
    return result


def run_annealed_experiment(config: ExperimentConfig, settings: Settings | None = None) -> ExperimentResult:
    """Fresh matrix and field per sample; records lambda1 next to F."""
    if config.mode not in ("annealed-goe", "annealed-wigner"):
        raise UsageError(f"run_annealed_experiment needs an annealed mode, got {config.mode!r}")
    settings = settings or Settings()
    gamma = config.gamma
    if config.mode == "annealed-goe":
        diag, offdiag = "gaussian:2", "gaussian"
        if config.field == "gauss":
            rate = lambda m: annealed_gauss(m, gamma).value  # noqa: E731
        else:
            rate = lambda m: annealed_haar(m, gamma, settings.discretization_atoms)  # noqa: E731
    else:
        diag, offdiag = config.diag_dist, config.offdiag_dist
        # no closed-form annealed rate outside the GOE
        rate = lambda m: math.nan  # noqa: E731
    reference = _reference(rate, math.sqrt(1.0 + gamma))

    result = ExperimentResult()
    for n in config.n_list:
        tasks = [
            (n, config.field, gamma, diag, offdiag, config.seed, _block(n, c), count,
             settings.eigensolver, settings.jacobi_tol)
            for c, count in _chunks(config.samples_per_n, settings.chunk_size)
        ]  # fmt: skip
        parts = _map_chunks(_annealed_chunk, tasks, settings.workers)
        lambda1 = np.concatenate([p[0] for p in parts])
        f = np.concatenate([p[1] for p in parts])
        logger.info("annealed n=%d: %d samples, mean F=%.6f", n, f.size, float(f.mean()))
        result.samples.append(SampleBlock(n, lambda1, f))
        result.estimates.extend(_estimates(config, n, f, reference))
    return result


def run_experiment(config: ExperimentConfig, settings: Settings | None = None) -> ExperimentResult:
    if config.mode == "quenched-fixed-spectrum":
        return run_quenched_experiment(config, settings)
    return run_annealed_experiment(config, settings)


# --- chi-square blocks ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockRate:
    """Empirical and predicted rate at one point x of the simplex."""

    x: tuple[float, ...]
    count: int
    total: int
    empirical_rate: float
    predicted_rate: float

    def as_row(self) -> dict:
        row = {f"x{j + 1}": v for j, v in enumerate(self.x)}
        row.update(count=self.count, total=self.total, empirical_rate=self.empirical_rate,
                   predicted_rate=self.predicted_rate)  # fmt: skip
        return row


@dataclass
class BlockCheckResult:
    sizes: tuple[int, ...]
    bins: list[BlockRate]
    tails: list[BlockRate]


def block_sizes(block_fractions: Sequence[float], n: int) -> tuple[int, ...]:
    """Split n into integer block sizes proportional to the fractions (largest remainders)."""
    fractions = np.asarray(block_fractions, dtype=float)
    if fractions.size < 2:
        raise UsageError("need at least two blocks")
    if np.any(fractions < 0) or abs(float(fractions.sum()) - 1.0) > 1e-12:
        raise UsageError("block fractions must be nonnegative and sum to 1")
    if n * float(fractions.min()) < 1:
        raise UsageError(f"degenerate partition: n={n} leaves a block of fewer than one index")
    raw = n * fractions
    sizes = np.floor(raw).astype(int)
    remainder = n - int(sizes.sum())
    order = np.argsort(-(raw - sizes), kind="stable")
    sizes[order[:remainder]] += 1
    if np.any(sizes < 1):
        raise UsageError("degenerate partition: empty block")
    return tuple(int(s) for s in sizes)


def block_rate(mu: np.ndarray, x: np.ndarray) -> float:
    """1/2 H(mu | x) for probability vectors."""
    if np.any(x <= 0):
        return math.inf
    keep = mu > 0
    return 0.5 * float(np.sum(mu[keep] * np.log(mu[keep] / x[keep])))


def _block_chunk(task):
    sizes, seed, block, count, bin_width, thresholds = task
    gen = seed.generator(block)
    sums = gen.chisquare(np.asarray(sizes, dtype=float), size=(count, len(sizes)))
    x = sums / sums.sum(axis=1, keepdims=True)
    keys = np.rint(x[:, :-1] / bin_width).astype(np.int64)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    tail_counts = np.count_nonzero(x[:, :1] >= thresholds[None, :], axis=0) if thresholds.size else np.zeros(0)
    return {tuple(int(v) for v in k): int(c) for k, c in zip(uniq, counts)}, tail_counts


def chi_square_block_check(
    k: int,
    block_fractions: Sequence[float],
    n: int,
    samples: int,
    seed: RngSeed,
    bin_width: float = 0.05,
    settings: Settings | None = None,
) -> BlockCheckResult:
    """Empirical rates of the normalized chi-square block sums against 1/2 H(mu_K | x).

    Block sums of squared standard normals are drawn directly as chi-square variates.
    Bins are centered on multiples of ``bin_width`` in the first K - 1 coordinates.
    For K = 2 the upper tail P(x1 >= t) is also reported at thresholds t = mu_1 + j * bin_width.
    """
    if k != len(block_fractions):
        raise UsageError(f"k={k} but {len(block_fractions)} block fractions given")
    if k < 2:
        raise UsageError("k must be at least 2")
    if samples < 1:
        raise UsageError("samples must be at least 1")
    if not 0 < bin_width < 1:
        raise UsageError("bin_width must lie in (0, 1)")
    settings = settings or Settings()
    sizes = block_sizes(block_fractions, n)
    mu = np.asarray(sizes, dtype=float) / n

    thresholds = np.zeros(0)
    if k == 2:
        steps = int(math.floor((1.0 - mu[0]) / bin_width + 1e-9))
        thresholds = mu[0] + bin_width * np.arange(steps + 1)

    tasks = [
        (sizes, seed, _block(n, c), count, bin_width, thresholds)
        for c, count in _chunks(samples, settings.chunk_size)
    ]
    bin_counts: dict[tuple[int, ...], int] = {}
    tail_counts = np.zeros(thresholds.size, dtype=np.int64)
    for counts, tails in _map_chunks(_block_chunk, tasks, settings.workers):
        for key, c in counts.items():
            bin_counts[key] = bin_counts.get(key, 0) + c
        tail_counts += np.asarray(tails, dtype=np.int64)

    bins = []
    for key in sorted(bin_counts):
        head = np.asarray(key, dtype=float) * bin_width
        x = np.append(head, 1.0 - head.sum())
        count = bin_counts[key]
        bins.append(
            BlockRate(tuple(float(v) for v in x), count, samples, empirical_rate(count, samples, n), block_rate(mu, x))
        )
    tails = [
        BlockRate(
            (float(t), float(1.0 - t)),
            int(c),
            samples,
            empirical_rate(int(c), samples, n),
            block_rate(mu, np.array([t, 1.0 - t])),
        )
        for t, c in zip(thresholds, tail_counts)
    ]
    return BlockCheckResult(sizes=sizes, bins=bins, tails=tails)
