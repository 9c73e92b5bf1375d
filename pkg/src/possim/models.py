"""Statistical models: normal mean, binomial, bivariate correlation, 2x2 table.

Each model bundles the pieces the inference layer needs: a parameter
space, a fully normalized log-likelihood, a maximum likelihood
estimator, and a reproducible sampler.  Samplers are deterministic
functions of ``(model, theta, seed)``; independent substreams are keyed
by integer tuples fed to ``numpy.random.default_rng`` so that parallel
or out-of-order evaluation cannot change results.

Observed-data containers are small frozen types; the correlation model
additionally caches the sufficient statistics (sums of squares and
cross products) that every likelihood evaluation consumes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom as _binom_dist

from possim import _backend as kernels
from possim.errors import DataFormatError

__all__ = [
    "ParameterSpace",
    "ModelSpec",
    "NormalData",
    "BinomialData",
    "CorrelationData",
    "TableData",
    "NormalMeanModel",
    "BinomialModel",
    "BivariateCorrelationModel",
    "TwoByTwoModel",
    "standardize_pairs",
    "read_normal_csv",
    "read_binomial_csv",
    "read_correlation_csv",
    "read_table_csv",
    "fixture_path",
    "load_clinical_trial",
    "load_law_school",
]

_RHO_EDGE = 1e-9  # correlation likelihood is evaluated on |rho| <= 1 - 1e-9


@dataclass(frozen=True)
class ParameterSpace:
    """Box-shaped parameter space: one (lo, hi) pair per coordinate."""

    bounds: tuple

    def __post_init__(self):
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"empty parameter interval ({lo}, {hi})")

    @property
    def ndim(self) -> int:
        return len(self.bounds)

    def contains(self, theta) -> bool:
        pt = np.atleast_1d(np.asarray(theta, dtype=float))
        if pt.shape[0] != self.ndim:
            return False
        return all(lo <= v <= hi for v, (lo, hi) in zip(pt, self.bounds))


@dataclass(frozen=True)
class ModelSpec:
    """Declarative summary of a model: its box constraints and data shape."""

    parameter_space: ParameterSpace
    data_shape: str


# ---------------------------------------------------------------------------
# observed-data containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalData:
    """Observed sample mean."""

    ybar: float


@dataclass(frozen=True)
class BinomialData:
    """Observed success count."""

    y: int


class CorrelationData:
    """Paired observations on the model scale (zero mean, unit variance).

    Use :meth:`from_raw` for raw measurements; it standardizes each
    column by its sample mean and sample standard deviation (ddof=1).
    """

    __slots__ = ("pairs", "s11", "s12", "s22")

    def __init__(self, pairs):
        pairs = np.asarray(pairs, dtype=float)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise DataFormatError("correlation data must be an (n, 2) array")
        pairs = pairs.copy()
        pairs.setflags(write=False)
        self.pairs = pairs
        self.s11 = float(np.sum(pairs[:, 0] * pairs[:, 0]))
        self.s12 = float(np.sum(pairs[:, 0] * pairs[:, 1]))
        self.s22 = float(np.sum(pairs[:, 1] * pairs[:, 1]))

    @property
    def n_pairs(self) -> int:
        return self.pairs.shape[0]

    @property
    def sample_correlation(self) -> float:
        return self.s12 / math.sqrt(self.s11 * self.s22)

    @classmethod
    def from_raw(cls, raw) -> "CorrelationData":
        return cls(standardize_pairs(raw))

    def __repr__(self):  # pragma: no cover
        return f"CorrelationData(n_pairs={self.n_pairs}, r={self.sample_correlation:.3f})"


@dataclass(frozen=True)
class TableData:
    """Cell counts of a 2x2 contingency table, row-major.

    Row 0 is the (X=0, e.g. placebo) group with counts ``(y00, y01)``
    for response W=0/W=1; row 1 likewise.
    """

    y00: int
    y01: int
    y10: int
    y11: int

    def __post_init__(self):
        for name in ("y00", "y01", "y10", "y11"):
            v = getattr(self, name)
            if not (isinstance(v, (int, np.integer)) and v >= 0):
                raise DataFormatError(f"cell {name} must be a nonnegative integer")

    @property
    def row_totals(self) -> tuple:
        return (self.y00 + self.y01, self.y10 + self.y11)


def standardize_pairs(raw) -> np.ndarray:
    """Column-standardize paired data: subtract the sample mean, divide by
    the sample standard deviation (ddof=1).

    Standardization leaves the sample correlation unchanged but puts raw
    measurements on the zero-mean unit-variance scale the correlation
    model assumes.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[1] != 2 or raw.shape[0] < 2:
        raise DataFormatError("raw correlation data must be an (n>=2, 2) array")
    sd = raw.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise DataFormatError("degenerate correlation data: zero sample variance")
    return (raw - raw.mean(axis=0)) / sd


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalMeanModel:
    """Normal model for a sample mean: ``Ybar ~ N(theta, sd^2)``.

    ``sd`` is the sampling standard deviation *of the mean* (e.g. a raw
    measurement sd of 10 with n=100 observations gives sd=1).
    """

    sd: float = 1.0

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("sd must be positive")

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.param_space, "scalar sample mean ybar")

    @property
    def param_space(self) -> ParameterSpace:
        return ParameterSpace(((-math.inf, math.inf),))

    def validate(self, data: NormalData):
        if not isinstance(data, NormalData) or not math.isfinite(data.ybar):
            raise DataFormatError("normal model expects NormalData with finite ybar")

    def log_likelihood(self, data: NormalData, theta: float) -> float:
        z = (data.ybar - theta) / self.sd
        return -0.5 * math.log(2.0 * math.pi * self.sd**2) - 0.5 * z * z

    def mle(self, data: NormalData) -> float:
        return data.ybar

    def sample(self, theta: float, seed: int) -> NormalData:
        return NormalData(float(self.sample_array(theta, seed, 1)[0]))

    def sample_array(self, theta: float, seed: int, size: int) -> np.ndarray:
        rng = np.random.default_rng((seed, 0))
        return theta + self.sd * rng.standard_normal(size)

    # Monte Carlo hooks: base draws are standard normals, reused across the
    # grid under common random numbers.
    def _mc_base(self, rng, m: int):
        return rng.standard_normal(m)

    def _mc_logrel(self, base, theta: float) -> np.ndarray:
        # log R(Y, theta) = -(ybar_m - theta)^2 / (2 sd^2) = -z^2/2
        return -0.5 * base * base

    def grid_bounds(self, data: NormalData) -> tuple:
        return (data.ybar - 6.0 * self.sd, data.ybar + 6.0 * self.sd)


@dataclass(frozen=True)
class BinomialModel:
    """Binomial success count: ``Y ~ Binomial(n_trials, theta)``."""

    n_trials: int

    def __post_init__(self):
        if not (isinstance(self.n_trials, (int, np.integer)) and self.n_trials >= 1):
            raise ValueError("n_trials must be an integer >= 1")

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.param_space, f"success count y in 0..{self.n_trials}")

    @property
    def param_space(self) -> ParameterSpace:
        return ParameterSpace(((0.0, 1.0),))

    def validate(self, data: BinomialData):
        ok = isinstance(data, BinomialData) and 0 <= data.y <= self.n_trials
        if not ok:
            raise DataFormatError(
                f"binomial data must satisfy 0 <= y <= {self.n_trials}"
            )

    def log_likelihood(self, data: BinomialData, theta: float) -> float:
        n, y = self.n_trials, data.y
        logc = float(gammaln(n + 1) - gammaln(y + 1) - gammaln(n - y + 1))
        t1 = 0.0 if y == 0 else y * math.log(theta) if theta > 0 else -math.inf
        t2 = (
            0.0
            if y == n
            else (n - y) * math.log1p(-theta)
            if theta < 1
            else -math.inf
        )
        return logc + t1 + t2

    def mle(self, data: BinomialData) -> float:
        # degenerate data (y=0 or y=n) lands on the boundary by design
        return data.y / self.n_trials

    def sample(self, theta: float, seed: int) -> BinomialData:
        return BinomialData(int(self.sample_array(theta, seed, 1)[0]))

    def sample_array(self, theta: float, seed: int, size: int) -> np.ndarray:
        rng = np.random.default_rng((seed, 0))
        return rng.binomial(self.n_trials, theta, size)

    def _mc_base(self, rng, m: int):
        # uniforms, mapped through the binomial quantile per theta (CRN)
        return rng.uniform(size=m)

    def _mc_logrel(self, base, theta: float) -> np.ndarray:
        n = self.n_trials
        ym = _binom_dist.ppf(base, n, theta).astype(np.int64)
        return _binom_logrel_outcomes(ym, n, theta)

    def grid_bounds(self, data: BinomialData) -> tuple:
        return (0.0, 1.0)


def _binom_logrel_outcomes(ys, n, theta) -> np.ndarray:
    """log R(y', theta) for integer outcomes y' under Binomial(n, theta)."""
    ys = np.asarray(ys, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(ys == 0, 0.0, ys * np.log(theta))
        t2 = np.where(ys == n, 0.0, (n - ys) * np.log1p(-theta))
        h1 = np.where(ys == 0, 0.0, ys * np.log(ys / n))
        h2 = np.where(ys == n, 0.0, (n - ys) * np.log1p(-ys / n))
    return t1 + t2 - h1 - h2


@dataclass(frozen=True)
class BivariateCorrelationModel:
    """Zero-mean unit-variance bivariate normal with correlation theta."""

    n_pairs: int

    def __post_init__(self):
        if not (isinstance(self.n_pairs, (int, np.integer)) and self.n_pairs >= 2):
            raise ValueError("n_pairs must be an integer >= 2")

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.param_space, f"{self.n_pairs} standardized (v1, v2) pairs")

    @property
    def param_space(self) -> ParameterSpace:
        return ParameterSpace(((-1.0, 1.0),))

    def validate(self, data: CorrelationData):
        if not isinstance(data, CorrelationData) or data.n_pairs != self.n_pairs:
            raise DataFormatError(
                f"correlation data must hold exactly {self.n_pairs} pairs"
            )

    def log_likelihood(self, data: CorrelationData, theta: float) -> float:
        if abs(theta) > 1.0 - _RHO_EDGE:
            raise ValueError("correlation log-likelihood diverges as |rho| -> 1")
        return float(
            kernels.corr_loglik(data.s11, data.s12, data.s22, self.n_pairs, theta)[0]
        )

    def mle(self, data: CorrelationData) -> float:
        """Golden-section search on the likelihood followed by bisection on
        the sign of its derivative; tolerance 1e-10 in rho."""
        s11, s12, s22, n = data.s11, data.s12, data.s22, self.n_pairs

        def ll(r):
            return float(kernels.corr_loglik(s11, s12, s22, n, r)[0])

        def dsign(r):
            # sign of l'(rho); numerator of the derivative is
            # -(n r^3 - s12 r^2 + (s11+s22-n) r - s12)
            return -(n * r**3 - s12 * r**2 + (s11 + s22 - n) * r - s12)

        lo, hi = -1.0 + _RHO_EDGE, 1.0 - _RHO_EDGE
        # coarse scan guards against the (rare) bimodal likelihood before
        # golden-section narrows the bracket
        scan = np.linspace(lo, hi, 101)
        vals = kernels.corr_loglik(
            np.full(101, s11), np.full(101, s12), np.full(101, s22), n, scan
        )
        k = int(np.argmax(vals))
        a = scan[max(k - 1, 0)]
        b = scan[min(k + 1, 100)]
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = ll(c), ll(d)
        while b - a > 1e-6:
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = ll(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = ll(d)
        # interior maximum: derivative changes sign from + to - across it
        while b - a > 1e-10:
            mid = 0.5 * (a + b)
            if dsign(mid) > 0:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    def sample(self, theta: float, seed: int) -> CorrelationData:
        return CorrelationData(self.sample_array(theta, seed, 1)[0])

    def sample_array(self, theta: float, seed: int, size: int) -> np.ndarray:
        rng = np.random.default_rng((seed, 0))
        z = rng.standard_normal((size, self.n_pairs, 2))
        c = math.sqrt(1.0 - theta * theta)
        out = np.empty_like(z)
        out[:, :, 0] = z[:, :, 0]
        out[:, :, 1] = theta * z[:, :, 0] + c * z[:, :, 1]
        return out

    def _mc_base(self, rng, m: int):
        # sufficient statistics of rho=0 draws; rotated per theta downstream
        z = rng.standard_normal((m, self.n_pairs, 2))
        b11 = np.einsum("ij,ij->i", z[:, :, 0], z[:, :, 0])
        b12 = np.einsum("ij,ij->i", z[:, :, 0], z[:, :, 1])
        b22 = np.einsum("ij,ij->i", z[:, :, 1], z[:, :, 1])
        return b11, b12, b22

    def _mc_logrel(self, base, theta: float) -> np.ndarray:
        b11, b12, b22 = base
        c = math.sqrt(1.0 - theta * theta)
        s11 = b11
        s12 = theta * b11 + c * b12
        s22 = theta * theta * b11 + 2.0 * theta * c * b12 + c * c * b22
        return kernels.corr_logrel(s11, s12, s22, self.n_pairs, theta)

    def suffstats_of(self, pairs: np.ndarray) -> tuple:
        v1, v2 = pairs[..., 0], pairs[..., 1]
        return (
            np.sum(v1 * v1, axis=-1),
            np.sum(v1 * v2, axis=-1),
            np.sum(v2 * v2, axis=-1),
        )

    def grid_bounds(self, data: CorrelationData) -> tuple:
        return (-1.0 + _RHO_EDGE, 1.0 - _RHO_EDGE)


@dataclass(frozen=True)
class TwoByTwoModel:
    """Two independent binomial rows of a 2x2 table with fixed row totals.

    ``theta = (theta0, theta1)`` are the per-row success probabilities
    P(W=1 | X=x); the likelihood is the product of the two row binomials.
    """

    row_totals: tuple

    def __post_init__(self):
        rt = tuple(int(v) for v in self.row_totals)
        object.__setattr__(self, "row_totals", rt)
        if len(rt) != 2 or any(v < 1 for v in rt):
            raise ValueError("row_totals must be two integers >= 1")

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.param_space, "2x2 cell counts (y00, y01, y10, y11)")

    @property
    def param_space(self) -> ParameterSpace:
        return ParameterSpace(((0.0, 1.0), (0.0, 1.0)))

    @property
    def _rows(self) -> tuple:
        return (BinomialModel(self.row_totals[0]), BinomialModel(self.row_totals[1]))

    def validate(self, data: TableData):
        if not isinstance(data, TableData) or data.row_totals != self.row_totals:
            raise DataFormatError(
                f"table data must have row totals {self.row_totals}"
            )

    def log_likelihood(self, data: TableData, theta) -> float:
        t0, t1 = float(theta[0]), float(theta[1])
        r0, r1 = self._rows
        return r0.log_likelihood(BinomialData(data.y01), t0) + r1.log_likelihood(
            BinomialData(data.y11), t1
        )

    def mle(self, data: TableData) -> tuple:
        return (data.y01 / self.row_totals[0], data.y11 / self.row_totals[1])

    def sample(self, theta, seed: int) -> TableData:
        y01, y11 = self.sample_array(theta, seed, 1)[0]
        n0, n1 = self.row_totals
        return TableData(int(n0 - y01), int(y01), int(n1 - y11), int(y11))

    def sample_array(self, theta, seed: int, size: int) -> np.ndarray:
        rng = np.random.default_rng((seed, 0))
        y01 = rng.binomial(self.row_totals[0], float(theta[0]), size)
        y11 = rng.binomial(self.row_totals[1], float(theta[1]), size)
        return np.column_stack([y01, y11])

    def _mc_base(self, rng, m: int):
        return rng.uniform(size=m), rng.uniform(size=m)

    def _mc_logrel(self, base, theta) -> np.ndarray:
        u0, u1 = base
        n0, n1 = self.row_totals
        y0 = _binom_dist.ppf(u0, n0, float(theta[0])).astype(np.int64)
        y1 = _binom_dist.ppf(u1, n1, float(theta[1])).astype(np.int64)
        return _binom_logrel_outcomes(y0, n0, float(theta[0])) + _binom_logrel_outcomes(
            y1, n1, float(theta[1])
        )

    def grid_bounds(self, data: TableData) -> tuple:
        return ((0.0, 1.0), (0.0, 1.0))


# ---------------------------------------------------------------------------
# CSV input and bundled fixtures
# ---------------------------------------------------------------------------


def _read_rows(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DataFormatError(f"{path}: empty data file")
    return rows


def read_normal_csv(path) -> NormalData:
    """Single-column file with header ``ybar``."""
    rows = _read_rows(path)
    if [c.strip() for c in rows[0]] != ["ybar"] or len(rows) != 2:
        raise DataFormatError(f"{path}: expected header 'ybar' and one value row")
    try:
        return NormalData(float(rows[1][0]))
    except ValueError as exc:
        raise DataFormatError(f"{path}: non-numeric ybar") from exc


def read_binomial_csv(path) -> tuple:
    """Two-column file with header ``y,n``; returns (model, data)."""
    rows = _read_rows(path)
    if [c.strip() for c in rows[0]] != ["y", "n"] or len(rows) != 2:
        raise DataFormatError(f"{path}: expected header 'y,n' and one value row")
    try:
        y, n = int(rows[1][0]), int(rows[1][1])
    except (ValueError, IndexError) as exc:
        raise DataFormatError(f"{path}: malformed y,n row") from exc
    model = BinomialModel(n)
    data = BinomialData(y)
    model.validate(data)
    return model, data


def read_correlation_csv(path) -> tuple:
    """Two-column file with header ``v1,v2`` holding raw pairs.

    Standardization (sample mean, sample sd) is applied on load; returns
    (model, data).
    """
    rows = _read_rows(path)
    if [c.strip() for c in rows[0]] != ["v1", "v2"]:
        raise DataFormatError(f"{path}: expected header 'v1,v2'")
    try:
        raw = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise DataFormatError(f"{path}: malformed pair row") from exc
    data = CorrelationData.from_raw(raw)
    return BivariateCorrelationModel(data.n_pairs), data


def read_table_csv(path) -> tuple:
    """Four-column file with header ``y00,y01,y10,y11``; returns (model, data)."""
    rows = _read_rows(path)
    if [c.strip() for c in rows[0]] != ["y00", "y01", "y10", "y11"] or len(rows) != 2:
        raise DataFormatError(
            f"{path}: expected header 'y00,y01,y10,y11' and one value row"
        )
    try:
        cells = [int(v) for v in rows[1][:4]]
    except (ValueError, IndexError) as exc:
        raise DataFormatError(f"{path}: malformed cell row") from exc
    data = TableData(*cells)
    return TwoByTwoModel(data.row_totals), data


def fixture_path(name: str) -> Path:
    """Filesystem path of a bundled data file (e.g. 'law_school.csv')."""
    return Path(resources.files("possim").joinpath("data", name))


def load_clinical_trial() -> tuple:
    """The bundled hypothetical clinical-trial 2x2 table; (model, data)."""
    return read_table_csv(fixture_path("clinical_trial.csv"))


def load_law_school() -> tuple:
    """The bundled law-school admissions pairs (LSAT, GPA); (model, data)."""
    return read_correlation_csv(fixture_path("law_school.csv"))
