"""Support classifier fit on terminal-state samples, with model persistence.

The classifier value at a query x is F(x) = phi' (G + M lambda I)^{-1} phi,
where phi_i = K(x_i, x) over the M training points and G is their Gram
matrix.  A point is declared inside the estimated support when F(x) is at
least 1 - tau, with tau = 1 - min_i F(x_i) so that every training point is
contained by construction.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .kernels import KernelSpec, gram, kernel_matrix

RECIPROCAL_M = "reciprocal-m"

MODEL_FORMAT_VERSION = 1

# Slack on the inside test so training points never flip under roundoff.
CLASSIFY_SLACK = 1e-12

# Queries are solved against the Cholesky factor in blocks of exactly this
# many right-hand-side columns (zero-padded at the tail).  A fixed block
# geometry keeps each column's arithmetic independent of batch size and
# ordering, so batched, chunked, and one-at-a-time evaluation agree bitwise.
_QUERY_BLOCK = 256


class ModelFormatError(ValueError):
    """Raised when a model file is corrupt, inconsistent, or from a newer format."""


@dataclass(frozen=True)
class SampleSet:
    """M terminal-state vectors of dimension n, rows drawn i.i.d. from a system."""

    points: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("sample points must form a nonempty (M, n) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points contain non-finite entries")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class FitConfig:
    """Kernel choice plus the regularization rule.

    ``regularization`` is either a positive number or the string
    ``"reciprocal-m"``, which resolves to 1/M at fit time (the default; the
    regularization must vanish as M grows for the estimate to converge).
    """

    kernel: KernelSpec = KernelSpec()
    regularization: object = RECIPROCAL_M

    def resolve_lambda(self, sample_size: int) -> float:
        if isinstance(self.regularization, str):
            if self.regularization != RECIPROCAL_M:
                raise ValueError(
                    f"regularization must be a positive number or {RECIPROCAL_M!r}"
                )
            return 1.0 / sample_size
        lam = float(self.regularization)
        if not (np.isfinite(lam) and lam > 0):
            raise ValueError(f"explicit regularization must be positive, got {lam!r}")
        return lam


@dataclass(frozen=True)
class SupportModel:
    """Fitted support classifier.

    ``factor`` is the lower Cholesky factor L of G + M lambda I; it is
    recomputed from the support points when a model is loaded from disk.
    ``train_values`` holds the classifier value at each training point.
    """

    support: np.ndarray
    kernel: KernelSpec
    lam: float
    tau: float
    factor: np.ndarray
    train_values: np.ndarray

    def __post_init__(self):
        for arr in (self.support, self.factor, self.train_values):
            arr.flags.writeable = False

    @property
    def size(self) -> int:
        return self.support.shape[0]

    @property
    def dim(self) -> int:
        return self.support.shape[1]


def _block_quadratic_form(factor: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Columnwise phi_j' A^{-1} phi_j via the factor, as ||L^{-1} phi_j||^2.

    The sum-of-squares form makes every value nonnegative in floating point,
    not just in exact arithmetic.
    """
    m, q = phi.shape
    out = np.empty(q)
    for start in range(0, q, _QUERY_BLOCK):
        block = phi[:, start : start + _QUERY_BLOCK]
        width = block.shape[1]
        if width < _QUERY_BLOCK:
            block = np.concatenate(
                [block, np.zeros((m, _QUERY_BLOCK - width))], axis=1
            )
        y = solve_triangular(factor, block, lower=True, check_finite=False)
        out[start : start + width] = (y * y).sum(axis=0)[:width]
    return out


def fit(samples: SampleSet, config: FitConfig) -> SupportModel:
    """Fit the support classifier to a terminal-state sample.

    Builds the Gram matrix G, factorizes G + M lambda I (positive definite
    for any lambda > 0, so a factorization failure signals corrupted input),
    evaluates the classifier at every training point, and sets the threshold
    tau = 1 - min of those values.
    """
    m = samples.size
    lam = config.resolve_lambda(m)
    g = gram(config.kernel, samples.points)
    a = g.entries + (m * lam) * np.eye(m)
    factor = np.linalg.cholesky(a)
    train_values = _block_quadratic_form(factor, g.entries)
    tau = 1.0 - float(train_values.min())
    return SupportModel(
        support=samples.points.copy(),
        kernel=config.kernel,
        lam=lam,
        tau=tau,
        factor=factor,
        train_values=train_values,
    )


def _as_queries(model: SupportModel, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(0, model.dim) if pts.size == 0 else pts[None, :]
    if pts.ndim != 2 or (pts.size and pts.shape[1] != model.dim):
        raise ValueError(
            f"query points must have dimension {model.dim}, got shape {pts.shape}"
        )
    if not np.all(np.isfinite(pts)):
        raise ValueError("query points contain non-finite entries")
    return pts


def decision_values(model: SupportModel, points) -> np.ndarray:
    """Classifier values at a batch of query points (always >= 0)."""
    pts = _as_queries(model, points)
    out = np.empty(pts.shape[0])
    for start in range(0, pts.shape[0], _QUERY_BLOCK):
        chunk = pts[start : start + _QUERY_BLOCK]
        phi = kernel_matrix(model.kernel, model.support, chunk)
        out[start : start + chunk.shape[0]] = _block_quadratic_form(model.factor, phi)
    return out


def decision_value(model: SupportModel, x) -> float:
    """Classifier value at a single query point."""
    xv = np.asarray(x, dtype=float)
    if xv.ndim != 1:
        raise ValueError("query must be a 1-d vector")
    return float(decision_values(model, xv[None, :])[0])


def decision_threshold(model: SupportModel) -> float:
    """The fitted margin tau = 1 - min over training points of the classifier."""
    return model.tau


def classify(model: SupportModel, x, level=None) -> bool:
    """True when x lies in the estimated support (classifier value >= 1 - tau).

    ``level`` overrides the membership threshold for level-set exploration;
    no convergence guarantee is attached to levels other than the default.
    """
    threshold = (1.0 - model.tau) if level is None else float(level)
    return bool(decision_value(model, x) >= threshold - CLASSIFY_SLACK)


def classify_batch(model: SupportModel, points, level=None) -> np.ndarray:
    """Elementwise classify; equals mapping classify over the points."""
    threshold = (1.0 - model.tau) if level is None else float(level)
    return decision_values(model, points) >= threshold - CLASSIFY_SLACK


def _support_checksum(support: np.ndarray) -> str:
    data = np.ascontiguousarray(support, dtype=float)
    return hashlib.sha256(data.tobytes()).hexdigest()


def save_model(model: SupportModel, path) -> None:
    """Write the model as a versioned JSON document.

    Support coordinates are stored as shortest round-trip decimals, so the
    loaded array matches the saved one bit-for-bit; the factorization is not
    serialized and is recomputed on load.
    """
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kernel_family": model.kernel.family,
        "bandwidth": float(model.kernel.bandwidth),
        "lambda": float(model.lam),
        "tau": float(model.tau),
        "m": model.size,
        "n": model.dim,
        "support": [float(v) for v in model.support.ravel()],
        "checksum": _support_checksum(model.support),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> SupportModel:
    """Load a model file, verify it, and rebuild the factorization."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"corrupt model file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"corrupt model file {path}: not a JSON object")

    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"model file {path} has format version {version!r}; "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    required = ("kernel_family", "bandwidth", "lambda", "tau", "m", "n", "support", "checksum")
    missing = [key for key in required if key not in doc]
    if missing:
        raise ModelFormatError(f"corrupt model file {path}: missing fields {missing}")

    try:
        kernel = KernelSpec(doc["kernel_family"], doc["bandwidth"])
        m = int(doc["m"])
        n = int(doc["n"])
        lam = float(doc["lambda"])
        tau = float(doc["tau"])
        support = np.asarray(doc["support"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from exc
    if support.ndim != 1 or support.size != m * n or m < 1 or n < 1:
        raise ModelFormatError(
            f"corrupt model file {path}: support has {support.size} values, expected m*n = {m * n}"
        )
    support = support.reshape(m, n)
    if _support_checksum(support) != doc["checksum"]:
        raise ModelFormatError(f"model file {path} failed its support checksum")
    if not (np.isfinite(lam) and lam > 0):
        raise ModelFormatError(f"corrupt model file {path}: lambda must be positive")
    if not np.isfinite(tau):
        raise ModelFormatError(f"corrupt model file {path}: tau must be finite")

    g = gram(kernel, support)
    a = g.entries + (m * lam) * np.eye(m)
    factor = np.linalg.cholesky(a)
    train_values = _block_quadratic_form(factor, g.entries)
    return SupportModel(
        support=support,
        kernel=kernel,
        lam=lam,
        tau=tau,
        factor=factor,
        train_values=train_values,
    )
