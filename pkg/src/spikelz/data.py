"""WDBC tabular pipeline: load, validate, scale, project, balance, split.

The diagnostic dataset ships with the package (569 rows, 30 real-valued
features, diagnosis M or B). Malignant is the positive class (label 1).
All preprocessing stages are fit on training data only and replayed on
held-out data with the fitted parameters.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ContractError, DataError
from .rng import RngStream

N_FEATURES = 30
LABEL_MALIGNANT = 1
LABEL_BENIGN = 0

EXPECTED_ROWS = 569
EXPECTED_MALIGNANT = 212
EXPECTED_BENIGN = 357

_BASE_NAMES = (
    "radius", "texture", "perimeter", "area", "smoothness", "compactness",
    "concavity", "concave_points", "symmetry", "fractal_dimension",
)
FEATURE_NAMES = tuple(
    f"{stat}_{name}" for stat in ("mean", "se", "worst") for name in _BASE_NAMES
)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (samples, 30)
    labels: np.ndarray  # 1 = malignant, 0 = benign
    ids: np.ndarray
    feature_names: tuple[str, ...]
    file_hash: str  # sha256 of the source csv

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]


def default_data_path() -> Path:
    return Path(str(resources.files("spikelz") / "data" / "wdbc.csv"))


def load_wdbc(path: str | Path | None = None) -> Dataset:
    """Parse the diagnostic CSV (headerless; per row: integer id,
    diagnosis M/B, 30 floats). Raises DataError naming the offending
    line on any malformed row."""
    src = Path(path) if path is not None else default_data_path()
    if not src.exists():
        raise DataError(f"dataset file not found: {src}")
    digest = hashlib.sha256(src.read_bytes()).hexdigest()
    feats: list[list[float]] = []
    labels: list[int] = []
    ids: list[int] = []
    with open(src, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != N_FEATURES + 2:
                raise DataError(
                    f"{src} line {lineno}: expected {N_FEATURES + 2} fields, found {len(row)}"
                )
            try:
                ids.append(int(row[0]))
            except ValueError:
                raise DataError(f"{src} line {lineno}: bad id {row[0]!r}") from None
            diag = row[1].strip()
            if diag == "M":
                labels.append(LABEL_MALIGNANT)
            elif diag == "B":
                labels.append(LABEL_BENIGN)
            else:
                raise DataError(f"{src} line {lineno}: diagnosis must be M or B, got {diag!r}")
            try:
                vals = [float(v) for v in row[2:]]
            except ValueError:
                raise DataError(f"{src} line {lineno}: non-numeric feature value") from None
            if not all(np.isfinite(vals)):
                raise DataError(f"{src} line {lineno}: non-finite feature value")
            feats.append(vals)
    if not feats:
        raise DataError(f"{src}: no data rows")
    return Dataset(
        features=np.asarray(feats, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
        ids=np.asarray(ids, dtype=np.int64),
        feature_names=FEATURE_NAMES,
        file_hash=digest,
    )


@dataclass(frozen=True)
class DatasetSummary:
    rows: int
    features: int
    malignant: int
    benign: int

    @property
    def ok(self) -> bool:
        return (
            self.rows == EXPECTED_ROWS
            and self.features == N_FEATURES
            and self.malignant == EXPECTED_MALIGNANT
            and self.benign == EXPECTED_BENIGN
        )


def validate_dataset(path: str | Path | None = None) -> DatasetSummary:
    """Load and integrity-check the dataset; returns the shape summary."""
    ds = load_wdbc(path)
    if len(np.unique(ds.ids)) != len(ds.ids):
        raise DataError("duplicate sample ids")
    summary = DatasetSummary(
        rows=ds.features.shape[0],
        features=ds.features.shape[1],
        malignant=int(np.sum(ds.labels == LABEL_MALIGNANT)),
        benign=int(np.sum(ds.labels == LABEL_BENIGN)),
    )
    if not summary.ok:
        raise DataError(
            "unexpected dataset shape: "
            f"{summary.rows} rows, {summary.features} features, "
            f"{summary.malignant} malignant / {summary.benign} benign "
            f"(expected {EXPECTED_ROWS}/{N_FEATURES}/"
            f"{EXPECTED_MALIGNANT}/{EXPECTED_BENIGN})"
        )
    return summary


# ---------------------------------------------------------------------------
# scaling


@dataclass(frozen=True)
class MinMaxParams:
    lo: np.ndarray
    hi: np.ndarray


def fit_minmax(x: np.ndarray) -> MinMaxParams:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ContractError("minmax fit needs a non-empty 2-D matrix")
    return MinMaxParams(lo=x.min(axis=0), hi=x.max(axis=0))


def apply_minmax(x: np.ndarray, params: MinMaxParams) -> np.ndarray:
    """Map each column to [0, 1]. Constant columns map to 0; values from
    outside the fitted range are clamped so downstream encoders always
    see unit-interval features."""
    x = np.asarray(x, dtype=np.float64)
    span = params.hi - params.lo
    safe = np.where(span > 0, span, 1.0)
    out = (x - params.lo) / safe
    out = np.where(span > 0, out, 0.0)
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# PCA


@dataclass(frozen=True)
class PcaParams:
    mean: np.ndarray
    components: np.ndarray  # (k, d), rows orthonormal
    explained_variance: np.ndarray


def fit_pca(x: np.ndarray, k: int) -> PcaParams:
    """Top-k principal axes of the covariance, via symmetric eigendecomposition.

    Sign convention: each component is flipped so its largest-magnitude
    entry is positive (first such index on ties), making the projection
    reproducible across linear algebra backends.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ContractError("PCA fit needs a 2-D matrix")
    n, d = x.shape
    if not 1 <= k <= d:
        raise ContractError(f"PCA component count must be in [1, {d}], got {k}")
    if n < 2:
        raise ContractError("PCA fit needs at least 2 samples")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:k]
    comps = evecs[:, order].T.copy()
    for row in comps:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return PcaParams(mean=mean, components=comps, explained_variance=np.maximum(evals[order], 0.0))


def apply_pca(x: np.ndarray, params: PcaParams) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return (x - params.mean) @ params.components.T


# ---------------------------------------------------------------------------
# class balancing


def smote(
    x: np.ndarray,
    y: np.ndarray,
    rng: RngStream,
    k: int = 5,
) -> tuple[np.ndarray, np.ndarray]:
    """Oversample the minority class to parity by convex interpolation.

    Each synthetic point is x_i + u * (x_j - x_i) with u ~ U[0,1), where
    x_i is a uniformly drawn minority sample and x_j one of its k nearest
    minority neighbours (euclidean, ties by index). Synthetic rows are
    appended after the originals.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ContractError("smote needs aligned 2-D features and 1-D labels")
    if k < 1:
        raise ContractError("smote neighbour count must be >= 1")
    classes, counts = np.unique(y, return_counts=True)
    if classes.size != 2:
        raise ContractError("smote expects exactly two classes")
    minority = classes[np.argmin(counts)]
    deficit = int(counts.max() - counts.min())
    if deficit == 0:
        return x.copy(), y.copy()
    pool = x[y == minority]
    n_min = pool.shape[0]
    if n_min < 1:
        raise ContractError("minority class is empty")
    k_eff = min(k, n_min - 1)
    if k_eff >= 1:
        d2 = np.sum((pool[:, None, :] - pool[None, :, :]) ** 2, axis=2)
        np.fill_diagonal(d2, np.inf)
        neigh = np.argsort(d2, axis=1, kind="stable")[:, :k_eff]
    else:
        neigh = None
    synth = np.empty((deficit, x.shape[1]), dtype=np.float64)
    for t in range(deficit):
        i = rng.integer(0, n_min)
        if neigh is None:
            synth[t] = pool[i]
            rng.uniform()  # keep the draw pattern fixed regardless of pool size
            continue
        j = neigh[i, rng.integer(0, k_eff)]
        u = rng.uniform()
        synth[t] = pool[i] + u * (pool[j] - pool[i])
    x_out = np.vstack([x, synth])
    y_out = np.concatenate([y, np.full(deficit, minority, dtype=np.int64)])
    return x_out, y_out


# ---------------------------------------------------------------------------
# splitting


def stratified_split(
    y: np.ndarray,
    rng: RngStream,
    train_frac: float = 0.8,
) -> tuple[np.ndarray, np.ndarray]:
    """Class-stratified index split.

    Per-class training quotas start at floor(train_frac * n_c); leftover
    seats up to floor(train_frac * n) go to classes by descending
    fractional part, ties broken by ascending class label. Within each
    class the assignment is a seeded permutation. On the packaged
    dataset with train_frac 0.8 this yields 455 train / 114 test.
    """
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1 or y.size == 0:
        raise ContractError("labels must be a non-empty vector")
    if not 0.0 < train_frac < 1.0:
        raise ContractError("train fraction must be in (0, 1)")
    n = y.size
    total_train = int(np.floor(train_frac * n))
    classes = np.unique(y)
    quotas: dict[int, int] = {}
    fracs: list[tuple[float, int]] = []
    for c in classes:
        exact = train_frac * int(np.sum(y == c))
        quotas[int(c)] = int(np.floor(exact))
        fracs.append((exact - np.floor(exact), int(c)))
    leftover = total_train - sum(quotas.values())
    fracs.sort(key=lambda p: (-p[0], p[1]))
    for _, c in fracs[:leftover]:
        quotas[c] += 1
    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for c in classes:
        idx = np.flatnonzero(y == c)
        perm = rng.permutation(idx.size)
        idx = idx[perm]
        q = quotas[int(c)]
        if q < 1 or q >= idx.size:
            raise DataError(f"class {int(c)} cannot be split with train fraction {train_frac}")
        train_parts.append(idx[:q])
        test_parts.append(idx[q:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts))
    return train_idx, test_idx
