"""Shared numeric and statistical primitives.

Everything here is deterministic: seedless kernels are bitwise reproducible,
seeded ones take an explicit numpy Generator. Statistical tests are
implemented directly (tie-corrected rank statistics, asymptotic p-values);
scipy appears only in the test suite as the independent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit
from scipy.special import gammaincc


# ---------------------------------------------------------------------------
# Dynamic time warping

@njit(cache=True)
def _dtw_dp(a, b):
    la, lb = a.shape[0], b.shape[0]
    d = a.shape[1]
    prev = np.empty(lb, dtype=np.float64)
    curr = np.empty(lb, dtype=np.float64)
    for j in range(lb):
        acc = 0.0
        for c in range(d):
            diff = a[0, c] - b[j, c]
            acc += diff * diff
        cost = math.sqrt(acc)
        prev[j] = cost if j == 0 else prev[j - 1] + cost
    for i in range(1, la):
        for j in range(lb):
            acc = 0.0
            for c in range(d):
                diff = a[i, c] - b[j, c]
                acc += diff * diff
            cost = math.sqrt(acc)
            if j == 0:
                curr[j] = prev[0] + cost
            else:
                best = prev[j]
                if prev[j - 1] < best:
                    best = prev[j - 1]
                if curr[j - 1] < best:
                    best = curr[j - 1]
                curr[j] = best + cost
        prev, curr = curr, prev
    return prev[lb - 1]


def dtw(a: np.ndarray, b: np.ndarray) -> float:
    """Dynamic time warping distance over the full warping window.

    Per-step cost is the Euclidean distance across channels; inputs are
    (l, d) or (l,) arrays with matching channel counts.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64).T).T
    b = np.atleast_2d(np.asarray(b, dtype=np.float64).T).T
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("dtw on empty series")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"channel mismatch: {a.shape[1]} vs {b.shape[1]}")
    return float(_dtw_dp(np.ascontiguousarray(a), np.ascontiguousarray(b)))


@njit(cache=True)
def _dtw_many(A, B, out):
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            out[i, j] = _dtw_dp(A[i], B[j])


def dtw_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """All-pairs DTW distances between two stacks of series (n, l, d)."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    out = np.empty((A.shape[0], B.shape[0]), dtype=np.float64)
    _dtw_many(A, B, out)
    return out


# ---------------------------------------------------------------------------
# Rank helpers and two-sample tests

def rank_midpoints(x: np.ndarray) -> np.ndarray:
    """Ranks (1-based) with ties assigned their midrank."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=np.float64)
    sx = x[order]
    i = 0
    while i < len(sx):
        j = i
        while j + 1 < len(sx) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _chi2_sf(x: float, df: int) -> float:
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def _kolmogorov_sf(t: float) -> float:
    # Q_KS(t) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 t^2)
    if t <= 0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * t * t)
        total += term
        if abs(term) < 1e-16:
            break
    return min(max(total, 0.0), 1.0)


def ks_2sample(x: Sequence[float], y: Sequence[float], alpha: float = 0.05):
    """Two-sided two-sample Kolmogorov-Smirnov test, asymptotic p-value.

    Returns (statistic, p_value, same_distribution) where same_distribution
    is True when the test does not reject at the given level.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    y = np.sort(np.asarray(y, dtype=np.float64))
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("ks_2sample on empty sample")
    grid = np.concatenate([x, y])
    cdf1 = np.searchsorted(x, grid, side="right") / n1
    cdf2 = np.searchsorted(y, grid, side="right") / n2
    stat = float(np.max(np.abs(cdf1 - cdf2)))
    en = math.sqrt(n1 * n2 / (n1 + n2))
    p = _kolmogorov_sf(en * stat)
    return stat, p, p >= alpha


def mann_whitney_u(x: Sequence[float], y: Sequence[float]):
    """Mann-Whitney U test, two-sided, tie-corrected normal approximation.

    Returns (U, p) with U the statistic of the first sample.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("mann_whitney_u on empty sample")
    combined = np.concatenate([x, y])
    ranks = rank_midpoints(combined)
    u1 = float(np.sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0)
    mu = n1 * n2 / 2.0
    n = n1 + n2
    _, counts = np.unique(combined, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return u1, 1.0
    # continuity-corrected two-sided p
    z = (abs(u1 - mu) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * _normal_sf(max(z, 0.0)))
    return u1, p


def mann_whitney_z(x: Sequence[float], y: Sequence[float]) -> float:
    """Signed z-score of the MWU statistic of the first sample (no continuity)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n1, n2 = len(x), len(y)
    combined = np.concatenate([x, y])
    ranks = rank_midpoints(combined)
    u1 = float(np.sum(ranks[:n1]) - n1 * (n1 + 1) / 2.0)
    mu = n1 * n2 / 2.0
    n = n1 + n2
    _, counts = np.unique(combined, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 0.0
    return (u1 - mu) / math.sqrt(var)


def kruskal_wallis(groups: Sequence[Sequence[float]]):
    """Kruskal-Wallis H test with tie correction. Returns (H, p)."""
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise ValueError("kruskal_wallis needs >=2 non-empty groups")
    combined = np.concatenate(groups)
    n = len(combined)
    ranks = rank_midpoints(combined)
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start : start + len(g)]
        h += r.sum() ** 2 / len(g)
        start += len(g)
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    _, counts = np.unique(combined, return_counts=True)
    tie_correction = 1.0 - float(np.sum(counts**3 - counts)) / (n**3 - n)
    if tie_correction == 0.0:  # all values tied
        return 0.0, 1.0
    h /= tie_correction
    return float(h), _chi2_sf(h, len(groups) - 1)


def two_proportion_z(k1: int, n1: int, k2: int, n2: int):
    """Pooled two-proportion z-test, two-sided. Returns (z, p)."""
    if n1 <= 0 or n2 <= 0:
        raise ValueError("two_proportion_z needs positive sample sizes")
    p1, p2 = k1 / n1, k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    denom = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if denom <= 0:
        return 0.0, 1.0
    z = (p1 - p2) / math.sqrt(denom)
    return float(z), min(1.0, 2.0 * _normal_sf(abs(z)))


def binomial_test_two_sided(k: int, n: int, p: float = 0.5) -> float:
    """Exact two-sided binomial test p-value (sum of outcomes as unlikely as k)."""
    if n <= 0:
        raise ValueError("binomial test needs n > 0")
    pmf = np.array([math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(n + 1)])
    return float(min(1.0, pmf[pmf <= pmf[k] * (1 + 1e-12)].sum()))


def auc_roc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """AUCROC via the tie-corrected rank-sum estimator; labels in {0, 1}."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc_roc needs both classes")
    ranks = rank_midpoints(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


# ---------------------------------------------------------------------------
# Clustering and simple models

def kmeans(points: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int = 300, tol: float = 1e-6):
    """Lloyd's k-means with k-means++ init. Returns (assignments, centers)."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k <= 0 or n <= k:
        raise ValueError(f"kmeans needs n > k > 0, got n={n}, k={k}")
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[c] = points[rng.integers(n)]
        else:
            centers[c] = points[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, np.sum((points - centers[c]) ** 2, axis=1))

    assignments = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        assignments = np.argmin(d2, axis=1)
        new_centers = centers.copy()
        for c in range(k):
            mask = assignments == c
            if mask.any():
                new_centers[c] = points[mask].mean(axis=0)
            else:  # empty cluster: reseed from the farthest point
                far = np.argmax(d2.min(axis=1))
                new_centers[c] = points[far]
        shift = float(np.sqrt(np.sum((new_centers - centers) ** 2, axis=1)).max())
        centers = new_centers
        if shift < tol:
            break
    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1), centers


def assign_to_centers(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = np.sum((np.asarray(points)[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1)


@dataclass
class DiagonalGMM:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray  # (k, dim) diagonal

    def log_likelihood(self, points: np.ndarray) -> np.ndarray:
        """Per-point log density under the mixture."""
        points = np.asarray(points, dtype=np.float64)
        log_comp = (
            -0.5 * np.sum(np.log(2 * np.pi * self.variances), axis=1)[None, :]
            - 0.5
            * np.sum(
                (points[:, None, :] - self.means[None, :, :]) ** 2
                / self.variances[None, :, :],
                axis=2,
            )
        )
        log_comp = log_comp + np.log(self.weights)[None, :]
        peak = log_comp.max(axis=1, keepdims=True)
        return (peak[:, 0] + np.log(np.exp(log_comp - peak).sum(axis=1)))


def gmm_fit(points: np.ndarray, k: int, rng: np.random.Generator,
            max_iter: int = 200, var_floor: float = 1e-6) -> DiagonalGMM:
    """Diagonal-covariance Gaussian mixture via EM, k-means initialization."""
    points = np.asarray(points, dtype=np.float64)
    n, dim = points.shape
    if n <= k:
        raise ValueError(f"gmm_fit needs n > k, got n={n}, k={k}")
    assignments, centers = kmeans(points, k, rng)
    weights = np.array([(assignments == c).mean() for c in range(k)])
    weights = np.maximum(weights, 1e-6)
    weights /= weights.sum()
    variances = np.empty((k, dim))
    global_var = np.maximum(points.var(axis=0), var_floor)
    for c in range(k):
        mask = assignments == c
        variances[c] = np.maximum(points[mask].var(axis=0), var_floor) if mask.sum() > 1 else global_var
    model = DiagonalGMM(weights, centers.copy(), variances)

    prev_ll = -np.inf
    for _ in range(max_iter):
        log_comp = (
            -0.5 * np.sum(np.log(2 * np.pi * model.variances), axis=1)[None, :]
            - 0.5
            * np.sum(
                (points[:, None, :] - model.means[None, :, :]) ** 2
                / model.variances[None, :, :],
                axis=2,
            )
            + np.log(model.weights)[None, :]
        )
        peak = log_comp.max(axis=1, keepdims=True)
        log_norm = peak + np.log(np.exp(log_comp - peak).sum(axis=1, keepdims=True))
        resp = np.exp(log_comp - log_norm)
        ll = float(log_norm.sum())
        nk = resp.sum(axis=0) + 1e-12
        model.weights = nk / n
        model.means = (resp.T @ points) / nk[:, None]
        diff2 = (points[:, None, :] - model.means[None, :, :]) ** 2
        model.variances = np.maximum(
            np.einsum("nk,nkd->kd", resp, diff2) / nk[:, None], var_floor
        )
        if abs(ll - prev_ll) < 1e-8 * max(1.0, abs(ll)):
            break
        prev_ll = ll
    return model


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    feat_mean: np.ndarray
    feat_scale: np.ndarray

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = (np.asarray(X, dtype=np.float64) - self.feat_mean) / self.feat_scale
        z = X @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(np.int64)


def logistic_fit(X: np.ndarray, y: np.ndarray, l2: float = 1e-3,
                 tol: float = 1e-6, max_iter: int = 5000) -> LogisticModel:
    """Binary logistic regression by full-batch gradient descent, L2 penalty.

    Features are standardized internally; the bias is unpenalized.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Xs = (X - mean) / scale
    n, dim = Xs.shape
    w = np.zeros(dim)
    b = 0.0
    step = 1.0
    for _ in range(max_iter):
        z = Xs @ w + b
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
        err = p - y
        gw = Xs.T @ err / n + l2 * w
        gb = float(err.mean())
        gnorm = math.sqrt(float(gw @ gw) + gb * gb)
        if gnorm < tol:
            break
        # halving line search on the penalized negative log-likelihood
        loss0 = _logistic_loss(Xs, y, w, b, l2)
        while step > 1e-12:
            w_new = w - step * gw
            b_new = b - step * gb
            if _logistic_loss(Xs, y, w_new, b_new, l2) <= loss0 - 0.25 * step * gnorm**2:
                break
            step *= 0.5
        w -= step * gw
        b -= step * gb
        step = min(step * 2.0, 1e6)
    return LogisticModel(w, b, mean, scale)


def _logistic_loss(X, y, w, b, l2):
    z = np.clip(X @ w + b, -500, 500)
    nll = float(np.mean(np.log1p(np.exp(-np.abs(z))) + np.maximum(z, 0) - y * z))
    return nll + 0.5 * l2 * float(w @ w)


@dataclass
class RidgeForecaster:
    """One-step-ahead per-channel ridge predictor on the last `window` values."""

    window: int
    coefs: np.ndarray      # (d, window)
    intercepts: np.ndarray  # (d,)

    def mae(self, values: np.ndarray) -> float:
        """Mean absolute one-step error over all valid positions of (n, l, d)."""
        X, y, ch = _lag_samples(values, self.window)
        preds = np.einsum("sw,sw->s", X, self.coefs[ch]) + self.intercepts[ch]
        return float(np.mean(np.abs(preds - y)))


def _lag_samples(values: np.ndarray, window: int):
    n, l, d = values.shape
    if l <= window:
        raise ValueError(f"series length {l} too short for window {window}")
    starts = l - window  # samples per (instance, channel)
    idx = np.arange(window)[None, :] + np.arange(starts)[:, None]
    X = values[:, idx, :]                     # (n, starts, window, d)
    y = values[:, window:, :]                 # (n, starts, d)
    X = np.moveaxis(X, 3, 1).reshape(-1, window)
    y = np.moveaxis(y, 2, 1).reshape(-1)
    ch = np.repeat(np.tile(np.arange(d), n), starts)
    return X, y, ch


def ridge_forecaster(values: np.ndarray, window: int, l2: float = 1e-2) -> RidgeForecaster:
    """Fit the per-channel one-step predictor on every series of (n, l, d)."""
    values = np.asarray(values, dtype=np.float64)
    d = values.shape[2]
    X, y, ch = _lag_samples(values, window)
    coefs = np.zeros((d, window))
    intercepts = np.zeros(d)
    for c in range(d):
        mask = ch == c
        Xc, yc = X[mask], y[mask]
        xm, ym = Xc.mean(axis=0), yc.mean()
        Xc = Xc - xm
        yc = yc - ym
        beta = np.linalg.solve(Xc.T @ Xc + l2 * np.eye(window), Xc.T @ yc)
        coefs[c] = beta
        intercepts[c] = ym - xm @ beta
    return RidgeForecaster(window, coefs, intercepts)


# ---------------------------------------------------------------------------
# Distribution distances and neighborhood geometry

def frechet_gaussian(mu1, cov1, mu2, cov2) -> float:
    """Frechet distance between two Gaussians.

    Matrix square roots use symmetric eigendecompositions with negative
    eigenvalues clamped to zero, so no imaginary components can appear.
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=np.float64))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=np.float64))
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    if not (np.isfinite(mu1).all() and np.isfinite(mu2).all()
            and np.isfinite(cov1).all() and np.isfinite(cov2).all()):
        raise ValueError("frechet_gaussian on non-finite inputs")
    sqrt1 = _sym_sqrt(cov1)
    inner = sqrt1 @ cov2 @ sqrt1
    eigs = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    tr_sqrt = float(np.sqrt(np.clip(eigs, 0.0, None)).sum())
    diff = mu1 - mu2
    val = float(diff @ diff + np.trace(cov1) + np.trace(cov2) - 2.0 * tr_sqrt)
    return max(val, 0.0)


def _sym_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix between row sets (na, dim) and (nb, dim)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d2 = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.sqrt(np.clip(d2, 0.0, None))


def knn_radius(points: np.ndarray, k: int) -> np.ndarray:
    """Distance of each point to its k-th nearest *other* point.

    Zero radii (exact duplicates) are replaced by the smallest positive
    pairwise distance, or 1e-12 when every distance is zero.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k >= n:
        raise ValueError(f"knn_radius needs k < n, got k={k}, n={n}")
    dists = pairwise_distances(points, points)
    np.fill_diagonal(dists, np.inf)
    radii = np.sort(dists, axis=1)[:, k - 1]
    if (radii == 0).any():
        positive = dists[np.isfinite(dists) & (dists > 0)]
        fallback = float(positive.min()) if positive.size else 1e-12
        radii = np.where(radii == 0, fallback, radii)
    return radii


def histogram_pmf(values: np.ndarray, bins: int, lo: float, hi: float,
                  smoothing: float = 1e-10) -> np.ndarray:
    """Discrete pmf over equal-width bins with additive smoothing."""
    if bins < 2:
        raise ValueError("histogram_pmf needs bins >= 2")
    if hi <= lo:  # degenerate range: all mass in one bin
        counts = np.zeros(bins)
        counts[0] = len(np.asarray(values).ravel())
    else:
        counts, _ = np.histogram(np.asarray(values).ravel(), bins=bins, range=(lo, hi))
    pmf = counts.astype(np.float64) + smoothing
    return pmf / pmf.sum()


def wasserstein_pmf(p: np.ndarray, q: np.ndarray, bin_width: float) -> float:
    """Discrete 1D earth mover's distance between pmfs on a shared bin grid."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return float(np.abs(np.cumsum(p - q))[:-1].sum() * bin_width)


def jensen_shannon(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence (natural log), in [0, ln 2]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = 0.5 * (p + q)
    return 0.5 * kullback_leibler(p, m, smoothing=0.0) + 0.5 * kullback_leibler(q, m, smoothing=0.0)


def kullback_leibler(p: np.ndarray, q: np.ndarray, smoothing: float = 1e-10) -> float:
    """KL(p || q); q is floored at `smoothing` so the value stays finite."""
    p = np.asarray(p, dtype=np.float64)
    q = np.maximum(np.asarray(q, dtype=np.float64), smoothing)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def autocorr_fft(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Autocorrelation at lags 1..max_lag via FFT, normalized by lag 0.

    Constant series return all zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    l = len(x)
    if max_lag >= l:
        raise ValueError("max_lag must be below the series length")
    x = x - x.mean()
    var = float(x @ x)
    if var <= 0:
        return np.zeros(max_lag)
    nfft = 1 << int(np.ceil(np.log2(2 * l - 1)))
    spec = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(spec * np.conj(spec), nfft)[: max_lag + 1]
    return acov[1:] / var


def approximate_entropy(x: np.ndarray, m: int = 2, r: Optional[float] = None) -> float:
    """Approximate entropy ApEn(m, r); r defaults to 0.2 * std of the series.

    Constant series have ApEn 0 by convention.
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < m + 2:
        raise ValueError("series too short for approximate entropy")
    if r is None:
        r = 0.2 * float(x.std())

    def phi(mm: int) -> float:
        count = n - mm + 1
        templ = np.lib.stride_tricks.sliding_window_view(x, mm)
        dist = np.max(np.abs(templ[:, None, :] - templ[None, :, :]), axis=2)
        c = (dist <= r).sum(axis=1) / count
        return float(np.mean(np.log(c)))

    return phi(m) - phi(m + 1)


def pearson_corr_matrix(X: np.ndarray) -> np.ndarray:
    """Correlation matrix between columns; zero-variance columns give 0."""
    X = np.asarray(X, dtype=np.float64)
    centered = X - X.mean(axis=0)
    std = centered.std(axis=0)
    safe = np.where(std == 0, 1.0, std)
    normed = centered / safe
    corr = normed.T @ normed / X.shape[0]
    zero = std == 0
    corr[zero, :] = 0.0
    corr[:, zero] = 0.0
    np.fill_diagonal(corr, np.where(zero, 0.0, 1.0))
    return corr
