"""Model-backed measures: detection discriminators, the classifier
two-sample test, and the forecaster/classifier downstream family.

The shallow models (logistic discriminator, diagonal GMM, ridge
one-step forecaster) stand in for the deep models of the original
measure definitions; the evaluation logic is unchanged.
"""

from __future__ import annotations

import numpy as np

from ..embedding import StatFeatureEmbedder
from ..kernels import (
    auc_roc,
    binomial_test_two_sided,
    gmm_fit,
    logistic_fit,
    ridge_forecaster,
)
from . import MeasureError, MeasureInput, MeasureResult

DETECTION_TRAIN_FRACTION = 0.7
DETECTION_MIN_SIDE = 10
FORECAST_WINDOW = 8
C2ST_ALPHA = 0.05
GMM_COMPONENTS_CAP = 3


def _split_side(n: int, rng) -> tuple:
    perm = rng.permutation(n)
    cut = int(round(DETECTION_TRAIN_FRACTION * n))
    return perm[:cut], perm[cut:]


def _detection_portions(inp: MeasureInput, measure_id: str):
    real, synth = inp.require_embedded(measure_id)
    rng = inp.rng(measure_id)
    r_train, r_test = _split_side(len(real), rng)
    s_train, s_test = _split_side(len(synth), rng)
    if min(len(r_train), len(r_test), len(s_train), len(s_test)) < DETECTION_MIN_SIDE:
        raise MeasureError(f"{measure_id}: class imbalance after split, "
                           f"need {DETECTION_MIN_SIDE} instances per side")
    return real, synth, r_train, r_test, s_train, s_test


def detection_linear(inp: MeasureInput) -> MeasureResult:
    """AUCROC of a logistic discriminator between real and synthetic.

    The raw AUC is the score; evaluation measures its distance to the
    0.5 target.
    """
    real, synth, r_tr, r_te, s_tr, s_te = _detection_portions(inp, "detection_linear")
    X = np.vstack([real[r_tr], synth[s_tr]])
    y = np.concatenate([np.zeros(len(r_tr)), np.ones(len(s_tr))])
    model = logistic_fit(X, y)
    X_test = np.vstack([real[r_te], synth[s_te]])
    y_test = np.concatenate([np.zeros(len(r_te)), np.ones(len(s_te))])
    auc = auc_roc(model.predict_proba(X_test), y_test)
    return MeasureResult(auc, {"auc": auc, "distance_to_chance": abs(auc - 0.5)})


def detection_gmm(inp: MeasureInput) -> MeasureResult:
    """AUCROC of a per-class GMM log-likelihood-ratio discriminator."""
    real, synth, r_tr, r_te, s_tr, s_te = _detection_portions(inp, "detection_gmm")
    k = max(1, min(GMM_COMPONENTS_CAP, min(len(r_tr), len(s_tr)) // 10))
    try:
        gmm_real = gmm_fit(real[r_tr], k, inp.rng("detection_gmm", "real"))
        gmm_synth = gmm_fit(synth[s_tr], k, inp.rng("detection_gmm", "synth"))
    except Exception as exc:
        raise MeasureError(f"Detection_GMM: Fitting the mixture model failed: {exc}")
    X_test = np.vstack([real[r_te], synth[s_te]])
    y_test = np.concatenate([np.zeros(len(r_te)), np.ones(len(s_te))])
    llr = gmm_synth.log_likelihood(X_test) - gmm_real.log_likelihood(X_test)
    auc = auc_roc(llr, y_test)
    return MeasureResult(auc, {"auc": auc, "distance_to_chance": abs(auc - 0.5)})


def c2st(inp: MeasureInput) -> MeasureResult:
    """Classifier two-sample test: True when the accuracy of a real-vs-
    synthetic classifier is significantly different from chance.

    The classifier trains on the training set versus half the synthetic
    set; predictions are scored on the held-out set and the held-back
    synthetic half.
    """
    real, synth = inp.require_embedded("c2st")
    if inp.e_held_out is None:
        raise MeasureError("c2st requires an embedded held-out dataset")
    held = inp.e_held_out.vectors
    rng = inp.rng("c2st")
    perm = rng.permutation(len(synth))
    half = len(synth) // 2
    s_train, s_eval = perm[:half], perm[half:]
    # balance both portions so the accuracy-vs-chance test is well-posed
    n_train = min(len(real), len(s_train))
    n_eval = min(len(held), len(s_eval))
    if min(n_train, n_eval) < DETECTION_MIN_SIDE:
        raise MeasureError("c2st: class imbalance after split, "
                           f"need {DETECTION_MIN_SIDE} instances per side")
    real_idx = rng.permutation(len(real))[:n_train]
    held_idx = rng.permutation(len(held))[:n_eval]
    X = np.vstack([real[real_idx], synth[s_train[:n_train]]])
    y = np.concatenate([np.zeros(n_train), np.ones(n_train)])
    model = logistic_fit(X, y)
    X_eval = np.vstack([held[held_idx], synth[s_eval[:n_eval]]])
    y_eval = np.concatenate([np.zeros(n_eval), np.ones(n_eval)])
    correct = int((model.predict(X_eval) == y_eval).sum())
    p = binomial_test_two_sided(correct, len(y_eval))
    rejected = bool(p < C2ST_ALPHA)
    return MeasureResult(rejected, {"accuracy": correct / len(y_eval), "p_value": p})


# ---------------------------------------------------------------------------
# Forecasting / classification downstream tasks

def _window_for(ds) -> int:
    return min(FORECAST_WINDOW, ds.length - 1)


def predictive(inp: MeasureInput) -> MeasureResult:
    """One-step-ahead MAE on real data of a synthetic-trained forecaster."""
    w = _window_for(inp.d_synth)
    model = ridge_forecaster(inp.d_synth.values, w)
    return MeasureResult(model.mae(inp.d_train.values))


def trts(inp: MeasureInput) -> MeasureResult:
    """|real-trained forecaster MAE on real - MAE on synthetic|."""
    w = _window_for(inp.d_train)
    model = ridge_forecaster(inp.d_train.values, w)
    return MeasureResult(abs(model.mae(inp.d_train.values) - model.mae(inp.d_synth.values)))


def tstr(inp: MeasureInput) -> MeasureResult:
    """|synthetic-trained MAE - real-trained MAE|, both on held-out data."""
    held = inp.require_held_out("tstr")
    w = _window_for(inp.d_train)
    synth_model = ridge_forecaster(inp.d_synth.values, w)
    real_model = ridge_forecaster(inp.d_train.values, w)
    return MeasureResult(abs(synth_model.mae(held.values) - real_model.mae(held.values)))


class _OneVsRestLogistic:
    def __init__(self, X: np.ndarray, labels: np.ndarray):
        self.classes = np.unique(labels)
        self.models = [logistic_fit(X, (labels == cls).astype(float))
                       for cls in self.classes]

    def accuracy(self, X: np.ndarray, labels: np.ndarray) -> float:
        if len(self.classes) == 1:
            return float((labels == self.classes[0]).mean())
        scores = np.column_stack([m.predict_proba(X) for m in self.models])
        preds = self.classes[np.argmax(scores, axis=1)]
        return float((preds == labels).mean())


def cas(inp: MeasureInput) -> MeasureResult:
    """|accuracy gap| of real- vs synthetic-trained classifiers on held-out.

    Classifiers are one-vs-rest logistic models on the statistical feature
    embedding fitted to the training set.
    """
    held = inp.require_held_out("cas")
    for ds in (inp.d_train, inp.d_synth, held):
        if not ds.has_labels:
            raise MeasureError("cas requires labels on train, synthetic, and held-out")
    embedder = StatFeatureEmbedder().fit(inp.d_train)
    X_train = embedder.transform(inp.d_train).vectors
    X_synth = embedder.transform(inp.d_synth).vectors
    X_held = embedder.transform(held).vectors
    real_clf = _OneVsRestLogistic(X_train, inp.d_train.labels)
    synth_clf = _OneVsRestLogistic(X_synth, inp.d_synth.labels)
    acc_real = real_clf.accuracy(X_held, held.labels)
    acc_synth = synth_clf.accuracy(X_held, held.labels)
    return MeasureResult(abs(acc_real - acc_synth),
                         {"accuracy_real": acc_real, "accuracy_synthetic": acc_synth})


IMPLEMENTATIONS = {
    "detection_linear": detection_linear,
    "detection_gmm": detection_gmm,
    "c2st": c2st,
    "predictive": predictive,
    "trts": trts,
    "tstr": tstr,
    "cas": cas,
}
