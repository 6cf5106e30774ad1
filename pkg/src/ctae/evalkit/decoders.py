"""Cross-validated linear and logistic decoders over latent features."""

import hashlib
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression, Ridge
from sklearn.metrics import confusion_matrix, r2_score

from .features import check_features, make_folds

__all__ = [
    "DecodeReport",
    "RIDGE_ALPHAS",
    "fit_linear_decoder",
    "fit_logistic_decoder",
    "fit_classifier",
    "standardize_fold",
]

RIDGE_ALPHAS = np.logspace(-4, 2, 7)


@dataclass
class DecodeReport:
    """Scores of one cross-validated decoding task.

    Attributes
    ----------
    kind : {'continuous', 'discrete'}
    fold_scores : list of float
        R^2 (continuous) or accuracy (discrete) per test fold.
    mean, sd : float
    confusion : ndarray or None
        Row-normalised confusion matrix pooled over folds (discrete only).
    classes : ndarray or None
    predictions : ndarray
        Held-out predictions for every trial.
    coef_digest : str
        SHA-256 prefix over the fitted coefficients of all folds.
    flags : list of str
    alphas : list of float
        Ridge strength picked in each fold (continuous only).
    """

    kind: str
    fold_scores: list
    mean: float
    sd: float
    predictions: np.ndarray
    coef_digest: str
    confusion: np.ndarray = None
    classes: np.ndarray = None
    flags: list = field(default_factory=list)
    alphas: list = field(default_factory=list)

    def to_dict(self):
        out = asdict(self)
        for key in ("predictions", "confusion", "classes"):
            if out[key] is not None:
                out[key] = np.asarray(out[key]).tolist()
        return out


def _digest(arrays):
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return h.hexdigest()[:16]


def standardize_fold(train, test):
    """Z-score both sets with training statistics; constant columns -> 0."""
    mean = train.mean(axis=0)
    scale = train.std(axis=0)
    constant = scale < 1e-12
    scale[constant] = 1.0
    return (train - mean) / scale, (test - mean) / scale, constant


def _samples(x, trials):
    # (trials, dims, time) -> (trials * time, dims)
    sub = x[trials]
    return sub.transpose(0, 2, 1).reshape(-1, sub.shape[1])


def _select_alpha(x, y, trials, alphas, n_inner):
    """Pick the ridge strength by inner cross-validation over trials."""
    if trials.size < 2 * n_inner:
        n_inner = max(2, trials.size // 2)
    inner = np.array_split(trials, n_inner)
    scores = np.zeros(len(alphas))
    for held in inner:
        rest = np.setdiff1d(trials, held)
        xtr, xte, _ = standardize_fold(_samples(x, rest), _samples(x, held))
        ytr, yte = _samples(y, rest), _samples(y, held)
        for i, alpha in enumerate(alphas):
            pred = Ridge(alpha=alpha).fit(xtr, ytr).predict(xte).reshape(yte.shape)
            scores[i] += np.sum((yte - pred) ** 2)
    return float(alphas[int(np.argmin(scores))])


def fit_linear_decoder(features, targets, folds=5, alphas=RIDGE_ALPHAS,
                       time_window=None, seed=0, n_inner=3):
    """Time-point-wise ridge regression ``v_t = W z_t`` scored by held-out R^2.

    Parameters
    ----------
    features : FeatureView or array of shape (n_trials, n_dims, n_timesteps)
    targets : array of shape (n_trials, n_targets, n_timesteps)
    folds : int or list of (train, test)
        Folds split whole trials, never time points of one trial.
    alphas : array-like
        Ridge grid searched by inner cross-validation on training trials.
    time_window : (start, stop), optional
        Restrict both features and targets to these bins.
    seed : int

    Returns
    -------
    DecodeReport
        ``fold_scores`` hold variance-weighted R^2 per test fold. Constant
        features give R^2 = 0 and the ``constant_features`` flag.
    """
    x = check_features(features)
    y = check_features(targets)
    if x.shape[0] != y.shape[0] or x.shape[2] != y.shape[2]:
        raise ValueError(f"features {x.shape} and targets {y.shape} disagree "
                         "on trials or time bins")
    if time_window is not None:
        x = x[:, :, slice(*time_window)]
        y = y[:, :, slice(*time_window)]
    alphas = np.asarray(alphas, dtype=np.float64)
    fold_pairs = make_folds(x.shape[0], folds, seed=seed)
    predictions = np.zeros_like(y)
    scores, chosen, coefs, flags = [], [], [], []
    for train, test in fold_pairs:
        xtr, xte, constant = standardize_fold(_samples(x, train), _samples(x, test))
        ytr, yte = _samples(y, train), _samples(y, test)
        if np.all(constant):
            flags.append("constant_features")
            scores.append(0.0)
            chosen.append(float("nan"))
            pred = np.broadcast_to(ytr.mean(axis=0), yte.shape)
        else:
            alpha = _select_alpha(x, y, train, alphas, n_inner)
            model = Ridge(alpha=alpha).fit(xtr, ytr)
            pred = model.predict(xte).reshape(yte.shape)
            scores.append(float(r2_score(yte, pred, multioutput="variance_weighted")))
            chosen.append(alpha)
            coefs.append(model.coef_)
        predictions[test] = pred.reshape(test.size, y.shape[2], y.shape[1]).transpose(0, 2, 1)
    return DecodeReport(kind="continuous", fold_scores=scores,
                        mean=float(np.mean(scores)), sd=float(np.std(scores)),
                        predictions=predictions, coef_digest=_digest(coefs),
                        flags=sorted(set(flags)), alphas=chosen)


def fit_classifier(xtr, ytr, C=1.0, tol=1e-6, max_iter=10000):
    """Fit a multinomial logistic model; returns ``(model, converged)``."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        clf = LogisticRegression(C=C, tol=tol, max_iter=max_iter).fit(xtr, ytr)
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    return clf, converged


def fit_logistic_decoder(features, labels, folds=5, seed=0, C=1.0, tol=1e-6,
                         max_iter=10000):
    """Multinomial logistic classification of trial labels.

    Features are flattened over time per trial and z-scored per fold with
    training statistics.

    Parameters
    ----------
    features : FeatureView or array of shape (n_trials, n_dims, n_timesteps)
    labels : array-like of shape (n_trials,)
    folds : int or list of (train, test)
        An int gives label-stratified folds.
    C : float
        Inverse L2 strength.
    tol : float
        Convergence tolerance of the optimiser.

    Returns
    -------
    DecodeReport
        ``fold_scores`` hold held-out accuracy; ``confusion`` is pooled
        over folds and row-normalised.
    """
    x = check_features(features)
    labels = np.asarray(labels)
    if labels.shape != (x.shape[0],):
        raise ValueError("one label per trial is required")
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("at least two classes are required")
    flat = x.reshape(x.shape[0], -1)
    fold_pairs = make_folds(x.shape[0], folds, labels=labels, seed=seed)
    predictions = np.empty_like(labels)
    scores, coefs, flags = [], [], []
    for train, test in fold_pairs:
        if np.unique(labels[train]).size != classes.size:
            raise ValueError("a class is absent from a training fold")
        xtr, xte, _ = standardize_fold(flat[train], flat[test])
        clf, converged = fit_classifier(xtr, labels[train], C, tol, max_iter)
        if not converged:
            flags.append("not_converged")
        pred = clf.predict(xte)
        predictions[test] = pred
        scores.append(float(np.mean(pred == labels[test])))
        coefs.append(clf.coef_)
    counts = confusion_matrix(labels, predictions, labels=classes).astype(np.float64)
    rows = counts.sum(axis=1, keepdims=True)
    confusion = counts / np.where(rows == 0, 1.0, rows)
    return DecodeReport(kind="discrete", fold_scores=scores,
                        mean=float(np.mean(scores)), sd=float(np.std(scores)),
                        predictions=predictions, coef_digest=_digest(coefs),
                        confusion=confusion, classes=classes,
                        flags=sorted(set(flags)))
