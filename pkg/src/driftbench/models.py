"""Base learners: linear SVM, logistic regression, an information-gain
decision tree, and the random-subspace (feature-bagged) ensemble.

Everything here is trained from scratch with numpy and is deterministic for a
fixed seed. The SVM minimizes the L2-regularized hinge objective

    min 1/2 w'w + C sum_i max(0, 1 - y_i (w.x_i + b))

by dual coordinate descent with the bias folded in as an extra always-one
feature. Logistic models are fit with FISTA so that an L1 penalty produces
exact zero weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DegenerateDataError, ParameterError, ShapeError

log = logging.getLogger(__name__)

#: relative objective change below which the SVM/logistic solvers stop
CONVERGENCE_TOL = 1e-6
MAX_EPOCHS = 1000

#: scale of the constant feature carrying the SVM bias; a large value keeps
#: the bias effectively unregularized so offsets cannot leak into features
#: that merely have a nonzero mean
BIAS_SCALE = 10.0


@dataclass
class TrainConfig:
    """Knobs for the trainers; unused fields are ignored by each learner."""

    kind: str = "tree"  # "svm" | "logistic" | "tree" | "ensemble"
    C: float = 1.0
    penalty: str = "l2"  # logistic only: "l1" | "l2"
    strength: float = 1e-3  # logistic regularization weight
    K: int = 20
    J: int | None = None  # defaults to ceil(d / 2)
    base: str = "tree"  # ensemble base learner
    max_depth: int = 10
    min_leaf: int = 2
    seed: int = 0

    def validate(self, d: int | None = None) -> None:
        if self.kind == "ensemble":
            if self.K < 2:
                raise ParameterError(f"ensemble needs K >= 2 members, got {self.K}")
            if self.J is not None:
                if self.J < 1:
                    raise ParameterError(f"J must be >= 1, got {self.J}")
                if d is not None and self.J > d:
                    raise ParameterError(f"J={self.J} exceeds dimensionality d={d}")


# ---------------------------------------------------------------------------
# linear models


@dataclass
class LinearModel:
    """Affine decision function sign(w.x + b)."""

    w: np.ndarray
    b: float
    C: float = 1.0
    probabilistic: bool = False
    kind: str = "svm"
    seed: int = 0

    @property
    def d(self) -> int:
        return self.w.shape[0]

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ShapeError(f"model has d={self.d}, input has d={X.shape[1]}")
        return X @ self.w + self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        scores = self.decision_scores(X)
        # exact zero scores resolve to +1
        return np.where(scores >= 0.0, 1, -1)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """p(y = +1 | x) through the logistic link."""
        s = np.clip(self.decision_scores(X), -500, 500)
        return 1.0 / (1.0 + np.exp(-s))


def predict_signed(model: LinearModel, x) -> float:
    """Signed score w.x + b for a single instance."""
    return float(model.decision_scores(np.asarray(x, dtype=float).reshape(1, -1))[0])


def predict_label(model: LinearModel, x) -> int:
    return 1 if predict_signed(model, x) >= 0.0 else -1


def _check_two_classes(y: np.ndarray) -> None:
    if np.all(y == y[0]):
        raise DegenerateDataError("training data contains a single class")


def _svm_dcd(X, y, q_diag, order, C, max_epochs, tol):
    """Dual coordinate descent epochs for the L1-loss SVM.

    Stops on a stationary dual (max projected gradient < 1e-6) or when the
    relative dual-objective change drops below ``tol``.
    """
    n, d = X.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    prev_obj = 0.0
    have_prev = False
    for _ in range(max_epochs):
        max_pg = 0.0
        for k in range(n):
            i = order[k]
            g = 0.0
            for j in range(d):
                g += X[i, j] * w[j]
            g = y[i] * g - 1.0
            a_old = alpha[i]
            if a_old <= 0.0:
                pg = g if g < 0.0 else 0.0
            elif a_old >= C:
                pg = g if g > 0.0 else 0.0
            else:
                pg = g
            if pg != 0.0:
                apg = -pg if pg < 0.0 else pg
                if apg > max_pg:
                    max_pg = apg
                a_new = a_old - g / q_diag[i]
                if a_new < 0.0:
                    a_new = 0.0
                elif a_new > C:
                    a_new = C
                if a_new != a_old:
                    diff = (a_new - a_old) * y[i]
                    for j in range(d):
                        w[j] += diff * X[i, j]
                    alpha[i] = a_new
        obj = 0.5 * float(np.dot(w, w)) - float(alpha.sum())
        if max_pg < 1e-6:
            break
        if have_prev:
            denom = abs(prev_obj)
            if denom < 1e-12:
                denom = 1e-12
            if abs(prev_obj - obj) / denom < tol:
                break
        prev_obj = obj
        have_prev = True
    return w, alpha


try:  # the jit only accelerates; results are identical without it
    import numba

    _svm_dcd = numba.njit(cache=True)(_svm_dcd)
except ImportError:  # pragma: no cover
    pass


def train_linear_svm(data: Dataset, C: float = 1.0, seed: int = 0) -> LinearModel:
    """L1-loss linear SVM by dual coordinate descent.

    The bias is trained as an extra constant feature of magnitude BIAS_SCALE.
    Coordinates are visited in a seeded random permutation per epoch, which
    makes training deterministic for a fixed seed.
    """
    if C <= 0:
        raise ParameterError(f"C must be positive, got {C}")
    y = data.require_labels().astype(float)
    _check_two_classes(y)
    X = np.hstack([data.X, np.full((len(data), 1), BIAS_SCALE)])
    n, d_aug = X.shape

    rng = np.random.default_rng(seed)
    q_diag = np.einsum("ij,ij->i", X, X)
    q_diag = np.where(q_diag > 0, q_diag, 1.0)
    order = rng.permutation(n)  # one fixed visit order keeps epochs comparable
    w, _ = _svm_dcd(
        np.ascontiguousarray(X), y, q_diag, order, float(C), MAX_EPOCHS, CONVERGENCE_TOL
    )

    weights, bias = w[:-1], float(w[-1] * BIAS_SCALE)
    if np.max(np.abs(weights), initial=0.0) < 1e-12:
        raise DegenerateDataError(
            "training produced a constant predictor (all feature weights are zero)"
        )
    return LinearModel(weights, bias, C=C, probabilistic=False, kind="svm", seed=seed)


def _spectral_norm_sq(X: np.ndarray) -> float:
    # power iteration; deterministic start
    v = np.ones(X.shape[1]) / np.sqrt(X.shape[1])
    for _ in range(100):
        u = X @ v
        v_new = X.T @ u
        norm = np.linalg.norm(v_new)
        if norm == 0:
            return 0.0
        v = v_new / norm
    return float(np.linalg.norm(X @ v) ** 2)


def train_logistic(
    data: Dataset,
    penalty: str = "l2",
    strength: float = 1e-3,
    seed: int = 0,
) -> LinearModel:
    """Regularized logistic regression via FISTA.

    Minimizes mean log-loss plus ``strength * R(w)`` where R is 1/2 ||w||^2
    (l2) or ||w||_1 (l1); the bias is never penalized. The l1 proximal step
    soft-thresholds, so irrelevant weights come out exactly zero.
    """
    if penalty not in ("l1", "l2"):
        raise ParameterError(f"penalty must be 'l1' or 'l2', got {penalty!r}")
    if strength < 0:
        raise ParameterError(f"strength must be >= 0, got {strength}")
    y = data.require_labels().astype(float)
    _check_two_classes(y)
    X = np.hstack([data.X, np.ones((len(data), 1))])
    n, d_aug = X.shape

    lipschitz = _spectral_norm_sq(X) / (4.0 * n)
    if penalty == "l2":
        lipschitz += strength
    step = 1.0 / max(lipschitz, 1e-12)

    theta = np.zeros(d_aug)
    z = theta.copy()
    t_acc = 1.0
    prev_obj = None
    for _ in range(5000):
        s = np.clip(y * (X @ z), -500, 500)
        sig = 1.0 / (1.0 + np.exp(s))  # = 1 - sigmoid(margin)
        grad = -(X.T @ (y * sig)) / n
        if penalty == "l2":
            grad[:-1] += strength * z[:-1]
        theta_new = z - step * grad
        if penalty == "l1":
            thr = step * strength
            theta_new[:-1] = np.sign(theta_new[:-1]) * np.maximum(
                np.abs(theta_new[:-1]) - thr, 0.0
            )
        t_new = (1.0 + np.sqrt(1.0 + 4.0 * t_acc**2)) / 2.0
        z = theta_new + ((t_acc - 1.0) / t_new) * (theta_new - theta)
        theta, t_acc = theta_new, t_new

        margins = np.clip(y * (X @ theta), -500, 500)
        obj = float(np.mean(np.log1p(np.exp(-margins))))
        if penalty == "l2":
            obj += 0.5 * strength * float(theta[:-1] @ theta[:-1])
        else:
            obj += strength * float(np.abs(theta[:-1]).sum())
        if prev_obj is not None and abs(prev_obj - obj) / max(abs(prev_obj), 1e-12) < 1e-9:
            break
        prev_obj = obj

    return LinearModel(
        theta[:-1].copy(),
        float(theta[-1]),
        C=strength,
        probabilistic=True,
        kind="logistic",
        seed=seed,
    )


# ---------------------------------------------------------------------------
# decision tree


def _entropy(pos: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Binary entropy of pos/total, with 0*log0 = 0; vectorized."""
    total = np.asarray(total, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, pos / np.where(total > 0, total, 1), 0.0)
        q = 1.0 - p
        h = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    return np.where(total > 0, h, 0.0)


@dataclass
class TreeModel:
    """Binary decision tree with numeric <=threshold splits."""

    root: dict
    n_features: int
    max_depth: int = 10
    min_leaf: int = 2
    seed: int = 0

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n_features:
            raise ShapeError(
                f"tree expects d={self.n_features}, input has d={X.shape[1]}"
            )
        if X.shape[0] == 1:
            return np.array([self._predict_one(X[0])], dtype=int)
        out = np.empty(X.shape[0], dtype=int)
        self._fill(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _predict_one(self, x: np.ndarray) -> int:
        node = self.root
        while not node["leaf"]:
            node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
        return node["label"]

    def _fill(self, node: dict, X: np.ndarray, rows: np.ndarray, out: np.ndarray) -> None:
        if node["leaf"]:
            out[rows] = node["label"]
            return
        go_left = X[rows, node["feature"]] <= node["threshold"]
        self._fill(node["left"], X, rows[go_left], out)
        self._fill(node["right"], X, rows[~go_left], out)

    def depth(self) -> int:
        def walk(node):
            if node["leaf"]:
                return 0
            return 1 + max(walk(node["left"]), walk(node["right"]))

        return walk(self.root)


def _best_split(X, y_pos, min_leaf, rng):
    """Best (feature, threshold) by information gain; exact ties are broken
    with the provided rng so that ensembles over tied features stay diverse."""
    n, d = X.shape
    total_pos = float(y_pos.sum())
    parent_h = float(_entropy(np.array(total_pos), np.array(float(n))))
    order = np.argsort(X, axis=0, kind="stable")
    sv = np.take_along_axis(X, order, axis=0)
    sp = np.cumsum(y_pos[order], axis=0)

    # candidate boundaries: between distinct adjacent values, children >= min_leaf
    left_n = np.arange(1, n, dtype=float)[:, None]
    valid = (sv[:-1] < sv[1:]) & (left_n >= min_leaf) & ((n - left_n) >= min_leaf)
    if not valid.any():
        return None
    left_pos = sp[:-1]
    right_n = n - left_n
    right_pos = total_pos - left_pos
    child_h = (left_n * _entropy(left_pos, left_n) + right_n * _entropy(right_pos, right_n)) / n
    gains = np.where(valid, parent_h - child_h, -np.inf)

    best_gain = float(gains.max())
    if not np.isfinite(best_gain) or best_gain <= 1e-12:
        return None
    rows, cols = np.nonzero(gains >= best_gain - 1e-12)
    k = 0 if len(rows) == 1 else int(rng.integers(len(rows)))
    j, f = int(rows[k]), int(cols[k])
    thr = 0.5 * (sv[j, f] + sv[j + 1, f])
    return f, thr, best_gain


def _grow(X, y, depth, config, rng):
    n = X.shape[0]
    n_pos = int((y == 1).sum())
    n_neg = n - n_pos
    label = 1 if n_pos >= n_neg else -1
    leaf = {"leaf": True, "label": label, "counts": [n_neg, n_pos]}
    if n_pos == 0 or n_neg == 0 or depth >= config.max_depth or n < 2 * config.min_leaf:
        return leaf
    split = _best_split(X, (y == 1).astype(float), config.min_leaf, rng)
    if split is None:
        return leaf
    f, thr, _ = split
    mask = X[:, f] <= thr
    return {
        "leaf": False,
        "feature": int(f),
        "threshold": float(thr),
        "left": _grow(X[mask], y[mask], depth + 1, config, rng),
        "right": _grow(X[~mask], y[~mask], depth + 1, config, rng),
    }


def train_tree(data: Dataset, config: TrainConfig | None = None) -> TreeModel:
    """Greedy top-down induction maximizing information gain.

    Stops at max depth, min leaf size, or a pure node. Single-class input is
    valid and yields a single leaf.
    """
    config = config or TrainConfig(kind="tree")
    y = data.require_labels()
    rng = np.random.default_rng(config.seed)
    root = _grow(np.asarray(data.X), y, 0, config, rng)
    return TreeModel(
        root,
        n_features=data.d,
        max_depth=config.max_depth,
        min_leaf=config.min_leaf,
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# random subspace ensemble


@dataclass
class SubspaceEnsemble:
    """K base models, each trained on its own random J-feature view."""

    members: list
    subsets: list
    d: int
    base: str = "tree"
    seed: int = 0

    @property
    def K(self) -> int:
        return len(self.members)

    @property
    def J(self) -> int:
        return len(self.subsets[0])

    def votes_positive(self, X: np.ndarray) -> np.ndarray:
        """Number of members voting +1 for each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ShapeError(f"ensemble expects d={self.d}, input has d={X.shape[1]}")
        votes = np.zeros(X.shape[0], dtype=int)
        for model, subset in zip(self.members, self.subsets):
            votes += model.predict(X[:, subset]) == 1
        return votes

    def confidence(self, X: np.ndarray) -> np.ndarray:
        """p_plus for each row; p_minus is its complement."""
        return self.votes_positive(X) / self.K

    def predict(self, X: np.ndarray) -> np.ndarray:
        # majority vote, exact ties resolve to +1
        p_plus = self.confidence(X)
        return np.where(p_plus >= 0.5, 1, -1)


def ensemble_confidence(ensemble: SubspaceEnsemble, x) -> tuple[float, float]:
    """(p_plus, p_minus) vote shares for a single instance."""
    p_plus = float(ensemble.confidence(np.asarray(x, dtype=float).reshape(1, -1))[0])
    return p_plus, 1.0 - p_plus


def train_subspace_ensemble(data: Dataset, config: TrainConfig) -> SubspaceEnsemble:
    d = data.d
    config.validate(d)
    if config.K < 2:
        raise ParameterError(f"ensemble needs K >= 2, got {config.K}")
    J = config.J if config.J is not None else int(np.ceil(d / 2))
    if not 1 <= J <= d:
        raise ParameterError(f"J must be in [1, {d}], got {J}")
    y = data.require_labels()
    _check_two_classes(y.astype(float))

    rng = np.random.default_rng(config.seed)
    members, subsets = [], []
    for k in range(config.K):
        subset = np.sort(rng.choice(d, size=J, replace=False))
        view = Dataset(data.X[:, subset], y)
        member_cfg = TrainConfig(
            kind=config.base,
            max_depth=config.max_depth,
            min_leaf=config.min_leaf,
            penalty=config.penalty,
            strength=config.strength,
            seed=int(rng.integers(2**31 - 1)),
        )
        if config.base == "tree":
            member = train_tree(view, member_cfg)
        elif config.base == "logistic":
            member = train_logistic(view, config.penalty, config.strength, member_cfg.seed)
        else:
            raise ParameterError(f"unsupported ensemble base {config.base!r}")
        members.append(member)
        subsets.append(subset)

    covered = np.zeros(d, dtype=bool)
    for subset in subsets:
        covered[subset] = True
    if not covered.all():
        missing = np.nonzero(~covered)[0].tolist()
        log.warning("features %s appear in no ensemble member", missing)

    return SubspaceEnsemble(members, subsets, d=d, base=config.base, seed=config.seed)


# ---------------------------------------------------------------------------
# JSON serialization


def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        return {
            "type": "linear",
            "kind": model.kind,
            "w": model.w.tolist(),
            "b": model.b,
            "C": model.C,
            "probabilistic": model.probabilistic,
            "seed": model.seed,
        }
    if isinstance(model, TreeModel):
        return {
            "type": "tree",
            "root": model.root,
            "n_features": model.n_features,
            "max_depth": model.max_depth,
            "min_leaf": model.min_leaf,
            "seed": model.seed,
        }
    if isinstance(model, SubspaceEnsemble):
        return {
            "type": "ensemble",
            "base": model.base,
            "d": model.d,
            "seed": model.seed,
            "subsets": [s.tolist() for s in model.subsets],
            "members": [model_to_dict(m) for m in model.members],
        }
    raise ParameterError(f"cannot serialize {type(model).__name__}")


def model_from_dict(doc: dict):
    t = doc.get("type")
    if t == "linear":
        return LinearModel(
            np.asarray(doc["w"], dtype=float),
            float(doc["b"]),
            C=doc.get("C", 1.0),
            probabilistic=doc.get("probabilistic", False),
            kind=doc.get("kind", "svm"),
            seed=doc.get("seed", 0),
        )
    if t == "tree":
        return TreeModel(
            doc["root"],
            n_features=doc["n_features"],
            max_depth=doc.get("max_depth", 10),
            min_leaf=doc.get("min_leaf", 2),
            seed=doc.get("seed", 0),
        )
    if t == "ensemble":
        return SubspaceEnsemble(
            [model_from_dict(m) for m in doc["members"]],
            [np.asarray(s, dtype=int) for s in doc["subsets"]],
            d=doc["d"],
            base=doc.get("base", "tree"),
            seed=doc.get("seed", 0),
        )
    raise ParameterError(f"unknown model document type {t!r}")
