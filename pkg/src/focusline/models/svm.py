"""One-vs-rest RBF soft-margin SVMs trained with SMO.

The dual solver follows the second-order working-set selection of Fan,
Chen and Lin (2005), as used in LIBSVM. For labels ``y`` in {-1, +1} it
solves ``min 1/2 a'Qa - e'a`` s.t. ``y'a = 0``, ``0 <= a <= C`` with
``Q_ij = y_i y_j K(x_i, x_j)`` until the maximal KKT violation drops
below ``tol``.
"""

from __future__ import annotations

import numba
import numpy as np
from scipy.spatial.distance import cdist

from .adaboost import softmax

_TAU = 1e-12


@numba.njit(cache=True, nogil=True)
def smo(K, y, C, tol, max_iter):
    """Return ``(alpha, rho, n_iter)``; the decision function is ``sum a_i y_i K(x_i, x) - rho``."""
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while it < max_iter:
        gmax = -np.inf
        gmax2 = -np.inf
        i = -1
        for t in range(n):
            if y[t] > 0:
                if alpha[t] < C and -G[t] >= gmax:
                    gmax = -G[t]
                    i = t
            else:
                if alpha[t] > 0 and G[t] >= gmax:
                    gmax = G[t]
                    i = t
        if i < 0:
            break
        j = -1
        obj_min = np.inf
        for t in range(n):
            q_it = y[i] * y[t] * K[i, t]
            if y[t] > 0:
                if alpha[t] > 0:
                    diff = gmax + G[t]
                    if G[t] >= gmax2:
                        gmax2 = G[t]
                    if diff > 0:
                        quad = K[i, i] + K[t, t] - 2.0 * y[i] * q_it
                        if quad <= 0:
                            quad = _TAU
                        obj = -(diff * diff) / quad
                        if obj <= obj_min:
                            obj_min = obj
                            j = t
            else:
                if alpha[t] < C:
                    diff = gmax - G[t]
                    if -G[t] >= gmax2:
                        gmax2 = -G[t]
                    if diff > 0:
                        quad = K[i, i] + K[t, t] + 2.0 * y[i] * q_it
                        if quad <= 0:
                            quad = _TAU
                        obj = -(diff * diff) / quad
                        if obj <= obj_min:
                            obj_min = obj
                            j = t
        if gmax + gmax2 < tol or j < 0:
            break
        it += 1

        old_i = alpha[i]
        old_j = alpha[j]
        q_ij = y[i] * y[j] * K[i, j]
        if y[i] != y[j]:
            quad = K[i, i] + K[j, j] + 2.0 * q_ij
            if quad <= 0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * q_ij
            if quad <= 0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        d_i = alpha[i] - old_i
        d_j = alpha[j] - old_j
        for t in range(n):
            G[t] += y[t] * (y[i] * K[i, t] * d_i + y[j] * K[j, t] * d_j)

    ub = np.inf
    lb = -np.inf
    n_free = 0
    sum_free = 0.0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            sum_free += yg
    if n_free > 0:
        rho = sum_free / n_free
    else:
        rho = 0.5 * (ub + lb)
    return alpha, rho, it


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


class OneVsRestSVM:
    def __init__(self, support: np.ndarray, coef: np.ndarray, rho: np.ndarray, gamma: float,
                 mean: np.ndarray, scale: np.ndarray, alphas: list[np.ndarray] | None = None,
                 n_iter: list[int] | None = None):
        self.support = support        # (m, d) standardized support vectors
        self.coef = coef              # (n_classes, m): alpha_i * y_i per machine
        self.rho = rho                # (n_classes,)
        self.gamma = gamma
        self.mean = mean
        self.scale = scale
        self.alphas = alphas or []    # training-time duals, not persisted
        self.n_iter = n_iter or []

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, hp: dict, seed: int, n_classes: int) -> "OneVsRestSVM":
        n, d = X.shape
        if hp["standardize"]:
            mean = X.mean(axis=0)
            scale = X.std(axis=0)
            scale[scale == 0] = 1.0
        else:
            mean, scale = np.zeros(d), np.ones(d)
        Z = (X - mean) / scale
        gamma = hp["gamma"] if hp["gamma"] is not None else 1.0 / d
        K = rbf_kernel(Z, Z, gamma)
        C = float(hp["C"])
        max_iter = max(10_000_000, 100 * n)
        coefs, rhos, alphas, iters = [], [], [], []
        for k in range(n_classes):
            yk = np.where(y == k, 1.0, -1.0)
            if np.all(yk < 0) or np.all(yk > 0):
                # class absent (or alone): constant decision value
                a, rho, it = np.zeros(n), -float(yk[0]), 0
            else:
                a, rho, it = smo(K, yk, C, float(hp["tol"]), max_iter)
            alphas.append(a)
            coefs.append(a * yk)
            rhos.append(rho)
            iters.append(int(it))
        coef = np.array(coefs)
        used = np.flatnonzero(np.any(coef != 0, axis=0))
        return cls(Z[used], coef[:, used], np.array(rhos), float(gamma), mean, scale, alphas, iters)

    def decision(self, X: np.ndarray) -> np.ndarray:
        Z = (X - self.mean) / self.scale
        if len(self.support) == 0:
            return np.tile(-self.rho, (X.shape[0], 1))
        return rbf_kernel(Z, self.support, self.gamma) @ self.coef.T - self.rho

    def proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision(X))

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "coef": self.coef.tolist(),
                "rho": self.rho.tolist(), "gamma": self.gamma,
                "mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict, n_classes: int) -> "OneVsRestSVM":
        support = np.asarray(d["support"], dtype=np.float64)
        mean = np.asarray(d["mean"], dtype=np.float64)
        return cls(support.reshape(-1, len(mean)),
                   np.asarray(d["coef"], dtype=np.float64).reshape(n_classes, -1),
                   np.asarray(d["rho"], dtype=np.float64), float(d["gamma"]), mean,
                   np.asarray(d["scale"], dtype=np.float64))
