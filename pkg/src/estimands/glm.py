"""Generalized linear model fitting by iteratively reweighted least squares.

Only the canonical link/family pairs used by the outcome models are
supported, which keeps the algebra simple: the score is ``X'(y - mu)`` and
the observed information equals the expected information ``X'WX`` with
``W = diag(V(mu))``.  Newton steps are damped by step-halving whenever the
log-likelihood would decrease; convergence requires the score sup-norm to
fall below ``tol``.

Non-convergence within ``max_iter`` is flagged on the result, not raised.
Rank-deficient designs and diverging coefficient paths (separation) are
raised, since their "fits" would be meaningless.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import SeparationError, SingularDesignError
from .links import Link

_DIVERGENCE_BOUND = 30.0


class GlmFormula(enum.Enum):
    TREATMENT_ONLY = "treatment_only"
    MAIN_EFFECTS = "main_effects"
    INTERACTION = "interaction"
    QUADRATIC_INTERACTION = "quadratic_interaction"


def design_matrix(x, t, formula: GlmFormula):
    """Design matrix and column names for a trial regression.

    ``x`` has shape (n,) or (n, k); treatment and product terms always come
    after the covariate block so the treatment contrast is easy to read off.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float).T).T
    t = np.asarray(t, dtype=float)
    n, k = x.shape
    ones = np.ones(n)
    xnames = [f"x{j + 1}" for j in range(k)]
    if formula is GlmFormula.TREATMENT_ONLY:
        return np.column_stack([ones, t]), ("const", "t")
    if formula is GlmFormula.MAIN_EFFECTS:
        return np.column_stack([ones, x, t]), ("const", *xnames, "t")
    if formula is GlmFormula.INTERACTION:
        return (
            np.column_stack([ones, x, t, x * t[:, None]]),
            ("const", *xnames, "t", *[f"{nm}:t" for nm in xnames]),
        )
    x2 = np.square(x)
    sq = [f"{nm}^2" for nm in xnames]
    return (
        np.column_stack([ones, x, x2, t, x * t[:, None], x2 * t[:, None]]),
        ("const", *xnames, *sq, "t", *[f"{nm}:t" for nm in xnames], *[f"{nm}:t" for nm in sq]),
    )


@dataclass(frozen=True)
class GlmFit:
    coefficients: np.ndarray
    covariance: np.ndarray
    converged: bool
    iterations: int
    column_names: tuple
    link: Link
    formula: GlmFormula
    offset: float = 0.0

    def __post_init__(self):
        cov = np.asarray(self.covariance)
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise SingularDesignError("covariance matrix is not symmetric")

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.column_names.index(name)])

    def standard_error(self, name: str) -> float:
        i = self.column_names.index(name)
        return float(np.sqrt(self.covariance[i, i]))

    def linear_predictor(self, x, t) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        tvec = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
        X, _ = design_matrix(x, tvec, self.formula)
        return X @ self.coefficients + self.offset

    def predict_mean(self, x, t) -> np.ndarray:
        return self.link.inverse(self.linear_predictor(x, t))


def _mean_and_weight(link: Link, eta: np.ndarray):
    if link is Link.IDENTITY:
        mu = eta
        return mu, np.ones_like(eta)
    if link is Link.LOG:
        mu = np.exp(eta)
        return mu, mu
    mu = expit(eta)
    return mu, mu * (1.0 - mu)


def _log_likelihood(link: Link, eta, y, w) -> float:
    """Kernel of the log-likelihood (constant terms dropped).

    Overflow in wild trial steps yields -inf, which is exactly the signal the
    step-halving loop needs, so the overflow warning is suppressed.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        if link is Link.IDENTITY:
            return float(-0.5 * np.sum(w * np.square(y - eta)))
        if link is Link.LOG:
            return float(np.sum(w * (y * eta - np.exp(eta))))
        # Bernoulli: y*eta - log(1 + exp(eta)), computed stably.
        softplus = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
        return float(np.sum(w * (y * eta - softplus)))


def _accurate_score(X, w, y, mu) -> np.ndarray:
    """Score with extended-precision accumulation.

    The plain BLAS score carries summation noise of order ``n * eps`` which
    can exceed the convergence threshold at n ~ 1e6 even at the exact
    optimum; accumulating in long double pushes the noise floor well below
    it, so convergence can be certified honestly.
    """
    r = (w * (y - mu)).astype(np.longdouble)
    return np.array([float(X[:, j].astype(np.longdouble) @ r) for j in range(X.shape[1])])


def _intercept_start(link: Link, y, w, p: int) -> np.ndarray:
    """Start Newton from the intercept-only fit; keeps log/logit steps sane."""
    beta = np.zeros(p)
    total = w.sum()
    ybar = float(np.dot(w, y) / total) if total > 0 else 0.0
    if link is Link.LOG:
        beta[0] = np.log(max(ybar, 1e-8))
    elif link is Link.LOGIT:
        beta[0] = float(np.log(min(max(ybar, 1e-6), 1 - 1e-6) / (1 - min(max(ybar, 1e-6), 1 - 1e-6))))
    else:
        beta[0] = ybar
    return beta


def _check_rank(X: np.ndarray):
    gram = X.T @ X
    norms = np.sqrt(np.diag(gram))
    if np.any(norms == 0):
        raise SingularDesignError("design matrix has a zero column")
    scaled = gram / np.outer(norms, norms)
    eigvals = np.linalg.eigvalsh(scaled)
    if eigvals[0] < 1e-10:
        raise SingularDesignError(
            f"design matrix is rank deficient (scaled min eigenvalue {eigvals[0]:.2e})"
        )


def fit_glm(
    x,
    t,
    y,
    formula: GlmFormula,
    link: Link,
    sample_weight=None,
    offset: float = 0.0,
    start=None,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> GlmFit:
    """Maximum-likelihood fit of a canonical GLM on trial data.

    ``sample_weight`` supports frequency-style weights (used by the bootstrap
    machinery); ``start`` warm-starts the Newton iteration.
    """
    X, names = design_matrix(x, t, formula)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    _check_rank(X * np.sqrt(w)[:, None])

    beta = _intercept_start(link, y, w, p) if start is None else np.asarray(start, dtype=float).copy()
    eta = X @ beta + offset
    ll = _log_likelihood(link, eta, y, w)
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        mu, v = _mean_and_weight(link, eta)
        score = X.T @ (w * (y - mu))
        if np.abs(score).max() < tol:
            converged = True
            iterations -= 1
            break
        info = np.einsum("ij,i,ik->jk", X, w * v, X, optimize=True)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError as exc:
            raise SingularDesignError(f"information matrix is singular: {exc}") from exc

        # Step-halve until the likelihood stops decreasing.
        scale = 1.0
        for _ in range(40):
            candidate = beta + scale * step
            eta_new = X @ candidate + offset
            ll_new = _log_likelihood(link, eta_new, y, w)
            if ll_new >= ll - 1e-12 * (1.0 + abs(ll)):
                break
            scale *= 0.5

        stalled = np.abs(candidate - beta).max() <= 1e-15 * (1.0 + np.abs(beta).max())
        beta, eta, ll = candidate, eta_new, ll_new

        if link is not Link.IDENTITY and np.abs(beta).max() > _DIVERGENCE_BOUND:
            raise SeparationError(
                f"coefficients diverged beyond {_DIVERGENCE_BOUND} "
                f"(max |coef| = {np.abs(beta).max():.2f}); data are likely separated"
            )
        if stalled:
            # The iterate stopped moving: we are at the float64 fixpoint and
            # the fast score is dominated by summation noise.  Certify (or
            # refuse) convergence against an extended-precision score.
            mu, v = _mean_and_weight(link, eta)
            converged = bool(np.abs(_accurate_score(X, w, y, mu)).max() < tol)
            break

    mu, v = _mean_and_weight(link, eta)
    info = np.einsum("ij,i,ik->jk", X, w * v, X, optimize=True)
    if link is Link.IDENTITY:
        dof = max(w.sum() - p, 1.0)
        dispersion = float(np.sum(w * np.square(y - mu)) / dof)
        cov = dispersion * np.linalg.inv(info)
    else:
        cov = np.linalg.inv(info)
    cov = (cov + cov.T) / 2.0
    return GlmFit(
        coefficients=beta,
        covariance=cov,
        converged=converged,
        iterations=iterations,
        column_names=names,
        link=link,
        formula=formula,
        offset=offset,
    )
