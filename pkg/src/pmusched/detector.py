"""TLS-GLRT for a change in branch susceptances.

Noisy branch flows ``Z~`` (K x T) and bus angles ``Theta~`` (B x T) follow
``z(t) = diag(s) D theta(t)`` with Gaussian noise on both. After eliminating
the unknown true angles, the negative log-likelihood in ``s`` is

    f(s) = 1/2 tr(A(s)^T H(s)^{-1} A(s)),
    A(s) = Z~ - diag(s) D Theta~,
    H(s) = sz2 I + st2 diag(s) D D^T diag(s),

and the test statistic is ``f(s0) - min_s f(s)``. Twice the statistic is
asymptotically chi-squared with K degrees of freedom under H0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .chi2 import chi2_quantile

__all__ = [
    "NoiseParams",
    "MeasurementSet",
    "GlrtResult",
    "ConvergenceError",
    "residual_A",
    "covariance_H",
    "profile_objective",
    "profile_gradient",
    "minimize_profile",
    "glrt_statistic",
    "glrt_test",
    "chi2_threshold",
    "decide",
]

H0, H1 = "H0", "H1"


@dataclass(frozen=True)
class NoiseParams:
    sigma2_z: float = 0.01
    sigma2_theta: float = 0.01

    def __post_init__(self):
        if self.sigma2_z < 0 or self.sigma2_theta < 0:
            raise ValueError("noise variances must be nonnegative")


@dataclass(frozen=True)
class MeasurementSet:
    z_tilde: np.ndarray  # K x T
    theta_tilde: np.ndarray  # B x T

    def __post_init__(self):
        if self.z_tilde.ndim != 2 or self.theta_tilde.ndim != 2:
            raise ValueError("measurements must be 2-D arrays")
        if self.z_tilde.shape[1] != self.theta_tilde.shape[1]:
            raise ValueError("flow and angle measurements disagree on T")
        if not (np.all(np.isfinite(self.z_tilde)) and np.all(np.isfinite(self.theta_tilde))):
            raise ValueError("measurements must be finite")

    @property
    def T(self) -> int:
        return self.z_tilde.shape[1]


@dataclass(frozen=True)
class GlrtResult:
    statistic: float
    s_hat: np.ndarray
    dof: int
    threshold: Optional[float] = None
    alpha: Optional[float] = None
    decision: Optional[str] = None
    iterations: int = 0


class ConvergenceError(RuntimeError):
    def __init__(self, msg, best):
        super().__init__(msg)
        self.best = best


def residual_A(s, m: MeasurementSet, D):
    s = np.asarray(s, dtype=float)
    return m.z_tilde - s[:, None] * (D @ m.theta_tilde)


def covariance_H(s, D, noise: NoiseParams):
    s = np.asarray(s, dtype=float)
    DDt = D @ D.T
    return noise.sigma2_z * np.eye(len(s)) + noise.sigma2_theta * (s[:, None] * DDt * s[None, :])


class _Profile:
    """Objective and gradient with the pieces that do not depend on s precomputed."""

    def __init__(self, m: MeasurementSet, D, noise: NoiseParams):
        if noise.sigma2_z <= 0:
            raise ValueError("sigma2_z must be positive for H(s) to be invertible")
        self.Z = m.z_tilde
        self.P = D @ m.theta_tilde
        self.M = D @ D.T
        self.sz2 = noise.sigma2_z
        self.st2 = noise.sigma2_theta
        self.eye = np.eye(self.Z.shape[0])

    def evaluate(self, s, need_grad=True):
        A = self.Z - s[:, None] * self.P
        H = self.sz2 * self.eye + self.st2 * (s[:, None] * self.M * s[None, :])
        X = cho_solve(cho_factor(H, lower=True, check_finite=False), A, check_finite=False)
        f = 0.5 * np.sum(A * X)
        if not need_grad:
            return f, None
        W = X @ X.T
        g = -np.sum(X * self.P, axis=1) - self.st2 * np.sum((self.M * s[None, :]) * W, axis=1)
        return f, g

    def diag_curvature(self, s):
        # Gauss-Newton diagonal, used only to scale the first quasi-Newton step
        H = self.sz2 + self.st2 * np.diag(self.M) * s * s
        return np.maximum(np.sum(self.P * self.P, axis=1) / H, 1e-12)


def profile_objective(s, m: MeasurementSet, D, noise: NoiseParams) -> float:
    """Half the trace ``tr(A^T H^{-1} A)`` at ``s``."""
    return float(_Profile(m, D, noise).evaluate(np.asarray(s, dtype=float), False)[0])


def profile_gradient(s, m: MeasurementSet, D, noise: NoiseParams) -> np.ndarray:
    return _Profile(m, D, noise).evaluate(np.asarray(s, dtype=float))[1]


def _bfgs(prof: _Profile, s0, max_iter, gtol_rel):
    x = np.array(s0, dtype=float)
    f, g = prof.evaluate(x)
    Hinv = np.diag(1.0 / prof.diag_curvature(x))
    for it in range(max_iter + 1):
        if np.linalg.norm(g) <= gtol_rel * max(1.0, abs(f)):
            return x, f, it, True
        if it == max_iter:
            break
        p = -Hinv @ g
        slope = g @ p
        if slope >= 0:
            # lost descent direction; restart from the scaled steepest descent
            Hinv = np.diag(1.0 / prof.diag_curvature(x))
            p = -Hinv @ g
            slope = g @ p
        step = 1.0
        while True:
            x_new = x + step * p
            try:
                f_new, g_new = prof.evaluate(x_new)
            except np.linalg.LinAlgError:
                f_new = np.inf
            if f_new <= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-14:
                # no further decrease representable
                return x, f, it, np.linalg.norm(g) <= 1e3 * gtol_rel * max(1.0, abs(f))
        dx = x_new - x
        dg = g_new - g
        stalled = f - f_new <= 1e-15 * abs(f) and np.linalg.norm(dx) <= 1e-14 * np.linalg.norm(x)
        x, f, g = x_new, f_new, g_new
        if stalled:
            # objective is flat to rounding; accept if the gradient is near tolerance
            return x, f, it + 1, np.linalg.norm(g) <= 1e3 * gtol_rel * max(1.0, abs(f))
        sy = dx @ dg
        if sy > 1e-12 * np.linalg.norm(dx) * np.linalg.norm(dg):
            rho = 1.0 / sy
            V = np.eye(len(x)) - rho * np.outer(dx, dg)
            Hinv = V @ Hinv @ V.T + rho * np.outer(dx, dx)
    return x, f, max_iter, False


def minimize_profile(m: MeasurementSet, D, noise: NoiseParams, s_init,
                     max_iter=500, gtol=1e-6):
    """Local minimizer of the profile objective, started from ``s_init``.

    BFGS with Armijo backtracking; stops once the gradient norm falls below
    ``gtol * max(1, |f|)``. Returns ``(s_hat, f_hat, iterations)``.
    """
    prof = _Profile(m, D, noise)
    x, f, it, ok = _bfgs(prof, s_init, max_iter, gtol)
    if not ok:
        raise ConvergenceError(f"profile minimization did not converge in {it} iterations", x)
    return x, float(f), it


def glrt_statistic(m: MeasurementSet, D, noise: NoiseParams, s0, **kw) -> GlrtResult:
    s0 = np.asarray(s0, dtype=float)
    prof = _Profile(m, D, noise)
    f0, _ = prof.evaluate(s0, False)
    s_hat, f_hat, it = minimize_profile(m, D, noise, s0, **kw)
    return GlrtResult(float(f0 - f_hat), s_hat, len(s0), iterations=it)


def chi2_threshold(K, alpha) -> float:
    """Threshold on the statistic giving false-alarm probability ``alpha``.

    The statistic is half a chi-squared variable, so this is half the upper
    ``alpha`` quantile of chi-squared with K degrees of freedom.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return 0.5 * chi2_quantile(1.0 - alpha, K)


def decide(statistic, threshold) -> str:
    return H1 if statistic > threshold else H0


def glrt_test(m: MeasurementSet, D, noise: NoiseParams, s0, alpha, **kw) -> GlrtResult:
    res = glrt_statistic(m, D, noise, s0, **kw)
    rho = chi2_threshold(res.dof, alpha)
    return GlrtResult(res.statistic, res.s_hat, res.dof, rho, alpha,
                      decide(res.statistic, rho), res.iterations)
