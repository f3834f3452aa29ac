"""Non-negative squared-exponential mixture fits of covariance kernels.

Approximates a kernel C(d) on [0, L] by sum_i a_i exp(-b_i d^2) with
a_i >= 0, b_i > 0, working in log-exponents theta_i = log b_i.  The
discrete objective is the quadrature L2 error

    J(a, theta) = sqrt( sum_j w_j ( sum_i a_i e^{-e^{theta_i} x_j^2} - C(x_j) )^2 )

on a multi-level Gauss rule refined toward d = 0.  Minimization is a
damped Newton iteration on the smooth square F = J^2 with analytic
gradient and Hessian, golden-ratio backtracking, steepest-descent fallback
when the damped system is not a descent direction, and non-negative
least-squares refits of the weights.  Ranks are grown one term at a time,
each converged exponent set seeding the next rank's initial guess, until
J drops below the target tolerance.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, kernel_eval_batch
from .orthopoly import GaussRule, composite_rule

__all__ = [
    "SqExpMixture",
    "FitConfig",
    "FitHistory",
    "objective",
    "nnls",
    "nnls_weights",
    "newton_minimize",
    "init_theta",
    "fit_mixture",
    "save_mixture",
    "load_mixture",
]

_GOLDEN_SHRINK = 2.0 / (1.0 + np.sqrt(5.0))  # 1/phi
_MAX_BACKTRACKS = 60
_THETA_CAP = 700.0  # keeps e^theta finite; anything near this is a lost iterate


@dataclass(frozen=True)
class SqExpMixture:
    """A fitted mixture: weights ``a`` >= 0 and ascending exponents ``b``.

    ``achieved_error`` is the discrete objective J of the stored
    coefficients on the fit rule; ``fit_domain_L`` the fitted interval
    end; ``fit_tol`` the tolerance the continuation was run against.
    """

    a: np.ndarray
    b: np.ndarray
    kernel: KernelSpec
    fit_domain_L: float
    achieved_error: float = 0.0
    fit_tol: float = float("nan")

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-D of equal length")
        if np.any(a < 0):
            raise ValueError("weights must be non-negative")
        if np.any(b <= 0):
            raise ValueError("exponents must be positive")
        if b.size > 1 and np.any(np.diff(b) <= 0):
            raise ValueError("exponents must be strictly ascending")
        if self.fit_domain_L <= 0:
            raise ValueError("fit_domain_L must be > 0")

    @property
    def rank(self) -> int:
        return self.a.size


@dataclass(frozen=True)
class FitConfig:
    """Continuation and Newton knobs.

    ``quad`` = (L, levels, ratio, n_per_panel) parameterizes the composite
    rule the discrete objective is built on.
    """

    tol: float = 1e-6
    k_max: int = 20
    grad_tol: float = 1e-10
    step_tol: float = 1e-12
    step_patience: int = 5
    max_iters: int = 500
    quad: tuple[float, int, float, int] = (2.0, 5, 0.2, 100)

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        L, levels, ratio, npp = self.quad
        if L <= 0 or levels < 0 or not 0 < ratio < 1 or npp < 1:
            raise ValueError(f"invalid quad parameters {self.quad}")

    def rule(self) -> GaussRule:
        L, levels, ratio, npp = self.quad
        return composite_rule(L, levels, ratio, npp)


@dataclass
class FitHistory:
    """Per-rank optimal log-exponents and errors of a continuation run."""

    thetas: list[np.ndarray] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    converged: bool = False
    flags: list[str] = field(default_factory=list)


def _design(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Columns e^{-e^{theta_i} x_j^2}; shape (len(x), len(theta))."""
    b = np.exp(np.minimum(theta, _THETA_CAP))
    return np.exp(-np.outer(x * x, b))


def objective(a, theta, kernel: KernelSpec, rule: GaussRule) -> float:
    """Discrete L2 error J of the mixture (a, e^theta) against the kernel."""
    a = np.asarray(a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if a.shape != theta.shape:
        raise ValueError("a and theta must have equal length")
    x = rule.nodes
    c = kernel_eval_batch(kernel, x)
    resid = (_design(theta, x) @ a if a.size else np.zeros_like(x)) - c
    return float(np.sqrt(rule.weights @ resid**2))


def _pack(a, theta):
    return np.concatenate([a, theta])


def _unpack(p):
    k = p.size // 2
    return p[:k], p[k:]


def _make_objective(kernel: KernelSpec, rule: GaussRule):
    """Value / (value, gradient, Hessian) callables for F = J^2 over p=(a, theta)."""
    x = rule.nodes
    w = rule.weights
    x2 = x * x
    c = kernel_eval_batch(kernel, x)

    def value(p):
        a, theta = _unpack(p)
        r = _design(theta, x) @ a - c
        return float(w @ r**2)

    def value_grad_hess(p):
        a, theta = _unpack(p)
        k = a.size
        E = _design(theta, x)  # (m, k)
        bvec = np.exp(np.minimum(theta, _THETA_CAP))
        r = E @ a - c
        wr = w * r
        G = -(x2[:, None] * bvec[None, :]) * E  # dE/dtheta_i columns
        H = a[None, :] * G  # dmodel/dtheta_i columns
        F = float(w @ r**2)
        grad = np.concatenate([2.0 * (E.T @ wr), 2.0 * (H.T @ wr)])

        wE = w[:, None] * E
        Haa = 2.0 * (E.T @ wE)
        Hat = 2.0 * (wE.T @ H)
        Hat[np.diag_indices(k)] += 2.0 * (G.T @ wr)
        Htt = 2.0 * (H.T @ (w[:, None] * H))
        # d/dtheta_i of the i-th model-derivative column: H_i * (1 - b_i x^2)
        dH_diag = H * (1.0 - x2[:, None] * bvec[None, :])
        Htt[np.diag_indices(k)] += 2.0 * np.einsum("ji,j->i", dH_diag, wr)
        hess = np.block([[Haa, Hat], [Hat.T, Htt]])
        return F, grad, 0.5 * (hess + hess.T)

    return value, value_grad_hess


def nnls(A: np.ndarray, b: np.ndarray, max_iter: int | None = None) -> np.ndarray:
    """Lawson-Hanson active-set solution of min ||A x - b|| s.t. x >= 0."""
    m, n = A.shape
    if max_iter is None:
        max_iter = 3 * max(n, 10)
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    resid = b.copy()
    grad = A.T @ resid
    tol = 10.0 * np.finfo(float).eps * max(m, n) * max(1.0, float(np.abs(grad).max(initial=0.0)))
    for _ in range(max_iter):
        if passive.all() or np.all(grad[~passive] <= tol):
            break
        free = np.where(~passive)[0]
        passive[free[np.argmax(grad[free])]] = True
        while True:
            idx = np.where(passive)[0]
            z_p, *_ = np.linalg.lstsq(A[:, idx], b, rcond=None)
            if np.all(z_p > 0):
                x = np.zeros(n)
                x[idx] = z_p
                break
            # step toward z until the first passive variable hits zero
            mask = z_p <= 0
            alpha = np.min(x[idx][mask] / (x[idx][mask] - z_p[mask]))
            x[idx] = x[idx] + alpha * (z_p - x[idx])
            passive[idx[x[idx] <= tol]] = False
            x[~passive] = 0.0
        resid = b - A @ x
        grad = A.T @ resid
    return x


def nnls_weights(theta, kernel: KernelSpec, rule: GaussRule) -> np.ndarray:
    """Optimal non-negative weights at fixed log-exponents theta."""
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0:
        return np.zeros(0)
    gaps = np.abs(theta[:, None] - theta[None, :])[np.triu_indices(theta.size, 1)]
    if gaps.size and gaps.min() < 1e-8:
        warnings.warn(
            "near-collinear design columns: exponent gap below 1e-8",
            RuntimeWarning,
            stacklevel=2,
        )
    sw = np.sqrt(rule.weights)
    A = sw[:, None] * _design(theta, rule.nodes)
    b = sw * kernel_eval_batch(kernel, rule.nodes)
    return nnls(A, b)


def _minimize_damped_newton(value, value_grad_hess, p0, cfg: FitConfig):
    """Damped Newton with golden backtracking on a generic smooth objective.

    Returns (p, value, iterations, status); status one of ``gradient``,
    ``steps``, ``max_iters``, ``line_search_failed``.
    """
    p = np.asarray(p0, dtype=float).copy()
    tau = 0.0
    small_steps = 0
    best_p, best_f = p.copy(), value(p)
    n_iter = 0
    status = "max_iters"
    eye = np.eye(p.size)
    while n_iter < cfg.max_iters:
        n_iter += 1
        F, g, Hs = value_grad_hess(p)
        if F < best_f:
            best_p, best_f = p.copy(), F
        # test the gradient of J = sqrt(F): grad J = grad F / (2 sqrt(F));
        # an absolute test on grad F alone goes blind once F ~ tol^2
        grad_scale = 2.0 * np.sqrt(F) if F > 0 else 1.0
        if np.linalg.norm(g) < cfg.grad_tol * grad_scale:
            status = "gradient"
            break
        d = None
        try:
            np.linalg.cholesky(Hs + tau * eye)
            s = np.linalg.solve(Hs + tau * eye, -g)
            if g @ s < 0:
                d = s
                tau = tau / 10.0
        except np.linalg.LinAlgError:
            pass
        if d is None:
            tau = max(1e-8, 10.0 * tau)
            d = -g
        alpha = 1.0
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            F_new = value(p + alpha * d)
            if F_new < F:
                accepted = True
                break
            alpha *= _GOLDEN_SHRINK
        if not accepted:
            status = "line_search_failed"
            return best_p, best_f, n_iter, status
        step = alpha * d
        p = p + step
        if np.linalg.norm(step) < cfg.step_tol:
            small_steps += 1
            if small_steps >= cfg.step_patience:
                status = "steps"
                break
        else:
            small_steps = 0
    F_final = value(p)
    if F_final < best_f:
        best_p, best_f = p, F_final
    return best_p, best_f, n_iter, status


def newton_minimize(p0, kernel: KernelSpec, rule: GaussRule, cfg: FitConfig):
    """Minimize the squared discrete objective from p0 = (a, theta).

    Returns (a, theta, J, iterations, status).
    """
    a0, theta0 = p0
    value, vgh = _make_objective(kernel, rule)
    p, F, n_iter, status = _minimize_damped_newton(value, vgh, _pack(np.asarray(a0, float), np.asarray(theta0, float)), cfg)
    a, theta = _unpack(p)
    return a, theta, float(np.sqrt(max(F, 0.0))), n_iter, status


def init_theta(history: FitHistory, k: int) -> np.ndarray:
    """Initial log-exponents for rank k from the optima of earlier ranks.

    Rank 1 starts at 0; rank 2 brackets the rank-1 optimum at distance 1;
    higher ranks extrapolate both endpoints by the last gap and place
    interior points by the gap ratios observed between the two previous
    ranks (falling back to 1/2 when a ratio is undefined, clamped to
    [0.1, 0.9] when it leaves (0, 1)).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return np.zeros(1)
    if len(history.thetas) < k - 1:
        raise ValueError(f"rank-{k} init needs optima for ranks 1..{k - 1}")
    if k == 2:
        t1 = history.thetas[0][0]
        return np.array([t1 - 1.0, t1 + 1.0])
    prev = history.thetas[k - 2]  # rank k-1 optimum
    prev2 = history.thetas[k - 3]  # rank k-2 optimum
    out = np.empty(k)
    out[0] = prev[0] + (prev[0] - prev2[0])
    out[k - 1] = prev[k - 2] + (prev[k - 2] - prev2[k - 3])
    r_prev = 0.5
    for i in range(2, k):  # interior slots, 1-based index i
        if i == k - 1:
            r = 0.5 if k == 3 else r_prev
        else:
            denom = prev2[i - 2] - prev2[i - 1]
            if denom == 0.0:
                r = 0.5
                history.flags.append(f"rank {k}: undefined interior ratio at i={i}, using 1/2")
            else:
                r = (prev[i - 1] - prev2[i - 1]) / denom
                if not 0.0 < r < 1.0:
                    r = min(max(r, 0.1), 0.9)
        out[i - 1] = r * prev[i - 2] + (1.0 - r) * prev[i - 1]
        r_prev = r
    return out


def _sorted_pair(a: np.ndarray, theta: np.ndarray):
    order = np.argsort(theta)
    return a[order], theta[order]


def _run_rank(theta0, kernel, rule, cfg):
    a0 = nnls_weights(theta0, kernel, rule)
    a, theta, J, _, status = newton_minimize((a0, theta0), kernel, rule, cfg)
    if np.any(a < -1e-12):
        # walked out of the feasible cone: refit weights at the found exponents
        a = nnls_weights(theta, kernel, rule)
        J = objective(a, theta, kernel, rule)
    a = np.maximum(a, 0.0)
    return (*_sorted_pair(a, theta), J, status)


def fit_mixture(kernel: KernelSpec, cfg: FitConfig) -> tuple[SqExpMixture, FitHistory]:
    """Rank-continuation fit: k = 1, 2, ... until J < cfg.tol or k_max.

    Each rank seeds from :func:`init_theta`, refits weights by NNLS and
    polishes by damped Newton.  If a rank ends above the previous rank's
    error (possible when the extrapolated seed lands badly), the rank is
    retried from an embedding of the previous optimum, which cannot be
    worse; the achieved error is therefore non-increasing in k.
    """
    rule = cfg.rule()
    history = FitHistory()
    a = theta = None
    J = np.inf
    for k in range(1, cfg.k_max + 1):
        a_k, theta_k, J_k, _ = _run_rank(init_theta(history, k), kernel, rule, cfg)
        if history.errors and J_k > history.errors[-1] + 1e-12:
            prev = history.thetas[-1]
            gap = prev[-1] - prev[-2] if prev.size > 1 else 2.0
            retry_theta0 = np.append(prev, prev[-1] + gap)
            a_r, theta_r, J_r, _ = _run_rank(retry_theta0, kernel, rule, cfg)
            if J_r < J_k:
                a_k, theta_k, J_k = a_r, theta_r, J_r
            history.flags.append(f"rank {k}: Algorithm-1 seed regressed, used embedding retry")
        a, theta, J = a_k, theta_k, J_k
        history.thetas.append(theta.copy())
        history.errors.append(float(J))
        if J < cfg.tol:
            history.converged = True
            break
    b = np.exp(theta)
    a, b = _merge_coincident(a, b)
    mixture = SqExpMixture(
        a=a,
        b=b,
        kernel=kernel,
        fit_domain_L=cfg.quad[0],
        achieved_error=float(J),
        fit_tol=cfg.tol,
    )
    return mixture, history


def _merge_coincident(a: np.ndarray, b: np.ndarray):
    """Collapse exponent collisions (rel. gap < 1e-12) by summing weights."""
    if b.size < 2:
        return a, b
    keep_a = [a[0]]
    keep_b = [b[0]]
    for ai, bi in zip(a[1:], b[1:]):
        if bi - keep_b[-1] <= 1e-12 * max(abs(bi), abs(keep_b[-1])):
            keep_a[-1] += ai
        else:
            keep_a.append(ai)
            keep_b.append(bi)
    return np.asarray(keep_a), np.asarray(keep_b)


def save_mixture(mixture: SqExpMixture, path) -> None:
    """Write the mixture JSON; field order is fixed, ``b`` ascending."""
    doc = {
        "kernel": mixture.kernel.id,
        "length_scale": mixture.kernel.length_scale,
        "variance": mixture.kernel.variance,
        "L": mixture.fit_domain_L,
        "tol": None if np.isnan(mixture.fit_tol) else mixture.fit_tol,
        "a": [float(v) for v in mixture.a],
        "b": [float(v) for v in mixture.b],
        "achieved_error": mixture.achieved_error,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_mixture(path) -> SqExpMixture:
    with open(path) as fh:
        doc = json.load(fh)
    kernel = KernelSpec(doc["kernel"], doc["length_scale"], doc["variance"])
    return SqExpMixture(
        a=np.asarray(doc["a"], dtype=float),
        b=np.asarray(doc["b"], dtype=float),
        kernel=kernel,
        fit_domain_L=doc["L"],
        achieved_error=doc["achieved_error"],
        fit_tol=float("nan") if doc.get("tol") is None else doc["tol"],
    )
