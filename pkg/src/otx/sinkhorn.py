"""
Sinkhorn iterations against an abstract kernel operator.

The solver never looks at kernel entries: anything with ``apply``,
``apply_transpose`` and ``n`` works, which is how the dense oracle, the
separator tree and the approximate baselines plug into the same loop. The
transport plan ``diag(u) K diag(v)`` is never formed; it is queried through
:func:`plan_query` and priced through :func:`transport_cost`.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .measures import check_measure
from .sgfi import integrate, integrate_weighted

UNDERFLOW = 1e-300


class NumericalUnderflowError(ArithmeticError):
    """A kernel product vanished on the support of a marginal."""


class UnsupportedOperationError(TypeError):
    """The kernel operator lacks a required capability."""


class SgfiOperator:
    """Kernel operator backed by a separator tree.

    Parameters
    ----------
    root : SgfiNode
    kernel : Kernel
    """

    symmetric = True

    def __init__(self, root, kernel):
        self.root, self.kernel = root, kernel
        self.n = root.n
        self.epsilon = kernel.epsilon

    def apply(self, x):
        return integrate(self.root, x, self.kernel)

    def apply_transpose(self, x):
        return integrate(self.root, x, self.kernel)

    def apply_cost_weighted(self, x):
        return integrate_weighted(self.root, x, self.kernel)


@dataclass
class SinkhornState:
    """Scalings and bookkeeping of a Sinkhorn run.

    ``marginal_error`` is ``||P 1 - a||_1 + ||P^T 1 - b||_1`` for the final
    scalings.
    """

    a: np.ndarray
    b: np.ndarray
    u: np.ndarray
    v: np.ndarray
    epsilon: float
    iterations: int = 0
    marginal_error: float = np.inf
    converged: bool = False
    tol: float = 1e-7
    operator: object = field(default=None, repr=False)
    wall_time_ms: float = 0.0

    def plan(self):
        return TransportPlanHandle(self.u, self.v, self.operator)

    def summary(self, cost=None):
        return {"cost": cost, "iterations": int(self.iterations),
                "marginal_error": float(self.marginal_error),
                "epsilon": float(self.epsilon), "wall_time_ms": float(self.wall_time_ms)}


def _scale(target, prod, what):
    support = target > 0
    if np.any(prod[support] < UNDERFLOW) or not np.all(np.isfinite(prod[support])):
        raise NumericalUnderflowError(
            f"kernel product {what} vanished on the support of the marginal; "
            "increase epsilon")
    out = np.zeros_like(target)
    out[support] = target[support] / prod[support]
    return out


def sinkhorn_solve(a, b, K, tol=1e-7, max_iters=10_000, epsilon=None):
    """Alternate ``u = a / (K v)`` and ``v = b / (K^T u)`` from ``v = 1``.

    Parameters
    ----------
    a, b : ndarray, shape (n,)
        Source and target measures.
    K : kernel operator
    tol : float
        Stop once the l1 marginal error is at most ``tol``.
    max_iters : int

    Returns
    -------
    SinkhornState
    """
    a, b = check_measure(a), check_measure(b)
    if a.shape != (K.n,) or b.shape != (K.n,):
        raise ValueError("measures must have one entry per vertex")
    eps = epsilon if epsilon is not None else getattr(K, "epsilon", np.nan)
    t0 = time.perf_counter()
    v = np.ones(K.n)
    Kv = K.apply(v)
    state = SinkhornState(a, b, v, v, eps, tol=tol, operator=K)
    for it in range(1, max_iters + 1):
        u = _scale(a, Kv, "K v")
        KTu = K.apply_transpose(u)
        v = _scale(b, KTu, "K^T u")
        Kv = K.apply(v)
        err = np.abs(u * Kv - a).sum() + np.abs(v * KTu - b).sum()
        state.u, state.v, state.iterations, state.marginal_error = u, v, it, float(err)
        if err <= tol:
            state.converged = True
            break
    state.wall_time_ms = 1e3 * (time.perf_counter() - t0)
    return state


@dataclass
class TransportPlanHandle:
    """Implicit plan ``diag(u) K diag(v)``."""

    u: np.ndarray
    v: np.ndarray
    operator: object

    def materialize(self):
        """Dense plan; only for small ``n``."""
        n = len(self.u)
        K = np.column_stack([self.operator.apply(e) for e in np.eye(n)])
        return self.u[:, None] * K * self.v[None, :]


def plan_query(plan, s):
    """``P s``: mass each source sends into the (weighted) target set ``s``."""
    s = np.asarray(s, dtype=np.float64)
    return plan.u * plan.operator.apply(plan.v * s)


def plan_query_transpose(plan, s):
    """``P^T s``: mass each target receives from the source set ``s``."""
    s = np.asarray(s, dtype=np.float64)
    return plan.v * plan.operator.apply_transpose(plan.u * s)


def transport_cost(plan):
    """``<P, D> = u^T (D o K) v``."""
    op = plan.operator
    if not hasattr(op, "apply_cost_weighted"):
        raise UnsupportedOperationError(f"{type(op).__name__} cannot price plans")
    return float(plan.u @ op.apply_cost_weighted(plan.v))
