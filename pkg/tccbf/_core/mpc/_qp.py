from typing import Tuple, Optional
import logging

import attr

import numpy as np

from tccbf._core.utils._errors import QpInfeasibleError

_FEASIBILITY_TOL = 1e-9


def _as_vector(value) -> Optional[np.ndarray]:
    return None if value is None else np.atleast_1d(np.asarray(value, dtype=float))


@attr.s(frozen=True, eq=False)
class QuadraticProgram:
    """
    Convex QP ``min 1/2 x^T H x + g^T x`` s.t. ``G x >= b`` and ``lb <= x <= ub``.

    Parameters
    ----------
    H
        Positive definite Hessian.
    g
        Linear term.
    G, b
        General inequality rows.
    lb, ub
        Optional box; entries may be infinite.
    x0
        Feasible start. Defaults to the origin.
    working_set
        Rows of ``G`` to try first as active, usually those active at ``x0``.
    """

    H: np.ndarray = attr.ib(converter=lambda v: np.atleast_2d(np.asarray(v, dtype=float)))
    g: np.ndarray = attr.ib(converter=_as_vector)
    G: Optional[np.ndarray] = attr.ib(default=None)
    b: Optional[np.ndarray] = attr.ib(default=None, converter=_as_vector)
    lb: Optional[np.ndarray] = attr.ib(default=None, converter=_as_vector)
    ub: Optional[np.ndarray] = attr.ib(default=None, converter=_as_vector)
    x0: Optional[np.ndarray] = attr.ib(default=None, converter=_as_vector)
    working_set: Tuple[int, ...] = attr.ib(default=(), converter=tuple)

    def __attrs_post_init__(self):
        n = self.g.size
        if self.H.shape != (n, n):
            raise ValueError(f"Expected `H` of shape `{(n, n)}`, found `{self.H.shape}`.")
        if (self.G is None) != (self.b is None):
            raise ValueError("Expected both `G` and `b` or neither of them.")
        if self.G is not None:
            G = np.atleast_2d(np.asarray(self.G, dtype=float)).reshape(-1, n)
            if G.shape[0] != self.b.size:
                raise ValueError(
                    f"Expected `b` to have `{G.shape[0]}` entries, found `{self.b.size}`."
                )
            object.__setattr__(self, "G", G)

    @property
    def n(self) -> int:
        """Number of variables."""
        return self.g.size

    @property
    def n_general(self) -> int:
        """Number of general inequality rows."""
        return 0 if self.G is None else self.G.shape[0]

    def stacked(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Return all constraints as rows of ``C x >= d``.

        Returns
        -------
        :class:`tuple`
            ``(C, d, origin)``; ``origin`` is `0` for general rows, `1` for lower and `2` for
            upper bounds. Infinite bounds are dropped.
        """
        n = self.n
        blocks, rhs, origin = [np.zeros((0, n))], [np.zeros(0)], [np.zeros(0, dtype=int)]
        if self.G is not None:
            blocks.append(self.G)
            rhs.append(self.b)
            origin.append(np.zeros(self.n_general, dtype=int))
        for tag, bound, sign in ((1, self.lb, 1.0), (2, self.ub, -1.0)):
            if bound is None:
                continue
            idx = np.flatnonzero(np.isfinite(bound))
            rows = np.zeros((idx.size, n))
            rows[np.arange(idx.size), idx] = sign
            blocks.append(rows)
            rhs.append(sign * bound[idx])
            origin.append(np.full(idx.size, tag))

        return np.vstack(blocks), np.concatenate(rhs), np.concatenate(origin)


@attr.s(frozen=True, eq=False)
class QpSolution:
    """Primal solution and non-negative multipliers of a :class:`QuadraticProgram`."""

    x: np.ndarray = attr.ib()
    multipliers: np.ndarray = attr.ib()
    lower_multipliers: np.ndarray = attr.ib()
    upper_multipliers: np.ndarray = attr.ib()
    active_set: Tuple[int, ...] = attr.ib()
    iterations: int = attr.ib()
    converged: bool = attr.ib(default=True)


def _solve_eqp(
    H: np.ndarray, grad: np.ndarray, A: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    n, k = H.shape[0], A.shape[0]
    K = np.zeros((n + k, n + k))
    K[:n, :n] = H
    K[:n, n:] = -A.T
    K[n:, :n] = A
    rhs = np.concatenate([-grad, np.zeros(k)])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]

    return sol[:n], sol[n:]


def _independent(A: np.ndarray, row: np.ndarray) -> bool:
    if A.shape[0] == 0:
        return bool(np.any(row))
    if A.shape[0] >= A.shape[1]:
        return False
    return np.linalg.matrix_rank(np.vstack([A, row])) > A.shape[0]


def qp_subproblem_solve(qp: QuadraticProgram, max_iter: Optional[int] = None) -> QpSolution:
    """
    Solve a convex QP with a primal active-set method.

    Parameters
    ----------
    qp
        The problem; its start point must be feasible.
    max_iter
        Maximum number of working-set changes. Defaults to ``10 (n + rows)``.

    Returns
    -------
    :class:`QpSolution`
        The minimizer and its multipliers.

    Raises
    ------
    QpInfeasibleError
        If the start point violates a constraint.
    """
    C, d, origin = qp.stacked()
    n, m = qp.n, C.shape[0]
    x = np.zeros(n) if qp.x0 is None else qp.x0.copy()
    if x.size != n:
        raise ValueError(f"Expected `x0` to have `{n}` entries, found `{x.size}`.")

    slack = C @ x - d
    if m and slack.min() < -_FEASIBILITY_TOL * max(1.0, np.abs(d).max()):
        raise QpInfeasibleError(
            f"QP start point violates constraint `{int(slack.argmin())}` by `{-slack.min():.3g}`."
        )

    working: list = []
    for i in qp.working_set:
        i = int(i)
        if 0 <= i < m and abs(slack[i]) <= _FEASIBILITY_TOL and _independent(C[working], C[i]):
            working.append(i)

    max_iter = 10 * (n + m) + 10 if max_iter is None else max_iter
    lam = np.zeros(0)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = qp.H @ x + qp.g
        p, lam = _solve_eqp(qp.H, grad, C[working])

        if np.abs(p).max(initial=0.0) <= 1e-11 * (1.0 + np.abs(x).max(initial=0.0)):
            if m == 0 or np.all(C @ (x + p) - d >= -_FEASIBILITY_TOL):
                x = x + p
            if not working or lam.min() >= -1e-12:
                converged = True
                break
            working.pop(int(np.argmin(lam)))
            continue

        step, blocking = 1.0, None
        Cp = C @ p
        for i in range(m):
            if i in working or Cp[i] >= -1e-14:
                continue
            alpha = max((d[i] - C[i] @ x) / Cp[i], 0.0)
            if alpha < step:
                step, blocking = alpha, i

        x = x + step * p
        if blocking is not None:
            working.append(blocking)

    if not converged:
        logging.warning(f"Active-set QP stopped after `{it}` iterations without converging")

    multipliers = np.zeros(m)
    if working and lam.size == len(working):
        multipliers[working] = np.maximum(lam, 0.0)

    def pick(tag: int, bound: Optional[np.ndarray]) -> np.ndarray:
        out = np.zeros(n)
        if bound is not None:
            out[np.flatnonzero(np.isfinite(bound))] = multipliers[origin == tag]
        return out

    return QpSolution(
        x=x,
        multipliers=multipliers[origin == 0],
        lower_multipliers=pick(1, qp.lb),
        upper_multipliers=pick(2, qp.ub),
        active_set=tuple(sorted(int(i) for i in working)),
        iterations=it,
        converged=converged,
    )
