"""Iterative hard thresholding with the symmetric sparse projection.

The projection step is :func:`reflekt.projection.sparse_project`; when it
returns several nearest points the lexicographically smallest is taken.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, OracleViolationError
from .projection import InvariantSetOracle, brute_force_sparse, sparse_project

DIVERGENCE_LEVEL = 1e12
SUCCESS_TOL = 1e-4
SWEEP_HEADER = ("m", "s", "trials", "success_rate", "mean_rel_err")
TRACE_HEADER = ("k", "objective", "sparsity", "step")


@dataclass(eq=False)
class SensingProblem:
    A: np.ndarray
    b: np.ndarray
    s: int
    B_constraint: InvariantSetOracle | None = None
    x_true: np.ndarray | None = None
    noise_norm: float = 0.0

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        m, n = self.A.shape
        if self.b.shape != (m,):
            raise ValueError("b must have length m")
        if not 0 <= self.s <= n:
            raise ValueError("need 0 <= s <= n")
        if m > n:
            raise ValueError("need m <= n")

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def objective(self, x) -> float:
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)


@dataclass
class SolverTrace:
    iterates: list = field(default_factory=list)  # (k, objective, sparsity, step)
    status: str = "max_iter"

    def rows(self):
        return [dict(zip(TRACE_HEADER, it)) for it in self.iterates]


def generate_problem(n: int, m: int, s: int, seed=0, noise_level=0.0) -> SensingProblem:
    """Gaussian sensing matrix (scaled by 1/sqrt(m)) and a planted s-sparse signal.

    Nonzeros are ``+-U[1, 2]`` on a uniformly random support. With
    ``noise_level > 0`` Gaussian noise of that standard deviation is added to b.
    """
    if not (1 <= m <= n and 0 <= s <= n):
        raise ValueError("need 1 <= m <= n and 0 <= s <= n")
    if noise_level < 0:
        raise ValueError("noise_level must be >= 0")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    x = np.zeros(n)
    support = rng.choice(n, size=s, replace=False)
    x[support] = rng.choice([-1.0, 1.0], size=s) * rng.uniform(1.0, 2.0, size=s)
    b = A @ x
    noise = 0.0
    if noise_level > 0:
        e = noise_level * rng.standard_normal(m)
        b = b + e
        noise = float(np.linalg.norm(e))
    return SensingProblem(A, b, s, None, x, noise)


def spectral_norm_sq(A, iters=100, tol=1e-10) -> float:
    """``||A||_2^2`` by power iteration on ``A^T A`` (fixed start vector)."""
    v = np.random.default_rng(0).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(nw - est) <= tol * nw:
            est = nw
            break
        est = nw
    return float(est)


def iht_solve(p: SensingProblem, step="auto", max_iter=5000, tol=1e-10, x0=None, debug=False):
    """Projected gradient on ``0.5 ||Ax - b||^2`` over ``C_s`` (and B if given).

    Returns ``(x, trace)``. ``debug=True`` cross-checks every projection
    against the exhaustive support oracle (n <= 8, no B).
    """
    if step == "auto":
        L = spectral_norm_sq(p.A)
        step = 1.0 / L if L > 0 else 1.0
    step = float(step)
    if not step > 0:
        raise ValueError("step must be positive")
    A, b, s, B = p.A, p.b, p.s, p.B_constraint
    x = np.zeros(p.n) if x0 is None else np.asarray(x0, dtype=float).copy()
    trace = SolverTrace()
    for k in range(1, max_iter + 1):
        z = x - step * (A.T @ (A @ x - b))
        proj = sparse_project(z, s, B)
        if debug and B is None and p.n <= 8:
            d, pts = brute_force_sparse(z, s)
            got = proj.points
            if abs(d - proj.distance) > 1e-10 or len(pts) != len(got) or not np.allclose(
                np.sort(pts, axis=0), np.sort(got, axis=0), atol=1e-12
            ):
                raise OracleViolationError(f"projection mismatch at iteration {k}")
        x_new = proj.lexmin()
        obj = p.objective(x_new)
        trace.iterates.append((k, obj, int(np.count_nonzero(x_new)), step))
        if not np.isfinite(obj) or obj > DIVERGENCE_LEVEL:
            trace.status = "diverged"
            raise DivergenceError(f"objective {obj:.3g} at iteration {k}")
        done = np.linalg.norm(x_new - x) <= tol
        x = x_new
        if done:
            trace.status = "converged"
            break
    return x, trace


def relative_error(x, x_true) -> float:
    nt = np.linalg.norm(x_true)
    if nt == 0:
        return float(np.linalg.norm(x))
    return float(np.linalg.norm(x - x_true) / nt)


def _trial(args):
    n, m, s, seed = args
    p = generate_problem(n, m, s, seed=np.random.SeedSequence(seed))
    x, _ = iht_solve(p)
    return relative_error(x, p.x_true)


def recovery_sweep(n: int, m_list, s_list, trials: int, seed=0, workers=1):
    """Empirical recovery rate per (m, s) cell; rows are dicts keyed by ``SWEEP_HEADER``.

    Trial t of cell (m, s) uses the seed sequence ``[seed, m, s, t]``, so the
    table does not depend on ``workers``. Cells with s > m are kept.
    """
    if not (1 <= n <= 128 and 1 <= trials <= 100):
        raise ValueError("desk-scale bounds: n <= 128, trials <= 100")
    cells = [(m, s) for m in m_list for s in s_list]
    jobs = [(n, m, s, [seed, m, s, t]) for m, s in cells for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            errs = list(ex.map(_trial, jobs, chunksize=4))
    else:
        errs = [_trial(j) for j in jobs]
    rows = []
    for c, (m, s) in enumerate(cells):
        e = np.array(errs[c * trials:(c + 1) * trials])
        rows.append({"m": m, "s": s, "trials": trials,
                     "success_rate": float(np.mean(e <= SUCCESS_TOL)),
                     "mean_rel_err": float(np.mean(e))})
    return rows


def rows_to_csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


__all__ = [
    "SensingProblem",
    "SolverTrace",
    "generate_problem",
    "iht_solve",
    "recovery_sweep",
    "relative_error",
    "spectral_norm_sq",
    "rows_to_csv",
]
