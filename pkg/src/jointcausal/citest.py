"""Conditional-independence tests used by the PC skeleton search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InsufficientSamples, SingularConditioning
from .model import Dataset, DiscreteDataset

# condition number above which a conditioning block counts as singular
SINGULAR_COND = 1e12


@dataclass(frozen=True)
class CiDecision:
    independent: bool
    p_value: float
    statistic: float
    flag: str | None = None


def _as_matrix(d) -> np.ndarray:
    return d.data if isinstance(d, Dataset) else np.asarray(d, dtype=float)


def _check_args(x: int, y: int, s: Sequence[int], n_frames: int) -> None:
    if x == y:
        raise ValueError("x and y must differ")
    if x in s or y in s:
        raise ValueError("x and y must not be in the conditioning set")
    if len(s) > n_frames - 4:
        raise InsufficientSamples(f"|S|={len(s)} too large for {n_frames} frames")


def partial_correlation(x: int, y: int, s: Sequence[int], d, method: str = "precision") -> float:
    """Sample partial correlation of columns x and y given columns s.

    ``method="precision"`` inverts the correlation submatrix;
    ``method="residual"`` correlates least-squares residuals. Both raise
    SingularConditioning if the conditioning block is rank-deficient.
    """
    data = _as_matrix(d)
    s = list(s)
    _check_args(x, y, s, data.shape[0])
    if s:
        cs = np.corrcoef(data[:, s], rowvar=False) if len(s) > 1 else np.ones((1, 1))
        if not np.all(np.isfinite(cs)) or np.linalg.cond(np.atleast_2d(cs)) > SINGULAR_COND:
            raise SingularConditioning(f"conditioning set {s} is rank-deficient")
    x, y = min(x, y), max(x, y)  # exact symmetry in the arguments
    if method == "precision":
        c = np.corrcoef(data[:, [x, y, *s]], rowvar=False)
        return _pcorr_from_corr(c, 0, 1, list(range(2, 2 + len(s))))
    if method == "residual":
        z = np.column_stack([np.ones(data.shape[0]), data[:, s]])
        rx = data[:, x] - z @ np.linalg.lstsq(z, data[:, x], rcond=None)[0]
        ry = data[:, y] - z @ np.linalg.lstsq(z, data[:, y], rcond=None)[0]
        den = math.sqrt(float(rx @ rx) * float(ry @ ry))
        return float(np.clip(rx @ ry / den, -1.0, 1.0)) if den > 0 else 0.0
    raise ValueError(f"unknown method {method!r}")


def _pcorr_from_corr(c: np.ndarray, a: int, b: int, s: list[int]) -> float:
    if not s:
        return float(np.clip(c[a, b], -1.0, 1.0))
    idx = [a, b, *s]
    p = np.linalg.inv(c[np.ix_(idx, idx)])
    r = -p[0, 1] / math.sqrt(p[0, 0] * p[1, 1])
    return float(np.clip(r, -1.0, 1.0))


def conditional_correlation_block(c: np.ndarray, a: Sequence[int], s: Sequence[int]) -> np.ndarray:
    """Partial correlations among the variables ``a`` given ``s``.

    Entry (u, v) is the partial correlation of a[u], a[v] given s only (not
    given the rest of ``a``), via the Schur complement of the correlation
    matrix ``c``.
    """
    a, s = list(a), list(s)
    caa = c[np.ix_(a, a)]
    if s:
        css = c[np.ix_(s, s)]
        if np.linalg.cond(css) > SINGULAR_COND:
            raise SingularConditioning(f"conditioning set {s} is rank-deficient")
        cas = c[np.ix_(a, s)]
        caa = caa - cas @ np.linalg.solve(css, cas.T)
    dvec = np.sqrt(np.clip(np.diag(caa), 1e-300, None))
    return np.clip(caa / np.outer(dvec, dvec), -1.0, 1.0)


def fisher_z_test(r: float, n: int, k: int, alpha: float) -> CiDecision:
    if abs(r) > 1:
        raise ValueError(f"|r| must be <= 1, got {r}")
    dof = n - k - 3
    if dof < 1:
        raise InsufficientSamples(f"n - k - 3 = {dof} < 1")
    if abs(r) == 1.0:
        return CiDecision(False, 0.0, math.inf)
    statistic = math.sqrt(dof) * abs(math.atanh(r))
    p = float(2.0 * stats.norm.sf(statistic))
    return CiDecision(statistic < stats.norm.ppf(1.0 - alpha / 2.0), min(1.0, p), statistic)


def conditional_mutual_information(x: int, y: int, s: Sequence[int], d: DiscreteDataset) -> tuple[float, int, int]:
    """Plug-in I(X;Y|S) in nats, plus degrees of freedom and sample count."""
    st = d.states
    n = st.shape[0]
    xs, ys = st[:, x], st[:, y]
    _, x_codes = np.unique(xs, return_inverse=True)
    _, y_codes = np.unique(ys, return_inverse=True)
    nx_, ny_ = x_codes.max() + 1, y_codes.max() + 1
    if s:
        _, s_codes = np.unique(st[:, list(s)], axis=0, return_inverse=True)
        s_codes = s_codes.ravel()
        ns = s_codes.max() + 1
    else:
        s_codes = np.zeros(n, dtype=np.int64)
        ns = 1
    counts = np.zeros((ns, nx_, ny_))
    np.add.at(counts, (s_codes, x_codes, y_codes), 1.0)
    n_s = counts.sum(axis=(1, 2), keepdims=True)
    n_xs = counts.sum(axis=2, keepdims=True)
    n_ys = counts.sum(axis=1, keepdims=True)
    mask = counts > 0
    ratio = counts * n_s / (n_xs * n_ys)
    cmi = float(np.sum(counts[mask] * np.log(ratio[mask])) / n)
    n_states_s = int(np.prod([len(np.unique(st[:, v])) for v in s])) if s else 1
    dof = (nx_ - 1) * (ny_ - 1) * n_states_s
    return max(cmi, 0.0), int(dof), n


def conditional_mi_test(x: int, y: int, s: Sequence[int], d: DiscreteDataset, alpha: float) -> CiDecision:
    """G-test of X independent of Y given S on discrete states."""
    cmi, dof, n = conditional_mutual_information(x, y, list(s), d)
    g = 2.0 * n * cmi
    if dof <= 0:
        return CiDecision(True, 1.0, g, "zero degrees of freedom")
    if n < 5 * dof:
        return CiDecision(True, 1.0, g, "InsufficientSamples: low power")
    p = float(stats.chi2.sf(g, dof))
    return CiDecision(p > alpha, p, g)
