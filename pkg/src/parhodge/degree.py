"""Relative degrees: the asymptotic pairing that drives every parabolic-degree
and local-system-degree computation.

Two routes are provided and must agree:

  * relative_degree: numeric limit of t |-> <s . e^{-t sigma}, sigma>, computed
    by pushing the ascending eigenvalue flag of s through e^{t sigma} with
    per-column log scaling and re-orthonormalizing (QR), so no overflow occurs
    even at t = 2^20.
  * relative_degree_filtration: the exact pairing of two weighted flags
    sum a_i b_j m_ij with m_ij the graded intersection dimensions.

Flags are increasing filtrations; weights are listed per graded step in the
same (ascending) order the eigenvalue flag of a Hermitian matrix uses.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .liealg import comm, hs_norm


class NonConvergence(RuntimeError):
    def __init__(self, trace: list[tuple[float, float]]):
        super().__init__(
            f"relative degree did not settle within tolerance after t = {trace[-1][0]:.3g}"
        )
        self.trace = trace


class FlagError(ValueError):
    pass


@dataclass(frozen=True)
class RelativeDegreeResult:
    value: float
    t_trace: tuple[tuple[float, float], ...]
    method: str
    converged: bool


def relative_degree(
    s: np.ndarray,
    sigma: np.ndarray,
    tol: float = 1e-9,
    max_exp: int = 20,
) -> RelativeDegreeResult:
    """Limit of <s . e^{-t sigma}, sigma> for Hermitian s, sigma (trace pairing)."""
    s = np.asarray(s, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    n = s.shape[0]
    scale = (1 + hs_norm(s)) * (1 + hs_norm(sigma))
    for name, m in (("s", s), ("sigma", sigma)):
        if hs_norm(m - m.conj().T) > 1e-10 * scale:
            raise ValueError(f"{name} must be Hermitian")
    if hs_norm(comm(s, sigma)) <= 1e-12 * scale:
        v = float(np.trace(s @ sigma).real)
        return RelativeDegreeResult(value=v, t_trace=((0.0, v),), method="commuting", converged=True)

    lam, v_sig = np.linalg.eigh(sigma)
    d, u_s = np.linalg.eigh(s)  # ascending: columns span the increasing flag of s
    ds = np.diag(d).astype(complex)

    def flow_qr(frame: np.ndarray, dt: float) -> np.ndarray:
        # orthonormal frame spanning the flag prefixes -> same after e^{dt sigma}
        y_all = v_sig.conj().T @ frame
        cols = []
        for j in range(n):
            y = y_all[:, j]
            mags = np.abs(y)
            expo = np.where(mags > 0, dt * lam + np.log(np.maximum(mags, 1e-300)), -np.inf)
            m = np.max(expo)
            cols.append(v_sig @ (y * np.exp(dt * lam - m)))
        q, _ = np.linalg.qr(np.stack(cols, axis=1))
        return q

    # iterated QR sweeps: re-orthonormalize after every step so the flag stays
    # well conditioned, and cap the per-step exponent spread so one sweep never
    # drives the subdominant eigencomponents below machine precision
    spread = float(lam[-1] - lam[0])
    dt_cap = 15.0 / max(spread, 1e-12)
    trace: list[tuple[float, float]] = []
    prev = None
    frame = u_s
    t = 0.0
    dt = min(1.0, dt_cap)
    for _ in range(4096):
        frame = flow_qr(frame, dt)
        t += dt
        val = float(np.trace(frame @ ds @ frame.conj().T @ sigma).real)
        trace.append((t, val))
        if prev is not None and abs(val - prev) < tol:
            return RelativeDegreeResult(
                value=val, t_trace=tuple(trace), method="qr_flow", converged=True
            )
        prev = val
        dt = min(2.0 * dt, dt_cap)
        if t > 2.0**max_exp:
            break
    raise NonConvergence(trace)


# --------------------------------------------------------------------------
# weighted-flag pairing
# --------------------------------------------------------------------------


def _is_exact(mats) -> bool:
    for m in mats:
        for row in m:
            for x in row:
                if not isinstance(x, (Fraction, int)):
                    return False
    return True


def _exact_rank(rows: list[list[Fraction]]) -> int:
    m = [[Fraction(x) for x in row] for row in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    row = 0
    for col in range(cols):
        piv = next((r for r in range(row, len(m)) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        inv = 1 / m[row][col]
        m[row] = [x * inv for x in m[row]]
        for r in range(len(m)):
            if r != row and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[row])]
        rank += 1
        row += 1
        if row == len(m):
            break
    return rank


def _flag_dims(flag, n: int, label: str, exact: bool):
    """Validate nesting and return per-step cumulative dimensions."""
    dims = []
    prev_cols = None
    for j, step in enumerate(flag):
        if exact:
            cols = [list(col) for col in zip(*step)]  # columns as lists
            r = _exact_rank([list(row) for row in step])
            width = len(step[0])
        else:
            arr = np.asarray(step, dtype=complex)
            r = int(np.linalg.matrix_rank(arr, tol=1e-9 * max(1.0, np.linalg.norm(arr))))
            width = arr.shape[1]
        if r != width:
            raise FlagError(f"{label}[{j}] columns are dependent")
        if dims and r <= dims[-1]:
            raise FlagError(f"{label}[{j}] does not strictly increase")
        if prev_cols is not None:
            if _joint_rank(prev_cols, step, exact) != r:
                raise FlagError(f"{label}[{j}] does not contain the previous step")
        dims.append(r)
        prev_cols = step
    if dims[-1] != n:
        raise FlagError(f"{label} must end with the full space")
    return dims


def _joint_rank(a, b, exact: bool) -> int:
    if exact:
        rows_a = [list(r) for r in a]
        rows_b = [list(r) for r in b]
        rows = [ra + rb for ra, rb in zip(rows_a, rows_b)]
        return _exact_rank(rows)
    arr = np.hstack([np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)])
    return int(np.linalg.matrix_rank(arr, tol=1e-9 * max(1.0, np.linalg.norm(arr))))


def _intersection_dim(a, b, exact: bool) -> int:
    if exact:
        wa = len(a[0])
        wb = len(b[0])
    else:
        wa = np.asarray(a).shape[1]
        wb = np.asarray(b).shape[1]
    return wa + wb - _joint_rank(a, b, exact)


def relative_degree_filtration(flag_a, weights_a, flag_b, weights_b):
    """Exact pairing sum_ij a_i b_j m_ij of two weighted complete flags.

    Flags are lists of matrices whose columns span the increasing steps; the
    weights list one value per graded piece, in the same ascending-step order.
    Fraction inputs are processed in exact arithmetic and return a Fraction.
    """
    exact = _is_exact(flag_a) and _is_exact(flag_b)
    if len(flag_a) != len(weights_a) or len(flag_b) != len(weights_b):
        raise FlagError("one weight per flag step is required")
    if exact:
        n = len(flag_a[0])
    else:
        n = np.asarray(flag_a[0]).shape[0]
    _flag_dims(flag_a, n, "flag_a", exact)
    _flag_dims(flag_b, n, "flag_b", exact)

    def inter(i: int, j: int) -> int:
        if i < 0 or j < 0:
            return 0
        a_full = i == len(flag_a) - 1
        b_full = j == len(flag_b) - 1
        if a_full and b_full:
            return n
        if a_full:
            return _dim_of(flag_b[j], exact)
        if b_full:
            return _dim_of(flag_a[i], exact)
        return _intersection_dim(flag_a[i], flag_b[j], exact)

    total: Fraction | float = Fraction(0) if exact else 0.0
    for i, a in enumerate(weights_a):
        for j, b in enumerate(weights_b):
            m_ij = inter(i, j) - inter(i - 1, j) - inter(i, j - 1) + inter(i - 1, j - 1)
            if m_ij:
                total = total + (a * b * m_ij if exact else float(a) * float(b) * m_ij)
    return total


def _dim_of(step, exact: bool) -> int:
    return len(step[0]) if exact else int(np.asarray(step).shape[1])


def parabolic_degree_core(step_degrees, chi_values, local_pairings):
    """pardeg = sum_j chi_j * deg(gr_j) - sum_punctures pairing_i (all exact-friendly)."""
    if len(step_degrees) != len(chi_values):
        raise FlagError("one chi value per reduction step")
    total = sum(c * d for c, d in zip(chi_values, step_degrees))
    for mu in local_pairings:
        total = total - mu
    return total


@dataclass(frozen=True)
class LocalSystemDegree:
    value: float
    slope: float
    per_puncture: tuple[float, ...]


def local_system_degree(beta_list, s: np.ndarray, zeta: np.ndarray | None = None) -> LocalSystemDegree:
    """deg(sigma_s) = -sum_i mu_{beta_i}(s); slope subtracts the central twist <zeta, s>."""
    per = []
    for beta in beta_list:
        res = relative_degree(np.asarray(beta, dtype=complex), np.asarray(s, dtype=complex))
        per.append(res.value)
    value = -float(sum(per))
    slope = value
    if zeta is not None:
        slope -= float(np.trace(np.asarray(zeta, dtype=complex) @ np.asarray(s, dtype=complex)).real)
    return LocalSystemDegree(value=value, slope=slope, per_puncture=tuple(per))
