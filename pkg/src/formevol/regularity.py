"""Grid-based regularity audits for time-dependent Hamiltonians.

Three executable audits probe the hypotheses under which unitary dynamics
exist for a family ``H(t)`` with a fixed form domain:

* ``check_S1`` -- uniform two-sided comparability of the shifted quadratic
  forms ``A(t) = H(t) + (m + 1) I`` against a reference time, measured as the
  best norm-equivalence constant on the grid (its square bounds the quadratic
  pencil ratios).
* ``check_S2`` -- the sandwiched derivative bound
  ``sup_t |A(t)^{-1/2} dH/dt A(t)^{-1/2}|``, computed redundantly through the
  derivative of the inverse and cross-checked (the two expressions are equal
  operators up to sign).
* ``check_K2`` -- continuity moduli of ``t -> d^n H/dt^n`` in the plus/minus
  operator norm on dyadic separations.  A finite sample cannot prove
  smoothness; the moduli are numerical evidence, reported with explicit
  thresholds, never a proof.

Grid points are independent and may be evaluated in any order; reports are
assembled sorted by time, so results are deterministic regardless of
evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ArgumentError, GridError, NotPositiveDefiniteError, NumericalError
from .forms import hermitian_spectral_norm, hermitize
from .models import TimeDependentHamiltonian

#: Machine scale used by the K2 "modulus is numerically zero" test.
_EPS = float(np.finfo(float).eps)

#: Agreement tolerance between the two derivative-bound formulas.
S2_CONSISTENCY_TOL = 1e-10

#: Default number of uniform audit grid points.
DEFAULT_GRID_POINTS = 257


def uniform_grid(t0, t1, points) -> np.ndarray:
    if points < 2:
        raise GridError(f"need at least 2 grid points, got {points}")
    if not t1 > t0:
        raise GridError(f"empty interval [{t0}, {t1}]")
    return np.linspace(t0, t1, int(points))


def audit_grid(tdh, points=DEFAULT_GRID_POINTS, refine_near=(), levels=5) -> np.ndarray:
    """Uniform audit grid over the span, optionally refined near flagged times.

    For each flagged time, extra points at dyadically shrinking offsets are
    inserted on both sides (clipped to the span).
    """
    t0, t1 = tdh.t_span
    grid = uniform_grid(t0, t1, points)
    if refine_near:
        h = (t1 - t0) / (points - 1)
        extra = []
        for t_star in refine_near:
            for j in range(1, levels + 1):
                for sgn in (-1.0, 1.0):
                    t = t_star + sgn * h / 2.0**j
                    if t0 <= t <= t1:
                        extra.append(t)
        grid = np.unique(np.concatenate([grid, np.asarray(extra)]))
    return grid


def _check_grid(tdh, grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise GridError(f"grid must be a 1-d array with >= 2 points, got shape {grid.shape}")
    if np.any(np.diff(grid) <= 0):
        raise GridError("grid must be strictly increasing")
    t0, t1 = tdh.t_span
    if grid[0] < t0 - 1e-12 or grid[-1] > t1 + 1e-12:
        raise GridError(
            f"grid [{grid[0]}, {grid[-1]}] exceeds the Hamiltonian span [{t0}, {t1}]"
        )
    return grid


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------


def differentiate_form(tdh, t, h_step=None, richardson=True) -> np.ndarray:
    """Central finite difference ``(H(t+h) - H(t-h)) / 2h``, symmetrized.

    One Richardson extrapolation level is applied by default, giving
    fourth-order accuracy for smooth families.  ``t - h`` and ``t + h`` must
    both lie inside the span; steps below ``1e-8 * span`` are rejected as
    underflow.
    """
    t0, t1 = tdh.t_span
    span = t1 - t0
    h = span * 1e-4 if h_step is None else float(h_step)
    if h < 1e-8 * span:
        raise GridError(f"finite-difference step {h:.3e} underflows (span {span:.3e})")
    if t - h < t0 - 1e-15 or t + h > t1 + 1e-15:
        raise GridError(
            f"stencil [{t - h}, {t + h}] leaves the span [{t0}, {t1}]"
        )

    def central(step):
        return (tdh(t + step) - tdh(t - step)) / (2.0 * step)

    D = central(h)
    if richardson:
        D = (4.0 * central(h / 2.0) - D) / 3.0
    return hermitize(D, rtol=np.inf)


def _fd_derivative(tdh, t, h):
    """Second-order derivative estimate valid up to the span boundary."""
    t0, t1 = tdh.t_span
    if t - h >= t0 and t + h <= t1:
        return differentiate_form(tdh, t, h_step=h)
    if t + 2 * h <= t1:  # left edge, forward one-sided
        D = (-3.0 * tdh(t) + 4.0 * tdh(t + h) - tdh(t + 2 * h)) / (2.0 * h)
    elif t - 2 * h >= t0:  # right edge, backward one-sided
        D = (3.0 * tdh(t) - 4.0 * tdh(t - h) + tdh(t - 2 * h)) / (2.0 * h)
    else:
        raise GridError(f"span too short for a finite-difference stencil at t = {t}")
    return hermitize(D, rtol=np.inf)


def _time_derivative(tdh, t, h=None, allow_fd=True):
    D = tdh.derivative(t)
    if D is not None:
        return D
    if not allow_fd:
        raise ArgumentError(
            "analytic derivative unavailable and finite differences disabled"
        )
    span = tdh.t_span[1] - tdh.t_span[0]
    return _fd_derivative(tdh, t, span * 1e-4 if h is None else h)


def _second_time_derivative(tdh, t, h=None, allow_fd=True):
    D2 = tdh.second_derivative(t)
    if D2 is not None:
        return D2
    if not allow_fd:
        raise ArgumentError(
            "analytic second derivative unavailable and finite differences disabled"
        )
    t0, t1 = tdh.t_span
    h = (t1 - t0) * 1e-4 if h is None else h
    if tdh.has_derivative:
        # One difference level on the analytic first derivative.
        tc = min(max(t, t0 + h), t1 - h)
        D2 = (tdh.derivative(tc + h) - tdh.derivative(tc - h)) / (2.0 * h)
    else:
        tc = min(max(t, t0 + h), t1 - h)
        D2 = (tdh(tc + h) - 2.0 * tdh(tc) + tdh(tc - h)) / (h * h)
    return hermitize(D2, rtol=np.inf)


# ---------------------------------------------------------------------------
# S1: uniform comparability against a reference time
# ---------------------------------------------------------------------------


def s1_pencil_profile(tdh, grid, t0=None):
    """Extremal eigenvalues of the pencil ``(A(t), A(t0))`` along the grid."""
    grid = _check_grid(tdh, grid)
    t_ref = tdh.t_span[0] if t0 is None else float(t0)
    A0 = tdh.shifted(t_ref)
    floor = float(np.linalg.eigvalsh(A0)[0])
    if floor <= 0.0:
        raise NotPositiveDefiniteError(floor, context=f"A({t_ref})")
    lo = np.empty(grid.size)
    hi = np.empty(grid.size)
    for j, t in enumerate(grid):
        w = scipy.linalg.eigh(tdh.shifted(t), A0, eigvals_only=True)
        if w[0] <= 0.0:
            raise NotPositiveDefiniteError(w[0], context=f"A({t})")
        lo[j], hi[j] = w[0], w[-1]
    return lo, hi


def check_S1(tdh, grid, t0=None) -> float:
    """Best grid constant ``C`` with ``C^{-1} |v|_{+,t0} <= |v|_{+,t} <= C |v|_{+,t0}``.

    ``C**2`` is then the smallest constant bounding the quadratic-form pencil
    ``(A(t), A(t0))`` two-sidedly on the grid; the reference time defaults to
    the start of the span.
    """
    lo, hi = s1_pencil_profile(tdh, grid, t0)
    return float(np.sqrt(max(hi.max(), 1.0 / lo.min())))


# ---------------------------------------------------------------------------
# S2: sandwiched derivative bound with redundant evaluation
# ---------------------------------------------------------------------------


def s2_profile(tdh, grid, fd_step=None, allow_fd=True):
    """Pointwise derivative bounds computed two independent ways.

    Returns ``(direct, via_inverse)`` where ``direct[j]`` is
    ``|A^{-1/2} Hdot A^{-1/2}|`` at ``grid[j]`` and ``via_inverse[j]`` is
    ``|A^{1/2} B A^{1/2}|`` with ``B = d/dt A^{-1} = -A^{-1} Hdot A^{-1}``.
    The two are equal operators up to sign, so the computed values must agree
    to :data:`S2_CONSISTENCY_TOL`; disagreement raises ``NumericalError``.
    """
    grid = _check_grid(tdh, grid)
    direct = np.empty(grid.size)
    dual = np.empty(grid.size)
    for j, t in enumerate(grid):
        Hdot = _time_derivative(tdh, t, h=fd_step, allow_fd=allow_fd)
        A = tdh.shifted(t)
        w, Q = np.linalg.eigh(A)
        if w[0] <= 0.0:
            raise NotPositiveDefiniteError(w[0], context=f"A({t})")
        inv_sqrt = (Q * (1.0 / np.sqrt(w))) @ Q.conj().T
        S = inv_sqrt @ Hdot @ inv_sqrt
        direct[j] = hermitian_spectral_norm(0.5 * (S + S.conj().T))

        inv = (Q * (1.0 / w)) @ Q.conj().T
        sqrtA = (Q * np.sqrt(w)) @ Q.conj().T
        B = -inv @ Hdot @ inv
        S2 = sqrtA @ B @ sqrtA
        dual[j] = hermitian_spectral_norm(0.5 * (S2 + S2.conj().T))
        if abs(direct[j] - dual[j]) > S2_CONSISTENCY_TOL * max(1.0, direct[j]):
            raise NumericalError(
                f"derivative-bound formulas disagree at t = {t}: "
                f"{direct[j]:.15e} vs {dual[j]:.15e}"
            )
    return direct, dual


def check_S2(tdh, grid, fd_step=None, allow_fd=True) -> float:
    """Supremum over the grid of the sandwiched derivative bound."""
    direct, _ = s2_profile(tdh, grid, fd_step=fd_step, allow_fd=allow_fd)
    return float(direct.max())


# ---------------------------------------------------------------------------
# K2: continuity moduli of the n-th derivative in the +/- operator norm
# ---------------------------------------------------------------------------


def _sandwiched_stack(tdh, grid, order, t0=None, allow_fd=True):
    t_ref = tdh.t_span[0] if t0 is None else float(t0)
    scale0 = tdh.scale_at(t_ref)
    inv_sqrt = scale0.power_matrix(-0.5)
    mats = []
    for t in grid:
        if order == 0:
            V = tdh(t)
        elif order == 1:
            V = _time_derivative(tdh, t, allow_fd=allow_fd)
        elif order == 2:
            V = _second_time_derivative(tdh, t, allow_fd=allow_fd)
        else:
            raise ArgumentError(f"K2 order must be 0, 1 or 2, got {order}")
        S = inv_sqrt @ V @ inv_sqrt
        mats.append(0.5 * (S + S.conj().T))
    return np.stack(mats)


def _pairwise_spectral_distances(W):
    """Upper-triangular matrix of spectral-norm distances between slices."""
    N = W.shape[0]
    dist = np.zeros((N, N))
    pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
    chunk = 2048
    for start in range(0, len(pairs), chunk):
        batch = pairs[start : start + chunk]
        diffs = np.stack([W[i] - W[j] for i, j in batch])
        norms = np.max(np.abs(np.linalg.eigvalsh(diffs)), axis=1)
        for (i, j), d in zip(batch, norms):
            dist[i, j] = d
    return dist


def check_K2(tdh, grid, order=1, t0=None, allow_fd=True):
    """Continuity moduli ``omega(delta)`` of the ``order``-th derivative.

    For each dyadic separation ``delta`` (full grid span halved down to twice
    the mean spacing), ``omega(delta)`` is the maximum of
    ``|V^(n)(t) - V^(n)(t')|`` in the plus/minus operator norm (measured
    against the scale at ``t0``, default the start of the span) over grid
    pairs with ``|t - t'| <= delta``.  Returns ``[(delta, omega), ...]`` with
    ``delta`` descending.  A decreasing trend toward zero is evidence (not
    proof) that the family is ``C^n``.
    """
    grid = _check_grid(tdh, grid)
    if grid.size < 8:
        raise GridError(f"K2 audit needs >= 8 grid points, got {grid.size}")
    W = _sandwiched_stack(tdh, grid, order, t0=t0, allow_fd=allow_fd)
    dist = _pairwise_spectral_distances(W)
    seps = np.abs(grid[None, :] - grid[:, None])

    span = float(grid[-1] - grid[0])
    mean_h = span / (grid.size - 1)
    n_levels = max(1, int(math.floor(math.log2(span / (2.0 * mean_h)))) + 1)
    moduli = []
    upper = np.triu_indices(grid.size, k=1)
    d_flat = dist[upper]
    s_flat = seps[upper]
    for j in range(n_levels):
        delta = span / 2.0**j
        mask = s_flat <= delta * (1.0 + 1e-12)
        omega = float(d_flat[mask].max()) if np.any(mask) else 0.0
        moduli.append((delta, omega))
    return moduli


def k2_verdict(moduli, reference_norm, slope_min=0.9):
    """Decide the smoothness audit from the moduli.

    Passes when the smallest-separation modulus is numerically zero
    (below ``10 * eps * reference_norm``) or when a log-log fit over the
    finest separations has slope at least ``slope_min`` (the modulus decays
    toward zero at a definite rate).  Returns ``(passed, details)``.
    """
    deltas = np.array([d for d, _ in moduli])
    omegas = np.array([w for _, w in moduli])
    zero_floor = 10.0 * _EPS * max(reference_norm, 1.0)
    plateau = float(omegas[-1])
    details = {
        "plateau": plateau,
        "zero_floor": zero_floor,
        "slope": float("nan"),
        "slope_min": slope_min,
    }
    if plateau <= zero_floor:
        return True, details
    tail = min(4, len(moduli))
    d_tail, w_tail = deltas[-tail:], omegas[-tail:]
    positive = w_tail > 0
    if np.count_nonzero(positive) >= 2:
        slope, _ = np.polyfit(np.log(d_tail[positive]), np.log(w_tail[positive]), 1)
        details["slope"] = float(slope)
        if slope >= slope_min:
            return True, details
    return False, details


# ---------------------------------------------------------------------------
# Combined report
# ---------------------------------------------------------------------------


@dataclass
class AssumptionReport:
    """Side-by-side record of the three audits on one grid.

    ``s1_constant`` is the norm-level equivalence constant; its square
    ``s1_operator_constant`` bounds the quadratic pencil, and
    ``s1_constant_unit_shift`` repeats the computation against
    ``A(t0) + I`` (reference norm with an extra ambient term) since the two
    conventions differ by at most a modest factor and both are informative.
    ``verdicts`` maps audit name to a dict with ``pass`` plus the numbers
    the decision was based on.
    """

    grid: np.ndarray
    t0: float
    k2_order: int
    s1_constant: float
    s1_operator_constant: float
    s1_constant_unit_shift: float
    s2_bound: float
    k2_modulus: list
    verdicts: dict
    per_t: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "t0": self.t0,
            "k2_order": self.k2_order,
            "s1_constant": self.s1_constant,
            "s1_operator_constant": self.s1_operator_constant,
            "s1_constant_unit_shift": self.s1_constant_unit_shift,
            "s2_bound": self.s2_bound,
            "k2_modulus": [[d, w] for d, w in self.k2_modulus],
            "verdicts": self.verdicts,
        }


def bridge_check(tdh, grid, t0=None, k2_order=1, slope_min=0.9, allow_fd=True) -> AssumptionReport:
    """Run all three audits and record the implication structure.

    A family whose inner products vary smoothly must also satisfy the
    comparability and derivative bounds; the reverse fails (a bounded but
    discontinuous derivative passes the derivative-bound audit while the
    smoothness audit detects the plateau).  The embedding half of the
    smoothness hypothesis holds automatically here: every shifted form is a
    positive definite matrix on the full coefficient space.  The returned
    report always carries verdicts; nothing raises on a failed audit.
    """
    grid = _check_grid(tdh, grid)
    t_ref = tdh.t_span[0] if t0 is None else float(t0)

    lo, hi = s1_pencil_profile(tdh, grid, t_ref)
    c_norm = float(np.sqrt(max(hi.max(), 1.0 / lo.min())))

    # Same pencil against A(t0) + I: reference quadratic form with an extra
    # ambient-norm term folded in.
    A0u = tdh.shifted(t_ref) + np.eye(tdh.dim)
    hi_u, lo_u = 0.0, np.inf
    for t in grid:
        w = scipy.linalg.eigh(tdh.shifted(t), A0u, eigvals_only=True)
        lo_u, hi_u = min(lo_u, w[0]), max(hi_u, w[-1])
    c_unit = float(np.sqrt(max(hi_u, 1.0 / lo_u)))

    s2_direct, s2_dual = s2_profile(tdh, grid, allow_fd=allow_fd)
    s2_bound = float(s2_direct.max())

    moduli = check_K2(tdh, grid, order=k2_order, t0=t_ref, allow_fd=allow_fd)
    t_scale = tdh.scale_at(t_ref)
    inv_sqrt = t_scale.power_matrix(-0.5)
    ref_norms = []
    for t in (grid[0], 0.5 * (grid[0] + grid[-1]), grid[-1]):
        if k2_order == 0:
            V = tdh(t)
        elif k2_order == 1:
            V = _time_derivative(tdh, t, allow_fd=allow_fd)
        else:
            V = _second_time_derivative(tdh, t, allow_fd=allow_fd)
        S = inv_sqrt @ V @ inv_sqrt
        ref_norms.append(hermitian_spectral_norm(0.5 * (S + S.conj().T)))
    k2_pass, k2_details = k2_verdict(moduli, max(ref_norms), slope_min=slope_min)

    s1_pass = bool(np.isfinite(c_norm))
    s2_pass = bool(np.isfinite(s2_bound))
    verdicts = {
        "S1": {"pass": s1_pass, "constant": c_norm},
        "S2": {"pass": s2_pass, "bound": s2_bound},
        "K2": {"pass": k2_pass, **k2_details},
        # Smoothness passing must force the other two audits to pass.
        "bridge": {"pass": (not k2_pass) or (s1_pass and s2_pass)},
    }

    # Local modulus between grid neighbours, for per-time diagnostics.
    W = _sandwiched_stack(tdh, grid, k2_order, t0=t_ref, allow_fd=allow_fd)
    k2_local = np.zeros(grid.size)
    if grid.size > 1:
        diffs = W[1:] - W[:-1]
        k2_local[1:] = np.max(np.abs(np.linalg.eigvalsh(diffs)), axis=1)

    lambda_min = np.array([float(np.linalg.eigvalsh(tdh(t))[0]) for t in grid])

    return AssumptionReport(
        grid=grid,
        t0=t_ref,
        k2_order=k2_order,
        s1_constant=c_norm,
        s1_operator_constant=c_norm**2,
        s1_constant_unit_shift=c_unit,
        s2_bound=s2_bound,
        k2_modulus=moduli,
        verdicts=verdicts,
        per_t={
            "lambda_min": lambda_min,
            "pencil_min": lo,
            "pencil_max": hi,
            "s2_local": s2_direct,
            "s2_local_alt": s2_dual,
            "k2_local": k2_local,
        },
    )
