"""Concrete time-dependent Hamiltonians on a finite Galerkin basis.

The main model is a free particle on a circle of circumference ``2 pi`` with
a point interaction at the origin whose strength varies in time.  In the
orthonormal Fourier basis ``e_k(x) = exp(i k x) / sqrt(2 pi)``, ``|k| <= K``,
the quadratic form of the kinetic term is ``diag(k^2)`` and the boundary term
``alpha(t) conj(phi(0)) psi(0)`` compresses to the rank-one matrix
``alpha(t) / (2 pi)`` times the all-ones matrix, since every basis function
takes the value ``1 / sqrt(2 pi)`` at the origin.  The discrete model is thus
the exact Galerkin compression of the continuum form; nothing is lumped.

Units: hbar = 1, 2 m_particle = 1, circle length ``2 pi``.

Synthetic control families (constant, commuting diagonal, rotating frame)
with closed-form propagators are provided for oracle testing.

Model objects are immutable specifications; their evaluation callables are
pure and safe for concurrent invocation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ArgumentError
from .forms import Semibound, hermitize
from .scales import HilbertScale, build_scale

TWO_PI = 2.0 * math.pi

ALPHA_KINDS = ("constant", "polynomial", "trigonometric", "kink", "rough_c0", "table")

#: Sample count for grid-based extrema of profiles without closed-form bounds.
_PROFILE_SCAN_POINTS = 4097


@dataclass(frozen=True)
class AlphaProfile:
    """Interaction-strength profile ``t -> alpha(t)`` with derivative metadata.

    ``kind`` selects the functional family:

    ``constant``       ``value``
    ``polynomial``     ``coeffs`` (ascending powers)
    ``trigonometric``  ``amplitude * sin(frequency * t + phase) + offset``
    ``kink``           ``amplitude * |t - center| + offset`` (corner at
                       ``center``; the derivative jumps by ``2 * amplitude``)
    ``rough_c0``       ``amplitude * t^2 sin(scale / t)`` (differentiable
                       everywhere with a bounded derivative that has no limit
                       at 0 -- continuously differentiable nowhere near 0)
    ``table``          piecewise-linear through ``(times, values)``; no
                       derivative is offered
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ALPHA_KINDS:
            raise ArgumentError(
                f"unknown alpha profile kind {self.kind!r}; "
                f"expected one of {ALPHA_KINDS}"
            )
        if self.kind == "table":
            ts = np.asarray(self.params.get("times", ()), dtype=float)
            vs = np.asarray(self.params.get("values", ()), dtype=float)
            if ts.size < 2 or ts.shape != vs.shape:
                raise ArgumentError("table profile needs matching times/values, >= 2 points")
            if np.any(np.diff(ts) <= 0):
                raise ArgumentError("table profile times must be sorted and deduplicated")

    # -- evaluation ----------------------------------------------------------

    def value(self, t) -> float:
        k, p = self.kind, self.params
        if k == "constant":
            return float(p.get("value", 0.0))
        if k == "polynomial":
            return float(np.polynomial.polynomial.polyval(t, p["coeffs"]))
        if k == "trigonometric":
            a = p.get("amplitude", 1.0)
            w = p.get("frequency", 1.0)
            ph = p.get("phase", 0.0)
            return float(a * math.sin(w * t + ph) + p.get("offset", 0.0))
        if k == "kink":
            a = p.get("amplitude", 1.0)
            return float(a * abs(t - p["center"]) + p.get("offset", 0.0))
        if k == "rough_c0":
            a = p.get("amplitude", 1.0)
            s = p.get("scale", 1.0)
            if t == 0.0:
                return 0.0
            return float(a * t * t * math.sin(s / t))
        # table
        return float(np.interp(t, p["times"], p["values"]))

    @property
    def has_derivative(self) -> bool:
        return self.kind != "table"

    @property
    def has_second_derivative(self) -> bool:
        return self.kind in ("constant", "polynomial", "trigonometric")

    def derivative(self, t) -> float:
        k, p = self.kind, self.params
        if k == "constant":
            return 0.0
        if k == "polynomial":
            d = np.polynomial.polynomial.polyder(np.asarray(p["coeffs"], dtype=float))
            return float(np.polynomial.polynomial.polyval(t, d))
        if k == "trigonometric":
            a = p.get("amplitude", 1.0)
            w = p.get("frequency", 1.0)
            ph = p.get("phase", 0.0)
            return float(a * w * math.cos(w * t + ph))
        if k == "kink":
            # Bounded a.e. derivative; the corner itself reports 0.
            return float(p.get("amplitude", 1.0) * np.sign(t - p["center"]))
        if k == "rough_c0":
            a = p.get("amplitude", 1.0)
            s = p.get("scale", 1.0)
            if t == 0.0:
                return 0.0
            return float(a * (2.0 * t * math.sin(s / t) - s * math.cos(s / t)))
        raise ArgumentError(f"profile kind {k!r} offers no derivative")

    def second_derivative(self, t) -> float:
        k, p = self.kind, self.params
        if k == "constant":
            return 0.0
        if k == "polynomial":
            c = np.asarray(p["coeffs"], dtype=float)
            d2 = np.polynomial.polynomial.polyder(c, 2)
            return float(np.polynomial.polynomial.polyval(t, d2))
        if k == "trigonometric":
            a = p.get("amplitude", 1.0)
            w = p.get("frequency", 1.0)
            ph = p.get("phase", 0.0)
            return float(-a * w * w * math.sin(w * t + ph))
        raise ArgumentError(f"profile kind {k!r} offers no second derivative")

    # -- extrema over an interval ---------------------------------------------

    def _scan(self, t0, t1, fn):
        ts = np.linspace(t0, t1, _PROFILE_SCAN_POINTS)
        return np.array([fn(t) for t in ts])

    def min_value(self, t0, t1) -> float:
        if self.kind == "constant":
            return self.value(t0)
        if self.kind == "table":
            ts = np.asarray(self.params["times"], dtype=float)
            inside = (ts >= t0) & (ts <= t1)
            candidates = [self.value(t0), self.value(t1)]
            candidates.extend(np.asarray(self.params["values"], dtype=float)[inside])
            return float(min(candidates))
        return float(self._scan(t0, t1, self.value).min())

    def sup_abs(self, t0, t1) -> float:
        if self.kind == "constant":
            return abs(self.value(t0))
        return float(np.abs(self._scan(t0, t1, self.value)).max())

    def sup_abs_derivative(self, t0, t1) -> float:
        if not self.has_derivative:
            raise ArgumentError(f"profile kind {self.kind!r} offers no derivative")
        if self.kind == "constant":
            return 0.0
        return float(np.abs(self._scan(t0, t1, self.derivative)).max())


def alpha_profile(kind, **params) -> AlphaProfile:
    """Build an :class:`AlphaProfile`; see the class docstring for kinds."""
    return AlphaProfile(kind=kind, params=dict(params))


class TimeDependentHamiltonian:
    """A family ``t -> H(t)`` of Hermitian matrices on ``[t0, t1]``.

    ``semibound`` must be uniform: ``lambda_min(H(t)) >= -m`` for all ``t``
    in the span.  Calling the object evaluates ``H(t)`` (checked Hermitian
    and symmetrized); ``derivative`` returns the analytic ``dH/dt`` when one
    was supplied, else ``None``.

    The evaluation callables must be pure; instances carry no mutable state,
    so they are safe for concurrent use.
    """

    def __init__(
        self,
        dim,
        matrix_fn,
        t_span,
        semibound,
        derivative_fn=None,
        second_derivative_fn=None,
        label="",
        source=None,
    ):
        t0, t1 = float(t_span[0]), float(t_span[1])
        if not t1 > t0:
            raise ArgumentError(f"empty time span [{t0}, {t1}]")
        self.dim = int(dim)
        self.t_span = (t0, t1)
        self.semibound = semibound if isinstance(semibound, Semibound) else Semibound(float(semibound))
        self.label = label
        self.source = source
        self._matrix_fn = matrix_fn
        self._derivative_fn = derivative_fn
        self._second_derivative_fn = second_derivative_fn

    def __call__(self, t):
        H = hermitize(self._matrix_fn(t), rtol=1e-12, context=f"H({t})")
        if H.shape != (self.dim, self.dim):
            raise ArgumentError(f"H({t}) has shape {H.shape}, expected {(self.dim, self.dim)}")
        return H

    @property
    def has_derivative(self) -> bool:
        return self._derivative_fn is not None

    @property
    def has_second_derivative(self) -> bool:
        return self._second_derivative_fn is not None

    def derivative(self, t):
        if self._derivative_fn is None:
            return None
        return hermitize(self._derivative_fn(t), rtol=1e-12, context=f"dH/dt({t})")

    def second_derivative(self, t):
        if self._second_derivative_fn is None:
            return None
        return hermitize(self._second_derivative_fn(t), rtol=1e-12, context=f"d2H/dt2({t})")

    def shifted(self, t):
        """The scale operator ``A(t) = H(t) + (m + 1) I`` at time ``t``."""
        return self(t) + (self.semibound.m + 1.0) * np.eye(self.dim)

    def scale_at(self, t) -> HilbertScale:
        return build_scale(self(t), self.semibound, label=f"{self.label}@{t}")

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return (
            f"<TimeDependentHamiltonian{tag} dim={self.dim} "
            f"span={self.t_span} m={self.semibound.m:.6g}>"
        )


# ---------------------------------------------------------------------------
# Circle with a time-dependent point interaction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleDeltaModel:
    """Fourier-Galerkin circle model ``H(t) = diag(k^2) + alpha(t)/(2 pi) * ones``.

    Modes ``k = -K..K`` (dimension ``2K + 1``).  The interaction couples only
    the symmetric sector: combinations ``(e_k - e_{-k})/sqrt(2)`` vanish at
    the origin, stay eigenvectors with eigenvalue ``k^2`` for every strength,
    and decouple exactly.  The symmetric sector reduces to a ``(K+1)``-matrix
    ``diag(0, 1, 4, ...) + alpha/(2 pi) * w w^T`` with
    ``w = (1, sqrt 2, ..., sqrt 2)``.
    """

    K: int
    alpha: AlphaProfile
    T: float

    def __post_init__(self):
        if self.K < 1:
            raise ArgumentError(
                "K = 0 is disallowed: a single-mode model hides the rank-one "
                "structure of the interaction"
            )
        if not self.T > 0:
            raise ArgumentError(f"T must be positive, got {self.T}")

    @property
    def dim(self) -> int:
        return 2 * self.K + 1

    @property
    def mode_numbers(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def matrix(self, t) -> np.ndarray:
        coupling = self.alpha.value(t) / TWO_PI
        H = np.diag(self.mode_numbers.astype(float) ** 2).astype(complex)
        H += coupling * np.ones((self.dim, self.dim), dtype=complex)
        return H

    def derivative_matrix(self, t):
        if not self.alpha.has_derivative:
            return None
        coupling = self.alpha.derivative(t) / TWO_PI
        return coupling * np.ones((self.dim, self.dim), dtype=complex)

    def second_derivative_matrix(self, t):
        if not self.alpha.has_second_derivative:
            return None
        coupling = self.alpha.second_derivative(t) / TWO_PI
        return coupling * np.ones((self.dim, self.dim), dtype=complex)

    # -- symmetry-adapted spectrum --------------------------------------------

    def symmetric_block(self, t) -> np.ndarray:
        """Interaction-coupled sector in the basis ``e_0, (e_k + e_{-k})/sqrt 2``."""
        ks = np.arange(0, self.K + 1, dtype=float)
        w = np.full(self.K + 1, math.sqrt(2.0))
        w[0] = 1.0
        return np.diag(ks**2) + (self.alpha.value(t) / TWO_PI) * np.outer(w, w)

    def antisymmetric_eigenvalues(self) -> np.ndarray:
        """Eigenvalues ``k^2`` of the decoupled sector, exact for every ``t``."""
        return np.arange(1, self.K + 1, dtype=float) ** 2

    def spectrum(self, t) -> np.ndarray:
        sym = np.linalg.eigvalsh(self.symmetric_block(t))
        return np.sort(np.concatenate([sym, self.antisymmetric_eigenvalues()]))

    def secular_residual(self, lam, t, normalized=True) -> float:
        """Residual of ``1 + alpha/(2 pi) * sum_k 1 / (k^2 - lam)`` at ``lam``.

        Valid for eigenvalues away from the unperturbed levels ``k^2``.  With
        ``normalized=True`` the residual is divided by ``1 +
        |alpha|/(2 pi) * sum_k 1/|k^2 - lam|`` so that values are comparable
        across eigenvalues at different distances from the poles.
        """
        a = self.alpha.value(t) / TWO_PI
        ks2 = self.mode_numbers.astype(float) ** 2
        terms = 1.0 / (ks2 - lam)
        raw = 1.0 + a * float(np.sum(terms))
        if not normalized:
            return raw
        denom = 1.0 + abs(a) * float(np.sum(np.abs(terms)))
        return raw / denom

    def uniform_semibound(self) -> Semibound:
        # The interaction enters through a positive rank-one term, so the
        # lowest eigenvalue is monotone in alpha: the minimum over the span
        # sits at the minimal strength.
        a_min = self.alpha.min_value(0.0, self.T)
        frozen = CircleDeltaModel(
            self.K, alpha_profile("constant", value=a_min), self.T
        )
        lam_min = float(np.linalg.eigvalsh(frozen.symmetric_block(0.0))[0])
        return Semibound(m=max(0.0, -lam_min))

    def to_hamiltonian(self) -> TimeDependentHamiltonian:
        deriv = self.derivative_matrix if self.alpha.has_derivative else None
        deriv2 = (
            self.second_derivative_matrix if self.alpha.has_second_derivative else None
        )
        return TimeDependentHamiltonian(
            dim=self.dim,
            matrix_fn=self.matrix,
            t_span=(0.0, self.T),
            semibound=self.uniform_semibound(),
            derivative_fn=deriv,
            second_derivative_fn=deriv2,
            label=f"circle_delta(K={self.K}, alpha={self.alpha.kind})",
            source=self,
        )


def circle_delta_model(K, alpha: AlphaProfile, T) -> TimeDependentHamiltonian:
    """Circle with a point interaction of time-dependent strength ``alpha``."""
    return CircleDeltaModel(K=int(K), alpha=alpha, T=float(T)).to_hamiltonian()


def spectrum(model, t) -> np.ndarray:
    """Sorted eigenvalues of ``H(t)``.

    Circle models use the exact symmetry-adapted block split, which keeps the
    decoupled eigenvalues at ``k^2`` without roundoff from the full solve;
    anything else falls back to a dense Hermitian eigensolve.
    """
    if isinstance(model, CircleDeltaModel):
        return model.spectrum(t)
    if isinstance(model, TimeDependentHamiltonian):
        if isinstance(model.source, CircleDeltaModel):
            return model.source.spectrum(t)
        return np.linalg.eigvalsh(model(t))
    raise ArgumentError(f"cannot compute a spectrum for {type(model).__name__}")


# ---------------------------------------------------------------------------
# Synthetic control families with closed-form propagators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticModel:
    """Control-family descriptor giving access to the exact propagator."""

    kind: str
    params: dict

    def exact_propagator(self, s, t) -> np.ndarray:
        if self.kind == "constant":
            H0 = self.params["matrix"]
            w, Q = np.linalg.eigh(H0)
            return (Q * np.exp(-1j * w * (t - s))) @ Q.conj().T
        if self.kind == "commuting_diagonal":
            offsets = np.asarray(self.params["offsets"], dtype=float)
            rates = np.asarray(self.params["rates"], dtype=float)
            phases = offsets * (t - s) + 0.5 * rates * (t * t - s * s)
            return np.diag(np.exp(-1j * phases))
        if self.kind == "rotating_frame":
            H0 = self.params["matrix"]
            Om = self.params["omega"]
            # In the co-rotating frame the generator is constant, giving
            # U(t, s) = e^{Om t} e^{-(Om + i H0)(t - s)} e^{-Om s}.
            return (
                sla.expm(Om * t)
                @ sla.expm(-(Om + 1j * H0) * (t - s))
                @ sla.expm(-Om * s)
            )
        raise ArgumentError(f"unknown synthetic kind {self.kind!r}")


def _random_hermitian(n, rng, scale=1.0):
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (M + M.conj().T)


def synthetic_family(kind, n, T, params=None) -> TimeDependentHamiltonian:
    """Build a control family with a closed-form propagator.

    ``constant``            ``H(t) = H0`` (``params['matrix']`` or a seeded
                            random Hermitian)
    ``commuting_diagonal``  ``H(t) = diag(offsets + rates * t)``
    ``rotating_frame``      ``H(t) = R(t) H0 R(t)*`` with ``R(t) = exp(Om t)``
                            and ``Om`` skew-Hermitian

    The returned Hamiltonian carries a :class:`SyntheticModel` in ``source``
    whose ``exact_propagator`` serves as an oracle.
    """
    params = dict(params or {})
    n = int(n)
    if n < 2:
        raise ArgumentError(f"synthetic families need n >= 2, got n = {n}")
    T = float(T)

    if kind == "constant":
        if "matrix" in params:
            H0 = hermitize(params["matrix"], context="H0")
        else:
            rng = np.random.default_rng(params.get("seed", 0))
            H0 = _random_hermitian(n, rng)
        params["matrix"] = H0
        model = SyntheticModel("constant", params)
        m = max(0.0, -float(np.linalg.eigvalsh(H0)[0]))
        return TimeDependentHamiltonian(
            n, lambda t: H0, (0.0, T), Semibound(m),
            derivative_fn=lambda t: np.zeros_like(H0),
            second_derivative_fn=lambda t: np.zeros_like(H0),
            label="constant", source=model,
        )

    if kind == "commuting_diagonal":
        offsets = np.asarray(params.get("offsets", np.zeros(n)), dtype=float)
        rates = np.asarray(params.get("rates", np.arange(1, n + 1)), dtype=float)
        if offsets.shape != (n,) or rates.shape != (n,):
            raise ArgumentError("offsets and rates must have length n")
        params["offsets"], params["rates"] = offsets, rates
        model = SyntheticModel("commuting_diagonal", params)
        endpoints = np.concatenate([offsets, offsets + rates * T])
        m = max(0.0, -float(endpoints.min()))
        return TimeDependentHamiltonian(
            n,
            lambda t: np.diag(offsets + rates * t).astype(complex),
            (0.0, T),
            Semibound(m),
            derivative_fn=lambda t: np.diag(rates).astype(complex),
            second_derivative_fn=lambda t: np.zeros((n, n), dtype=complex),
            label="commuting_diagonal",
            source=model,
        )

    if kind == "rotating_frame":
        rng = np.random.default_rng(params.get("seed", 0))
        H0 = hermitize(params["matrix"]) if "matrix" in params else _random_hermitian(n, rng)
        if "omega" in params:
            Om = np.asarray(params["omega"], dtype=complex)
            if np.max(np.abs(Om + Om.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(Om))):
                raise ArgumentError("omega must be skew-Hermitian")
        else:
            Om = 1j * _random_hermitian(n, rng, scale=0.5)
        params["matrix"], params["omega"] = H0, Om
        model = SyntheticModel("rotating_frame", params)

        def Hfun(t):
            R = sla.expm(Om * t)
            return R @ H0 @ R.conj().T

        def Hdot(t):
            H = Hfun(t)
            return Om @ H - H @ Om

        m = max(0.0, -float(np.linalg.eigvalsh(H0)[0]))
        return TimeDependentHamiltonian(
            n, Hfun, (0.0, T), Semibound(m),
            derivative_fn=Hdot, label="rotating_frame", source=model,
        )

    raise ArgumentError(f"unknown synthetic family kind {kind!r}")
