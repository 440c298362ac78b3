"""Hermitian sesquilinear forms on a finite orthonormal basis.

A form is stored as its coefficient matrix ``G``: with the basis orthonormal
in the ambient Hilbert space, the value on a pair of coefficient vectors is
``h(psi, phi) = psi* G phi`` (anti-linear in the first argument).  In this
setting the operator representing the form coincides with ``G`` itself, which
turns the form/operator correspondence into an explicitly testable identity.

All functions here are pure: inputs are never mutated and returned arrays are
fresh, so values can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    NotHermitianError,
    NotPositiveDefiniteError,
    NumericalError,
    SemiboundError,
)

#: Relative tolerance (against the largest entry) for accepting a matrix as
#: Hermitian.  Inputs within tolerance are symmetrized; anything worse is
#: rejected, since silently symmetrizing badly asymmetric input would mask
#: model bugs upstream.
HERMITICITY_RTOL = 1e-13


def _as_square_matrix(M, name="matrix"):
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ArgumentError(f"{name} must be square, got shape {A.shape}")
    return A


def hermitize(M, rtol=HERMITICITY_RTOL, context=""):
    """Return the Hermitian part of ``M`` after checking the asymmetry.

    Raises :class:`NotHermitianError` if ``max |M - M*|`` exceeds
    ``rtol * max|M|``.
    """
    A = _as_square_matrix(M, context or "matrix")
    asym = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
    scale = np.max(np.abs(A)) if A.size else 0.0
    tol = rtol * max(scale, 1.0)
    if asym > tol:
        raise NotHermitianError(asym, tol, context)
    H = 0.5 * (A + A.conj().T)
    return H


def hermitian_spectral_norm(M):
    """Spectral norm of a Hermitian matrix via its eigenvalues."""
    if np.size(M) == 0:
        return 0.0
    w = np.linalg.eigvalsh(M)
    return float(np.max(np.abs(w)))


class HermitianForm:
    """A Hermitian form ``h(psi, phi) = psi* G phi`` on coefficient space.

    Parameters
    ----------
    G : array_like
        Square coefficient matrix.  Must be Hermitian to within
        ``HERMITICITY_RTOL`` relative to its largest entry; it is
        symmetrized on acceptance and stored read-only.
    label : str
        Free-form tag used in error messages and reports.
    """

    def __init__(self, G, label=""):
        H = hermitize(G, context=label or "form matrix")
        H.setflags(write=False)
        self.G = H
        self.label = label

    @property
    def basis_dim(self) -> int:
        return self.G.shape[0]

    def value(self, psi, phi) -> complex:
        """Evaluate ``h(psi, phi)``, anti-linear in ``psi``."""
        psi = np.asarray(psi, dtype=complex)
        phi = np.asarray(phi, dtype=complex)
        if psi.shape != (self.basis_dim,) or phi.shape != (self.basis_dim,):
            raise ArgumentError(
                f"expected vectors of length {self.basis_dim}, "
                f"got {psi.shape} and {phi.shape}"
            )
        return complex(psi.conj() @ (self.G @ phi))

    def quadratic(self, phi) -> float:
        """Evaluate ``h(phi, phi)``; always real for a Hermitian form."""
        return float(np.real(self.value(phi, phi)))

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"<HermitianForm{tag} dim={self.basis_dim}>"


@dataclass(frozen=True)
class Semibound:
    """Magnitude ``m`` of a spectral lower bound: ``h(phi,phi) >= -m |phi|^2``."""

    m: float

    def is_valid_for(self, form: HermitianForm, tol=1e-10) -> bool:
        lam_min = float(np.linalg.eigvalsh(form.G)[0])
        return lam_min >= -self.m - tol


@dataclass(frozen=True)
class RepresentedOperator:
    """Self-adjoint operator ``T`` with ``h(psi, phi) = <psi, T phi>``."""

    T: np.ndarray
    source_form: HermitianForm

    def expectation(self, psi, phi) -> complex:
        psi = np.asarray(psi, dtype=complex)
        phi = np.asarray(phi, dtype=complex)
        return complex(psi.conj() @ (self.T @ phi))


def represent_form(form) -> RepresentedOperator:
    """Return the operator representing a Hermitian form.

    On an orthonormal basis the representing operator is the form matrix
    itself; the point of this function is to make the correspondence an
    explicit object that downstream code (and tests) can exercise.

    Accepts either a :class:`HermitianForm` or a raw matrix; raw input goes
    through the same Hermiticity gate as the form constructor.
    """
    if not isinstance(form, HermitianForm):
        form = HermitianForm(form)
    T = np.array(form.G, copy=True)
    T.setflags(write=False)
    return RepresentedOperator(T=T, source_form=form)


def semibound_of(form: HermitianForm) -> Semibound:
    """Compute the tight semibound ``m = max(0, -lambda_min(G))``.

    No padding is added: strict positivity, where needed, is obtained later
    by the ``+ (m + 1)`` shift of the scale construction.
    """
    try:
        lam_min = float(np.linalg.eigvalsh(form.G)[0])
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed on form {form.label!r}") from exc
    return Semibound(m=max(0.0, -lam_min))


def graph_norm(form: HermitianForm, m, v) -> float:
    """Graph norm ``sqrt((1 + m) |v|^2 + h(v, v))`` of a semibounded form.

    ``m`` may be a :class:`Semibound` or a plain real number.  For a valid
    semibound the radicand is at least ``|v|^2``; a radicand below ``-1e-12``
    signals an invalid ``m`` and raises, while tiny negative values from
    roundoff are clamped to zero.
    """
    bound = m.m if isinstance(m, Semibound) else float(m)
    v = np.asarray(v, dtype=complex)
    radicand = (1.0 + bound) * float(np.real(np.vdot(v, v))) + form.quadratic(v)
    if radicand < -1e-12:
        raise SemiboundError(
            f"graph-norm radicand {radicand:.3e} is negative: "
            f"m = {bound} is not a semibound for this form"
        )
    return float(np.sqrt(max(radicand, 0.0)))


def form_operator_norm(V, A0) -> float:
    """Operator norm of a Hermitian ``V`` acting from the ``+`` to the ``-`` space.

    With ``|phi|_+^2 = phi* A0 phi`` for a positive definite ``A0``, the norm

        sup |psi* V phi| / (|psi|_+ |phi|_+)

    equals the spectral norm of ``A0^{-1/2} V A0^{-1/2}``, which is what is
    computed here.  The supremum is attained at the extremal eigenvectors of
    the sandwiched matrix, mapped back through ``A0^{-1/2}``.
    """
    V = hermitize(V, context="V")
    A = hermitize(A0, context="A0")
    if V.shape != A.shape:
        raise ArgumentError(f"shape mismatch: V {V.shape} vs A0 {A.shape}")
    w, Q = np.linalg.eigh(A)
    if w[0] <= 0.0:
        raise NotPositiveDefiniteError(w[0], context="A0")
    inv_sqrt = (Q * (1.0 / np.sqrt(w))) @ Q.conj().T
    S = inv_sqrt @ V @ inv_sqrt
    S = 0.5 * (S + S.conj().T)
    return hermitian_spectral_norm(S)
