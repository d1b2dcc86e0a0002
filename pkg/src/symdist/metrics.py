"""Distances, distinguishability, and the closed-form bounds.

Exact bounds use binomial symmetric-subspace dimensions; asymptotic forms are
reported for orientation only and are never valid as hard bounds at finite M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import QuantumChannel, apply, embed_pure_input, validate_sdi
from .definetti import approx_reduced_general, approx_reduced_symmetric
from .linalg import DEFAULT_DIM_CAP, DenseOperator, herm_eigvals, partial_trace
from .symspace import sym_dim

BOUND_SLACK = 1e-9


def trace_distance(rho: DenseOperator, sigma: DenseOperator,
                   tol: float = 1e-9) -> float:
    """Trace norm of rho - sigma (so states are at most 2 apart)."""
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch: {rho.shape} vs {sigma.shape}")
    herm_eigvals(rho, tol=tol)
    herm_eigvals(sigma, tol=tol)
    w = herm_eigvals(rho - sigma, tol=tol)
    return float(np.sum(np.abs(w)))


def helstrom_perr(rho: DenseOperator, sigma: DenseOperator) -> float:
    """Minimal error probability discriminating rho vs sigma at equal priors."""
    return 0.5 - 0.25 * trace_distance(rho, sigma)


def lemma1_bound(d: int, M: int, k: int, asymptotic: bool = False) -> float:
    """Distance bound 4(1 - sqrt(s_{M-k}/s_M)) for symmetric-support states.

    asymptotic=True returns 2(d-1)k/M instead, the large-M simplification.
    """
    if not 0 <= k <= M:
        raise ValueError(f"need 0 <= k <= M={M}, got k={k}")
    if asymptotic:
        return 2.0 * (d - 1) * k / M
    return 4.0 * (1.0 - (sym_dim(d, M - k) / sym_dim(d, M)) ** 0.5)


def general_bound(d: int, M: int, k: int, asymptotic: bool = False) -> float:
    """Same bound through the pair purification: local dimension becomes d^2."""
    if asymptotic:
        if not 0 <= k <= M:
            raise ValueError(f"need 0 <= k <= M={M}, got k={k}")
        return 2.0 * (d * d - 1) * k / M
    return lemma1_bound(d * d, M, k)


def perr_lower_bound(d: int, M: int) -> float:
    """Floor 1/2 - (d-1)/(2M) on distinguishing a single user's two marginals.

    Unclamped: for M < d - 1 this goes negative and is vacuously true.
    """
    if M < 1:
        raise ValueError(f"need M >= 1, got {M}")
    return 0.5 - (d - 1) / (2.0 * M)


def universal_clone_gap(N: int, M: int, d: int) -> float:
    """Closed-form fidelity gap N(d-1)/(M(N+d)) of optimal N -> M cloning."""
    if not 1 <= N <= M:
        raise ValueError(f"need 1 <= N <= M, got N={N}, M={M}")
    if d < 1:
        raise ValueError(f"local dimension must be >= 1, got {d}")
    return N * (d - 1) / (M * (N + d))


@dataclass(frozen=True)
class BoundReport:
    """An observed quantity against its exact bound (plus asymptotic context)."""

    actual: float
    bound: float
    asymptotic_bound: float | None
    satisfied: bool
    params: tuple

    @classmethod
    def compare(cls, actual: float, bound: float,
                asymptotic_bound: float | None, params) -> "BoundReport":
        return cls(actual, bound, asymptotic_bound,
                   actual <= bound + BOUND_SLACK, tuple(params))


def single_user_fidelities(ch: QuantumChannel, phi: DenseOperator,
                           report=None, cap: int = DEFAULT_DIM_CAP
                           ) -> tuple[float, float]:
    """(F_clon, F_tilde): one user's fidelity with phi under the channel itself
    and under its exact classical imitation.

    The channel must pass validate_sdi; `report` skips revalidation when the
    caller already holds one.  For the optimal cloner the two fidelities obey
    0 <= F_clon - F_tilde <= trace_distance <= lemma1_bound; for suboptimal
    channels only the upper half of that chain is a theorem.
    """
    if report is None:
        report = validate_sdi(ch)
    if not report.passed:
        raise ValueError(
            f"channel is not permutation invariant "
            f"(residual {report.max_permutation_residual:.3e})"
        )
    rho_in = embed_pure_input(ch, phi)
    rho_out = apply(ch, rho_in)
    rho_1 = partial_trace(rho_out, [0])
    if report.symmetric_support:
        red = approx_reduced_symmetric(rho_out, 1, cap=cap)
    else:
        red = approx_reduced_general(rho_out, 1, cap=cap)
    u = phi.entries[:, 0]
    f_clon = float(np.real(np.vdot(u, rho_1.entries @ u)))
    f_tilde = float(np.real(np.vdot(u, red.tilde_rho_k.entries @ u)))
    return f_clon, f_tilde
