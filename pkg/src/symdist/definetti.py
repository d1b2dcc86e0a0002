"""Classical approximations to the marginals of symmetrically distributed states.

A state rho on M identical factors that lives in (or is purified into) the
symmetric subspace induces a probability density over pure states,
w(psi) = s_M <psi^M| rho |psi^M>, and the mixture of psi^{tensor k} under
that density approximates rho's k-user marginal.  The exact mixture has a
closed form as a rescaled partial trace against the (M+k)-fold symmetrizer;
Monte Carlo over Haar samples recovers the same object statistically.

States that are permutation invariant without symmetric support go through
a pair purification first: |Phi> = (sqrt(rho) tensor 1)|Omega> regrouped so
each user's system sits next to its ancilla, which is symmetric in the
paired d^2-dimensional factors whenever rho is permutation invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import SUPPORT_TOL, QuantumChannel, adjoint_apply
from .linalg import (
    DEFAULT_DIM_CAP,
    DenseOperator,
    _check_cap,
    partial_trace,
    permute_factors,
    projector,
)
from .symspace import HaarSampler, haar_sample, sym_basis, sym_dim

PERM_INVARIANCE_TOL = 1e-8


@dataclass(frozen=True)
class ApproxReduction:
    """A k-user classical approximation together with how it was obtained."""

    k: int
    tilde_rho_k: DenseOperator
    method: str  # symmetric_exact | general_exact | monte_carlo
    sample_count: int | None = None
    seed: int | None = None
    stderr: np.ndarray | None = None


@dataclass(frozen=True)
class Purification:
    """Pair purification of a permutation-invariant state.

    phi is a ket on M factors of dimension d^2; pair j holds the original
    factor j and its ancilla, in that order, at the listed slot positions of
    the flattened 2M-factor picture.
    """

    phi: DenseOperator
    d: int
    M: int
    pair_slots: tuple[tuple[int, int], ...]


def _uniform_square(rho: DenseOperator, name: str) -> tuple[int, int]:
    if not rho.is_square:
        raise ValueError(f"{name} must be a square operator")
    dims = rho.factor_dims
    if not dims:
        raise ValueError(f"{name} must have at least one factor")
    if len(set(dims)) > 1:
        raise ValueError(f"{name} factors must share one dimension, got {dims}")
    return dims[0], len(dims)


def _unit_ket(psi: DenseOperator, d: int) -> np.ndarray:
    if psi.shape != (d, 1):
        raise ValueError(f"expected a ket of dimension {d}, got shape {psi.shape}")
    u = psi.entries[:, 0]
    nrm = float(np.linalg.norm(u))
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"ket has norm {nrm}, expected 1")
    return u


def _kron_power(u: np.ndarray, n: int) -> np.ndarray:
    out = np.array([1.0 + 0.0j])
    for _ in range(n):
        out = np.kron(out, u)
    return out


def _sym_support_residual(rho: DenseOperator, d: int, m: int) -> float:
    v = sym_basis(d, m).isometry.entries
    coords = v.conj().T @ rho.entries @ v
    proj = v @ coords @ v.conj().T
    return float(np.max(np.abs(rho.entries - proj)))


def definetti_weight(rho_out: DenseOperator, psi: DenseOperator) -> float:
    """Density s_M <psi^M| rho |psi^M> of psi under the induced distribution."""
    d, m = _uniform_square(rho_out, "rho_out")
    u = _kron_power(_unit_ket(psi, d), m)
    w = sym_dim(d, m) * float(np.real(np.vdot(u, rho_out.entries @ u)))
    if w < -1e-9:
        raise ValueError(f"negative weight {w:.3e}; rho_out is not PSD")
    return max(w, 0.0)


def _scalar_reduction(method: str, **extra) -> ApproxReduction:
    one = DenseOperator(np.array([[1.0]]), ())
    return ApproxReduction(0, one, method, **extra)


def approx_reduced_symmetric(rho_out: DenseOperator, k: int,
                             cap: int = DEFAULT_DIM_CAP) -> ApproxReduction:
    """Exact k-user mixture for a state supported in the symmetric subspace.

    Computed as (s_M / s_{M+k}) Tr_{first M}[(rho tensor 1^k) P_{M+k}] via the
    symmetric isometry, so nothing of size d^{M+k} square is ever stored.
    """
    d, m = _uniform_square(rho_out, "rho_out")
    if not 0 <= k <= m:
        raise ValueError(f"need 0 <= k <= M={m}, got k={k}")
    resid = _sym_support_residual(rho_out, d, m)
    if resid > SUPPORT_TOL:
        raise ValueError(
            f"rho_out leaves the symmetric subspace (residual {resid:.3e}); "
            "use approx_reduced_general"
        )
    if k == 0:
        return _scalar_reduction("symmetric_exact")
    _check_cap(d ** (m + k), cap, f"symmetric reduction on {m + k} factors")
    s_big = sym_dim(d, m + k)
    v = sym_basis(d, m + k, cap=cap).isometry.entries.reshape(d ** m, d ** k, s_big)
    w = np.einsum("aA,Abs->abs", rho_out.entries, v)
    r = np.einsum("abs,aBs->bB", w, v.conj())
    mat = (sym_dim(d, m) / s_big) * r
    return ApproxReduction(k, DenseOperator(mat, (d,) * k).hermitize(),
                           "symmetric_exact")


def induced_povm_element(ch: QuantumChannel, psi: DenseOperator) -> DenseOperator:
    """Input-side POVM density at psi: the adjoint image of s_M |psi^M><psi^M|.

    Integrated over Haar measure these resolve the identity on the input,
    so they define the measurement whose outcomes drive a measure-and-prepare
    imitation of the channel.
    """
    if len(set(ch.out_factors)) > 1:
        raise ValueError(f"output factors {ch.out_factors} are not identical")
    d = ch.out_factors[0]
    m = len(ch.out_factors)
    u = _kron_power(_unit_ket(psi, d), m)
    obs = sym_dim(d, m) * np.outer(u, u.conj())
    return adjoint_apply(ch, DenseOperator(obs, ch.out_factors)).hermitize()


def purify_perm_invariant(rho: DenseOperator,
                          tol: float = PERM_INVARIANCE_TOL) -> Purification:
    """Purify with one ancilla per factor, keeping permutation symmetry.

    |Phi> = (sqrt(rho) tensor 1)|Omega| regrouped into M pairs (system_j,
    ancilla_j); permuting the pairs jointly leaves |Phi> invariant whenever
    rho is permutation invariant, so |Phi> lies in the symmetric subspace of
    the d^2-dimensional pair factors.
    """
    d, m = _uniform_square(rho, "rho")
    for t in range(m - 1):
        perm = list(range(m))
        perm[t], perm[t + 1] = perm[t + 1], perm[t]
        swapped = permute_factors(rho, perm, d)
        resid = float(np.max(np.abs(swapped.entries - rho.entries)))
        if resid > tol:
            raise ValueError(
                f"rho is not permutation invariant within {tol} "
                f"(swap {t},{t + 1} residual {resid:.3e})"
            )
    mat = 0.5 * (rho.entries + rho.entries.conj().T)
    vals, vecs = np.linalg.eigh(mat)
    if vals[0] < -1e-9:
        raise ValueError(f"rho has negative eigenvalue {vals[0]:.3e}")
    sq = (vecs * np.sqrt(np.maximum(vals, 0.0))) @ vecs.conj().T
    tensor = sq.reshape((d,) * (2 * m))
    order = [ax for j in range(m) for ax in (j, m + j)]
    phi = tensor.transpose(order).reshape(-1, 1)
    nrm = float(np.linalg.norm(phi))
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"purification norm {nrm} deviates from 1; trace(rho) != 1?")
    phi = phi / nrm
    return Purification(
        phi=DenseOperator(phi, (d * d,) * m, ()),
        d=d,
        M=m,
        pair_slots=tuple((2 * j, 2 * j + 1) for j in range(m)),
    )


def purification_marginal(pur: Purification) -> DenseOperator:
    """Trace the ancilla halves back out; equals the purified state up to roundoff."""
    full = projector(DenseOperator(pur.phi.entries, (pur.d,) * (2 * pur.M), ()))
    return partial_trace(full, [2 * j for j in range(pur.M)])


def approx_reduced_general(rho_out: DenseOperator, k: int,
                           cap: int = DEFAULT_DIM_CAP) -> ApproxReduction:
    """Exact k-user mixture for any permutation-invariant state.

    Runs the symmetric-subspace reduction on the pair purification (local
    dimension d^2), then discards the ancilla half of each of the k pairs.
    The rank-1 structure of the purified state keeps the contraction at the
    size of the symmetric isometry.
    """
    d, m = _uniform_square(rho_out, "rho_out")
    if not 0 <= k <= m:
        raise ValueError(f"need 0 <= k <= M={m}, got k={k}")
    if k == 0:
        return _scalar_reduction("general_exact")
    dd = d * d
    _check_cap(dd ** (m + k), cap, f"purified reduction on {m + k} pair factors")
    pur = purify_perm_invariant(rho_out)
    phi = pur.phi.entries[:, 0]
    s_big = sym_dim(dd, m + k)
    v = sym_basis(dd, m + k, cap=cap).isometry.entries.reshape(dd ** m, dd ** k, s_big)
    g = np.einsum("A,Abs->bs", phi.conj(), v)
    r = (sym_dim(dd, m) / s_big) * (g @ g.conj().T)
    tau_k = DenseOperator(r, (d,) * (2 * k)).hermitize()
    tilde = partial_trace(tau_k, [2 * j for j in range(k)])
    return ApproxReduction(k, tilde, "general_exact")


def mc_approx_reduced(rho_out: DenseOperator, k: int, samples: int,
                      seed: int) -> ApproxReduction:
    """Monte Carlo estimate of the k-user mixture, with componentwise stderr.

    Draws Haar kets, weights psi^{tensor k} projectors by the induced density
    and averages.  Standard errors combine the real and imaginary spreads in
    quadrature.  Same (seed, samples) reproduces the estimate bit-for-bit.
    """
    d, m = _uniform_square(rho_out, "rho_out")
    if not 0 <= k <= m:
        raise ValueError(f"need 0 <= k <= M={m}, got k={k}")
    if samples < 1:
        raise ValueError(f"need at least 1 sample, got {samples}")
    resid = _sym_support_residual(rho_out, d, m)
    if resid > SUPPORT_TOL:
        raise ValueError(
            f"rho_out leaves the symmetric subspace (residual {resid:.3e}); "
            "the sampled mixture only reproduces symmetric-support marginals"
        )
    s_m = sym_dim(d, m)
    side = d ** k
    acc_re = np.zeros((side, side))
    acc_im = np.zeros((side, side))
    acc_re2 = np.zeros((side, side))
    acc_im2 = np.zeros((side, side))
    sampler = HaarSampler(d, seed)
    rho_mat = rho_out.entries
    for _ in range(samples):
        u = haar_sample(sampler).entries[:, 0]
        u_k = _kron_power(u, k)
        u_m = u_k if k == m else np.kron(u_k, _kron_power(u, m - k))
        w = s_m * float(np.real(np.vdot(u_m, rho_mat @ u_m)))
        x = w * np.outer(u_k, u_k.conj())
        acc_re += x.real
        acc_im += x.imag
        acc_re2 += x.real ** 2
        acc_im2 += x.imag ** 2
    mean_re = acc_re / samples
    mean_im = acc_im / samples
    var_re = np.maximum(acc_re2 / samples - mean_re ** 2, 0.0)
    var_im = np.maximum(acc_im2 / samples - mean_im ** 2, 0.0)
    stderr = np.sqrt((var_re + var_im) / samples)
    mean = mean_re + 1j * mean_im
    return ApproxReduction(
        k,
        DenseOperator(mean, (d,) * k),
        "monte_carlo",
        sample_count=samples,
        seed=seed,
        stderr=stderr,
    )
