"""Channels that hand the same quantum payload to M users, in Choi form.

The Choi matrix lives on (output tensor input), output factors first, built
from Kraus operators as sum_m vec(K_m) vec(K_m)†.  apply/adjoint_apply are
einsum contractions against that matrix, so channel composition never
materializes anything larger than the Choi itself.

The zoo: the optimal universal N -> M cloner (input given in symmetric-
subspace coordinates), a constant-output preparation, the cloner followed by
independent single-user depolarizing noise, and a measure-and-prepare
channel.  validate_sdi checks the property they are all meant to share:
invariance under permutations of the M output slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_DIM_CAP,
    DenseOperator,
    _check_cap,
    herm_eigvals,
    permutation_index_map,
    tensor_power,
    validate_state,
)
from .symspace import sym_basis, sym_dim

# Output-support deviation below this counts as "inside the symmetric subspace".
SUPPORT_TOL = 1e-8


@dataclass(frozen=True)
class QuantumChannel:
    """CPTP map described by its Choi matrix on (out tensor in).

    choi factor dims are out_factors + (dim_in,).  For channels whose input
    is handed over in symmetric-subspace coordinates, in_isometry is the
    embedding V of that subspace into the underlying tensor-product space.
    """

    choi: DenseOperator
    dim_in: int
    dim_out: int
    out_factors: tuple[int, ...]
    kind: str = "custom"
    in_isometry: DenseOperator | None = None

    def __post_init__(self):
        if math.prod(self.out_factors) != self.dim_out:
            raise ValueError(
                f"out_factors {self.out_factors} inconsistent with dim_out {self.dim_out}"
            )
        if self.choi.row_dims != self.out_factors + (self.dim_in,):
            raise ValueError("choi factor dims must be out_factors + (dim_in,)")

    def choi_tensor(self) -> np.ndarray:
        """Choi entries reshaped to [out, in, out', in']."""
        return self.choi.entries.reshape(
            self.dim_out, self.dim_in, self.dim_out, self.dim_in
        )


def apply(ch: QuantumChannel, rho: DenseOperator) -> DenseOperator:
    """Channel output for input state rho (in the channel's input coordinates)."""
    if rho.shape != (ch.dim_in, ch.dim_in):
        raise ValueError(
            f"input has shape {rho.shape}, channel expects {(ch.dim_in, ch.dim_in)}"
        )
    out = np.einsum("aibj,ij->ab", ch.choi_tensor(), rho.entries)
    return DenseOperator(out, ch.out_factors)


def adjoint_apply(ch: QuantumChannel, obs: DenseOperator) -> DenseOperator:
    """Heisenberg picture: the observable on the input dual to obs on the output."""
    if obs.shape != (ch.dim_out, ch.dim_out):
        raise ValueError(
            f"observable has shape {obs.shape}, channel output is {ch.dim_out}"
        )
    m = np.einsum("ab,biaj->ij", obs.entries, ch.choi_tensor())
    return DenseOperator(m.T, (ch.dim_in,))


def _choi_from_kraus_stack(k_stack: np.ndarray) -> np.ndarray:
    """Choi matrix sum_m vec(K_m) vec(K_m)† from a stack shaped (m, out, in)."""
    v = k_stack.reshape(k_stack.shape[0], -1)
    return v.T @ v.conj()


def identity_channel(d: int) -> QuantumChannel:
    choi = _choi_from_kraus_stack(np.eye(d)[None, :, :])
    return QuantumChannel(DenseOperator(choi, (d, d)), d, d, (d,), kind="identity")


def universal_cloner(d: int, N: int, M: int,
                     cap: int = DEFAULT_DIM_CAP) -> QuantumChannel:
    """Optimal universal N -> M cloner for d-dimensional systems.

    Input is a state on the symmetric subspace of N copies, in occupation
    coordinates (dim sym_dim(d, N)); output is on M full factors.  The map is
    X -> (s_N/s_M) P_M (V_N X V_N† tensor 1^{M-N}) P_M with P_M the
    symmetrizer, realized through d^{M-N} Kraus operators.
    """
    if d < 1:
        raise ValueError(f"local dimension must be >= 1, got {d}")
    if not 1 <= N <= M:
        raise ValueError(f"need 1 <= N <= M, got N={N}, M={M}")
    s_in = sym_dim(d, N)
    _check_cap(d ** M, cap, f"{M}-user cloner output")
    _check_cap(d ** M * s_in, cap, f"{M}-user cloner Choi matrix")
    v_n = sym_basis(d, N, cap=cap).isometry.entries
    v_m = sym_basis(d, M, cap=cap).isometry.entries
    scale = math.sqrt(sym_dim(d, N) / sym_dim(d, M))
    # columns indexed (i, m): i over sym coords of the input, m over the
    # d^{M-N} extra slots; projecting through V_M keeps everything rank-bounded
    embed = np.kron(v_n, np.eye(d ** (M - N)))
    t = scale * (v_m @ (v_m.conj().T @ embed))
    k_cols = t.reshape(d ** M * s_in, d ** (M - N))
    choi = k_cols @ k_cols.conj().T
    return QuantumChannel(
        DenseOperator(choi, (d,) * M + (s_in,)),
        dim_in=s_in,
        dim_out=d ** M,
        out_factors=(d,) * M,
        kind="universal_cloner",
        in_isometry=sym_basis(d, N, cap=cap).isometry,
    )


def fixed_prep_channel(sigma: DenseOperator, M: int,
                       cap: int = DEFAULT_DIM_CAP) -> QuantumChannel:
    """Discard the input, hand every one of the M users a copy of sigma."""
    if M < 1:
        raise ValueError(f"need M >= 1, got {M}")
    validate_state(sigma, name="prepared state")
    d = sigma.shape[0]
    out = tensor_power(sigma, M, cap=cap)
    _check_cap(out.shape[0] * d, cap, "fixed-prep Choi matrix")
    choi = np.kron(out.entries, np.eye(d))
    return QuantumChannel(
        DenseOperator(choi, (d,) * M + (d,)),
        dim_in=d,
        dim_out=d ** M,
        out_factors=(d,) * M,
        kind="fixed_prep",
    )


def _depolarize_choi_factor(mat: np.ndarray, dims: tuple[int, ...],
                            t: int, p: float) -> np.ndarray:
    """Apply X -> (1-p) X + p (1/d) tensor Tr_t[X] to factor t of a Choi matrix."""
    d = dims[t]
    pre = math.prod(dims[:t])
    post = math.prod(dims[t + 1:])
    x = mat.reshape(pre, d, post, pre, d, post)
    traced = np.einsum("aibAiB->abAB", x)
    repl = np.einsum("abAB,ij->aibAjB", traced, np.eye(d) / d)
    return ((1.0 - p) * x + p * repl).reshape(mat.shape)


def noisy_cloner(d: int, N: int, M: int, p: float,
                 cap: int = DEFAULT_DIM_CAP) -> QuantumChannel:
    """Universal cloner followed by independent depolarizing noise per user.

    For p > 0 the output leaks out of the symmetric subspace while staying
    permutation invariant, which is exactly the regime the general (pair-
    purified) approximation machinery exists for.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing weight must be in [0, 1], got {p}")
    base = universal_cloner(d, N, M, cap=cap)
    dims = base.out_factors + (base.dim_in,)
    mat = base.choi.entries.copy()
    for t in range(M):
        mat = _depolarize_choi_factor(mat, dims, t, p)
    return QuantumChannel(
        DenseOperator(mat, dims),
        dim_in=base.dim_in,
        dim_out=base.dim_out,
        out_factors=base.out_factors,
        kind="noisy_cloner",
        in_isometry=base.in_isometry,
    )


def measure_prepare(povm: list[DenseOperator], preps: list[DenseOperator], M: int,
                    cap: int = DEFAULT_DIM_CAP) -> QuantumChannel:
    """Measure the input with a POVM, hand all M users copies keyed to the outcome."""
    if M < 1:
        raise ValueError(f"need M >= 1, got {M}")
    if len(povm) != len(preps):
        raise ValueError(
            f"got {len(povm)} POVM elements but {len(preps)} prepared states"
        )
    if not povm:
        raise ValueError("POVM must have at least one element")
    dim_in = povm[0].shape[0]
    total = np.zeros((dim_in, dim_in), dtype=complex)
    for idx, e in enumerate(povm):
        if e.shape != (dim_in, dim_in):
            raise ValueError(f"POVM element {idx} has shape {e.shape}")
        w = herm_eigvals(e)
        if w.size and w[-1] < -1e-9:
            raise ValueError(f"POVM element {idx} has negative eigenvalue {w[-1]:.3e}")
        total += e.entries
    if np.max(np.abs(total - np.eye(dim_in))) > 1e-9:
        raise ValueError("POVM elements do not sum to the identity within 1e-9")
    d = preps[0].shape[0]
    for idx, s in enumerate(preps):
        validate_state(s, name=f"prepared state {idx}")
        if s.shape != (d, d):
            raise ValueError(f"prepared state {idx} has shape {s.shape}")
    _check_cap(d ** M * dim_in, cap, "measure-prepare Choi matrix")
    choi = np.zeros((d ** M * dim_in, d ** M * dim_in), dtype=complex)
    for e, s in zip(povm, preps):
        choi += np.kron(tensor_power(s, M, cap=cap).entries, e.entries.T)
    return QuantumChannel(
        DenseOperator(choi, (d,) * M + (dim_in,)),
        dim_in=dim_in,
        dim_out=d ** M,
        out_factors=(d,) * M,
        kind="measure_prepare",
    )


def embed_pure_input(ch: QuantumChannel, phi: DenseOperator) -> DenseOperator:
    """Density matrix, in the channel's input coordinates, for N copies of phi.

    Channels carrying in_isometry take phi^{tensor N} re-expressed in symmetric
    coordinates; all others take phi directly (dim must match dim_in).
    """
    if phi.shape[1] != 1:
        raise ValueError("expected a ket")
    nrm = float(np.linalg.norm(phi.entries))
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"input ket has norm {nrm}, expected 1")
    if ch.in_isometry is None:
        if phi.shape[0] != ch.dim_in:
            raise ValueError(
                f"ket dimension {phi.shape[0]} does not match channel input {ch.dim_in}"
            )
        x = phi.entries[:, 0]
    else:
        n_copies = len(ch.in_isometry.row_dims)
        d = ch.in_isometry.row_dims[0]
        if phi.shape[0] != d:
            raise ValueError(
                f"ket dimension {phi.shape[0]} does not match single-copy dimension {d}"
            )
        u = phi.entries[:, 0]
        full = u
        for _ in range(n_copies - 1):
            full = np.kron(full, u)
        x = ch.in_isometry.entries.conj().T @ full
        x = x / np.linalg.norm(x)  # phi^{tensor N} is already symmetric; scrub roundoff
    return DenseOperator(np.outer(x, x.conj()), (ch.dim_in,))


@dataclass(frozen=True)
class SDIReport:
    """Outcome of validate_sdi.

    passed reflects permutation invariance only; symmetric_support is
    informational and decides which reduction route applies downstream.
    """

    max_permutation_residual: float
    permutation_invariant: bool
    support_residual: float
    symmetric_support: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.permutation_invariant


def _conjugate_choi_rows(choi: np.ndarray, perm, d: int, dim_in: int) -> np.ndarray:
    """(U_perm tensor 1_in) choi (U_perm tensor 1_in)† via index relabeling."""
    dest = permutation_index_map(perm, d)
    rows = (dest[:, None] * dim_in + np.arange(dim_in)[None, :]).ravel()
    out = np.empty_like(choi)
    out[np.ix_(rows, rows)] = choi
    return out


def validate_sdi(ch: QuantumChannel, tol: float = 1e-9) -> SDIReport:
    """Check invariance under permutations of the output users.

    Adjacent transpositions generate the symmetric group, so the residual is
    maximized over conjugations by (t, t+1) swaps at the Choi level.  Also
    reports how far the output support sticks out of the symmetric subspace,
    which decides between the exact symmetric reduction and the purified
    general route.
    """
    if len(set(ch.out_factors)) > 1:
        raise ValueError(
            f"output factors {ch.out_factors} are not identical; "
            "user permutations are undefined"
        )
    d = ch.out_factors[0]
    m_users = len(ch.out_factors)
    c = ch.choi.entries
    resid = 0.0
    for t in range(m_users - 1):
        perm = list(range(m_users))
        perm[t], perm[t + 1] = perm[t + 1], perm[t]
        swapped = _conjugate_choi_rows(c, perm, d, ch.dim_in)
        resid = max(resid, float(np.max(np.abs(swapped - c))))
    v = sym_basis(d, m_users).isometry.entries
    c5 = c.reshape(ch.dim_out, ch.dim_in, ch.dim_out, ch.dim_in)
    left = np.tensordot(v.conj().T, c5, axes=([1], [0]))
    both = np.tensordot(left, v, axes=([2], [0]))  # (s, in, in', s')
    back = np.tensordot(v, both, axes=([1], [0]))  # (out, in, in', s')
    proj = np.tensordot(back, v.conj().T, axes=([3], [0]))  # (out, in, in', out')
    proj = proj.transpose(0, 1, 3, 2)
    support_residual = float(np.max(np.abs(c5 - proj)))
    return SDIReport(
        max_permutation_residual=resid,
        permutation_invariant=resid <= tol,
        support_residual=support_residual,
        symmetric_support=support_residual <= SUPPORT_TOL,
        tol=tol,
    )


# -- serialization -----------------------------------------------------------


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(rows, where: str) -> np.ndarray:
    try:
        arr = np.array([[complex(re, im) for re, im in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{where}: expected nested [re, im] pairs ({exc})") from exc
    if arr.ndim != 2:
        raise ValueError(f"{where}: expected a matrix")
    return arr


@dataclass(frozen=True)
class SDIChannelSpec:
    """Declarative description of one of the channel kinds, JSON round-trippable."""

    kind: str
    d: int
    M: int
    N: int | None = None
    p: float | None = None
    prep: tuple | None = None   # matrices: (sigma,) for fixed_prep, outcome states for measure_prepare
    povm: tuple | None = None

    KINDS = ("universal_cloner", "fixed_prep", "noisy_cloner", "measure_prepare")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown channel kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind in ("universal_cloner", "noisy_cloner") and self.N is None:
            raise ValueError(f"{self.kind} requires N")
        if self.kind == "noisy_cloner" and self.p is None:
            raise ValueError("noisy_cloner requires p")
        if self.kind == "fixed_prep" and (self.prep is None or len(self.prep) != 1):
            raise ValueError("fixed_prep requires exactly one prep matrix")
        if self.kind == "measure_prepare" and (self.prep is None or self.povm is None):
            raise ValueError("measure_prepare requires prep and povm lists")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "N": self.N,
            "M": self.M,
            "p": self.p,
            "prep": None if self.prep is None else [_matrix_to_json(m) for m in self.prep],
            "povm": None if self.povm is None else [_matrix_to_json(m) for m in self.povm],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SDIChannelSpec":
        if not isinstance(data, dict):
            raise ValueError("channel spec must be a JSON object")
        kind = data.get("kind")
        prep = data.get("prep")
        povm = data.get("povm")
        return cls(
            kind=kind,
            d=int(data["d"]),
            M=int(data["M"]),
            N=None if data.get("N") is None else int(data["N"]),
            p=None if data.get("p") is None else float(data["p"]),
            prep=None if prep is None else tuple(
                _matrix_from_json(m, f"prep[{i}]") for i, m in enumerate(prep)
            ),
            povm=None if povm is None else tuple(
                _matrix_from_json(m, f"povm[{i}]") for i, m in enumerate(povm)
            ),
        )

    def build(self, cap: int = DEFAULT_DIM_CAP) -> QuantumChannel:
        if self.kind == "universal_cloner":
            return universal_cloner(self.d, self.N, self.M, cap=cap)
        if self.kind == "noisy_cloner":
            return noisy_cloner(self.d, self.N, self.M, self.p, cap=cap)
        if self.kind == "fixed_prep":
            sigma = DenseOperator(self.prep[0], (self.d,))
            return fixed_prep_channel(sigma, self.M, cap=cap)
        povm = [DenseOperator(e, (e.shape[0],)) for e in
                (np.asarray(m) for m in self.povm)]
        preps = [DenseOperator(np.asarray(m), (self.d,)) for m in self.prep]
        return measure_prepare(povm, preps, self.M, cap=cap)
