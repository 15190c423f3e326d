"""End-to-end fidelity of swapped Werner-state chains.

A Werner state ``p |Phi+><Phi+| + (1-p) I/4`` stays Werner under an ideal
Bell-measurement swap followed by depolarizing noise, so a chain of ``L``
links is described by one parameter

    p_L = p0**L * (p_swap * p_mem**2)**(L-1),    F = (1 + 3 p) / 4.

``density_matrix_oracle`` recomputes the same quantity by explicit
4-qubit linear algebra and is independent of the closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import dimension_of

MAX_ORACLE_LINKS = 4


class FidelityError(ValueError):
    pass


def _check_unit(name: str, value: float, *, open_low: bool = False):
    lo_ok = value > 0 if open_low else value >= 0
    if not (lo_ok and value <= 1) or math.isnan(value):
        bound = "(0, 1]" if open_low else "[0, 1]"
        raise FidelityError(f"{name}={value} outside {bound}")


@dataclass(frozen=True)
class WernerParams:
    """Link, swap and memory depolarizing parameters.

    ``p_mem`` is ``exp(-t/T)`` for storage time ``t`` and coherence time ``T``;
    use :meth:`from_times` to build it from those.
    """

    p0: float
    p_swap: float = 1.0
    p_mem: float = 1.0

    def __post_init__(self):
        _check_unit("p0", self.p0)
        _check_unit("p_swap", self.p_swap)
        _check_unit("p_mem", self.p_mem, open_low=True)

    @classmethod
    def from_times(cls, p0: float, p_swap: float, t: float, T: float) -> "WernerParams":
        if t < 0:
            raise FidelityError(f"storage time t={t} must be >= 0")
        if T <= 0:
            raise FidelityError(f"coherence time T={T} must be > 0")
        return cls(p0, p_swap, math.exp(-t / T))


@dataclass(frozen=True)
class FidelityResult:
    L: int
    p_L: float
    F_L: float


def werner_to_fidelity(p: float) -> float:
    return (1 + 3 * p) / 4


def link_fidelity(p0: float) -> float:
    _check_unit("p0", p0)
    return werner_to_fidelity(p0)


def end_to_end(params: WernerParams, L: int) -> FidelityResult:
    """Werner parameter and fidelity after swapping ``L`` links into one."""
    if not isinstance(L, (int, np.integer)) or L < 1:
        raise FidelityError(f"L={L} must be an integer >= 1")
    p_L = params.p0**L * (params.p_swap * params.p_mem**2) ** (L - 1)
    return FidelityResult(int(L), p_L, werner_to_fidelity(p_L))


# --- density-matrix oracle -------------------------------------------------

_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
_I2 = np.eye(2, dtype=complex)
_PAULIS = [
    _I2,
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
# Bell basis |B_j> = (I (x) P_j)|Phi+>; outcome j is undone by P_j on the far qubit
_BELL = [np.kron(_I2, P) @ _PHI_PLUS for P in _PAULIS]


def werner_state(p: float) -> np.ndarray:
    return p * np.outer(_PHI_PLUS, _PHI_PLUS.conj()) + (1 - p) * np.eye(4) / 4


def _depolarize_pair(rho: np.ndarray, p: float) -> np.ndarray:
    return p * rho + (1 - p) * np.trace(rho) * np.eye(4) / 4


def _depolarize_qubit(rho: np.ndarray, p: float, which: int) -> np.ndarray:
    """Single-qubit depolarizing on qubit ``which`` (0 or 1) of a 2-qubit state."""
    r = rho.reshape(2, 2, 2, 2)
    if which == 0:
        reduced = np.einsum("abad->bd", r)
        mixed = np.einsum("ac,bd->abcd", _I2 / 2, reduced)
    else:
        reduced = np.einsum("abcb->ac", r)
        mixed = np.einsum("ac,bd->abcd", reduced, _I2 / 2)
    return p * rho + (1 - p) * mixed.reshape(4, 4)


def _swap(rho_ab: np.ndarray, rho_cd: np.ndarray) -> np.ndarray:
    """Ideal Bell measurement on B, C with Pauli correction on D; returns rho_AD.

    The four outcomes are summed, so the result is the unconditional
    (trace one) corrected state.
    """
    full = np.kron(rho_ab, rho_cd).reshape([2] * 8)  # indices a b c d, a' b' c' d'
    out = np.zeros((4, 4), dtype=complex)
    for bell, P in zip(_BELL, _PAULIS):
        b = bell.reshape(2, 2)  # amplitude <b c|B_j>
        # project qubits B and C onto the Bell vector
        proj = np.einsum("bc,abcdefgh,fg->adeh", b.conj(), full, b)
        proj = proj.reshape(4, 4)
        corr = np.kron(_I2, P)
        out += corr @ proj @ corr.conj().T
    return out


def density_matrix_oracle(params: WernerParams, L: int) -> float:
    """Fidelity with |Phi+> of an explicitly simulated ``L``-link swap chain.

    Links are joined left to right; after every swap the joined pair gets
    two-qubit depolarizing ``p_swap`` and each stored qubit single-qubit
    depolarizing ``p_mem``.
    """
    if not isinstance(L, (int, np.integer)) or not 1 <= L <= MAX_ORACLE_LINKS:
        raise FidelityError(f"oracle supports 1 <= L <= {MAX_ORACLE_LINKS}, got {L}")
    link = werner_state(params.p0)
    rho = link
    for _ in range(L - 1):
        rho = _swap(rho, link)
        rho = _depolarize_pair(rho, params.p_swap)
        rho = _depolarize_qubit(rho, params.p_mem, 0)
        rho = _depolarize_qubit(rho, params.p_mem, 1)
    return float(np.real(_PHI_PLUS.conj() @ rho @ _PHI_PLUS))


def hops_for_network(n: int) -> int:
    """Typical path length ``(log2 n)/2``, rounded half up, at least 1."""
    d = dimension_of(n)
    return max(1, (d + 1) // 2)


def fidelity_vs_network_size(params: WernerParams, n: int) -> FidelityResult:
    return end_to_end(params, hops_for_network(n))


def graphstate_extraction_fidelity(F0: float, measured_count: int) -> float:
    """``F0 ** measured_count``: per-qubit errors compound over every measured vertex."""
    _check_unit("F0", F0, open_low=True)
    if measured_count < 0:
        raise FidelityError(f"measured_count={measured_count} must be >= 0")
    return F0**measured_count
