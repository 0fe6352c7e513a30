"""Named two- and four-qubit states used by the purification protocol.

Four-qubit states are always returned in the order (1A, 2A, 1B, 2B): the two
temporary atoms of node A followed by the two of node B. Pair ``k`` of the
distributed entanglement links atom ``kA`` with atom ``kB``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import (
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    DensityOperator,
    permute_subsystems,
    projector,
)

THRESHOLD = 0.5

# (1A, 1B, 2A, 2B) -> (1A, 2A, 1B, 2B); the permutation is its own inverse.
PAIR_TO_NODE_ORDER = (0, 2, 1, 3)


class ThresholdError(ValueError):
    """Raised when a pair fidelity does not exceed the purification threshold."""


def _check_f(f: float) -> float:
    f = float(f)
    if not (THRESHOLD < f <= 1.0):
        raise ThresholdError(f"fidelity must lie in (0.5, 1], got {f!r}")
    return f


@dataclass(frozen=True)
class BellDiagonalPair:
    """Rank-two pair ``f Phi+ + (1-f) Phi-`` described by its fidelity."""

    f: float

    def __post_init__(self):
        object.__setattr__(self, "f", _check_f(self.f))

    def density(self) -> DensityOperator:
        return rank_two_state(self.f)


@dataclass(frozen=True)
class PermanentState:
    """Permanent-pair state with Bell weight ``F`` and coherence ``G``.

    The operator is ``F Phi+ + (1-F) Phi- + G(|phi+><phi-| + h.c.)``; positivity
    requires ``G**2 <= F (1 - F)``.
    """

    F: float
    G: float = 0.0

    def __post_init__(self):
        F, G = float(self.F), float(self.G)
        if not 0.0 <= F <= 1.0:
            raise ValueError(f"F must lie in [0, 1], got {F!r}")
        if G * G > F * (1.0 - F) + 1e-12:
            raise ValueError(f"|G| = {abs(G):.6g} exceeds sqrt(F(1-F)) = {np.sqrt(F * (1 - F)):.6g}")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "G", G)

    def eigenvalues(self) -> tuple[float, float]:
        r = np.hypot(2 * self.F - 1, 2 * self.G)
        return 0.5 * (1 - r), 0.5 * (1 + r)


def rank_two_state(f: float) -> DensityOperator:
    f = _check_f(f)
    return DensityOperator(f * projector(PHI_PLUS) + (1 - f) * projector(PHI_MINUS), (2, 2))


def pair_product(f: float, fp: float | None = None) -> DensityOperator:
    """Two independent rank-two pairs in node order (1A, 2A, 1B, 2B)."""
    fp = f if fp is None else fp
    m = np.kron(rank_two_state(f).matrix, rank_two_state(fp).matrix)
    return DensityOperator(permute_subsystems(m, PAIR_TO_NODE_ORDER, (2,) * 4), (2,) * 4)


def fused_coherence(f: float) -> float:
    """Coefficient of the cross terms in :func:`fused_state`."""
    return (2 * f - 1) / (2 * (1 - 2 * f + 2 * f * f))


def fused_state(f: float) -> DensityOperator:
    """Four-qubit output of the fusion block, written with intra-node pairings.

    Equal-weight mixture of ``phi-phi-`` and ``psi-psi-`` on (1A,2A),(1B,2B)
    plus the coherence :func:`fused_coherence` between them.
    """
    f = _check_f(f)
    a = np.kron(PHI_MINUS, PHI_MINUS)
    b = np.kron(PSI_MINUS, PSI_MINUS)
    c = fused_coherence(f)
    m = 0.5 * (projector(a) + projector(b)) + c * (np.outer(a, b.conj()) + np.outer(b, a.conj()))
    return DensityOperator(m, (2,) * 4)


def fused_state_appB(f: float) -> DensityOperator:
    """The same fused state written with inter-node pairings (1A,1B),(2A,2B).

    Built in pair order and permuted to node order.
    """
    f = _check_f(f)
    d = 2 - 4 * f + 4 * f * f
    w_plus = f * f / d
    w_minus = (f - 1) ** 2 / d
    pp = np.kron(PHI_PLUS, PHI_PLUS)
    ss = np.kron(PSI_PLUS, PSI_PLUS)
    mm = np.kron(PHI_MINUS, PHI_MINUS)
    tt = np.kron(PSI_MINUS, PSI_MINUS)
    dp = pp - ss
    dm = mm - tt
    m = w_plus * projector(dp) + w_minus * projector(dm)
    return DensityOperator(permute_subsystems(m, PAIR_TO_NODE_ORDER, (2,) * 4), (2,) * 4)


def permanent_state(p: PermanentState) -> DensityOperator:
    m = (
        p.F * projector(PHI_PLUS)
        + (1 - p.F) * projector(PHI_MINUS)
        + p.G * (np.outer(PHI_PLUS, PHI_MINUS) + np.outer(PHI_MINUS, PHI_PLUS))
    )
    return DensityOperator(m, (2, 2))


def ground_pair() -> DensityOperator:
    """Both permanent atoms in |0>."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0
    return DensityOperator(m, (2, 2))


def bell_components(rho) -> dict[str, complex]:
    """Matrix elements of a two-qubit state in the Bell basis.

    Keys are ``"pp"``, ``"mm"``, ``"pm"`` and so on, with ``p``/``m`` for
    ``phi+``/``phi-`` and ``P``/``M`` for ``psi+``/``psi-``.
    """
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    basis = {"p": PHI_PLUS, "m": PHI_MINUS, "P": PSI_PLUS, "M": PSI_MINUS}
    return {a + b: complex(va.conj() @ m @ vb) for a, va in basis.items() for b, vb in basis.items()}


def extract_permanent(rho) -> tuple[float, float]:
    """Return ``(F, G)`` with ``G = Re <phi+|rho|phi->``."""
    c = bell_components(rho)
    return c["pp"].real, c["pm"].real
