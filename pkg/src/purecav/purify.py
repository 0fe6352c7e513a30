"""Purification rounds by explicit six-qubit simulation, plus the closed-form maps.

A round couples each node's two temporary atoms to its permanent atom through
the XY ring gate, then measures the four temporary atoms. The round succeeds
on the outcomes (1A,2A,1B,2B) = (0,1,0,1) or (1,0,1,0); the permanent pair is
kept in the normalised sum of the two accepted branches.

Six-qubit states use the order (1A, 2A, PA, 1B, 2B, PB).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

from . import spinchain
from .qcore import DensityOperator, bell_fidelity, permute_subsystems, product_ket, project
from .states import (
    extract_permanent,
    fused_state,
    ground_pair,
    pair_product,
)

Scheme = Literal["original", "modified"]
SCHEMES = ("original", "modified")

ACCEPTED_OUTCOMES = ((0, 1, 0, 1), (1, 0, 1, 0))
TEMPORARY_QUBITS = (0, 1, 3, 4)

# (1A, 2A, 1B, 2B, PA, PB) -> (1A, 2A, PA, 1B, 2B, PB)
_TO_ROUND_ORDER = (0, 1, 4, 2, 3, 5)


class DegenerateRoundError(RuntimeError):
    """The accepted outcomes have zero probability for this input."""


@dataclass(frozen=True)
class RoundResult:
    post_state: DensityOperator
    success_probability: float
    F_out: float
    G_out: float
    outcome_probabilities: dict = field(default_factory=dict, repr=False, compare=False)


@dataclass(frozen=True)
class FidelitySequence:
    f: float
    values: tuple
    scheme: str
    start: float

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def final(self) -> float:
        return self.values[-1]

    def increments(self) -> np.ndarray:
        return np.diff((self.start,) + tuple(self.values))


@lru_cache(maxsize=64)
def _node_gate(coupling: float, n: int, permanent_site: int) -> np.ndarray:
    """Gate on one node with qubits ordered (temp1, temp2, permanent)."""
    u = spinchain.gate_unitary(spinchain.build_xy(coupling), n)
    sites = [s for s in range(spinchain.SITES) if s != permanent_site] + [permanent_site]
    u = permute_subsystems(u, sites, (2, 2, 2))
    u.setflags(write=False)
    return u


def run_round(
    temp: DensityOperator,
    perm: DensityOperator,
    n: int = 0,
    coupling: float = 1.0,
    permanent_site: int = spinchain.PERMANENT_SITE,
    gate: np.ndarray | None = None,
) -> RoundResult:
    """One round for an arbitrary four-qubit temporary input.

    ``temp`` is over (1A, 2A, 1B, 2B) and ``perm`` over (PA, PB). ``gate``
    replaces the node unitary (qubits ordered temp1, temp2, permanent).
    """
    if temp.dims != (2, 2, 2, 2) or perm.dims != (2, 2):
        raise ValueError("expected a four-qubit temporary state and a two-qubit permanent state")
    rho = permute_subsystems(np.kron(temp.matrix, perm.matrix), _TO_ROUND_ORDER, (2,) * 6)
    u = _node_gate(float(coupling), int(n), int(permanent_site)) if gate is None else np.asarray(gate)
    uu = np.kron(u, u)
    rho = DensityOperator(uu @ rho @ uu.conj().T, (2,) * 6)

    probs = {}
    accepted = np.zeros((4, 4), dtype=complex)
    for outcome in itertools.product((0, 1), repeat=4):
        branch = project(rho, product_ket(outcome), TEMPORARY_QUBITS)
        probs[outcome] = branch.probability
        if outcome in ACCEPTED_OUTCOMES:
            accepted += branch.state.matrix
    p = float(sum(probs[o] for o in ACCEPTED_OUTCOMES))
    if p <= 1e-14:
        raise DegenerateRoundError("accepted outcomes have vanishing probability")
    post = DensityOperator(accepted / np.trace(accepted).real, (2, 2))
    _, G = extract_permanent(post)
    return RoundResult(post, p, bell_fidelity(post), G, probs)


def round_original(f: float, perm: DensityOperator, n: int = 0, coupling: float = 1.0, **kw) -> RoundResult:
    """Round fed by two independent rank-two pairs of fidelity ``f``."""
    return run_round(pair_product(f), perm, n, coupling, **kw)


def round_modified(
    f: float,
    perm: DensityOperator,
    n: int = 0,
    coupling: float = 1.0,
    temp: DensityOperator | None = None,
    **kw,
) -> RoundResult:
    """Round fed by the fused four-qubit state.

    ``temp`` replaces the analytic fused state, e.g. with a simulated fusion output.
    """
    temp = fused_state(f) if temp is None else temp
    return run_round(temp, perm, n, coupling, **kw)


def closed_form_original(f: float, fp: float) -> float:
    num = fp - 16 * (fp - 2) * f + 32 * (3 * fp - 1) * f * f
    den = 81 + 32 * f * f - 80 * fp + 16 * (10 * fp - 7) * f
    return num / den


def closed_form_modified(f: float, fp: float) -> float:
    num = (25 - 50 * f + 194 * f * f) * fp
    den = 169 + 194 * f * f - 144 * fp + (288 * fp - 338) * f
    return num / den


CLOSED_FORMS = {"original": closed_form_original, "modified": closed_form_modified}


def init_closed_form(f: float) -> tuple[float, float]:
    """``(F0, G0)`` after the initialisation round from |00>."""
    den = 82 - 64 * f + 64 * f * f
    return (1 + 48 * f + 32 * f * f) / den, (9 - 32 * f + 32 * f * f) / den


def iterate(scheme: Scheme, f: float, rounds: int, start: float | Literal["init"] | None = None) -> FidelitySequence:
    """Pump the permanent pair ``rounds`` times with fresh pairs of fidelity ``f``.

    The permanent pair starts at ``f`` unless ``start`` is a number, or
    ``"init"`` for the output of the initialisation round.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    step = CLOSED_FORMS[scheme]
    if start is None:
        x = f
    elif start == "init":
        x = init_closed_form(f)[0]
    else:
        x = float(start)
    first = x
    values = []
    for _ in range(rounds):
        x = step(f, x)
        values.append(x)
    return FidelitySequence(f, tuple(values), scheme, first)


def fixed_point_original(f: float) -> float:
    num = f * (70859 - 377904 * f + 950112 * f ** 2 - 1368064 * f ** 3
               + 1278976 * f ** 4 - 671744 * f ** 5 + 294912 * f ** 6)
    den = (177147 - 1051072 * f + 2792896 * f ** 2 - 4204544 * f ** 3
           + 3904512 * f ** 4 - 2162688 * f ** 5 + 720896 * f ** 6)
    return num / den


def fixed_point_modified(f: float) -> float:
    num = f * (25 - 50 * f + 194 * f * f) ** 3
    den = (4826809 - 33772038 * f + 103411314 * f ** 2 - 179097440 * f ** 3
           + 189095940 * f ** 4 - 119456664 * f ** 5 + 39818888 * f ** 6)
    return num / den


def fhat(scheme: Scheme, f: float, n: int) -> float:
    """Fidelity gain ``F_n - f`` after ``n`` rounds started at ``f``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 0.0
    return iterate(scheme, f, n).final - f


def init_round(f: float, scheme: Scheme = "modified", n: int = 0, coupling: float = 1.0) -> RoundResult:
    """Entangle permanent atoms prepared in |00> using two separate pairs.

    The fusion step is switched off for this round, so both schemes receive the
    same temporary input.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    return run_round(pair_product(f), ground_pair(), n, coupling)


def init_sequence(f: float, rounds: int, n: int = 0, coupling: float = 1.0) -> list[RoundResult]:
    """Initialisation round followed by ``rounds`` modified rounds, all simulated."""
    results = [init_round(f, "modified", n, coupling)]
    temp = fused_state(f)
    for _ in range(rounds):
        results.append(run_round(temp, results[-1].post_state, n, coupling))
    return results


def init_then_iterate(f: float, rounds: int, n: int = 0) -> tuple[float, float]:
    last = init_sequence(f, rounds, n)[-1]
    return last.F_out, last.G_out


_D_COEFFS = (195493577, 1442887766, 4716352898, 8883640864, 10517241220,
             7944708952, 3738576328, 934577152, 233644288)


def _d_poly(f: float) -> float:
    return 2 * sum((-1) ** i * d * f ** i for i, d in enumerate(_D_COEFFS))


def init_F3_closed_form(f: float) -> float:
    return (1 + 48 * f + 32 * f * f) * (25 - 50 * f + 194 * f * f) ** 3 / _d_poly(f)


def init_G3_closed_form(f: float) -> float:
    return 274625 * (9 - 32 * f + 32 * f * f) * (1 - 2 * f + 2 * f * f) ** 3 / _d_poly(f)

