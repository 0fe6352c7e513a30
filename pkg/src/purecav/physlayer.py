"""Full three-level atom-cavity models and the effective qubit Hamiltonians they reduce to.

Atomic levels are indexed ``0, 1, e -> 0, 1, 2``; operators act on the atoms
in order followed by one cavity mode. Both full models are written in an
interaction picture where the only explicit time dependence is a single
frequency ``w`` multiplying the raising part ``X`` of the atom-light coupling:

    H(t) = C + exp(-i w t) X + exp(i w t) X^dag

Since ``X`` raises the number ``N_e`` of excited atoms by one, the change of
frame ``psi(t) = exp(-i t w N_e) phi(t)`` makes ``phi`` evolve under the static
operator ``C + X + X^dag - w N_e``. The exact evolution therefore reduces to one
eigendecomposition, and the frame only adds phases to states with an excited
atom.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np
from scipy.integrate import solve_ivp

from . import fusion, spinchain
from .qcore import SIGMA_X, expm_hermitian, trace_distance
from .states import BellDiagonalPair

STRONG_DRIVE_RATIO = 10.0
DISPERSIVE_RATIO = 10.0
TAIL_TOL = 1e-6


class NumericalInstabilityError(RuntimeError):
    """Time-dependent integration failed or lost normalisation."""


class ParameterError(ValueError):
    """Drive parameters violate the assumptions of a model."""


@dataclass(frozen=True)
class DriveParams:
    """Couplings and detunings in rad/s.

    Only ``g``, ``omega`` and the detunings enter the dynamics. Absolute level
    and field frequencies are optional; when given they are checked for
    consistency with the detunings.
    """

    g: float
    omega: float
    delta: float
    delta_l: float | None = None
    delta_c: float | None = None
    omega_0: float | None = None
    omega_1: float | None = None
    omega_e: float | None = None
    omega_l: float | None = None
    omega_p: float | None = None
    omega_c: float | None = None

    @classmethod
    def appendix_a(cls, g: float = 1.0, omega: float = 20.0, delta: float = 200.0) -> "DriveParams":
        return cls(g, omega, delta, delta_l=-delta, delta_c=-delta)

    @classmethod
    def appendix_c(cls, g: float = 1.0, omega: float = 1.0, delta_l: float = 20.0, delta: float = 10.0) -> "DriveParams":
        return cls(g, omega, delta, delta_l=delta_l, delta_c=delta_l - delta)

    def scaled(self, m: float) -> "DriveParams":
        """Multiply every detuning by ``m``; couplings are unchanged."""
        def s(x):
            return None if x is None else m * x
        return replace(self, delta=m * self.delta, delta_l=s(self.delta_l), delta_c=s(self.delta_c))

    def _implied(self, upper, lower, field_freq):
        if None in (upper, lower, field_freq):
            return None
        return (upper - lower) - field_freq


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def _check_common(p: DriveParams) -> None:
    for name in ("g", "omega"):
        if getattr(p, name) < 0:
            raise ParameterError(f"{name} must be non-negative")
    dl = p._implied(p.omega_e, p.omega_1, p.omega_l)
    if dl is not None and p.delta_l is not None and not _close(dl, p.delta_l):
        raise ParameterError("delta_l is inconsistent with the level and laser frequencies")
    dc = p._implied(p.omega_e, p.omega_0, p.omega_c)
    if dc is not None and p.delta_c is not None and not _close(dc, p.delta_c):
        raise ParameterError("delta_c is inconsistent with the level and cavity frequencies")


def check_appendix_a(p: DriveParams) -> None:
    _check_common(p)
    if not p.delta > 0:
        raise ParameterError("delta must be positive")
    if p.omega_c is not None and p.omega_p is not None and not _close(p.omega_c, p.omega_p):
        raise ParameterError("the cavity and second laser must be resonant (omega_c = omega_p)")
    for name in ("delta_l", "delta_c"):
        v = getattr(p, name)
        if v is not None and not _close(v, -p.delta):
            raise ParameterError(f"{name} must equal -delta for this model")


def check_appendix_c(p: DriveParams) -> None:
    _check_common(p)
    if p.delta_l is None or not p.delta_l > 0:
        raise ParameterError("delta_l must be given and positive")
    if not p.delta > 0:
        raise ParameterError("delta = delta_l - delta_c must be positive")
    if p.delta_c is not None and not _close(p.delta, p.delta_l - p.delta_c):
        raise ParameterError("delta must equal delta_l - delta_c")


def strong_driving(p: DriveParams) -> bool:
    return p.omega >= STRONG_DRIVE_RATIO * p.g


def dispersive(p: DriveParams) -> bool:
    return p.delta_l is not None and p.delta_l >= DISPERSIVE_RATIO * max(p.g, p.omega)


def _ket3(i: int) -> np.ndarray:
    v = np.zeros(3)
    v[i] = 1.0
    return v


def _sop(i: int, j: int) -> np.ndarray:
    return np.outer(_ket3(i), _ket3(j)).astype(complex)


def _destroy(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)


def _embed(op: np.ndarray, k: int, atoms: int, nc: int) -> np.ndarray:
    ops = [np.eye(3)] * atoms
    ops[k] = op
    return reduce(np.kron, ops + [np.eye(nc)])


@dataclass(frozen=True)
class FullModel:
    """Atoms-plus-cavity Hamiltonian ``C + e^{-iwt} X + h.c.`` in rad/s."""

    atoms: int
    n_max: int
    constant: np.ndarray = field(repr=False)
    raising: np.ndarray = field(repr=False)
    frequency: float
    params: DriveParams | None = None

    @property
    def dims(self) -> tuple[int, ...]:
        return (3,) * self.atoms + (self.n_max + 1,)

    @property
    def dim(self) -> int:
        return 3 ** self.atoms * (self.n_max + 1)

    def excitation(self) -> np.ndarray:
        """Diagonal of ``N_e``, the number of atoms in ``e``."""
        labels = np.indices(self.dims).reshape(len(self.dims), -1)
        return (labels[: self.atoms] == 2).sum(axis=0).astype(float)

    def __call__(self, t: float) -> np.ndarray:
        ph = np.exp(-1j * self.frequency * t)
        return self.constant + ph * self.raising + np.conj(ph) * self.raising.conj().T

    def static(self) -> np.ndarray:
        """Time-independent generator in the co-rotating frame."""
        h = self.constant + self.raising + self.raising.conj().T
        return h - self.frequency * np.diag(self.excitation())

    def frame_phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * t * self.frequency * self.excitation())


def full_hamiltonian_A(p: DriveParams, n_max: int = 20) -> FullModel:
    """Two atoms, one cavity mode and two drives on resonance with each other."""
    check_appendix_a(p)
    nc = n_max + 1
    a = np.kron(np.eye(9), _destroy(n_max))
    x = np.zeros((9 * nc, 9 * nc), dtype=complex)
    for k in range(2):
        x += -1j * (0.5 * p.g * a @ _embed(_sop(2, 0), k, 2, nc)
                    + 0.5 * p.omega * (_embed(_sop(2, 1), k, 2, nc) + _embed(_sop(2, 0), k, 2, nc)))
    return FullModel(2, n_max, np.zeros_like(x), x, p.delta, p)


def full_hamiltonian_C(p: DriveParams, n_max: int = 3) -> FullModel:
    """Three atoms, one cavity mode and one laser, all far detuned."""
    check_appendix_c(p)
    nc = n_max + 1
    a = np.kron(np.eye(27), _destroy(n_max))
    x = np.zeros((27 * nc, 27 * nc), dtype=complex)
    for k in range(3):
        x += -1j * (0.5 * p.g * a @ _embed(_sop(2, 0), k, 3, nc) + 0.5 * p.omega * _embed(_sop(2, 1), k, 3, nc))
    const = p.delta * (a.conj().T @ a)
    return FullModel(3, n_max, const, x, -p.delta_l, p)


@dataclass(frozen=True)
class EffectiveModel:
    """Reduced Hamiltonian on qubits, optionally with the cavity mode kept.

    ``core`` is the operator in the form used by the rest of the package,
    ``sign`` the sign with which it enters the derived dynamics, and
    ``commuting`` an extra term that commutes with ``core``. The derived
    generator is ``sign * core + commuting``.
    """

    atoms: int
    n_max: int | None
    coupling: float
    core: np.ndarray = field(repr=False)
    commuting: np.ndarray = field(repr=False)
    sign: float = 1.0

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.sign * self.core + self.commuting

    @property
    def has_cavity(self) -> bool:
        return self.n_max is not None


def j2_of(p: DriveParams) -> float:
    return p.g * p.omega / (4 * p.delta)


def j3_of(p: DriveParams) -> float:
    return p.g ** 2 * p.omega ** 2 / (16 * p.delta_l ** 2 * p.delta)


def effective_A(p: DriveParams, n_max: int = 20) -> EffectiveModel:
    """Fusion Hamiltonian with ``J2 = g Omega / (4 Delta)``.

    The commuting part is the light shift ``(Omega^2 / 4 Delta)(X_1 + X_2)``.
    """
    check_appendix_a(p)
    j2 = j2_of(p)
    core = fusion.build_fusion_hamiltonian(j2, n_max)
    sx = np.kron(SIGMA_X, np.eye(2)) + np.kron(np.eye(2), SIGMA_X)
    shift = p.omega ** 2 / (4 * p.delta) * np.kron(sx, np.eye(n_max + 1))
    return EffectiveModel(2, n_max, j2, core, shift)


def effective_C(p: DriveParams) -> EffectiveModel:
    """XY ring with ``J3 = g^2 Omega^2 / (16 Delta_L^2 Delta)``.

    The full model produces the ring with hopping ``-J3`` together with the
    level shift ``-(J3 + Omega^2 / 4 Delta_L)`` per atom in ``|1>``. The shift
    commutes with the ring and is carried in ``commuting``.
    """
    check_appendix_c(p)
    j3 = j3_of(p)
    if not j3 > 0:
        raise ParameterError("J3 must be positive")
    ring = spinchain.build_xy(j3)
    shift = -(j3 + p.omega ** 2 / (4 * p.delta_l)) * spinchain.excitation_number()
    return EffectiveModel(3, None, j3, ring.matrix, shift, sign=-1.0)


@dataclass(frozen=True)
class VerificationReport:
    params: DriveParams | None
    gate_time: float
    trace_distance: float
    excited_population_max: float
    multiplier: float = 1.0


def _qubit_block(psi: np.ndarray, atoms: int, nc: int) -> np.ndarray:
    t = psi.reshape((3,) * atoms + (nc,))
    return t[(slice(0, 2),) * atoms].reshape(2 ** atoms, nc)


def _embed_ket(psi0: np.ndarray, full: FullModel, eff: EffectiveModel) -> np.ndarray:
    nc = full.n_max + 1
    q = np.asarray(psi0, dtype=complex).reshape(2 ** eff.atoms, -1)
    if eff.has_cavity:
        if q.shape[1] != eff.n_max + 1 or eff.n_max > full.n_max:
            raise ValueError("effective cavity truncation does not fit into the full model")
    elif q.shape[1] != 1:
        raise ValueError("psi0 does not match the effective space")
    out = np.zeros((3,) * full.atoms + (nc,), dtype=complex)
    out[(slice(0, 2),) * full.atoms + (slice(0, q.shape[1]),)] = q.reshape((2,) * full.atoms + (q.shape[1],))
    return out.ravel()


def _reduced_qubits(block: np.ndarray) -> np.ndarray:
    return block @ block.conj().T


def verify_effective(
    full: FullModel,
    effective: EffectiveModel,
    psi0: np.ndarray,
    t: float,
    method: str = "frame",
    samples: int = 200,
    rtol: float = 1e-10,
) -> VerificationReport:
    """Compare the qubit state under the full and effective models at time ``t``.

    ``psi0`` lives in the effective space (qubits, times the cavity if the
    effective model keeps it); it is embedded with no atom in ``e`` and, if the
    effective model drops the cavity, an empty cavity. The full state is
    restricted to atomic levels ``0, 1`` and the cavity traced out before
    comparison. ``method="frame"`` uses the static co-rotating generator;
    ``method="ode"`` integrates ``H(t)`` directly.
    """
    if full.atoms != effective.atoms:
        raise ValueError("models describe different numbers of atoms")
    nc = full.n_max + 1
    psi = _embed_ket(psi0, full, effective)
    times = np.linspace(0.0, t, samples + 1)

    if method == "frame":
        e, v = np.linalg.eigh(full.static())
        c = v.conj().T @ psi
        states = (v @ (np.exp(-1j * np.outer(e, times)) * c[:, None])).T
        states = states * np.array([full.frame_phases(s) for s in times])
    elif method == "ode":
        def rhs(s, y):
            return -1j * (full(s) @ y)
        sol = solve_ivp(rhs, (0.0, t), psi, method="DOP853", t_eval=times, rtol=rtol, atol=rtol * 1e-2)
        if not sol.success:
            raise NumericalInstabilityError(sol.message)
        states = sol.y.T
        drift = np.max(np.abs(np.linalg.norm(states, axis=1) - 1.0))
        if drift > 1e-6:
            raise NumericalInstabilityError(f"norm drifted by {drift:.3e}; step control unstable")
    else:
        raise ValueError(f"unknown method {method!r}")

    pops = [1.0 - np.linalg.norm(_qubit_block(s, full.atoms, nc)) ** 2 for s in states]
    final = states[-1]
    tail = np.sum(np.abs(final.reshape(-1, nc)[:, -1]) ** 2)
    if tail > TAIL_TOL:
        raise fusion.TruncationError(f"population {tail:.3e} at Fock level {full.n_max}; increase n_max")
    rho_full = _reduced_qubits(_qubit_block(final, full.atoms, nc))

    u = expm_hermitian(effective.hamiltonian, t)
    q = u @ np.asarray(psi0, dtype=complex).ravel()
    q = q.reshape(2 ** effective.atoms, -1)
    rho_eff = _reduced_qubits(q)
    return VerificationReport(full.params, float(t), trace_distance(rho_full, rho_eff), float(max(pops)))


DEFAULT_LADDER = (1, 2, 4)


def _psi_basis(labels, n_cav: int | None) -> np.ndarray:
    idx = int(np.ravel_multi_index(tuple(labels), (2,) * len(labels)))
    d = 2 ** len(labels) * (1 if n_cav is None else n_cav + 1)
    v = np.zeros(d, dtype=complex)
    v[idx * (1 if n_cav is None else n_cav + 1)] = 1.0
    return v


def appendix_a_run(p: DriveParams, n_max: int = 20, duration: float = 1.0, method: str = "frame") -> VerificationReport:
    """Both atoms start in ``|0>`` with an empty cavity; run for ``duration / J2``."""
    if not strong_driving(p):
        warnings.warn("drive amplitude is below the strong-driving guard", RuntimeWarning, stacklevel=2)
    full = full_hamiltonian_A(p, n_max)
    eff = effective_A(p, n_max)
    return verify_effective(full, eff, _psi_basis((0, 0), n_max), duration / j2_of(p), method)


def appendix_c_run(p: DriveParams, n_max: int = 3, gate_index: int = 0, method: str = "frame") -> VerificationReport:
    """One excitation on the first atom, run for one purification-gate time."""
    if not dispersive(p):
        warnings.warn("laser detuning is below the dispersive guard", RuntimeWarning, stacklevel=2)
    full = full_hamiltonian_C(p, n_max)
    eff = effective_C(p)
    t = spinchain.gate_time(gate_index, eff.coupling)
    return verify_effective(full, eff, _psi_basis((1, 0, 0), None), t, method)


def ladder(which: str, multipliers=DEFAULT_LADDER, base: DriveParams | None = None, n_max: int | None = None) -> list[VerificationReport]:
    """Run one verification per detuning multiplier."""
    multipliers = list(multipliers)
    if not multipliers:
        raise ValueError("ladder needs at least one multiplier")
    which = which.upper()
    out = []
    for m in multipliers:
        if which == "A":
            p = (base or DriveParams.appendix_a()).scaled(m)
            r = appendix_a_run(p, 20 if n_max is None else n_max)
        elif which == "C":
            p = (base or DriveParams.appendix_c()).scaled(m)
            r = appendix_c_run(p, 3 if n_max is None else n_max)
        else:
            raise ValueError(f"unknown appendix {which!r}")
        out.append(replace(r, multiplier=float(m)))
    return out


def distribution_fidelity(eta: float, alpha_sq: float, theta: float) -> float:
    """Fidelity of a pair distributed with a lossy coherent-state bus."""
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be non-negative")
    f = 0.5 * (1.0 + math.exp(-(1.0 - eta) * alpha_sq * (1.0 - math.cos(theta))))
    assert 0.5 <= f <= 1.0
    return f


def distributed_pair(eta: float, alpha_sq: float, theta: float) -> BellDiagonalPair:
    return BellDiagonalPair(distribution_fidelity(eta, alpha_sq, theta))
