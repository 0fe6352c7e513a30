"""Fusion block: two driven atoms in a leaky cavity, conditioned on no photon.

A node holds two atoms coupled to one cavity mode through
``H = (J2/2)(a + a^dag)(X_1 + X_2)`` with cavity decay rate ``kappa``. Node
operators act on (atom1, atom2, cavity); further subsystems appended after
the cavity are spectators that the evolution leaves untouched.

In the basis |++>, |-->, |+->, |-+> the atoms carry ``u = (1, -1, 0, 0)`` and the
cavity relaxes to the coherent state ``|-u alpha_ss>``, ``alpha_ss = 2i J2 / kappa``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .qcore import (
    SIGMA_X,
    DensityOperator,
    UnnormalizedDensity,
    basis_ket,
    permute_subsystems,
    project,
)
from .states import pair_product

TRACE_DRIFT_TOL = 1e-8
POSITIVITY_TOL = -1e-7
TAIL_TOL = 1e-6

_PLUS = np.array([1.0, 1.0]) / np.sqrt(2.0)
_MINUS = np.array([1.0, -1.0]) / np.sqrt(2.0)

# Columns are |++>, |-->, |+->, |-+> in the computational basis of two atoms.
U_BASIS = np.stack(
    [np.kron(_PLUS, _PLUS), np.kron(_MINUS, _MINUS), np.kron(_PLUS, _MINUS), np.kron(_MINUS, _PLUS)],
    axis=1,
).astype(complex)
U_VALUES = np.array([1.0, -1.0, 0.0, 0.0])


class TruncationError(RuntimeError):
    """The photon distribution reaches the top of the Fock truncation."""


class IntegrationError(RuntimeError):
    """Trace, positivity or step-size check failed during integration."""


def default_n_max(alpha_abs: float) -> int:
    return int(math.ceil(alpha_abs ** 2 + 6 * alpha_abs + 4))


@dataclass(frozen=True)
class LindbladModel:
    """Node parameters. ``n_max`` defaults to a size that holds ``|alpha_ss|``."""

    j2: float
    kappa: float
    n_max: int | None = None
    min_ratio: float = 1.0

    def __post_init__(self):
        if self.j2 < 0:
            raise ValueError("j2 must be non-negative")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.n_max is None:
            object.__setattr__(self, "n_max", default_n_max(abs(self.alpha_ss)))
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")

    @property
    def alpha_ss(self) -> complex:
        return 2j * self.j2 / self.kappa

    @property
    def ratio(self) -> float:
        return self.j2 / self.kappa

    @property
    def strong_coupling(self) -> bool:
        return self.ratio >= self.min_ratio

    @property
    def dims(self) -> tuple[int, int, int]:
        return (2, 2, self.n_max + 1)

    @property
    def dim(self) -> int:
        return 4 * (self.n_max + 1)


def destroy(n_max: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1, format="csr").astype(complex)


def _node_operators(j2: float, n_max: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    a = destroy(n_max)
    sx = sp.csr_matrix(SIGMA_X)
    i2 = sp.identity(2, format="csr")
    s = sp.kron(sx, i2) + sp.kron(i2, sx)
    h = 0.5 * j2 * sp.kron(s, a + a.conj().T, format="csr")
    big_a = sp.kron(sp.identity(4), a, format="csr")
    return h, big_a


def build_fusion_hamiltonian(j2: float, n_max: int) -> np.ndarray:
    """Dense node Hamiltonian over (atom1, atom2, cavity)."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    return _node_operators(j2, n_max)[0].toarray()


def superoperator(h: sp.spmatrix, collapse: list, rates: list) -> sp.csr_matrix:
    """Lindblad generator acting on row-major ``vec(rho)``.

    Uses ``vec(A X B) = (A kron B^T) vec(X)``.
    """
    d = h.shape[0]
    eye = sp.identity(d, format="csr")
    L = -1j * (sp.kron(h, eye) - sp.kron(eye, h.T))
    for c, g in zip(collapse, rates):
        cdc = (c.conj().T @ c).tocsr()
        L = L + g * (sp.kron(c, c.conj()) - 0.5 * sp.kron(cdc, eye) - 0.5 * sp.kron(eye, cdc.T))
    return L.tocsr()


@dataclass(frozen=True)
class LindbladGenerator:
    """Sparse generator of one node; spectators are handled column-wise."""

    model: LindbladModel
    matrix: sp.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h, a = _node_operators(self.model.j2, self.model.n_max)
        object.__setattr__(self, "matrix", superoperator(h, [a], [self.model.kappa]))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``L(rho)`` for ``rho`` over the node followed by any spectators."""
        cols, d, s = _to_columns(np.asarray(rho), self.model.dim)
        return _from_columns(self.matrix @ cols, d, s)


def _to_columns(rho: np.ndarray, d: int) -> tuple[np.ndarray, int, int]:
    s = rho.shape[0] // d
    if s * d != rho.shape[0]:
        raise ValueError("state dimension is not a multiple of the node dimension")
    cols = rho.reshape(d, s, d, s).transpose(0, 2, 1, 3).reshape(d * d, s * s)
    return cols, d, s


def _from_columns(cols: np.ndarray, d: int, s: int) -> np.ndarray:
    return cols.reshape(d, d, s, s).transpose(0, 2, 1, 3).reshape(d * s, d * s)


def _rk4(L: sp.csr_matrix, y: np.ndarray, h: float, steps: int) -> np.ndarray:
    for _ in range(steps):
        k1 = L @ y
        k2 = L @ (y + 0.5 * h * k1)
        k3 = L @ (y + 0.5 * h * k2)
        k4 = L @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def max_step(model: LindbladModel) -> float:
    rates = [model.kappa] + ([model.j2] if model.j2 > 0 else [])
    return min(0.01 / r for r in rates)


def _check_state(rho: np.ndarray, model: LindbladModel, spect: int, trace0: float, t: float) -> None:
    tr = np.trace(rho).real
    if abs(tr - trace0) > TRACE_DRIFT_TOL:
        raise IntegrationError(f"trace drifted by {tr - trace0:.3e} at t = {t:.4g}")
    herm = 0.5 * (rho + rho.conj().T)
    lam = np.linalg.eigvalsh(herm)[0]
    if lam < POSITIVITY_TOL * max(1.0, tr):
        raise IntegrationError(f"minimum eigenvalue {lam:.3e} at t = {t:.4g}")
    nc = model.n_max + 1
    diag = np.real(np.diag(rho)).reshape(4, nc, spect)
    tail = diag[:, -1, :].sum() / tr
    if tail > TAIL_TOL:
        raise TruncationError(
            f"population {tail:.3e} at Fock level {model.n_max}; increase n_max"
        )


def evolve(
    model: LindbladModel,
    rho0,
    t_final: float,
    dt: float | None = None,
    checkpoints: int = 10,
    richardson: bool = False,
    richardson_tol: float = 1e-8,
) -> DensityOperator:
    """Integrate the node master equation with fixed-step RK4.

    ``rho0`` covers the node subsystems followed by optional spectators. Only
    the spectator blocks on and above the diagonal are propagated; the rest
    follow from Hermiticity. Trace, positivity and Fock-tail checks run at
    ``checkpoints`` evenly spaced times.

    With ``richardson=True`` the run is repeated at half the step and the two
    results must agree within ``richardson_tol`` in trace distance.
    """
    if not isinstance(rho0, UnnormalizedDensity):
        raise TypeError("rho0 must be a density operator")
    if tuple(rho0.dims[:3]) != model.dims:
        raise ValueError(f"leading subsystems {rho0.dims[:3]} do not match node dims {model.dims}")
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    hmax = max_step(model) if dt is None else min(dt, max_step(model))
    steps = max(1, int(math.ceil(t_final / hmax))) if t_final > 0 else 0

    def run(nsteps: int) -> np.ndarray:
        gen = LindbladGenerator(model)
        cols, d, s = _to_columns(rho0.matrix, model.dim)
        upper = [(k, l) for k in range(s) for l in range(k, s)]
        idx = [k * s + l for k, l in upper]
        y = np.ascontiguousarray(cols[:, idx])
        trace0 = rho0.trace
        h = t_final / nsteps if nsteps else 0.0
        chunks = np.array_split(np.arange(nsteps), max(1, min(checkpoints, nsteps or 1)))
        t = 0.0
        full = cols.copy()
        for chunk in chunks:
            y = _rk4(gen.matrix, y, h, len(chunk))
            t += h * len(chunk)
            for j, (k, l) in enumerate(upper):
                full[:, k * s + l] = y[:, j]
                if k != l:
                    full[:, l * s + k] = y[:, j].reshape(d, d).conj().T.ravel()
            rho = _from_columns(full, d, s)
            _check_state(rho, model, s, trace0, t)
        return _from_columns(full, d, s)

    rho = run(steps)
    if richardson and steps:
        fine = run(2 * steps)
        diff = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * ((fine - rho) + (fine - rho).conj().T))))
        if diff > richardson_tol:
            raise IntegrationError(f"halved-step result differs by {diff:.3e}")
        rho = fine
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho / np.trace(rho).real, rho0.dims)


def residual(model: LindbladModel, rho) -> float:
    """Largest element of ``L(rho)``; zero for an exact steady state."""
    m = rho.matrix if isinstance(rho, UnnormalizedDensity) else np.asarray(rho)
    return float(np.max(np.abs(LindbladGenerator(model).apply(m))))


def with_vacuum(atoms: DensityOperator, model: LindbladModel) -> DensityOperator:
    """Insert an empty cavity after the first two atoms of ``atoms``."""
    if tuple(atoms.dims[:2]) != (2, 2):
        raise ValueError("the first two subsystems must be the node atoms")
    nc = model.n_max + 1
    vac = np.zeros((nc, nc), dtype=complex)
    vac[0, 0] = 1.0
    m = np.kron(atoms.matrix, vac)
    dims = tuple(atoms.dims) + (nc,)
    order = [0, 1, len(dims) - 1] + list(range(2, len(dims) - 1))
    return DensityOperator(permute_subsystems(m, order, dims), tuple(dims[i] for i in order))


def coherent_ket(alpha: complex, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    logfact = np.array([math.lgamma(k + 1) for k in n])
    amp = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * logfact) * np.power(complex(alpha), n)
    return amp.astype(complex)


def _to_u_basis(atoms: np.ndarray, s: int) -> np.ndarray:
    w = np.kron(U_BASIS, np.eye(s))
    return w.conj().T @ atoms @ w


def _from_u_basis(m: np.ndarray, s: int) -> np.ndarray:
    w = np.kron(U_BASIS, np.eye(s))
    return w @ m @ w.conj().T


def analytic_steady_state(atom_rho0: DensityOperator, model: LindbladModel) -> DensityOperator:
    """Long-time node state from atoms ``atom_rho0`` and an empty cavity.

    In the ``u`` basis, blocks with equal ``u`` keep their weight and pick up
    the cavity coherent states; blocks with different ``u`` vanish.
    """
    if tuple(atom_rho0.dims[:2]) != (2, 2):
        raise ValueError("the first two subsystems must be the node atoms")
    s = atom_rho0.dim // 4
    nc = model.n_max + 1
    r = _to_u_basis(atom_rho0.matrix, s).reshape(4, s, 4, s)
    kets = [coherent_ket(-u * model.alpha_ss, model.n_max) for u in U_VALUES]
    out = np.zeros((4, nc, s, 4, nc, s), dtype=complex)
    for i in range(4):
        for j in range(4):
            if U_VALUES[i] == U_VALUES[j]:
                out[i, :, :, j, :, :] = np.einsum("c,d,xy->cxdy", kets[i], kets[j].conj(), r[i, :, j, :])
    m = out.reshape(4 * nc * s, 4 * nc * s)
    w = np.kron(np.kron(U_BASIS, np.eye(nc)), np.eye(s))
    m = w @ m @ w.conj().T
    m = 0.5 * (m + m.conj().T)
    dims = (2, 2, nc) + tuple(atom_rho0.dims[2:])
    return DensityOperator(m / np.trace(m).real, dims)


@dataclass(frozen=True)
class SteadyStateResult:
    conditional_state: DensityOperator
    no_photon_probability: float
    alpha_ss: complex


def condition_on_vacuum(state: DensityOperator, cavity: int = 2, alpha_ss: complex = np.nan) -> SteadyStateResult:
    """Project the cavity onto vacuum and renormalise the remaining subsystems."""
    nc = state.dims[cavity]
    branch = project(state, basis_ket(nc, 0), [cavity])
    if branch.null:
        raise ValueError("no-photon outcome has vanishing probability")
    return SteadyStateResult(branch.state.normalized(), branch.probability, alpha_ss)


def node_conditional_map(rho: np.ndarray, alpha_sq: float, spectators: int) -> tuple[np.ndarray, float]:
    """Exact no-photon map of one node at infinite time, without Fock truncation.

    ``rho`` covers the node atoms followed by ``spectators``-dimensional
    spectators. Returns the unnormalised conditional operator and its trace.
    """
    s = spectators
    r = _to_u_basis(rho, s).reshape(4, s, 4, s)
    lam = (U_VALUES[:, None] == U_VALUES[None, :]).astype(float)
    factor = lam * np.exp(-alpha_sq * np.outer(U_VALUES, U_VALUES))
    r = (r * factor[:, None, :, None]).reshape(4 * s, 4 * s)
    out = _from_u_basis(r, s)
    return out, float(np.trace(out).real)


# (1A, 2A, 1B, 2B) <-> (1B, 2B, 1A, 2A)
_SWAP_NODES = (2, 3, 0, 1)


def sequential_fusion(f: float, model: LindbladModel, method: str = "closed", t_final: float | None = None):
    """Condition node A, then node B, on detecting no photon.

    Input is two rank-two pairs of fidelity ``f``. ``method="closed"`` uses the
    exact infinite-time map with all finite-amplitude terms kept;
    ``method="lindblad"`` integrates each node to ``t_final`` (default
    ``20 / kappa``) and projects its cavity on vacuum.

    Returns ``(state over (1A, 2A, 1B, 2B), joint no-photon probability)``.
    """
    rho = pair_product(f).matrix
    prob = 1.0
    if method == "closed":
        a2 = abs(model.alpha_ss) ** 2
        for _ in range(2):
            rho, p = node_conditional_map(rho, a2, 4)
            prob *= p
            rho = permute_subsystems(rho / p, _SWAP_NODES, (2,) * 4)
    elif method == "lindblad":
        t_final = 20.0 / model.kappa if t_final is None else t_final
        for _ in range(2):
            start = with_vacuum(DensityOperator(rho, (2,) * 4), model)
            res = condition_on_vacuum(evolve(model, start, t_final), 2, model.alpha_ss)
            prob *= res.no_photon_probability
            rho = permute_subsystems(res.conditional_state.matrix, _SWAP_NODES, (2,) * 4)
    else:
        raise ValueError(f"unknown method {method!r}")
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho / np.trace(rho).real, (2,) * 4), prob


def limit_probability(f: float) -> float:
    """Joint no-photon probability in the large-amplitude limit."""
    return 0.5 * (1 - 2 * f + 2 * f * f)


def joint_evolve(model: LindbladModel, rho0: DensityOperator, t_final: float, dt: float | None = None) -> DensityOperator:
    """Evolve both nodes at once over (1A, 2A, cavA, 1B, 2B, cavB).

    A direct integration of the summed generator, used to cross-check the
    node-by-node treatment at small truncations.
    """
    nc = model.n_max + 1
    if tuple(rho0.dims) != (2, 2, nc, 2, 2, nc):
        raise ValueError("rho0 must cover (1A, 2A, cavA, 1B, 2B, cavB)")
    h, a = _node_operators(model.j2, model.n_max)
    eye = sp.identity(model.dim, format="csr")
    H = (sp.kron(h, eye) + sp.kron(eye, h)).tocsr()
    A = sp.kron(a, eye, format="csr")
    B = sp.kron(eye, a, format="csr")
    L = superoperator(H, [A, B], [model.kappa, model.kappa])
    hmax = max_step(model) if dt is None else min(dt, max_step(model))
    steps = max(1, int(math.ceil(t_final / hmax)))
    y = _rk4(L, rho0.matrix.reshape(-1).copy(), t_final / steps, steps)
    m = y.reshape(rho0.dim, rho0.dim)
    m = 0.5 * (m + m.conj().T)
    return DensityOperator(m / np.trace(m).real, rho0.dims)

