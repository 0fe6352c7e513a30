"""Dense linear algebra and density-operator primitives.

Matrices are plain ``numpy`` complex arrays. Subsystem order in ``dims`` is
the tensor (Kronecker) order, most significant first, so the basis label
``|q0 q1 ... >`` maps to the row-major flat index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-9
NULL_PROBABILITY = 1e-14

SQRT2 = np.sqrt(2.0)

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)

PHI_PLUS = (np.kron(KET0, KET0) + np.kron(KET1, KET1)) / SQRT2
PHI_MINUS = (np.kron(KET0, KET0) - np.kron(KET1, KET1)) / SQRT2
PSI_PLUS = (np.kron(KET0, KET1) + np.kron(KET1, KET0)) / SQRT2
PSI_MINUS = (np.kron(KET0, KET1) - np.kron(KET1, KET0)) / SQRT2

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def is_unitary(a: np.ndarray, tol: float = 1e-10) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))) <= tol


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def basis_ket(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def product_ket(labels: Sequence[int], dims: Sequence[int] | None = None) -> np.ndarray:
    """Computational basis ket ``|labels[0] labels[1] ...>``."""
    dims = tuple(dims) if dims is not None else (2,) * len(labels)
    return basis_ket(int(np.prod(dims)), int(np.ravel_multi_index(tuple(labels), dims)))


def _check_dims(matrix: np.ndarray, dims: tuple[int, ...]) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    if int(np.prod(dims)) != matrix.shape[0]:
        raise ValueError(f"dims {dims} do not match matrix dimension {matrix.shape[0]}")


@dataclass(frozen=True)
class UnnormalizedDensity:
    """Hermitian positive operator whose trace need not be one.

    Used for conditional (post-selected) states before normalisation.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = field(default=())

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        dims = tuple(int(d) for d in self.dims) if self.dims else (m.shape[0],)
        _check_dims(m, dims)
        if not is_hermitian(m, HERMITIAN_TOL * max(1.0, np.abs(np.trace(m)))):
            raise ValueError("operator is not Hermitian within tolerance")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> "DensityOperator":
        tr = self.trace
        if tr <= NULL_PROBABILITY:
            raise ValueError("cannot normalise an operator with vanishing trace")
        return DensityOperator(self.matrix / tr, self.dims)


@dataclass(frozen=True)
class DensityOperator(UnnormalizedDensity):
    """Unit-trace, Hermitian, positive semidefinite operator."""

    def __post_init__(self):
        super().__post_init__()
        if abs(self.trace - 1.0) > TRACE_TOL:
            raise ValueError(f"trace is {self.trace!r}, expected 1")
        lam = np.linalg.eigvalsh(self.matrix)[0]
        if lam < POSITIVITY_TOL:
            raise ValueError(f"minimum eigenvalue {lam:.3e} below {POSITIVITY_TOL}")

    @classmethod
    def from_ket(cls, ket: np.ndarray, dims: Sequence[int] = ()) -> "DensityOperator":
        ket = np.asarray(ket, dtype=complex)
        norm = np.linalg.norm(ket)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("ket is not normalised")
        return cls(projector(ket), tuple(dims))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, UnnormalizedDensity) else np.asarray(op)


def tensor(*ops):
    """Kronecker product in argument order.

    Density operators produce a density operator with concatenated ``dims``;
    bare arrays produce a bare array.
    """
    if not ops:
        raise ValueError("tensor needs at least one operand")
    if all(isinstance(o, UnnormalizedDensity) for o in ops):
        m = reduce(np.kron, [o.matrix for o in ops])
        dims = sum((o.dims for o in ops), ())
        if all(isinstance(o, DensityOperator) for o in ops):
            return DensityOperator(m, dims)
        return UnnormalizedDensity(m, dims)
    return reduce(np.kron, [_as_matrix(o) for o in ops])


def permute_subsystems(op, order: Sequence[int], dims: Sequence[int] | None = None):
    """Reorder tensor factors: new subsystem ``k`` is old subsystem ``order[k]``."""
    if isinstance(op, UnnormalizedDensity):
        new = permute_subsystems(op.matrix, order, op.dims)
        return type(op)(new, tuple(op.dims[i] for i in order))
    m = np.asarray(op)
    dims = tuple(dims)
    n = len(dims)
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of {n} subsystems")
    t = m.reshape(dims + dims)
    t = t.transpose(list(order) + [n + i for i in order])
    d = m.shape[0]
    return t.reshape(d, d)


def partial_trace(rho, keep: Sequence[int], dims: Sequence[int] | None = None):
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems stay in their original relative order. An empty ``keep``
    returns the scalar trace.
    """
    if isinstance(rho, UnnormalizedDensity):
        dims = rho.dims
        m = rho.matrix
    else:
        m = np.asarray(rho)
        dims = tuple(dims) if dims is not None else (m.shape[0],)
    n = len(dims)
    keep = list(keep)
    if len(set(keep)) != len(keep) or any(not 0 <= k < n for k in keep):
        raise ValueError(f"invalid subsystem selection {keep} for {n} subsystems")
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    t = m.reshape(tuple(dims) * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise ValueError("too many subsystems")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in drop:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    if not keep:
        return complex(reduced).real
    kd = tuple(dims[i] for i in keep)
    d = int(np.prod(kd))
    reduced = reduced.reshape(d, d)
    if isinstance(rho, DensityOperator):
        return DensityOperator(reduced, kd)
    if isinstance(rho, UnnormalizedDensity):
        return UnnormalizedDensity(reduced, kd)
    return reduced


def expm_hermitian(h: np.ndarray, t: float, scale: float = 1.0) -> np.ndarray:
    """``exp(-i * scale * t * h)`` via eigendecomposition of Hermitian ``h``."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, HERMITIAN_TOL):
        raise ValueError("expm_hermitian requires a Hermitian matrix")
    energies, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * scale * t * energies)
    return (vecs * phases) @ vecs.conj().T


def bell_fidelity(rho) -> float:
    """Overlap ``<phi+|rho|phi+>`` of a two-qubit state."""
    m = _as_matrix(rho)
    if m.shape != (4, 4):
        raise ValueError(f"bell_fidelity needs a 4x4 operator, got {m.shape}")
    return float(np.real(PHI_PLUS.conj() @ m @ PHI_PLUS))


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b``."""
    diff = _as_matrix(a) - _as_matrix(b)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


class Projection(NamedTuple):
    state: UnnormalizedDensity
    probability: float

    @property
    def null(self) -> bool:
        return self.probability <= NULL_PROBABILITY


def project(rho, outcome_ket: np.ndarray, on: Sequence[int]) -> Projection:
    """Apply ``<out|`` on the subsystems ``on`` and keep the rest unnormalised.

    ``outcome_ket`` is expressed over the selected subsystems in the order they
    are listed in ``on``. The returned probability is the trace of the
    conditional operator; a zero-probability outcome is returned (not raised)
    and reported through ``Projection.null``.
    """
    if not isinstance(rho, UnnormalizedDensity):
        raise TypeError("project expects a density operator")
    dims = rho.dims
    n = len(dims)
    on = list(on)
    if len(set(on)) != len(on) or any(not 0 <= k < n for k in on):
        raise ValueError(f"invalid subsystem selection {on}")
    sel_dim = int(np.prod([dims[i] for i in on]))
    out = np.asarray(outcome_ket, dtype=complex).ravel()
    if out.size != sel_dim:
        raise ValueError(f"outcome ket has dimension {out.size}, selected subsystems span {sel_dim}")
    rest = [i for i in range(n) if i not in on]
    order = on + rest
    m = permute_subsystems(rho.matrix, order, dims)
    rest_dim = m.shape[0] // sel_dim
    t = m.reshape(sel_dim, rest_dim, sel_dim, rest_dim)
    cond = np.einsum("a,aibj,b->ij", out.conj(), t, out)
    rest_dims = tuple(dims[i] for i in rest) or (1,)
    state = UnnormalizedDensity(cond, rest_dims)
    return Projection(state, max(state.trace, 0.0))
