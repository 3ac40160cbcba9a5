"""Pointwise exterior algebra of an oriented Euclidean space R^n.

A k-vector is stored by its coefficients over the lexicographically ordered
k-subsets of ``range(n)``; that basis is orthonormal.  Vectors and 1-forms
are identified through the Euclidean metric, so ``v`` may be used both as a
direction for contraction and as a 1-form for wedging.

An element of ``V (x) Lambda^k`` (for instance a covariant derivative at a
point) is a :class:`VectorFormTensor`: one degree-k slot per basis vector of V.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

__all__ = [
    "MultiVector",
    "VectorFormTensor",
    "basis",
    "wedge",
    "interior",
    "inner",
    "norm",
    "tensor_inner",
    "iota_contract",
    "wedge_contract",
    "iota_adjoint",
    "wedge_adjoint",
    "twistor_decompose",
]


@lru_cache(maxsize=None)
def basis(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Lexicographically ordered k-subsets of range(n)."""
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def _position(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {idx: i for i, idx in enumerate(basis(n, k))}


def _inversions(seq) -> int:
    return sum(1 for i, j in itertools.combinations(range(len(seq)), 2) if seq[i] > seq[j])


@lru_cache(maxsize=None)
def _wedge_table(n: int, k: int, l: int):
    rows, cols, out, sign = [], [], [], []
    pos = _position(n, k + l)
    for i, I in enumerate(basis(n, k)):
        for j, J in enumerate(basis(n, l)):
            if set(I) & set(J):
                continue
            rows.append(i)
            cols.append(j)
            out.append(pos[tuple(sorted(I + J))])
            sign.append(-1.0 if _inversions(I + J) % 2 else 1.0)
    return (np.array(rows, dtype=int), np.array(cols, dtype=int),
            np.array(out, dtype=int), np.array(sign))


@lru_cache(maxsize=None)
def _interior_table(n: int, k: int):
    # contraction of e_I with e_{I[s]} removes slot s with sign (-1)^s
    src, vec, out, sign = [], [], [], []
    pos = _position(n, k - 1)
    for i, I in enumerate(basis(n, k)):
        for s, v in enumerate(I):
            src.append(i)
            vec.append(v)
            out.append(pos[I[:s] + I[s + 1:]])
            sign.append(-1.0 if s % 2 else 1.0)
    return (np.array(src, dtype=int), np.array(vec, dtype=int),
            np.array(out, dtype=int), np.array(sign))


@dataclass(frozen=True)
class MultiVector:
    """A k-vector (equivalently a k-form) on R^n."""

    n: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"ambient dimension must be positive, got {self.n}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"degree {self.k} outside 0..{self.n}")
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if c.size != comb(self.n, self.k):
            raise ValueError(
                f"expected {comb(self.n, self.k)} coefficients for n={self.n}, k={self.k}, got {c.size}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, n: int, k: int) -> MultiVector:
        return cls(n, k, np.zeros(comb(n, k)))

    @classmethod
    def scalar(cls, n: int, value: float = 1.0) -> MultiVector:
        return cls(n, 0, np.array([float(value)]))

    @classmethod
    def from_indices(cls, n: int, indices, value: float = 1.0) -> MultiVector:
        """``value * e_{i1} ^ ... ^ e_{ik}`` for zero-based, possibly unsorted indices."""
        indices = tuple(indices)
        k = len(indices)
        out = np.zeros(comb(n, k))
        if len(set(indices)) == k:
            sign = -1.0 if _inversions(indices) % 2 else 1.0
            out[_position(n, k)[tuple(sorted(indices))]] = sign * value
        return cls(n, k, out)

    @classmethod
    def vector(cls, v) -> MultiVector:
        v = np.asarray(v, dtype=float)
        return cls(v.size, 1, v)

    def _check(self, other: MultiVector):
        if not isinstance(other, MultiVector):
            raise TypeError(f"expected MultiVector, got {type(other).__name__}")
        if (self.n, self.k) != (other.n, other.k):
            raise ValueError(f"degree/dimension mismatch: ({self.n},{self.k}) vs ({other.n},{other.k})")

    def __add__(self, other):
        self._check(other)
        return MultiVector(self.n, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return MultiVector(self.n, self.k, self.coeffs - other.coeffs)

    def __neg__(self):
        return MultiVector(self.n, self.k, -self.coeffs)

    def __mul__(self, c):
        return MultiVector(self.n, self.k, float(c) * self.coeffs)

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def allclose(self, other: MultiVector, atol: float = 1e-12) -> bool:
        return (self.n, self.k) == (other.n, other.k) and np.allclose(self.coeffs, other.coeffs, rtol=0, atol=atol)


@dataclass(frozen=True)
class VectorFormTensor:
    """Element of ``R^n (x) Lambda^k``; ``coeffs[i]`` is the slot paired with e_i."""

    n: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise ValueError(f"degree {self.k} outside 0..{self.n}")
        c = np.asarray(self.coeffs, dtype=float)
        size = comb(self.n, self.k)
        if c.size != self.n * size:
            raise ValueError(f"expected {self.n}x{size} coefficients, got {c.size}")
        c = c.reshape(self.n, size)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def slot(self, i: int) -> MultiVector:
        return MultiVector(self.n, self.k, self.coeffs[i])

    def __add__(self, other: VectorFormTensor) -> VectorFormTensor:
        return VectorFormTensor(self.n, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other: VectorFormTensor) -> VectorFormTensor:
        return VectorFormTensor(self.n, self.k, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return VectorFormTensor(self.n, self.k, float(c) * self.coeffs)

    __rmul__ = __mul__


def wedge(a: MultiVector, b: MultiVector) -> MultiVector:
    """Exterior product ``a ^ b``.

    Raises
    ------
    ValueError
        If the ambient dimensions differ or ``a.k + b.k > n``.
    """
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")
    if a.k + b.k > a.n:
        raise ValueError(f"degree overflow: {a.k} + {b.k} > {a.n}")
    rows, cols, out, sign = _wedge_table(a.n, a.k, b.k)
    res = np.zeros(comb(a.n, a.k + b.k))
    np.add.at(res, out, sign * a.coeffs[rows] * b.coeffs[cols])
    return MultiVector(a.n, a.k + b.k, res)


def interior(v, a: MultiVector) -> MultiVector:
    """Contraction of ``a`` by the vector ``v`` in the first slot."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if a.k == 0:
        raise ValueError("interior product of a 0-vector is undefined")
    if v.size != a.n:
        raise ValueError(f"vector has length {v.size}, expected {a.n}")
    src, vec, out, sign = _interior_table(a.n, a.k)
    res = np.zeros(comb(a.n, a.k - 1))
    np.add.at(res, out, sign * v[vec] * a.coeffs[src])
    return MultiVector(a.n, a.k - 1, res)


def inner(a: MultiVector, b: MultiVector) -> float:
    if (a.n, a.k) != (b.n, b.k):
        raise ValueError(f"degree/dimension mismatch: ({a.n},{a.k}) vs ({b.n},{b.k})")
    return float(a.coeffs @ b.coeffs)


def norm(a: MultiVector) -> float:
    return float(np.linalg.norm(a.coeffs))


def tensor_inner(A: VectorFormTensor, B: VectorFormTensor) -> float:
    if (A.n, A.k) != (B.n, B.k):
        raise ValueError("degree/dimension mismatch")
    return float(np.sum(A.coeffs * B.coeffs))


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def iota_contract(A: VectorFormTensor) -> MultiVector:
    """``sum_i interior(e_i, A_i)``, degree k-1."""
    if A.k == 0:
        raise ValueError("contraction needs k >= 1")
    out = MultiVector.zeros(A.n, A.k - 1)
    for i in range(A.n):
        out = out + interior(_unit(A.n, i), A.slot(i))
    return out


def wedge_contract(A: VectorFormTensor) -> MultiVector:
    """``sum_i e_i ^ A_i``, degree k+1."""
    if A.k >= A.n:
        raise ValueError("wedge contraction needs k < n")
    out = MultiVector.zeros(A.n, A.k + 1)
    for i in range(A.n):
        out = out + wedge(MultiVector.vector(_unit(A.n, i)), A.slot(i))
    return out


def iota_adjoint(a: MultiVector) -> VectorFormTensor:
    """Metric adjoint of :func:`iota_contract`; maps degree k-1 to ``V (x) Lambda^k``.

    Slot i is ``e_i ^ a`` because wedging by e_i is adjoint to contracting by e_i.
    """
    if a.k >= a.n:
        raise ValueError(f"no degree {a.k + 1} forms in dimension {a.n}")
    slots = [wedge(MultiVector.vector(_unit(a.n, i)), a).coeffs for i in range(a.n)]
    return VectorFormTensor(a.n, a.k + 1, np.stack(slots))


def wedge_adjoint(a: MultiVector) -> VectorFormTensor:
    """Metric adjoint of :func:`wedge_contract`; maps degree k+1 to ``V (x) Lambda^k``."""
    if a.k == 0:
        raise ValueError("wedge adjoint needs a form of degree >= 1")
    slots = [interior(_unit(a.n, i), a).coeffs for i in range(a.n)]
    return VectorFormTensor(a.n, a.k - 1, np.stack(slots))


def twistor_decompose(A: VectorFormTensor):
    """Split ``A`` into its image-of-iota*, image-of-wedge* and remainder parts.

    The projections are ``iota* iota A / (n-k+1)`` and ``wedge* wedge A / (k+1)``;
    the remainder is the twistor part.  The three pieces are mutually orthogonal.

    Returns
    -------
    (proj_iota, proj_wedge, remainder) : tuple of VectorFormTensor
    """
    n, k = A.n, A.k
    if not 1 <= k <= n - 1:
        raise ValueError(f"twistor decomposition needs 1 <= k <= n-1, got k={k}, n={n}")
    proj_iota = iota_adjoint(iota_contract(A)) * (1.0 / (n - k + 1))
    proj_wedge = wedge_adjoint(wedge_contract(A)) * (1.0 / (k + 1))
    remainder = A - proj_iota - proj_wedge
    return proj_iota, proj_wedge, remainder
