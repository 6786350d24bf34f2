"""Weighted Pauli strings and Hermitian operators applied matrix-free to state vectors.

Basis convention used everywhere in this package: a state of N qubits is a
complex vector of length 2**N, and bit n of the basis index is the spin at
site n (little-endian).  Bit value 0 is the sigma^z eigenvalue +1.

A Pauli string is stored as a per-site letter pattern such as "IXZY".  For
application we encode the pattern as two bitmasks (X-type flips, Z-type
signs); a letter Y sets both bits and contributes one factor of i, so that
every string with a real coefficient is Hermitian.  Applying a string never
builds a matrix: X-bits permute amplitudes, Z-bits flip signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LETTERS = "IXYZ"

# arange caches keyed by dimension; shared read-only
_INDEX_CACHE: dict[int, np.ndarray] = {}


def _indices(dim: int) -> np.ndarray:
    idx = _INDEX_CACHE.get(dim)
    if idx is None:
        idx = np.arange(dim, dtype=np.int64)
        _INDEX_CACHE[dim] = idx
    return idx


def _z_signs(idx: np.ndarray, z_mask: int) -> np.ndarray:
    """(-1)**popcount(index & z_mask) as a float array."""
    return 1.0 - 2.0 * (np.bitwise_count(idx & z_mask) & 1)


@dataclass(frozen=True)
class PauliString:
    """One term of an operator: coefficient times a tensor product of Pauli letters."""

    coefficient: complex
    letters: str

    def __post_init__(self):
        bad = set(self.letters) - set(LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @property
    def n_sites(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(n for n, c in enumerate(self.letters) if c != "I")

    def masks(self) -> tuple[int, int, int]:
        """(x_mask, z_mask, n_y) for bitwise application."""
        x = z = ny = 0
        for n, c in enumerate(self.letters):
            if c in "XY":
                x |= 1 << n
            if c in "ZY":
                z |= 1 << n
            if c == "Y":
                ny += 1
        return x, z, ny


def single_site(n_sites: int, site: int, letter: str, coefficient: complex = 1.0) -> PauliString:
    if not 0 <= site < n_sites:
        raise ValueError(f"site {site} out of range for {n_sites} sites")
    pattern = ["I"] * n_sites
    pattern[site] = letter
    return PauliString(coefficient, "".join(pattern))


def from_sites(n_sites: int, coefficient: complex, ops: dict[int, str]) -> PauliString:
    """Pauli string with the given letter at each listed site, identity elsewhere."""
    pattern = ["I"] * n_sites
    for site, letter in ops.items():
        if not 0 <= site < n_sites:
            raise ValueError(f"site {site} out of range for {n_sites} sites")
        if pattern[site] != "I":
            raise ValueError(f"site {site} listed twice")
        pattern[site] = letter
    return PauliString(coefficient, "".join(pattern))


@dataclass(frozen=True)
class HermitianOperator:
    """Canonicalized sum of Pauli strings with real coefficients.

    Construct through :meth:`from_strings`, which merges identical letter
    patterns and checks that the combined coefficients are real (each Pauli
    string is itself Hermitian, so real weights are exactly the Hermiticity
    condition).
    """

    n_sites: int
    terms: tuple[PauliString, ...]
    _app: tuple[np.ndarray, np.ndarray, np.ndarray] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        coeffs = np.empty(len(self.terms), dtype=np.complex128)
        x_masks = np.empty(len(self.terms), dtype=np.int64)
        z_masks = np.empty(len(self.terms), dtype=np.int64)
        for i, term in enumerate(self.terms):
            if term.n_sites != self.n_sites:
                raise ValueError("term length does not match n_sites")
            x, z, ny = term.masks()
            coeffs[i] = term.coefficient * (1j) ** ny
            x_masks[i] = x
            z_masks[i] = z
        object.__setattr__(self, "_app", (coeffs, x_masks, z_masks))

    @classmethod
    def from_strings(cls, n_sites: int, strings, drop_tol: float | None = None,
                     imag_tol: float = 1e-12) -> "HermitianOperator":
        """Canonicalize: merge identical patterns, require real sums, drop tiny terms."""
        acc: dict[str, complex] = {}
        for s in strings:
            if len(s.letters) != n_sites:
                raise ValueError("string length does not match n_sites")
            acc[s.letters] = acc.get(s.letters, 0.0) + complex(s.coefficient)
        scale = max((abs(c) for c in acc.values()), default=0.0)
        if drop_tol is None:
            drop_tol = 1e-15 * scale
        terms = []
        for letters in sorted(acc):
            c = acc[letters]
            if abs(c) <= drop_tol:
                continue
            if abs(c.imag) > imag_tol * max(1.0, abs(c.real)):
                raise ValueError(f"non-real coefficient {c} for pattern {letters!r}")
            terms.append(PauliString(c.real, letters))
        return cls(n_sites, tuple(terms))

    @classmethod
    def identity(cls, n_sites: int, coefficient: float = 1.0) -> "HermitianOperator":
        return cls.from_strings(n_sites, [PauliString(coefficient, "I" * n_sites)], drop_tol=0.0)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    @property
    def support(self) -> tuple[int, ...]:
        sites = set()
        for t in self.terms:
            sites.update(t.support)
        return tuple(sorted(sites))

    @property
    def is_real(self) -> bool:
        """True when the matrix is real (no odd-Y strings); lets solvers work in float64."""
        return bool(np.all(self._app[0].imag == 0.0))

    @property
    def one_norm(self) -> float:
        return float(np.sum(np.abs(self._app[0])))

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        if other.n_sites != self.n_sites:
            raise ValueError("operator sizes differ")
        return HermitianOperator.from_strings(self.n_sites, self.terms + other.terms, drop_tol=0.0)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        scaled = [PauliString(t.coefficient * scalar, t.letters) for t in self.terms]
        return HermitianOperator.from_strings(self.n_sites, scaled, drop_tol=0.0)

    __rmul__ = __mul__

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """O @ vec without forming a matrix; bit ops permute, sign and phase amplitudes."""
        vec = np.asarray(vec)
        if vec.shape != (self.dim,):
            raise ValueError(f"state has shape {vec.shape}, expected ({self.dim},)")
        coeffs, x_masks, z_masks = self._app
        out_dtype = np.result_type(vec.dtype, np.float64 if self.is_real else np.complex128)
        out = np.zeros(self.dim, dtype=out_dtype)
        idx = _indices(self.dim)
        for c, xm, zm in zip(coeffs, x_masks, z_masks):
            c = c if out_dtype == np.complex128 else c.real
            amp = c * vec if zm == 0 else (c * _z_signs(idx, int(zm))) * vec
            if xm == 0:
                out += amp
            else:
                out[idx ^ xm] += amp
        return out

    def expectation(self, vec: np.ndarray, imag_tol: float = 1e-12) -> float:
        """Re <vec|O|vec>; complains if a Hermitian operator produced an imaginary part."""
        val = np.vdot(vec, self.apply(vec))
        if abs(val.imag) > imag_tol * max(1.0, self.one_norm):
            raise ValueError(f"expectation has imaginary part {val.imag:g}; operator is not Hermitian")
        return float(val.real)

    def dense(self, sites: tuple[int, ...] | None = None) -> np.ndarray:
        """Dense matrix, optionally restricted to a sorted tuple of support sites.

        The restricted basis is little-endian over `sites`: bit j of the
        reduced index is the spin at sites[j].  Every term must act as the
        identity outside `sites`.
        """
        if sites is None:
            sites = tuple(range(self.n_sites))
        sites = tuple(sites)
        pos = {s: j for j, s in enumerate(sites)}
        dim = 1 << len(sites)
        mat = np.zeros((dim, dim), dtype=np.complex128)
        idx = _indices(dim)
        for term in self.terms:
            if not set(term.support) <= set(sites):
                raise ValueError(f"term {term.letters!r} acts outside sites {sites}")
            x = z = ny = 0
            for s in term.support:
                c = term.letters[s]
                if c in "XY":
                    x |= 1 << pos[s]
                if c in "ZY":
                    z |= 1 << pos[s]
                if c == "Y":
                    ny += 1
            coeff = term.coefficient * (1j) ** ny
            mat[idx ^ x, idx] += coeff * _z_signs(idx, z)
        if self.is_real:
            return mat.real.copy()
        return mat


def axis_operator(axis, site: int, n_sites: int) -> HermitianOperator:
    """axis . sigma at one site: ax*X + ay*Y + az*Z for a real 3-vector axis."""
    ax, ay, az = (float(a) for a in axis)
    if ax == ay == az == 0.0:
        raise ValueError("axis vector is zero")
    strings = [single_site(n_sites, site, letter, a)
               for letter, a in zip("XYZ", (ax, ay, az)) if a != 0.0]
    return HermitianOperator.from_strings(n_sites, strings, drop_tol=0.0)


def apply_single_qubit(mat: np.ndarray, vec: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Apply an arbitrary 2x2 matrix to one site of a state vector."""
    mat = np.asarray(mat)
    if mat.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if not 0 <= site < n_sites:
        raise ValueError(f"site {site} out of range for {n_sites} sites")
    dim = 1 << n_sites
    vec = np.asarray(vec)
    if vec.shape != (dim,):
        raise ValueError(f"state has shape {vec.shape}, expected ({dim},)")
    # index = hi * 2^(site+1) + b * 2^site + lo
    v3 = vec.reshape(1 << (n_sites - 1 - site), 2, 1 << site)
    out = np.einsum("ab,xby->xay", mat, v3)
    return out.reshape(dim)


def split_by_support(vec: np.ndarray, sites: tuple[int, ...], n_sites: int) -> np.ndarray:
    """Reshape a state into (2^k, 2^(N-k)): support index x environment index.

    The support index is little-endian over `sites` in the given order, the
    same convention as :meth:`HermitianOperator.dense` with a `sites` tuple.
    """
    sites = tuple(sites)
    vec = np.asarray(vec).reshape((2,) * n_sites)
    env = [s for s in range(n_sites) if s not in sites]
    # C-order reshape puts site N-1 on axis 0, so axis for site s is N-1-s.
    order = [n_sites - 1 - s for s in reversed(sites)] + [n_sites - 1 - s for s in reversed(env)]
    return vec.transpose(order).reshape(1 << len(sites), 1 << len(env))
