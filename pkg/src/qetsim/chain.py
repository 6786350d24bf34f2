"""Critical Ising chain as a site sum of energy density operators.

Each site carries a density operator

    T_n = -J sz_n - (J/2) sx_n (sx_{n+1} + sx_{n-1}) - eps_n

whose offset eps_n is tuned so that the ground state has exactly zero energy
density everywhere, <g|T_n|g> = 0.  The chain Hamiltonian is H = sum_n T_n;
after calibration it annihilates the ground state and is nonnegative.  On a
periodic chain translation invariance makes all eps_n equal; on an open chain
the offsets vary near the edges, so they are kept per-site.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import eigensolver
from .pauli import HermitianOperator, PauliString, from_sites, split_by_support

BOUNDARIES = ("periodic", "open")


@dataclass(frozen=True)
class ChainSpec:
    """Chain geometry, coupling, boundary condition, offsets, protocol sites."""

    n_sites: int
    coupling: float = 1.0
    boundary: str = "periodic"
    epsilon: tuple[float, ...] | None = None
    site_a: int = 0
    site_b: int = 1

    def __post_init__(self):
        if self.n_sites < 3:
            raise ValueError("need at least 3 sites")
        if not self.coupling > 0.0:
            raise ValueError("coupling J must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        eps = self.epsilon
        if eps is None:
            eps = (0.0,) * self.n_sites
        else:
            eps = tuple(float(e) for e in eps)
            if len(eps) != self.n_sites:
                raise ValueError("epsilon must have one offset per site")
        object.__setattr__(self, "epsilon", eps)
        for name in ("site_a", "site_b"):
            site = getattr(self, name)
            if not 0 <= site < self.n_sites:
                raise ValueError(f"{name}={site} out of range")
        if self.site_a == self.site_b:
            raise ValueError("site_a and site_b must differ")

    def neighbors(self, n: int) -> tuple[int, ...]:
        """Sites coupled to n; an open-chain edge has a single neighbor."""
        if self.boundary == "periodic":
            return ((n - 1) % self.n_sites, (n + 1) % self.n_sites)
        return tuple(m for m in (n - 1, n + 1) if 0 <= m < self.n_sites)

    def distance(self, m: int, n: int) -> int:
        """Separation |m - n|, circular on periodic chains."""
        d = abs(m - n)
        if self.boundary == "periodic":
            d = min(d, self.n_sites - d)
        return d

    def with_epsilon(self, epsilon) -> "ChainSpec":
        return replace(self, epsilon=tuple(float(e) for e in epsilon))

    def with_sites(self, site_a: int, site_b: int) -> "ChainSpec":
        return replace(self, site_a=site_a, site_b=site_b)


@dataclass(frozen=True)
class LocalSpectrum:
    """Eigenvalues of one T_n on its local support, with degeneracies."""

    site: int
    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)

    @property
    def minimum(self) -> float:
        return self.eigenvalues[0]


@dataclass(frozen=True)
class CorrelationCheck:
    """Two-point function versus its factorized form, Eq.-style entanglement witness."""

    lhs: float          # <g| T_n O_m |g>
    rhs: float          # <g| T_n |g> <g| O_m |g>
    gap: float          # |lhs - rhs|


def density_support(spec: ChainSpec, n: int) -> tuple[int, ...]:
    if not 0 <= n < spec.n_sites:
        raise ValueError(f"site {n} out of range")
    return tuple(sorted({n, *spec.neighbors(n)}))


def build_energy_density(spec: ChainSpec, n: int) -> HermitianOperator:
    """T_n = -J sz_n - (J/2) sx_n (sx_{n+1} + sx_{n-1}) - eps_n.

    Missing neighbors of an open-chain edge site drop their coupling term.
    """
    if not 0 <= n < spec.n_sites:
        raise ValueError(f"site {n} out of range")
    j = spec.coupling
    strings = [from_sites(spec.n_sites, -j, {n: "Z"})]
    for m in spec.neighbors(n):
        strings.append(from_sites(spec.n_sites, -j / 2.0, {n: "X", m: "X"}))
    strings.append(PauliString(-spec.epsilon[n], "I" * spec.n_sites))
    return HermitianOperator.from_strings(spec.n_sites, strings, drop_tol=1e-15 * j)


def build_hamiltonian(spec: ChainSpec) -> HermitianOperator:
    """H = sum_n T_n, canonicalized (each bond collects its two half-strength parts)."""
    strings = []
    for n in range(spec.n_sites):
        strings.extend(build_energy_density(spec, n).terms)
    return HermitianOperator.from_strings(spec.n_sites, strings, drop_tol=1e-15 * spec.coupling)


def calibrate_epsilon(spec: ChainSpec, ground: np.ndarray) -> np.ndarray:
    """Offsets eps_n = <g|(-J sz_n - (J/2) sx_n sx_{n+-1})|g> that zero every <T_n>.

    `ground` must be the normalized ground state of the chain Hamiltonian;
    the offsets are pure identity shifts, so they do not change it.
    """
    nrm = np.linalg.norm(ground)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"ground state is not normalized (norm {nrm:.3e})")
    bare = spec.with_epsilon((0.0,) * spec.n_sites)
    return np.array([build_energy_density(bare, n).expectation(ground)
                     for n in range(spec.n_sites)])


def calibrated_chain(n_sites: int, coupling: float = 1.0, boundary: str = "periodic",
                     site_a: int = 0, site_b: int = 1, tol: float = 1e-10,
                     seed: int = 0, method: str = "auto",
                     max_iter: int = 4000) -> tuple[ChainSpec, eigensolver.EigenResult]:
    """Build the chain, solve for its ground state, and tune the offsets.

    Returns the calibrated spec together with the ground-state result; the
    reported energy is the (near-zero) expectation of the calibrated H.
    """
    spec = ChainSpec(n_sites, coupling, boundary, None, site_a, site_b)
    res = eigensolver.ground_state(build_hamiltonian(spec), tol=tol, seed=seed,
                                   method=method, max_iter=max_iter)
    eps = calibrate_epsilon(spec, res.state)
    spec = spec.with_epsilon(eps)
    res.energy = res.energy - float(np.sum(eps))
    return spec, res


def local_density_spectrum(spec: ChainSpec, n: int, degeneracy_tol: float = 1e-9) -> LocalSpectrum:
    """Dense eigendecomposition of T_n restricted to its 2- or 3-site support."""
    support = density_support(spec, n)
    vals = np.linalg.eigvalsh(build_energy_density(spec, n).dense(sites=support))
    eigenvalues = []
    multiplicities = []
    for v in vals:
        if eigenvalues and abs(v - eigenvalues[-1]) < degeneracy_tol * max(1.0, spec.coupling):
            multiplicities[-1] += 1
        else:
            eigenvalues.append(float(v))
            multiplicities.append(1)
    return LocalSpectrum(n, tuple(eigenvalues), tuple(multiplicities))


def density_eigenbasis_weights(spec: ChainSpec, n: int, state: np.ndarray):
    """Expand a state in the eigenbasis of T_n: (eigenvalues, weights).

    The weights are the total probability carried by each local eigenvector
    (summed over the environment), so sum(w) = 1 and sum(e * w) = <T_n>.
    """
    support = density_support(spec, n)
    mat = build_energy_density(spec, n).dense(sites=support)
    vals, vecs = np.linalg.eigh(mat)
    blocks = split_by_support(state, support, spec.n_sites)
    coeffs = vecs.conj().T @ blocks
    weights = np.sum(np.abs(coeffs) ** 2, axis=1)
    return vals, weights


def correlation_check(ground: np.ndarray, t_n: HermitianOperator,
                      o_m: HermitianOperator) -> CorrelationCheck:
    """Test the factorization <T_n O_m> = <T_n><O_m> (fails iff entangled).

    Only meaningful for disjoint supports, where T_n O_m is Hermitian and
    the two-point function is real.
    """
    if set(t_n.support) & set(o_m.support):
        raise ValueError(f"supports overlap: {t_n.support} and {o_m.support}")
    tv = t_n.apply(ground)
    ov = o_m.apply(ground)
    lhs = np.vdot(tv, ov)
    if abs(lhs.imag) > 1e-10 * max(1.0, t_n.one_norm * o_m.one_norm):
        raise ValueError(f"two-point function has imaginary part {lhs.imag:g}")
    rhs = float(np.real(np.vdot(ground, tv)) * np.real(np.vdot(ground, ov)))
    return CorrelationCheck(float(lhs.real), rhs, abs(float(lhs.real) - rhs))
