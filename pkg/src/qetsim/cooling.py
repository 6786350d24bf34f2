"""Minimum residual energy over the sender's local quantum channels.

After step (i) the sender holds outcome mu and may apply any trace-preserving
local channel {M(alpha, mu)} to her qubit, hoping to pull her deposit back
out.  Nonnegativity of the total energy forbids full recovery: the minimum
of Tr[rho_c H] over channels is the residual energy E_r, and it stays above
the teleported energy E_B.

Channels are parameterized as Stinespring isometries from the qubit into
qubit x (4-level environment); an environment of dimension 4 reaches every
qubit channel, and the isometry form makes the Kraus completeness sum hold
by construction, so the search is unconstrained.  The objective is evaluated
through a precomputed 4x4 Gram matrix: Tr[rho_c H] is linear in the channel,
so for each outcome

    sum_alpha <M_alpha psi| H |M_alpha psi> = sum_alpha m_alpha^dag C m_alpha,
    C[(i,j),(k,l)] = w <psi| (|j><i| at A) H (|k><l| at A) |psi>,

with m_alpha = vec(M_alpha).  C is positive semidefinite (H >= 0), which
also certifies that no channel reports negative energy.  Because the
objective is linear in the channel's Choi matrix, the exact minimum is a
small semidefinite program (minimize Tr[J C~] over Choi matrices J >= 0 with
the partial-trace-identity constraint); the implementation here is the
simpler seeded multi-start simplex search, cross-checked against random
channel sampling.  The two outcomes decouple: each is minimized on its own
and the weighted results are summed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .chain import ChainSpec, build_hamiltonian
from .pauli import HermitianOperator, apply_single_qubit
from .protocol import (
    Branch,
    MeasurementSetup,
    MixedEnsemble,
    _resolve_ground,
    check_calibration,
    measure,
    projectors,
)

ENV_DIM = 4          # Choi rank of a qubit channel is at most 4
N_PARAMS = 2 * ENV_DIM * 2 * 2   # real + imaginary parts of an (2*ENV_DIM) x 2 matrix


@dataclass
class LocalChannel:
    """Outcome-indexed single-qubit Kraus sets, complete per outcome."""

    kraus_sets: dict[int, tuple[np.ndarray, ...]]

    def __post_init__(self):
        defect = self.completeness_defect()
        if defect > 1e-10:
            raise ValueError(f"Kraus completeness violated (defect {defect:.3e})")

    def completeness_defect(self) -> float:
        worst = 0.0
        for ops in self.kraus_sets.values():
            acc = sum(m.conj().T @ m for m in ops)
            worst = max(worst, float(np.max(np.abs(acc - np.eye(2)))))
        return worst

    @classmethod
    def identity(cls, outcomes=(0, 1)) -> "LocalChannel":
        return cls({mu: (np.eye(2, dtype=np.complex128),) for mu in outcomes})

    @classmethod
    def from_isometries(cls, isometries: dict[int, np.ndarray]) -> "LocalChannel":
        return cls({mu: _kraus_from_isometry(v) for mu, v in isometries.items()})


def _kraus_from_isometry(v: np.ndarray) -> tuple[np.ndarray, ...]:
    if v.shape != (2 * ENV_DIM, 2):
        raise ValueError(f"expected a {2 * ENV_DIM}x2 isometry")
    return tuple(v[2 * a: 2 * a + 2, :].copy() for a in range(ENV_DIM))


def isometry_from_params(params: np.ndarray) -> np.ndarray:
    """Orthonormalize an unconstrained parameter vector into an isometry.

    QR of the (2*ENV_DIM) x 2 complex matrix built from the 32 reals, with
    the R diagonal forced positive so the map is deterministic and smooth
    almost everywhere.  The identity channel sits at params = vec(I padded).
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (N_PARAMS,):
        raise ValueError(f"expected {N_PARAMS} parameters")
    half = N_PARAMS // 2
    mat = (params[:half] + 1j * params[half:]).reshape(2 * ENV_DIM, 2)
    q, r = np.linalg.qr(mat)
    diag = np.diagonal(r).copy()
    diag[diag == 0.0] = 1.0
    return q * (np.abs(diag) / diag)[np.newaxis, :]


def identity_params() -> np.ndarray:
    params = np.zeros(N_PARAMS)
    params[0] = 1.0   # real part of row 0, column 0
    params[3] = 1.0   # real part of row 1, column 1
    return params


def random_channel(seed: int, outcomes=(0, 1)) -> LocalChannel:
    """Haar-style random channel: an independent Ginibre-QR isometry per outcome."""
    rng = np.random.default_rng(seed)
    isometries = {}
    for mu in outcomes:
        g = rng.standard_normal((2 * ENV_DIM, 2)) + 1j * rng.standard_normal((2 * ENV_DIM, 2))
        q, r = np.linalg.qr(g)
        diag = np.diagonal(r)
        isometries[mu] = q * (np.abs(diag) / diag)[np.newaxis, :]
    return LocalChannel.from_isometries(isometries)


def apply_channel(ensemble: MixedEnsemble, channel: LocalChannel, site: int) -> MixedEnsemble:
    """Expand each branch through its outcome's Kraus set.

    A branch (w, psi, mu) becomes one branch per Kraus operator, weighted by
    w ||M psi||^2; completeness keeps the total weight at 1.  Branches below
    1e-14 are pruned.
    """
    n_sites = int(math.log2(len(ensemble.branches[0].state)))
    branches = []
    for b in ensemble.branches:
        if b.weight == 0.0:
            continue
        if b.outcome not in channel.kraus_sets:
            raise ValueError(f"channel has no Kraus set for outcome {b.outcome}")
        for m in channel.kraus_sets[b.outcome]:
            vec = apply_single_qubit(m, b.state, site, n_sites)
            nrm2 = float(np.real(np.vdot(vec, vec)))
            w = b.weight * nrm2
            if w < 1e-14:
                continue
            branches.append(Branch(w, vec / math.sqrt(nrm2), b.outcome))
    return MixedEnsemble(tuple(branches))


def channel_energy(ensemble: MixedEnsemble, channel: LocalChannel, site: int,
                   hamiltonian: HermitianOperator) -> float:
    """Tr[rho_c H] by direct branch expansion (the slow, independent route)."""
    return apply_channel(ensemble, channel, site).energy(hamiltonian)


class OutcomeObjective:
    """Per-outcome cooling objective w <psi| M^dag H M |psi> as a 4x4 Gram form."""

    def __init__(self, weight: float, state: np.ndarray, site: int,
                 hamiltonian: HermitianOperator):
        n_sites = hamiltonian.n_sites
        units = []
        for k in range(2):
            for l in range(2):
                e_kl = np.zeros((2, 2), dtype=np.complex128)
                e_kl[k, l] = 1.0
                units.append(apply_single_qubit(e_kl, state, site, n_sites))
        h_units = [hamiltonian.apply(u) for u in units]
        gram = np.empty((4, 4), dtype=np.complex128)
        for i in range(4):
            for j in range(4):
                gram[i, j] = np.vdot(units[i], h_units[j])
        self.gram = weight * 0.5 * (gram + gram.conj().T)

    def from_isometry(self, isometry: np.ndarray) -> float:
        vecs = isometry.reshape(ENV_DIM, 4)   # row-major vec of each Kraus block
        return float(np.real(np.einsum("ap,pq,aq->", vecs.conj(), self.gram, vecs)))

    def __call__(self, params: np.ndarray) -> float:
        return self.from_isometry(isometry_from_params(params))


@dataclass
class CoolingResult:
    e_r_numeric: float
    best_channel: LocalChannel
    restarts_used: int
    per_restart: tuple[float, ...]
    e_a: float
    per_outcome: tuple[float, ...]   # weighted per-outcome minima summing to e_r


def minimize_residual(spec: ChainSpec, setup: MeasurementSetup, restarts: int = 32,
                      seed: int = 0, max_evals: int = 5000, tol: float = 1e-10,
                      ground=None) -> CoolingResult:
    """Minimize the post-measurement energy over the sender's local channels.

    The protocol stops after step (i); each measurement outcome is cooled by
    its own channel (the objective is a weighted sum of decoupled outcome
    terms).  Restart 0 starts from the identity channel, so the result never
    exceeds E_A; the remaining restarts are seeded random simplex searches.
    """
    g = _resolve_ground(spec, ground, tol, seed)
    check_calibration(spec, g)
    hamiltonian = build_hamiltonian(spec)
    p_0, p_1 = projectors(setup.axis_a, spec.site_a, spec.n_sites)
    ensemble, e_a = measure(g, p_0, p_1, hamiltonian)

    objectives = [OutcomeObjective(b.weight, b.state, spec.site_a, hamiltonian)
                  for b in ensemble.branches if b.weight > 0.0]
    outcomes = [b.outcome for b in ensemble.branches if b.weight > 0.0]

    rng = np.random.default_rng(seed)
    minima = np.empty((len(objectives), restarts))
    best_params = [None] * len(objectives)
    for r in range(restarts):
        for i, objective in enumerate(objectives):
            x0 = identity_params() if r == 0 else rng.standard_normal(N_PARAMS)
            res = minimize(objective, x0, method="Nelder-Mead",
                           options={"maxfev": max_evals, "fatol": tol,
                                    "xatol": 1e-8, "adaptive": True})
            minima[i, r] = res.fun
            # ties keep the earliest restart, so the pick is deterministic
            if r == 0 or res.fun < minima[i, :r].min():
                best_params[i] = res.x
    per_outcome = minima.min(axis=1)
    per_restart = tuple(float(v) for v in minima.sum(axis=0))
    e_r = float(per_outcome.sum())

    channel = LocalChannel.from_isometries(
        {mu: isometry_from_params(p) for mu, p in zip(outcomes, best_params)})
    if e_r < -1e-9 * spec.coupling:
        raise RuntimeError(f"cooling objective went negative ({e_r:.3e}); "
                           "the Gram form should be positive semidefinite")
    return CoolingResult(e_r, channel, restarts, per_restart, e_a,
                         tuple(float(v) for v in per_outcome))
