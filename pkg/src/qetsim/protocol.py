"""The three-step energy teleportation protocol on a calibrated chain.

Step (i): the sender projectively measures one Pauli component sigma_A of
her qubit, depositing energy E_A into the chain.  Step (ii): the outcome mu
travels to the receiver classically (implicit here: the post-measurement
state is stored as outcome-labelled branches).  Step (iii): the receiver
applies V_B(mu) = cos(theta) I + i (-1)^mu sin(theta) sigma_B, choosing

    cos(2 theta) = xi / sqrt(xi^2 + eta^2),  sin(2 theta) = -eta / sqrt(xi^2 + eta^2)

with xi = <g|sigma_B H sigma_B|g> and eta = i <g|sigma_A [H, sigma_B]|g>,
which extracts E_B = (sqrt(xi^2 + eta^2) - xi) / 2 from the chain.  No time
evolution is applied between steps (the short-time regime is hard-coded).

Mixed states never appear as dense density matrices: a measurement produces
two weighted pure branches and every later stage maps branches to branches.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import eigensolver
from .chain import ChainSpec, build_energy_density, build_hamiltonian
from .pauli import HermitianOperator, axis_operator

AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}

PROFILE_STAGES = ("ground", "post_measurement", "post_feedback")


@dataclass(frozen=True)
class MeasurementSetup:
    """Bloch directions of the measured and feedback Pauli components."""

    axis_a: tuple[float, float, float] = AXES["x"]
    axis_b: tuple[float, float, float] = AXES["x"]

    def __post_init__(self):
        for name in ("axis_a", "axis_b"):
            vec = tuple(float(c) for c in getattr(self, name))
            if len(vec) != 3:
                raise ValueError(f"{name} must be a 3-vector")
            if abs(math.sqrt(sum(c * c for c in vec)) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be unit length")
            object.__setattr__(self, name, vec)

    @classmethod
    def cardinal(cls, label_a: str, label_b: str) -> "MeasurementSetup":
        return cls(AXES[label_a], AXES[label_b])


@dataclass(frozen=True)
class Branch:
    weight: float
    state: np.ndarray
    outcome: int


@dataclass(frozen=True)
class MixedEnsemble:
    """Mixed state as weighted, normalized, outcome-labelled pure branches."""

    branches: tuple[Branch, ...]

    def __post_init__(self):
        total = sum(b.weight for b in self.branches)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"branch weights sum to {total!r}, not 1")
        for b in self.branches:
            if b.weight < 0.0:
                raise ValueError("negative branch weight")
            if b.weight > 0.0 and abs(np.linalg.norm(b.state) - 1.0) > 1e-8:
                raise ValueError("branch state is not normalized")

    def energy(self, op: HermitianOperator) -> float:
        return sum(b.weight * op.expectation(b.state) for b in self.branches if b.weight > 0.0)


@dataclass(frozen=True)
class ProtocolResult:
    e_a: float
    xi: float
    eta: float
    theta_star: float
    e_b: float
    trace_energy: float        # Tr[rho H] after feedback at theta_used
    theta_used: float
    teleportable: bool
    profiles: dict[str, tuple[float, ...]]


def projectors(axis, site: int, n_sites: int) -> tuple[HermitianOperator, HermitianOperator]:
    """Spectral projectors P_mu = (I + (-1)^mu axis.sigma) / 2 at one site."""
    sigma = axis_operator(axis, site, n_sites)
    half = HermitianOperator.identity(n_sites, 0.5)
    return half + 0.5 * sigma, half + (-0.5) * sigma


def measure(ground: np.ndarray, p_0: HermitianOperator, p_1: HermitianOperator,
            hamiltonian: HermitianOperator) -> tuple[MixedEnsemble, float]:
    """Project the ground state, returning the outcome ensemble and E_A.

    E_A = sum_mu <g|P_mu H P_mu|g> is the energy the measurement deposits;
    it is positive whenever the measured component fails to commute with H.
    A branch of weight below 1e-14 is kept with weight exactly zero.
    """
    branches = []
    e_a = 0.0
    total = 0.0
    for outcome, proj in enumerate((p_0, p_1)):
        vec = proj.apply(ground)
        weight = float(np.real(np.vdot(vec, vec)))
        if weight < 1e-14:
            branches.append(Branch(0.0, np.zeros_like(vec), outcome))
            continue
        state = vec / math.sqrt(weight)
        branches.append(Branch(weight, state, outcome))
        e_a += weight * hamiltonian.expectation(state)
        total += weight
    # projective completeness leaves total = 1 up to roundoff; rescale exactly
    branches = [Branch(b.weight / total if b.weight else 0.0, b.state, b.outcome)
                for b in branches]
    return MixedEnsemble(tuple(branches)), e_a


def _commutes_with_bracket(sigma_a: HermitianOperator, sigma_b: HermitianOperator,
                           hamiltonian: HermitianOperator, seed: int = 11) -> bool:
    """True when [sigma_A, [H, sigma_B]] vanishes (checked on a random vector)."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(hamiltonian.dim) + 1j * rng.standard_normal(hamiltonian.dim)
    v /= np.linalg.norm(v)

    def bracket(vec):
        return hamiltonian.apply(sigma_b.apply(vec)) - sigma_b.apply(hamiltonian.apply(vec))

    diff = sigma_a.apply(bracket(v)) - bracket(sigma_a.apply(v))
    return float(np.linalg.norm(diff)) < 1e-10 * max(1.0, hamiltonian.one_norm)


def xi_eta(ground: np.ndarray, sigma_a: HermitianOperator, sigma_b: HermitianOperator,
           hamiltonian: HermitianOperator, imag_tol: float = 1e-10) -> tuple[float, float]:
    """xi = <g|sigma_B H sigma_B|g> >= 0 and eta = Re[i <g|sigma_A [H, sigma_B]|g>].

    The real part of i<sigma_A [H, sigma_B]> is the coefficient that enters
    the feedback energy identity (it is the anticommutator average, which is
    real by construction).  When sigma_A commutes with [H, sigma_B], which
    separation by two or more sites guarantees, the raw value is already
    real, so an imaginary residue above `imag_tol` then signals an operator
    bug and raises.  For touching supports the residue is a genuine contact
    term and is discarded.
    """
    bv = sigma_b.apply(ground)
    hbv = hamiltonian.apply(bv)
    xi = np.vdot(bv, hbv)
    av = sigma_a.apply(ground)
    bhv = sigma_b.apply(hamiltonian.apply(ground))
    eta = 1j * (np.vdot(av, hbv) - np.vdot(av, bhv))
    scale = max(1.0, hamiltonian.one_norm)
    if abs(xi.imag) > imag_tol * scale:
        raise ValueError(f"imaginary residue in xi: {xi.imag:g}")
    if abs(eta.imag) > imag_tol * scale and _commutes_with_bracket(sigma_a, sigma_b, hamiltonian):
        raise ValueError(f"imaginary residue in eta: {eta.imag:g}")
    return float(xi.real), float(eta.real)


def optimal_theta(xi: float, eta: float, zero_tol: float = 1e-14) -> float:
    """Feedback angle minimizing the post-protocol energy, in (-pi/2, pi/2]."""
    if abs(xi) < zero_tol and abs(eta) < zero_tol:
        warnings.warn("xi and eta both vanish; no energy can be teleported")
        return 0.0
    return 0.5 * math.atan2(-eta, xi)


def eq9_energy(e_a: float, xi: float, eta: float, theta: float) -> float:
    """Closed form for Tr[rho H] after feedback at angle theta."""
    return e_a + (eta / 2.0) * math.sin(2.0 * theta) + (xi / 2.0) * (1.0 - math.cos(2.0 * theta))


def teleported_energy(xi: float, eta: float) -> float:
    """E_B = (sqrt(xi^2 + eta^2) - xi) / 2, written to survive eta -> 0."""
    if xi < 0.0:
        raise ValueError("xi must be nonnegative")
    return 0.5 * eta * eta / (math.hypot(xi, eta) + xi) if (xi or eta) else 0.0


def apply_feedback(ensemble: MixedEnsemble, sigma_b: HermitianOperator,
                   theta: float) -> MixedEnsemble:
    """Rotate each branch by its outcome-conditioned unitary V_B(mu)."""
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    branches = []
    for b in ensemble.branches:
        if b.weight == 0.0:
            branches.append(b)
            continue
        phase = 1j * (-1.0) ** b.outcome * sin_t
        branches.append(Branch(b.weight, cos_t * b.state + phase * sigma_b.apply(b.state),
                               b.outcome))
    return MixedEnsemble(tuple(branches))


def ensemble_energy(ensemble: MixedEnsemble, hamiltonian: HermitianOperator) -> float:
    return ensemble.energy(hamiltonian)


def _density_profile(spec: ChainSpec, states) -> tuple[float, ...]:
    """Per-site <T_n> averaged over weighted states [(weight, state), ...]."""
    profile = []
    for n in range(spec.n_sites):
        t_n = build_energy_density(spec, n)
        profile.append(sum(w * t_n.expectation(s) for w, s in states if w > 0.0))
    return tuple(profile)


def _resolve_ground(spec: ChainSpec, ground, tol: float, seed: int) -> np.ndarray:
    if ground is None:
        res = eigensolver.ground_state(build_hamiltonian(spec), tol=tol, seed=seed)
        return res.state
    if isinstance(ground, eigensolver.EigenResult):
        return ground.state
    return np.asarray(ground)


def check_calibration(spec: ChainSpec, ground: np.ndarray, tol: float = 1e-8) -> None:
    worst = max(abs(build_energy_density(spec, n).expectation(ground))
                for n in range(spec.n_sites))
    if worst > tol * spec.coupling:
        raise ValueError(
            f"spec is not calibrated: max |<T_n>| = {worst:.3e}; "
            "run chain.calibrated_chain or chain.calibrate_epsilon first")


def closed_form_exact(sigma_a: HermitianOperator, sigma_b: HermitianOperator,
                      hamiltonian: HermitianOperator, seed: int = 7) -> bool:
    """Whether the closed-form energy identity is exact for this configuration.

    The identity requires sigma_A to commute with sigma_B [H, sigma_B].  That
    holds automatically once the parties are separated by two or more sites;
    for adjacent sites it depends on the axes (in this model a feedback axis
    of x keeps sigma_B [H, sigma_B] on B's site alone).  Checked numerically
    on a random vector.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(hamiltonian.dim) + 1j * rng.standard_normal(hamiltonian.dim)
    v /= np.linalg.norm(v)

    def k_b(vec):
        # sigma_B [H, sigma_B] vec = sigma_B H sigma_B vec - H vec
        return sigma_b.apply(hamiltonian.apply(sigma_b.apply(vec))) - hamiltonian.apply(vec)

    comm = k_b(sigma_a.apply(v)) - sigma_a.apply(k_b(v))
    return float(np.linalg.norm(comm)) < 1e-10 * max(1.0, hamiltonian.one_norm)


def run_protocol(spec: ChainSpec, setup: MeasurementSetup, theta: float | None = None,
                 ground=None, tol: float = 1e-10, seed: int = 0) -> ProtocolResult:
    """Full measurement -> communication -> feedback pipeline with energy bookkeeping.

    `theta` overrides the optimal feedback angle (the reported theta_star is
    always the optimum).  `ground` may carry a precomputed ground state to
    avoid re-solving.  Per-site <T_n> profiles are recorded for the ground
    state, after the measurement, and after the feedback.
    """
    g = _resolve_ground(spec, ground, tol, seed)
    check_calibration(spec, g)
    hamiltonian = build_hamiltonian(spec)
    sigma_a = axis_operator(setup.axis_a, spec.site_a, spec.n_sites)
    sigma_b = axis_operator(setup.axis_b, spec.site_b, spec.n_sites)

    profiles = {"ground": _density_profile(spec, [(1.0, g)])}

    p_0, p_1 = projectors(setup.axis_a, spec.site_a, spec.n_sites)
    ensemble, e_a = measure(g, p_0, p_1, hamiltonian)
    profiles["post_measurement"] = _density_profile(
        spec, [(b.weight, b.state) for b in ensemble.branches])

    xi, eta = xi_eta(g, sigma_a, sigma_b, hamiltonian)
    teleportable = math.hypot(xi, eta) > 1e-14
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        theta_star = optimal_theta(xi, eta)
    theta_used = theta_star if theta is None else float(theta)

    ensemble = apply_feedback(ensemble, sigma_b, theta_used)
    profiles["post_feedback"] = _density_profile(
        spec, [(b.weight, b.state) for b in ensemble.branches])
    trace_energy = ensemble_energy(ensemble, hamiltonian)
    e_b = e_a - trace_energy

    if theta is None and teleportable:
        closed = teleported_energy(xi, eta)
        if abs(e_b - closed) > 1e-8 * max(1.0, spec.coupling):
            if closed_form_exact(sigma_a, sigma_b, hamiltonian):
                raise RuntimeError(
                    f"energy bookkeeping violated: simulated E_B {e_b:.12g} vs "
                    f"closed form {closed:.12g}")
            warnings.warn(
                "closed-form E_B does not apply: sender and receiver are close "
                "enough that sigma_A fails to commute with sigma_B [H, sigma_B]; "
                "reporting the simulated value")
    return ProtocolResult(e_a, xi, eta, theta_star, e_b, trace_energy, theta_used,
                          teleportable, profiles)


@dataclass(frozen=True)
class SweepPoint:
    label: str
    axis_a: tuple[float, float, float]
    axis_b: tuple[float, float, float]
    xi: float
    eta: float
    e_b: float


@dataclass(frozen=True)
class AxisSweepResult:
    points: tuple[SweepPoint, ...]
    best: MeasurementSetup
    best_e_b: float


def correlation_tensors(spec: ChainSpec, ground: np.ndarray,
                        hamiltonian: HermitianOperator | None = None,
                        imag_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """3x3 tensors reducing (xi, eta) at any axes to bilinear forms.

    xi(b) = b . Xi b with Xi[q,q'] = Re <g|sigma^q_B H sigma^q'_B|g>, and
    eta(a, b) = a . N b with N[p,q] = i <g|sigma^p_A [H, sigma^q_B]|g>.
    """
    h = build_hamiltonian(spec) if hamiltonian is None else hamiltonian
    a_vecs = [axis_operator(AXES[p], spec.site_a, spec.n_sites).apply(ground) for p in "xyz"]
    b_vecs = [axis_operator(AXES[q], spec.site_b, spec.n_sites).apply(ground) for q in "xyz"]
    h_b_vecs = [h.apply(v) for v in b_vecs]
    hg = h.apply(ground)
    b_hg = [axis_operator(AXES[q], spec.site_b, spec.n_sites).apply(hg) for q in "xyz"]

    scale = max(1.0, h.one_norm)
    xi_mat = np.empty((3, 3))
    eta_mat = np.empty((3, 3))
    for q in range(3):
        for qp in range(3):
            xi_mat[q, qp] = np.real(np.vdot(b_vecs[q], h_b_vecs[qp]))
    for p in range(3):
        for q in range(3):
            val = 1j * (np.vdot(a_vecs[p], h_b_vecs[q]) - np.vdot(a_vecs[p], b_hg[q]))
            if abs(val.imag) > imag_tol * scale and _commutes_with_bracket(
                    axis_operator(AXES["xyz"[p]], spec.site_a, spec.n_sites),
                    axis_operator(AXES["xyz"[q]], spec.site_b, spec.n_sites), h):
                raise ValueError(f"imaginary residue {val.imag:g} in eta tensor")
            eta_mat[p, q] = val.real
    # symmetrize: only the symmetric part of Xi enters xi(b)
    xi_mat = 0.5 * (xi_mat + xi_mat.T)
    return xi_mat, eta_mat


def axis_sweep(spec: ChainSpec, refine: int = 0, ground=None,
               tol: float = 1e-10, seed: int = 0) -> AxisSweepResult:
    """E_B landscape over measurement/feedback axis pairs.

    Always evaluates the nine cardinal pairs {x,y,z} x {x,y,z}.  With
    refine > 0, additionally scans the feedback axis over a (refine+1) x
    2*refine spherical grid; for each candidate axis_b the optimal axis_a is
    the closed-form maximizer of |eta|, so the sender sphere needs no grid.
    """
    g = _resolve_ground(spec, ground, tol, seed)
    check_calibration(spec, g)
    xi_mat, eta_mat = correlation_tensors(spec, g)

    def evaluate(a_vec: np.ndarray, b_vec: np.ndarray) -> tuple[float, float, float]:
        xi = float(b_vec @ xi_mat @ b_vec)
        eta = float(a_vec @ eta_mat @ b_vec)
        return xi, eta, teleported_energy(max(xi, 0.0), eta)

    points = []
    labels = "xyz"
    for p in range(3):
        for q in range(3):
            a_vec = np.asarray(AXES[labels[p]])
            b_vec = np.asarray(AXES[labels[q]])
            xi, eta, e_b = evaluate(a_vec, b_vec)
            points.append(SweepPoint(f"{labels[p]}|{labels[q]}", tuple(a_vec),
                                     tuple(b_vec), xi, eta, e_b))

    if refine > 0:
        for b_vec in _sphere_grid(refine):
            row = eta_mat @ b_vec
            nrm = float(np.linalg.norm(row))
            a_vec = row / nrm if nrm > 1e-14 else np.asarray(AXES["x"])
            xi, eta, e_b = evaluate(a_vec, b_vec)
            points.append(SweepPoint("refined", tuple(float(c) for c in a_vec),
                                     tuple(float(c) for c in b_vec), xi, eta, e_b))

    best_point = max(points, key=lambda pt: pt.e_b)
    best = MeasurementSetup(_renormalize(best_point.axis_a), _renormalize(best_point.axis_b))
    return AxisSweepResult(tuple(points), best, best_point.e_b)


def _renormalize(vec) -> tuple[float, float, float]:
    arr = np.asarray(vec, dtype=float)
    arr = arr / np.linalg.norm(arr)
    return tuple(float(c) for c in arr)


def _sphere_grid(refine: int):
    """(refine+1) polar rings of 2*refine azimuthal points, poles deduplicated."""
    for i in range(refine + 1):
        polar = math.pi * i / refine
        n_az = 1 if i in (0, refine) else 2 * refine
        for j in range(n_az):
            az = math.pi * j / refine
            yield np.array([math.sin(polar) * math.cos(az),
                            math.sin(polar) * math.sin(az),
                            math.cos(polar)])
