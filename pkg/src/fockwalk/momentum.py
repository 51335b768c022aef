"""Bulk momentum-space analytics for the split-step walk.

Dispersion and Bloch vector of the translation-invariant walk, quasi-energy
gaps, numeric winding numbers in the two chiral time frames, the Z2 x Z2
phase label built from them, the boundary <-> virtual-bulk correspondence,
and bound-state prediction via the topology-mismatch rule.

Momentum convention: plane waves |n> ~ e^{ikn}, so the up-shift is
S_up(k) = diag(e^{-ik}, 1) and the down-shift S_dn(k) = diag(1, e^{ik}),
giving the dispersion cos E(k) = cos(t2/2) cos(t1/2) cos k - sin(t1/2) sin(t2/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from .lattice import BoundaryPhase, BulkParams, coin_matrix

DEGENERACY_TOL = 1e-8
GAP_OPEN_TOL = 1e-6


class GapClosed(RuntimeError):
    """A quasi-energy gap is closed (or too small); invariants are undefined."""


class DegeneratePoint(RuntimeError):
    """sin E(k) vanishes at this momentum; the Bloch vector is undefined."""


class ChiralAxisNotFound(RuntimeError):
    """The sampled Bloch vectors do not lie in a plane; no chiral axis."""


class TimeFrame(Enum):
    F1 = 1
    F2 = 2


@dataclass(frozen=True)
class BlochSample:
    k: float
    energy: float
    n_vec: tuple[float, float, float]


@dataclass(frozen=True)
class PhaseLabel:
    """Frame windings (nu_prime, nu_dprime) and the Z2 pair (nu0, nu_pi)."""

    nu_prime: int
    nu_dprime: int
    nu0: int
    nu_pi: int


@dataclass(frozen=True)
class GapReport:
    delta0: float
    delta_pi: float


def _shift_up(k):
    return np.array([[np.exp(-1j * k), 0.0], [0.0, 1.0]])


def _shift_down(k):
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * k)]])


def bulk_unitary_k(params: BulkParams, k: float) -> np.ndarray:
    """One-step unitary at momentum k: S_up(k) R(theta2) S_dn(k) R(theta1)."""
    return (_shift_up(k) @ coin_matrix(params.theta2)
            @ _shift_down(k) @ coin_matrix(params.theta1))


def time_frame_unitary_k(params: BulkParams, frame: TimeFrame, k: float) -> np.ndarray:
    """Chiral-frame unitary at momentum k (same eigenphases as the bare step)."""
    if frame is TimeFrame.F1:
        half = coin_matrix(params.theta1 / 2.0)
        return half @ _shift_up(k) @ coin_matrix(params.theta2) @ _shift_down(k) @ half
    half = coin_matrix(params.theta2 / 2.0)
    return half @ _shift_down(k) @ coin_matrix(params.theta1) @ _shift_up(k) @ half


def dispersion_cos_e(params: BulkParams, k) -> np.ndarray:
    """cos E(k) from the closed-form dispersion relation."""
    c1, s1 = math.cos(params.theta1 / 2.0), math.sin(params.theta1 / 2.0)
    c2, s2 = math.cos(params.theta2 / 2.0), math.sin(params.theta2 / 2.0)
    return c2 * c1 * np.cos(k) - s1 * s2


def dispersion_energy(params: BulkParams, k) -> np.ndarray:
    """Quasi-energy branch E(k) in [0, pi]."""
    return np.arccos(np.clip(dispersion_cos_e(params, k), -1.0, 1.0))


def dispersion_bloch(params: BulkParams, k: float) -> BlochSample:
    """Closed-form Bloch sample (E, n) at one momentum.

    Raises DegeneratePoint where sin E(k) < 1e-8 (gap closure; the Bloch
    direction is undefined there and callers must skip or refine).
    """
    c1, s1 = math.cos(params.theta1 / 2.0), math.sin(params.theta1 / 2.0)
    c2, s2 = math.cos(params.theta2 / 2.0), math.sin(params.theta2 / 2.0)
    cos_e = c2 * c1 * math.cos(k) - s1 * s2
    cos_e = min(1.0, max(-1.0, cos_e))
    energy = math.acos(cos_e)
    sin_e = math.sin(energy)
    if abs(sin_e) < DEGENERACY_TOL:
        raise DegeneratePoint(f"sin E = {sin_e:.2e} at k = {k}")
    nx = c2 * s1 * math.sin(k) / sin_e
    ny = (s2 * c1 + c2 * s1 * math.cos(k)) / sin_e
    nz = -c2 * c1 * math.sin(k) / sin_e
    return BlochSample(k=k, energy=energy, n_vec=(nx, ny, nz))


def _frame_unitaries(params: BulkParams, frame: TimeFrame, ks: np.ndarray) -> np.ndarray:
    """Stack of 2x2 frame unitaries over a k grid, shape (len(ks), 2, 2)."""
    c1 = coin_matrix(params.theta1)
    c2 = coin_matrix(params.theta2)
    h1 = coin_matrix(params.theta1 / 2.0)
    h2 = coin_matrix(params.theta2 / 2.0)
    eminus = np.exp(-1j * ks)
    up = np.zeros((ks.size, 2, 2), dtype=complex)
    up[:, 0, 0] = eminus
    up[:, 1, 1] = 1.0
    dn = np.zeros((ks.size, 2, 2), dtype=complex)
    dn[:, 0, 0] = 1.0
    dn[:, 1, 1] = np.conj(eminus)
    if frame is TimeFrame.F1:
        return h1 @ up @ c2 @ dn @ h1
    return h2 @ dn @ c1 @ up @ h2


def _bloch_vectors(us: np.ndarray) -> np.ndarray:
    """Unit Bloch vectors n(k) of a stack of SU(2) unitaries.

    Uses U = cos E - i sin E (n . sigma) with the branch E in (0, pi);
    raises GapClosed if sin E is too small anywhere on the grid.
    """
    cos_e = np.real(us[:, 0, 0] + us[:, 1, 1]) / 2.0
    sin_e = np.sqrt(np.clip(1.0 - cos_e**2, 0.0, None))
    if np.any(sin_e < DEGENERACY_TOL):
        raise GapClosed("gap closes on the sampled grid")
    n = np.empty((us.shape[0], 3))
    n[:, 0] = -np.imag(us[:, 0, 1]) / sin_e
    n[:, 1] = -np.real(us[:, 0, 1]) / sin_e
    n[:, 2] = -np.imag(us[:, 0, 0]) / sin_e
    return n


def _chiral_axis(n: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to every sampled Bloch vector.

    Smallest right-singular direction of the sample matrix, sign-fixed by
    making the largest-magnitude component positive.
    """
    _, _, vt = np.linalg.svd(n, full_matrices=False)
    axis = vt[-1]
    residual = float(np.max(np.abs(n @ axis)))
    if residual > 1e-6:
        raise ChiralAxisNotFound(f"planarity residual {residual:.2e}")
    lead = np.argmax(np.abs(axis))
    if axis[lead] < 0:
        axis = -axis
    return axis


def chiral_axis(params: BulkParams, frame: TimeFrame, n_k: int = 512) -> np.ndarray:
    """Recovered chiral axis of a frame (diagnostic; for this walk family it
    is the x axis in both frames, independent of the coin angles)."""
    ks = np.linspace(-math.pi, math.pi, n_k, endpoint=False)
    return _chiral_axis(_bloch_vectors(_frame_unitaries(params, frame, ks)))


def winding_number(params: BulkParams, frame: TimeFrame, n_k: int = 2048) -> int:
    """Winding of the frame Bloch vector around the chiral axis.

    Samples n(k) on a uniform grid, finds the chiral axis, builds the
    right-handed in-plane basis (e1 = projected x-axis, or y-axis when that
    projection degenerates), and counts full turns of the unwrapped angle.
    The orientation convention makes (pi/2, 0) give +1 in frame F1.
    """
    gaps = quasienergy_gaps(params)
    if gaps.delta0 <= GAP_OPEN_TOL or gaps.delta_pi <= GAP_OPEN_TOL:
        raise GapClosed(f"gaps ({gaps.delta0:.2e}, {gaps.delta_pi:.2e}) too small")
    ks = np.linspace(-math.pi, math.pi, n_k, endpoint=False)
    n = _bloch_vectors(_frame_unitaries(params, frame, ks))
    axis = _chiral_axis(n)
    e1 = np.array([1.0, 0.0, 0.0]) - axis[0] * axis
    if np.linalg.norm(e1) < 0.5:
        e1 = np.array([0.0, 1.0, 0.0]) - axis[1] * axis
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    angles = np.arctan2(n @ e2, n @ e1)
    increments = np.diff(np.concatenate([angles, angles[:1]]))
    increments = (increments + math.pi) % (2.0 * math.pi) - math.pi
    total = float(np.sum(increments)) / (2.0 * math.pi)
    nearest = round(total)
    if abs(total - nearest) > 1e-3:
        raise ChiralAxisNotFound(f"winding {total} not close to an integer")
    return int(nearest)


def z2_invariants(params: BulkParams, n_k: int = 2048) -> PhaseLabel:
    """Z2 x Z2 phase label from the two frame windings.

    nu0 counts the 0-energy channel and nu_pi the pi-energy channel.  The
    combination below is fixed by the bulk-edge anchor (pi/2, 0) -> (1, 0)
    and reproduces the dense-oracle edge-mode counts across the diagram.
    """
    nu_p = winding_number(params, TimeFrame.F1, n_k)
    nu_dp = winding_number(params, TimeFrame.F2, n_k)
    nu0 = ((1 + nu_p + nu_dp) // 2) % 2
    nu_pi = ((1 - nu_p + nu_dp) // 2) % 2
    return PhaseLabel(nu_prime=nu_p, nu_dprime=nu_dp, nu0=nu0, nu_pi=nu_pi)


def virtual_bulk_params(theta1: float, phi: BoundaryPhase) -> BulkParams:
    """Bulk parameters of the virtual phase encoded by the boundary operator."""
    return BulkParams(theta1, -math.pi if phi.phi == 0.0 else math.pi)


def predict_bound_states(real: BulkParams, phi: BoundaryPhase,
                         n_k: int = 2048) -> tuple[int, int]:
    """Channel-resolved bound-state prediction at the boundary.

    (b0, b_pi) with b = 1 where the real and virtual bulks disagree in that
    channel: bound states exist iff the two topologies differ.
    """
    real_label = z2_invariants(real, n_k)
    virt_label = z2_invariants(virtual_bulk_params(real.theta1, phi), n_k)
    return (real_label.nu0 ^ virt_label.nu0, real_label.nu_pi ^ virt_label.nu_pi)


def quasienergy_gaps(params: BulkParams, n_k: int = 4096) -> GapReport:
    """Minimal distances of the band E(k) to 0 and to pi.

    Coarse scan plus bounded local refinement near each minimum.
    """
    ks = np.linspace(-math.pi, math.pi, n_k, endpoint=False)
    energies = dispersion_energy(params, ks)
    step = 2.0 * math.pi / n_k

    def refine(objective, k0):
        res = minimize_scalar(objective, bounds=(k0 - step, k0 + step),
                              method="bounded", options={"xatol": 1e-10})
        return min(objective(k0), float(res.fun))

    k_low = ks[int(np.argmin(energies))]
    k_high = ks[int(np.argmax(energies))]
    delta0 = refine(lambda k: float(dispersion_energy(params, k)), k_low)
    delta_pi = refine(lambda k: math.pi - float(dispersion_energy(params, k)), k_high)
    return GapReport(delta0=max(delta0, 0.0), delta_pi=max(delta_pi, 0.0))


@dataclass(frozen=True)
class DiagramPoint:
    theta1: float
    theta2: float
    label: PhaseLabel | None
    gaps: GapReport
    status: str  # "ok" or "transition"


def phase_diagram(thetas1, thetas2, n_k: int = 1024,
                  transition_tol: float = 1e-2) -> list[DiagramPoint]:
    """Classify every (theta1, theta2) grid point; mark gap closures."""
    points = []
    for t1 in thetas1:
        for t2 in thetas2:
            params = BulkParams(float(t1), float(t2))
            gaps = quasienergy_gaps(params, n_k)
            if min(gaps.delta0, gaps.delta_pi) < transition_tol:
                points.append(DiagramPoint(float(t1), float(t2), None, gaps, "transition"))
            else:
                label = z2_invariants(params, n_k)
                points.append(DiagramPoint(float(t1), float(t2), label, gaps, "ok"))
    return points
