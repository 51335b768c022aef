"""Observables and bound-state diagnostics for walker states.

Edge population, site-resolved spin readout, phonon moments, localization
fits of stable edge profiles, plateau detection, and a dense eigen-oracle
that diagonalizes the one-step matrix and classifies 0- and pi-energy edge
modes.  The oracle is the independent reference the dynamical results are
checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .lattice import BoundaryPhase, BulkParams, WalkerState, build_step_matrix

EIGENPHASE_TOL = 1e-6
OCCUPATION_FLOOR = 1e-9


class SiteUnoccupied(RuntimeError):
    """Too little population on the site for a conditional spin readout."""


class InsufficientSupport(RuntimeError):
    """Not enough sites above the probability floor to fit a decay length."""


class DegenerateClassification(RuntimeError):
    """An eigenphase sits within tolerance of both 0 and pi."""


@dataclass(frozen=True)
class ObservableRecord:
    step: int
    p_edge: float
    sx0: float  # nan when site 0 is unoccupied
    sx1: float
    mean_n: float
    var_n: float
    norm: float


@dataclass(frozen=True)
class EigenMode:
    eigenphase: float
    amplitudes: np.ndarray  # flattened (site, spin) vector
    edge_weight: float
    mode_class: str  # "zero" or "pi"

    def site_probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes[0::2]) ** 2 + np.abs(self.amplitudes[1::2]) ** 2


@dataclass(frozen=True)
class LocalizationFit:
    lam: float          # decay length: p_n ~ exp(-n / lam)
    ratio_even: float   # fitted p_{n+2} / p_n
    r_squared: float


def edge_population(state: WalkerState) -> float:
    """P_edge = p_0 + p_1."""
    p = state.site_probabilities()
    return float(p[0] + p[1])


def spin_expectation_x(state: WalkerState, site: int) -> float:
    """<sigma_x> conditioned on occupying ``site``."""
    a = state.up[site]
    b = state.down[site]
    weight = abs(a) ** 2 + abs(b) ** 2
    if weight < OCCUPATION_FLOOR:
        raise SiteUnoccupied(f"site {site} carries {weight:.2e}")
    return float(2.0 * np.real(a * np.conj(b)) / weight)


def phonon_moments(state: WalkerState) -> tuple[float, float]:
    """(mean, variance) of the phonon-number distribution."""
    p = state.site_probabilities()
    total = float(np.sum(p))
    sites = np.arange(p.size)
    mean = float(np.dot(sites, p)) / total
    var = float(np.dot(sites**2, p)) / total - mean**2
    return mean, max(var, 0.0)


def observable_record(step: int, state: WalkerState) -> ObservableRecord:
    """Snapshot of the standard observables; unoccupied spins become nan."""
    mean, var = phonon_moments(state)
    sx = []
    for site in (0, 1):
        try:
            sx.append(spin_expectation_x(state, site))
        except SiteUnoccupied:
            sx.append(float("nan"))
    return ObservableRecord(step=step, p_edge=edge_population(state),
                            sx0=sx[0], sx1=sx[1], mean_n=mean, var_n=var,
                            norm=state.norm())


def _localized_group_vectors(vectors: np.ndarray) -> np.ndarray:
    """Disentangle a (near-)degenerate eigenspace into site-localized vectors.

    Orthonormalizes the group and then diagonalizes the mean-site operator
    inside it, so left- and right-edge partners separate cleanly.
    """
    q, _ = np.linalg.qr(vectors)
    sites = np.repeat(np.arange(q.shape[0] // 2), 2)
    x = q.conj().T @ (sites[:, None] * q)
    _, w = np.linalg.eigh((x + x.conj().T) / 2.0)
    return q @ w


def edge_eigenmodes(params: BulkParams, phi: BoundaryPhase, n_max: int = 64,
                    tol: float = EIGENPHASE_TOL) -> list[EigenMode]:
    """Diagonalize the dense step and return the left-edge 0/pi modes.

    Eigenphases within ``tol`` of 0 (pi) classify as "zero" ("pi") provided
    the mode carries more than half of its weight on sites 0..1; modes living
    at the mirrored right edge are dropped by a left-half-weight filter.
    """
    if n_max < 32:
        raise ValueError("n_max must be at least 32 for a clean edge spectrum")
    u = build_step_matrix(params, phi, n_max)
    eigvals, eigvecs = scipy.linalg.eig(u)
    phases = -np.angle(eigvals)  # U |psi> = e^{-iE} |psi>

    modes: list[EigenMode] = []
    half = (n_max + 1) // 2
    for target in ("zero", "pi"):
        if target == "zero":
            group = [j for j in range(phases.size) if abs(phases[j]) < tol]
        else:
            group = [j for j in range(phases.size) if abs(abs(phases[j]) - math.pi) < tol]
        if not group:
            continue
        for j in group:
            if abs(phases[j]) < tol and abs(abs(phases[j]) - math.pi) < tol:
                raise DegenerateClassification(f"eigenphase {phases[j]} matches 0 and pi")
        vecs = _localized_group_vectors(eigvecs[:, group])
        for col in range(vecs.shape[1]):
            v = vecs[:, col]
            v = v / np.linalg.norm(v)
            p = np.abs(v[0::2]) ** 2 + np.abs(v[1::2]) ** 2
            if float(np.sum(p[:half])) <= 0.5:
                continue  # lives at the mirrored right edge
            edge_weight = float(p[0] + p[1])
            if edge_weight <= 0.5:
                continue
            phase = float(phases[group[col]])
            modes.append(EigenMode(eigenphase=phase, amplitudes=v,
                                   edge_weight=edge_weight, mode_class=target))
    modes.sort(key=lambda m: abs(m.eigenphase))
    return modes


def successive_ratios(profile: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """p_{n+1} / p_n wherever both sit above the floor (nan elsewhere)."""
    profile = np.asarray(profile, dtype=float)
    ratios = np.full(profile.size - 1, np.nan)
    ok = (profile[:-1] > floor) & (profile[1:] > floor)
    ratios[ok] = profile[1:][ok] / profile[:-1][ok]
    return ratios


def fit_localization(profile: np.ndarray, floor: float = 1e-12) -> LocalizationFit:
    """Log-linear least-squares decay length of a stable edge profile.

    Fits ln p_n over the leading window of sites above the floor and reports
    the positive decay length lam with p_n ~ exp(-n / lam), the implied
    even-site ratio, and the fit quality.
    """
    profile = np.asarray(profile, dtype=float)
    window = np.flatnonzero(profile > floor)
    if window.size < 6:
        raise InsufficientSupport(f"only {window.size} sites above {floor}")
    # keep the contiguous run that starts at the first admissible site
    run_end = window[0]
    for j in window:
        if j == run_end:
            run_end += 1
        else:
            break
    sites = np.arange(window[0], run_end)
    if sites.size < 6:
        raise InsufficientSupport(f"only {sites.size} sites above {floor}")
    logs = np.log(profile[sites])
    slope, intercept = np.polyfit(sites, logs, 1)
    predicted = slope * sites + intercept
    ss_res = float(np.sum((logs - predicted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if slope >= 0:
        raise InsufficientSupport("profile does not decay")
    return LocalizationFit(lam=-1.0 / slope, ratio_even=float(np.exp(2.0 * slope)),
                           r_squared=r_squared)


def detect_stabilization(series, window: int = 10, tol: float = 0.01,
                         start: int = 0) -> int | None:
    """Earliest index where the next ``window`` samples are flat within tol.

    Even- and odd-index subsequences of the window are tested separately so
    a period-2 oscillation between two constants still counts as stable.
    Returns None when no such index exists.
    """
    if window < 4:
        raise ValueError("window must be at least 4")
    values = np.asarray(list(series), dtype=float)
    for i in range(max(start, 0), values.size - window + 1):
        chunk = values[i:i + window]
        even, odd = chunk[0::2], chunk[1::2]
        if (even.max() - even.min() < tol) and (odd.max() - odd.min() < tol):
            return i
    return None
