# Verificación a posteriori de frentes: residuo, monotonía, oscilación y exponentes de las colas

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from bistable_fronts.config import (
    FIT_MIN_DECADES,
    FIT_NOISE_FLOOR,
    MONO_TOL_REL,
    SIGN_CHANGE_FLOOR,
    TAIL_WINDOW_FRACTION,
)
from bistable_fronts.model_zoo import ModelSpec, SteadyStates, linearization
from bistable_fronts.quasipoly import left_decay_rate, right_decay_rate
from bistable_fronts.waves import WaveProfile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExponentFit:
    """Ajuste log-lineal |phi - e| ~ A e^{rate t} sobre una ventana de la cola."""

    rate: float
    r_squared: float
    decades: float


@dataclass
class VerifyReport:
    residual_inf: float
    monotone: bool
    first_nonmonotone_t: Optional[float]
    tail_sign_changes: int
    left_exponent_fit: Optional[ExponentFit]
    right_exponent_fit: Optional[ExponentFit]
    predicted_left: Optional[float]
    predicted_right: Optional[float]
    right_multiplicity: int = 0
    notes: List[str] = field(default_factory=list)


#######################################################################################
# Residuo por un camino independiente del solver
#######################################################################################


def _lagrange_delayed(profile: WaveProfile, shifted: np.ndarray) -> np.ndarray:
    # phi(t - h) con el polinomio de Lagrange de 4 nodos, extensión asintótica a la izquierda
    grid, values = profile.grid, profile.values
    dt = profile.step
    n = len(grid) - 1
    s = (shifted - grid[0]) / dt
    j = np.clip(np.floor(s).astype(int), 1, n - 2)
    x = s - j
    stencil = np.stack([values[j - 1], values[j], values[j + 1], values[j + 2]])
    weights = np.stack(
        [
            -x * (x - 1.0) * (x - 2.0) / 6.0,
            (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0,
            -(x + 1.0) * x * (x - 2.0) / 2.0,
            (x + 1.0) * x * (x - 1.0) / 6.0,
        ]
    )
    out = np.sum(stencil * weights, axis=0)
    left = s < 0
    if np.any(left):
        out[left] = profile.e1 + (values[0] - profile.e1) * np.exp(
            profile.rho_left * (shifted[left] - grid[0])
        )
    return out


def recompute_residual(profile: WaveProfile, model: ModelSpec) -> np.ndarray:
    """Residuo discreto de phi'' - c phi' + g(phi, phi(t - h)) en los nodos interiores."""
    phi = profile.values
    dt = profile.step
    second = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / dt**2
    first = (phi[2:] - phi[:-2]) / (2.0 * dt)
    delayed = _lagrange_delayed(profile, profile.grid[1:-1] - profile.h)
    return second - profile.c * first + model.g(phi[1:-1], delayed)


def _require_uniform(profile: WaveProfile) -> None:
    spacing = np.diff(profile.grid)
    if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0):
        raise ValueError("La verificación requiere una grilla uniforme")


#######################################################################################
# Monotonía y oscilación
#######################################################################################


def monotonicity(profile: WaveProfile) -> Tuple[bool, Optional[float]]:
    """(monótono, primer t con pendiente discreta < -mono_tol)."""
    dt = profile.step
    slope = np.gradient(profile.values, dt)[1:-1]
    mono_tol = MONO_TOL_REL * (profile.e3 - profile.e1) / dt
    bad = np.nonzero(slope < -mono_tol)[0]
    if len(bad) == 0:
        return True, None
    return False, float(profile.grid[1 + bad[0]])


def tail_sign_changes(profile: WaveProfile) -> int:
    """Alternancias de signo de phi - e3 en la ventana derecha, ignorando el ruido."""
    n = len(profile.grid)
    start = int(np.floor((1.0 - TAIL_WINDOW_FRACTION) * n))
    deviation = profile.values[start:] - profile.e3
    floor = SIGN_CHANGE_FLOOR * (profile.e3 - profile.e1)
    signs = np.sign(deviation[np.abs(deviation) >= floor])
    if len(signs) < 2:
        return 0
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


#######################################################################################
# Exponentes
#######################################################################################


def fit_exponent(
    t: np.ndarray, y: np.ndarray, scale: float, polynomial_prefactor: bool = False
) -> Tuple[Optional[ExponentFit], Optional[str]]:
    """
    Ajusta log|y| = log A + rate t por mínimos cuadrados.

    Con polynomial_prefactor se ajusta log|y| - log|t| (raíz doble, cola A t e^{rate t}).

    Returns:
        (ajuste, nota); el ajuste es None si la ventana no cubre una década sobre el ruido
    """
    y = np.abs(np.asarray(y, dtype=float))
    t = np.asarray(t, dtype=float)
    keep = y > FIT_NOISE_FLOOR * scale
    if polynomial_prefactor:
        keep &= t != 0.0
    t, y = t[keep], y[keep]
    if len(t) < 3:
        return None, "ventana sin puntos sobre el piso de ruido"

    decades = float(np.log10(y.max() / y.min()))
    if decades < FIT_MIN_DECADES:
        return None, f"la ventana cubre {decades:.2f} décadas (< {FIT_MIN_DECADES:g})"

    target = np.log(y)
    if polynomial_prefactor:
        target = target - np.log(np.abs(t))
    rate, intercept = np.polyfit(t, target, 1)
    fitted = rate * t + intercept
    ss_res = float(np.sum((target - fitted) ** 2))
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(rate=float(rate), r_squared=r_squared, decades=decades), None


def predicted_rates(
    profile: WaveProfile, model: ModelSpec, states: SteadyStates
) -> Tuple[Optional[float], Optional[float], int, List[str]]:
    """Raíces designadas: dominante positiva en e1, mayor negativa en e3."""
    notes: List[str] = []
    a1, b1 = linearization(model, states.e1)
    a3, b3 = linearization(model, states.e3)
    try:
        left = left_decay_rate(a1, b1, profile.c, profile.h)
    except ValueError as e:
        left = None
        notes.append(f"sin exponente en e1: {e}")
    right, multiplicity = right_decay_rate(a3, b3, profile.c, profile.h)
    if right is None:
        notes.append("chi en e3 no tiene raíces reales negativas")
    return left, right, multiplicity, notes


def verify(profile: WaveProfile, model: ModelSpec, states: SteadyStates) -> VerifyReport:
    """
    Audita un perfil calculado.

    Raises:
        ValueError: si la grilla no es uniforme
    """
    _require_uniform(profile)
    notes: List[str] = []

    residual = float(np.max(np.abs(recompute_residual(profile, model))))
    monotone, first_bad = monotonicity(profile)
    changes = tail_sign_changes(profile)

    n = len(profile.grid)
    width = max(3, int(np.floor(TAIL_WINDOW_FRACTION * n)))
    scale = profile.e3 - profile.e1
    left_fit, note = fit_exponent(
        profile.grid[:width], profile.values[:width] - profile.e1, scale
    )
    if note:
        notes.append(f"ajuste izquierdo omitido: {note}")

    predicted_left, predicted_right, multiplicity, rate_notes = predicted_rates(
        profile, model, states
    )
    notes.extend(rate_notes)

    right_fit = None
    if changes > 0:
        notes.append(f"ajuste derecho omitido: cola oscilante ({changes} cambios de signo)")
    else:
        right_fit, note = fit_exponent(
            profile.grid[-width:],
            profile.values[-width:] - profile.e3,
            scale,
            polynomial_prefactor=multiplicity == 2,
        )
        if note:
            notes.append(f"ajuste derecho omitido: {note}")

    if not monotone:
        logger.warning(f"Perfil no monótono desde t={first_bad:.4g} ({profile.model_id})")

    return VerifyReport(
        residual_inf=residual,
        monotone=monotone,
        first_nonmonotone_t=first_bad,
        tail_sign_changes=changes,
        left_exponent_fit=left_fit,
        right_exponent_fit=right_fit,
        predicted_left=predicted_left,
        predicted_right=predicted_right,
        right_multiplicity=multiplicity,
        notes=notes,
    )


def report_as_dict(report: VerifyReport) -> dict:
    """Versión plana del reporte, para JSON o bloques clave=valor."""

    def fit_fields(prefix: str, fit: Optional[ExponentFit]) -> dict:
        if fit is None:
            return {f"{prefix}_rate": None, f"{prefix}_r_squared": None}
        return {f"{prefix}_rate": fit.rate, f"{prefix}_r_squared": fit.r_squared}

    return {
        "residual_inf": report.residual_inf,
        "monotone": report.monotone,
        "first_nonmonotone_t": report.first_nonmonotone_t,
        "tail_sign_changes": report.tail_sign_changes,
        **fit_fields("left_exponent_fit", report.left_exponent_fit),
        **fit_fields("right_exponent_fit", report.right_exponent_fit),
        "predicted_left": report.predicted_left,
        "predicted_right": report.predicted_right,
        "right_multiplicity": report.right_multiplicity,
        "notes": "; ".join(report.notes),
    }
