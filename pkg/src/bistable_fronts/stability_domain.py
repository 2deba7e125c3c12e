# Dominio de monotonía D(a-, b-) = {(tau, c): c <= clin(tau)} y sus constantes

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import brentq
from scipy.special import lambertw

from bistable_fronts.config import (
    BOUNDARY_GRID_OFFSET,
    BOUNDARY_INF_FRACTION,
    BRACKET_MAX_DOUBLINGS,
    CLIN_C_MIN,
    CLIN_MAX_ITER,
    CLIN_RESIDUAL_TOL,
    DOMAIN_BOUNDARY_RTOL,
    OMEGA_BRACKET,
    TAU_SHARP_TOL,
)
from bistable_fronts.errors import DomainInconsistencyError, SolverError
from bistable_fronts.outputs import parallel_map, timer
from bistable_fronts.quasipoly import CharParams, all_real_roots

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DomainParams:
    """Coeficientes (a-, b-) de la linealización en e3, ambos negativos."""

    a_minus: float
    b_minus: float

    def __post_init__(self):
        if not (self.a_minus < 0 and self.b_minus < 0):
            raise ValueError(
                f"Se requiere a- < 0 y b- < 0, se recibió ({self.a_minus}, {self.b_minus})"
            )

    @property
    def a_abs(self) -> float:
        return -self.a_minus

    @property
    def b_abs(self) -> float:
        return -self.b_minus


@dataclass(frozen=True)
class DomainCurve:
    """Muestras (tau, clin) de la frontera; clin = math.inf para tau <= tau#."""

    params: DomainParams
    taus: np.ndarray
    clins: np.ndarray

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.taus.tolist(), self.clins.tolist()))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"tau": self.taus, "clin": self.clins})


@dataclass(frozen=True)
class DomainCheck:
    """Resultado de in_domain con el conteo de raíces reales de chi- como diagnóstico."""

    inside: bool
    clin: float
    root_count: int
    real_roots: Tuple[Tuple[float, int], ...]
    near_boundary: bool


#######################################################################################
# Funciones A(c, h) y B(c, h) de la frontera
#######################################################################################


def _sqrt_disc(params: DomainParams, c, h):
    return np.sqrt(c * c * h * h + 4.0 + 4.0 * params.a_abs * h * h)


def boundary_A(params: DomainParams, c, h):
    """A(c, h) = (2 + sqrt(c^2 h^2 + 4 + 4|a|h^2)) / (e h^2 |b|)."""
    with np.errstate(divide="ignore"):
        return (2.0 + _sqrt_disc(params, c, h)) / (math.e * h * h * params.b_abs)


def boundary_B(params: DomainParams, c, h):
    """B(c, h) = exp((2 + 2|a|h^2) / (c h + sqrt(c^2 h^2 + 4 + 4|a|h^2)))."""
    return np.exp(
        (2.0 + 2.0 * params.a_abs * h * h) / (c * h + _sqrt_disc(params, c, h))
    )


#######################################################################################
# Constantes tau#, omega, theta
#######################################################################################


def tau_sharp(params: DomainParams) -> float:
    """
    tau# > 0, raíz única de e |b| tau e^{|a| tau} = 1.

    Bisección en (0, 1/(e|b|)] seguida de un pulido de Newton.
    """

    def f(tau: float) -> float:
        return math.e * params.b_abs * tau * math.exp(params.a_abs * tau) - 1.0

    upper = 1.0 / (math.e * params.b_abs)
    tau = float(brentq(f, 0.0, upper, xtol=1e-16, maxiter=200))

    for _ in range(5):
        slope = math.e * params.b_abs * math.exp(params.a_abs * tau) * (1.0 + params.a_abs * tau)
        step = f(tau) / slope
        tau -= step
        if abs(step) < 1e-17:
            break

    if abs(f(tau)) >= TAU_SHARP_TOL:
        raise SolverError(f"tau# sin convergencia: residuo {abs(f(tau)):.3e}")
    return tau


def tau_sharp_lambertw(params: DomainParams) -> float:
    """tau# en forma cerrada: W(|a| / (e|b|)) / |a|."""
    return float(lambertw(params.a_abs / (math.e * params.b_abs)).real) / params.a_abs


def theta(params: DomainParams) -> Tuple[float, float]:
    """
    (omega, theta) con omega < 0 raíz de -2a = b e^{-omega}(2 + omega)
    y theta = sqrt(2 omega / b) e^{omega/2}.

    Sobre (-2, 0) no hay raíces, así que se acota en [-50, -2].
    """

    def f(w: float) -> float:
        return params.b_minus * math.exp(-w) * (2.0 + w) + 2.0 * params.a_minus

    lo, hi = OMEGA_BRACKET
    omega = float(brentq(f, lo, hi, xtol=1e-15, maxiter=200))
    scale = max(1.0, abs(params.b_minus * math.exp(-omega) * (2.0 + omega)))
    if abs(f(omega)) >= TAU_SHARP_TOL * scale:
        raise SolverError(f"omega sin convergencia: residuo {abs(f(omega)):.3e}")

    theta_value = math.sqrt(2.0 * omega / params.b_minus) * math.exp(omega / 2.0)
    return omega, theta_value


#######################################################################################
# Frontera clin(tau) y c^E(h)
#######################################################################################


def clin(params: DomainParams, tau: float) -> float:
    """
    Velocidad límite del dominio a retardo tau; math.inf si tau <= tau#.

    A lo largo de h = c*tau, A - B es positiva para c chico y negativa para c grande,
    así que c_hi se duplica hasta que A < B y se bisecciona.

    Raises:
        ValueError: si tau < 0
    """
    if tau < 0:
        raise ValueError(f"tau debe ser no negativo, se recibió tau={tau}")
    if tau <= tau_sharp(params):
        return math.inf

    def gap(c: float) -> float:
        h = c * tau
        return float(boundary_A(params, c, h) - boundary_B(params, c, h))

    upper = 1.0
    for _ in range(BRACKET_MAX_DOUBLINGS):
        if gap(upper) < 0:
            break
        upper *= 2.0
    else:
        raise SolverError(f"No se pudo acotar clin({tau})")

    lower = CLIN_C_MIN
    if gap(lower) <= 0:
        raise SolverError(f"clin({tau}) por debajo de {CLIN_C_MIN}")

    value = float(brentq(gap, lower, upper, xtol=1e-14, rtol=1e-14, maxiter=CLIN_MAX_ITER))
    b_value = float(boundary_B(params, value, value * tau))
    if abs(gap(value)) >= CLIN_RESIDUAL_TOL * max(1.0, b_value):
        raise SolverError(f"clin({tau}) sin convergencia: residuo {abs(gap(value)):.3e}")
    return value


def c_E(params: DomainParams, h: float) -> float:
    """
    Frontera en coordenadas (h, c): 0 si h <= theta, si no la raíz de A(c,h) = B(c,h).

    A fija h, A crece y B decrece en c.

    Raises:
        ValueError: si h < 0
    """
    if h < 0:
        raise ValueError(f"h debe ser no negativo, se recibió h={h}")
    if h == 0:
        return 0.0

    def gap(c: float) -> float:
        return float(boundary_A(params, c, h) - boundary_B(params, c, h))

    if gap(0.0) >= 0:
        return 0.0

    upper = 1.0
    for _ in range(BRACKET_MAX_DOUBLINGS):
        if gap(upper) > 0:
            break
        upper *= 2.0
    else:
        raise SolverError(f"No se pudo acotar c_E({h})")

    return float(brentq(gap, 0.0, upper, xtol=1e-14, rtol=1e-14, maxiter=CLIN_MAX_ITER))


def boundary_double_root(params: DomainParams, tau: float) -> float:
    """Raíz doble negativa de chi- en c = clin(tau), para tau > tau#."""
    c = clin(params, tau)
    if math.isinf(c):
        raise ValueError(f"tau={tau} no supera tau#, no hay frontera finita")
    h = c * tau
    disc = math.sqrt(c * c * h * h + 4.0 + 4.0 * params.a_abs * h * h)
    return (c * h - 2.0 - disc) / (2.0 * h)


#######################################################################################
# Pertenencia al dominio
#######################################################################################


def in_domain(params: DomainParams, tau: float, c: float) -> DomainCheck:
    """
    (tau, c) está en D si c <= clin(tau).

    Se contrasta con el número de raíces reales de chi- (3 dentro, 1 fuera; con tau = 0
    chi- es cuadrática y tiene 2). Cerca de la frontera (banda relativa 1e-6) no se exige.

    Raises:
        ValueError: si tau < 0 o c <= 0
        DomainInconsistencyError: si clin y el conteo de raíces no coinciden
    """
    if tau < 0 or not c > 0:
        raise ValueError(f"Se requiere tau >= 0 y c > 0, se recibió tau={tau}, c={c}")

    boundary = clin(params, tau)
    inside = c <= boundary
    near = math.isfinite(boundary) and abs(c - boundary) <= DOMAIN_BOUNDARY_RTOL * boundary

    roots = all_real_roots(CharParams(params.a_minus, params.b_minus, c, c * tau))
    count = sum(m for _, m in roots)

    if tau == 0:
        expected = 2
    else:
        expected = 3 if inside else 1

    if count != expected and not near:
        raise DomainInconsistencyError(
            f"domain inconsistency: en tau={tau}, c={c} "
            f"clin={boundary}, raíces reales={count} (se esperaban {expected})"
        )

    return DomainCheck(
        inside=inside,
        clin=boundary,
        root_count=count,
        real_roots=tuple(roots),
        near_boundary=near,
    )


#######################################################################################
# Trazado de la frontera
#######################################################################################


def boundary_grid(tau_sharp_value: float, tau_max: float, n_points: int) -> np.ndarray:
    """
    Grilla de tau: un tramo uniforme en [0, tau#] y un tramo geométrico desde
    tau# + 1e-4 hasta tau_max, apretado cerca de tau#.
    """
    n_inf = max(1, int(round(BOUNDARY_INF_FRACTION * n_points)))
    n_inf = min(n_inf, n_points - 1)
    n_finite = n_points - n_inf

    inf_taus = np.linspace(0.0, tau_sharp_value, n_inf) if n_inf > 1 else np.array([0.0])
    span = tau_max - tau_sharp_value
    if n_finite == 1:
        finite_taus = np.array([tau_max])
    elif span <= BOUNDARY_GRID_OFFSET:
        finite_taus = tau_sharp_value + np.linspace(span / n_finite, span, n_finite)
    else:
        offsets = np.geomspace(BOUNDARY_GRID_OFFSET, span, n_finite)
        finite_taus = tau_sharp_value + offsets
        finite_taus[-1] = tau_max
    return np.concatenate([inf_taus, finite_taus])


@timer
def trace_boundary(
    params: DomainParams, tau_max: float, n_points: int, jobs: Optional[int] = 1
) -> DomainCurve:
    """
    Muestrea clin(tau) sobre [0, tau_max] para graficar la frontera.

    Raises:
        ValueError: si tau_max <= tau# o n_points < 2
    """
    ts = tau_sharp(params)
    if tau_max <= ts:
        raise ValueError(
            f"entire range has clin = ∞: tau_max={tau_max} no supera tau#={ts:.6g}"
        )
    if n_points < 2:
        raise ValueError(f"Se necesitan al menos 2 puntos, se recibió {n_points}")

    taus = boundary_grid(ts, tau_max, n_points)
    logger.info(f"Trazando clin para {len(taus)} valores de tau (tau# = {ts:.6f})")
    clins = parallel_map(_clin_worker, [(params, float(t)) for t in taus], jobs)

    return DomainCurve(params=params, taus=taus, clins=np.asarray(clins, dtype=float))


def _clin_worker(args: Tuple[DomainParams, float]) -> float:
    params, tau = args
    return clin(params, tau)
