# Modelo de juguete lineal a trozos: velocidades exactas, colas y perfiles

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from bistable_fronts.config import (
    BRACKET_MAX_DOUBLINGS,
    DEGENERATE_K_STAR_TOL,
    QUADRATURE_EPSABS,
    TOY_C_LO,
    TOY_ESCAPE_BOUND,
    TOY_MAX_STEP,
    TOY_MIN_STEPS_PER_DELAY,
    TOY_SPEED_MAX_ITER,
    TOY_SPEED_TOL,
    TOY_T_MAX_CAP,
    TOY_T_MAX_MIN,
)
from bistable_fronts.errors import (
    BranchUnavailableError,
    DomainInconsistencyError,
    IllPosedWindowError,
    SolverError,
)
from bistable_fronts.outputs import parallel_map, timer
from bistable_fronts.quasipoly import (
    CharParams,
    Rect,
    count_roots_in_rect,
    default_window,
    dominant_positive_root,
    right_decay_rate,
)
from bistable_fronts.stability_domain import DomainParams, clin, in_domain, tau_sharp
from bistable_fronts.waves import ContinuationCurve, ContinuationPoint, Termination, WaveProfile

logger = logging.getLogger(__name__)

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class ToyParams:
    """
    f(u) = p u para u < kappa y 1 + q (u - 1) para u >= kappa; e1 = 0, e3 = 1.

    Raises:
        ValueError: si kappa o p no están en (0, 1) o si q >= 0
    """

    kappa: float
    p: float
    q: float

    def __post_init__(self):
        if not 0 < self.kappa < 1:
            raise ValueError(f"kappa debe estar en (0, 1), se recibió {self.kappa}")
        if not 0 < self.p < 1:
            raise ValueError(f"p debe estar en (0, 1), se recibió {self.p}")
        if not self.q < 0:
            raise ValueError(f"q debe ser negativo, se recibió {self.q}")

    @property
    def label(self) -> str:
        return f"toy(kappa={self.kappa:g},p={self.p:g},q={self.q:g})"


@dataclass(frozen=True)
class ToySpeedResult:
    """Velocidad c (con signo), raíces mu1/lambda1 y clasificación de monotonía."""

    c: float
    mu1: float
    lambda1: float
    monotone: bool
    K_value: Optional[float]
    tau: float
    branch: str
    residual: float
    warnings: Tuple[str, ...] = field(default_factory=tuple)


#######################################################################################
# Funciones cerradas
#######################################################################################


def toy_birth(params: ToyParams, u):
    """f(u) del modelo de juguete (vectorizada)."""
    u = np.asarray(u, dtype=float)
    return np.where(u < params.kappa, params.p * u, 1.0 + params.q * (u - 1.0))


def k_star(params: ToyParams) -> float:
    """k* = kappa (1 + sqrt((1-p)/(1-q))); k* < 1 selecciona la rama positiva."""
    return params.kappa * (1.0 + math.sqrt((1.0 - params.p) / (1.0 - params.q)))


def p_integral(params: ToyParams, method: str = "exact") -> float:
    """
    Integral de -u + f(u) sobre [0, 1].

    Args:
        method: "exact" (fórmula cerrada) o "quad" (cuadratura adaptativa con quiebre en kappa)
    """
    if method == "exact":
        return 0.5 * (
            (1.0 - params.q) * (1.0 - params.kappa) ** 2 - (1.0 - params.p) * params.kappa**2
        )
    if method == "quad":
        value, _ = quad(
            lambda u: -u + float(toy_birth(params, u)),
            0.0,
            1.0,
            points=[params.kappa],
            epsabs=QUADRATURE_EPSABS,
        )
        return float(value)
    raise ValueError(f"Método desconocido: {method!r}")


def K_at_zero(params: ToyParams) -> float:
    """Límite K(0+) = (1-q)/(p-q) (1 - sqrt((1-p)/(1-q)))."""
    ratio = math.sqrt((1.0 - params.p) / (1.0 - params.q))
    return (1.0 - params.q) / (params.p - params.q) * (1.0 - ratio)


#######################################################################################
# Raíces características y ecuaciones de velocidad
#######################################################################################


def _toy_char(coefficient: float, c_abs: float, tau: float) -> CharParams:
    return CharParams(-1.0, coefficient, c_abs, c_abs * tau)


def char_root_mu1(params: ToyParams, c_abs: float, tau: float) -> float:
    """Raíz positiva de z^2 - |c| z - 1 + p e^{-|c| tau z}."""
    if not c_abs > 0 or tau < 0:
        raise ValueError(f"Se requiere |c| > 0 y tau >= 0, se recibió {c_abs}, {tau}")
    return dominant_positive_root(_toy_char(params.p, c_abs, tau))


def char_root_lambda1(params: ToyParams, c_abs: float, tau: float) -> float:
    """Raíz positiva de z^2 - |c| z - 1 + q e^{-|c| tau z}."""
    if not c_abs > 0 or tau < 0:
        raise ValueError(f"Se requiere |c| > 0 y tau >= 0, se recibió {c_abs}, {tau}")
    return dominant_positive_root(_toy_char(params.q, c_abs, tau))


def root_ratio(params: ToyParams, c_abs: float, tau: float) -> float:
    """mu1(c) / lambda1(c), estrictamente creciente en c."""
    return char_root_mu1(params, c_abs, tau) / char_root_lambda1(params, c_abs, tau)


def speed_function_K(params: ToyParams, c: float, tau: float) -> float:
    """K(c) = (1-q)/(p-q) (1 - mu1(c)/lambda1(c)), decreciente en c."""
    return (1.0 - params.q) / (params.p - params.q) * (1.0 - root_ratio(params, c, tau))


def negative_speed_gap(params: ToyParams, c_abs: float, tau: float) -> float:
    """
    G(|c|) = (1-p)/(p-q) (lambda1/mu1 - 1) - (1 - kappa), evaluada en |c| = c_abs.

    La rama negativa resuelve G(|c|) = 0, es decir 1 - kappa = (1-p)/(p-q) (lambda1/mu1 - 1).
    G es decreciente en |c|.
    """
    ratio = 1.0 / root_ratio(params, c_abs, tau)
    return (1.0 - params.p) / (params.p - params.q) * (ratio - 1.0) - (1.0 - params.kappa)


def _expand_bracket(func, start: float = 1.0) -> float:
    upper = start
    for _ in range(BRACKET_MAX_DOUBLINGS):
        if func(upper) < 0:
            return upper
        upper *= 2.0
    raise SolverError(f"No se pudo acotar la velocidad (último c_hi = {upper:.3g})")


def _right_half_plane_warnings(
    params: ToyParams, c_abs: float, tau: float, lam1: float
) -> List[str]:
    # lambda1 debe ser el único cero de chi en Re z >= 0
    char = _toy_char(params.q, c_abs, tau)
    window = default_window(char, lam1)
    rect = Rect(-1e-6, window.re_max, window.im_min, window.im_max)
    try:
        count = count_roots_in_rect(char, rect)
    except IllPosedWindowError as e:
        return [f"No se pudo contar raíces en Re z >= 0: {e}"]
    if count != 1:
        return [f"chi tiene {count} ceros en Re z >= 0 (se esperaba solo lambda1)"]
    return []


def _monotone_flag(params: ToyParams, tau: float, c: float) -> Tuple[bool, List[str]]:
    domain = DomainParams(-1.0, params.q)
    try:
        return in_domain(domain, tau, c).inside, []
    except DomainInconsistencyError as e:
        logger.warning(str(e))
        return c <= clin(domain, tau), [str(e)]


def _positive_speed_root(params: ToyParams, tau: float) -> float:
    def gap(c: float) -> float:
        return speed_function_K(params, c, tau) - params.kappa

    if gap(TOY_C_LO) <= 0:
        raise SolverError(
            f"Acotamiento fallido: K({TOY_C_LO}) - kappa = {gap(TOY_C_LO):.3e} <= 0 (tau={tau})"
        )
    upper = _expand_bracket(gap)
    return float(
        brentq(gap, TOY_C_LO, upper, xtol=1e-14, rtol=1e-14, maxiter=TOY_SPEED_MAX_ITER)
    )


def speed_positive(params: ToyParams, tau: float) -> ToySpeedResult:
    """
    Única c > 0 con K(c) = kappa.

    K es decreciente y K(0+) > kappa cuando k* < 1; se acota [1e-6, c_hi] duplicando
    c_hi desde 1 hasta K(c_hi) < kappa y se bisecciona.

    Raises:
        ValueError: si tau < 0
        BranchUnavailableError: si k* >= 1
        SolverError: si falla el acotamiento o la tolerancia final
    """
    if tau < 0:
        raise ValueError(f"tau debe ser no negativo, se recibió {tau}")
    ks = k_star(params)
    if ks >= 1:
        raise BranchUnavailableError(f"positive-speed branch absent: k*={ks:.6g} >= 1")

    c = _positive_speed_root(params, tau)

    K_value = speed_function_K(params, c, tau)
    residual = abs(K_value - params.kappa)
    if residual >= TOY_SPEED_TOL:
        raise SolverError(f"K(c) - kappa = {residual:.3e} fuera de tolerancia (tau={tau})")

    mu1 = char_root_mu1(params, c, tau)
    lam1 = char_root_lambda1(params, c, tau)
    monotone, notes = _monotone_flag(params, tau, c)
    notes += _right_half_plane_warnings(params, c, tau, lam1)
    for note in notes:
        logger.warning(f"tau={tau:g}: {note}")

    logger.debug(f"Rama positiva tau={tau:g}: c={c:.10f}, monótona={monotone}")
    return ToySpeedResult(
        c=c,
        mu1=mu1,
        lambda1=lam1,
        monotone=monotone,
        K_value=K_value,
        tau=tau,
        branch=POSITIVE,
        residual=residual,
        warnings=tuple(notes),
    )


def speed_negative(params: ToyParams, tau: float) -> ToySpeedResult:
    """
    Única c < 0 con 1 - kappa = (1-p)/(p-q) (lambda1(|c|)/mu1(|c|) - 1).

    En esta rama la onda es monótona para todo tau.

    Raises:
        BranchUnavailableError: si k* <= 1
    """
    if tau < 0:
        raise ValueError(f"tau debe ser no negativo, se recibió {tau}")
    ks = k_star(params)
    if ks <= 1:
        raise BranchUnavailableError(f"negative-speed branch absent: k*={ks:.6g} <= 1")

    def gap(c_abs: float) -> float:
        return negative_speed_gap(params, c_abs, tau)

    if gap(TOY_C_LO) <= 0:
        raise SolverError(
            f"Acotamiento fallido en la rama negativa: G({TOY_C_LO}) = {gap(TOY_C_LO):.3e}"
        )
    upper = _expand_bracket(gap)
    c_abs = float(
        brentq(gap, TOY_C_LO, upper, xtol=1e-14, rtol=1e-14, maxiter=TOY_SPEED_MAX_ITER)
    )
    residual = abs(gap(c_abs))
    if residual >= TOY_SPEED_TOL:
        raise SolverError(f"Ecuación de velocidad negativa con residuo {residual:.3e}")

    return ToySpeedResult(
        c=-c_abs,
        mu1=char_root_mu1(params, c_abs, tau),
        lambda1=char_root_lambda1(params, c_abs, tau),
        monotone=True,
        K_value=None,
        tau=tau,
        branch=NEGATIVE,
        residual=residual,
    )


def branch_of(params: ToyParams) -> str:
    """
    Rama disponible según el signo de 1 - k*.

    Raises:
        BranchUnavailableError: si k* = 1 dentro de la tolerancia (degenerate branch)
    """
    ks = k_star(params)
    if abs(ks - 1.0) <= DEGENERATE_K_STAR_TOL:
        raise BranchUnavailableError(f"degenerate branch: k*={ks:.12g}")
    return POSITIVE if ks < 1 else NEGATIVE


def solve_speed(params: ToyParams, tau: float) -> ToySpeedResult:
    if branch_of(params) == POSITIVE:
        return speed_positive(params, tau)
    return speed_negative(params, tau)


#######################################################################################
# Colas exactas
#######################################################################################


def backward_tail(params: ToyParams, speed: ToySpeedResult, t) -> np.ndarray:
    """phi(t) = kappa e^{mu1 (t + c tau)} para t <= 0 (rama positiva)."""
    t = np.asarray(t, dtype=float)
    return params.kappa * np.exp(speed.mu1 * (t + speed.c * speed.tau))


def backward_tail_residual(params: ToyParams, speed: ToySpeedResult, t) -> np.ndarray:
    """Residuo de phi'' - c phi' - phi + f(phi(t - c tau)) con la cola exacta, t < -c tau."""
    t = np.asarray(t, dtype=float)
    phi = backward_tail(params, speed, t)
    d1 = speed.mu1 * phi
    d2 = speed.mu1 * d1
    delayed = backward_tail(params, speed, t - speed.c * speed.tau)
    return d2 - speed.c * d1 - phi + toy_birth(params, delayed)


def negative_tail_profile(params: ToyParams, speed: ToySpeedResult, t) -> np.ndarray:
    """phi(t) = 1 - (1 - kappa) e^{-lambda1 (t + c tau)} para t >= 0 (rama negativa)."""
    t = np.asarray(t, dtype=float)
    return 1.0 - (1.0 - params.kappa) * np.exp(-speed.lambda1 * (t + speed.c * speed.tau))


def negative_tail_residual(params: ToyParams, speed: ToySpeedResult, t) -> np.ndarray:
    """Residuo de la ecuación de perfil con la cola exacta de la rama negativa, t >= 0."""
    t = np.asarray(t, dtype=float)
    gap = 1.0 - negative_tail_profile(params, speed, t)
    phi = 1.0 - gap
    d1 = speed.lambda1 * gap
    d2 = -speed.lambda1 * d1
    delayed = negative_tail_profile(params, speed, t - speed.c * speed.tau)
    return d2 - speed.c * d1 - phi + toy_birth(params, delayed)


#######################################################################################
# Perfil de la rama positiva: método de pasos estabilizado
#######################################################################################


def _simpson_weights(n: int, dt: float) -> np.ndarray:
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return weights * dt / 3.0


def _integrate_forward_tail(
    q: float, c: float, h: float, mu1: float, lam1: float, kappa: float, t_max: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """
    Integra psi = phi - 1 en [0, t_max] para psi'' - c psi' - psi + q psi(t - h) = 0.

    RK4 de paso fijo (h/n, n par) con punto medio retardado por Hermite cúbico. El
    modo e^{lambda1 t} crece, así que tras cada bloque se anula el funcional
    F = psi' + (lambda1 - c) psi - q e^{-lambda1 h} int_{-h}^0 e^{-lambda1 s} psi(t+s) ds,
    que vale 0 sobre el perfil y cumple F' = lambda1 F, corrigiendo psi' <- psi' - F.

    Returns:
        (tiempos desde -h, psi, psi', máxima corrección aplicada)
    """
    delayed = h > 0
    if delayed:
        n_per = max(TOY_MIN_STEPS_PER_DELAY, math.ceil(h / TOY_MAX_STEP))
        n_per += n_per % 2
        dt = h / n_per
    else:
        n_per = 0
        dt = TOY_MAX_STEP

    n_steps = math.ceil(t_max / dt)
    total = n_per + n_steps + 1
    times = (np.arange(total) - n_per) * dt
    psi = np.empty(total)
    dpsi = np.empty(total)

    history = kappa * np.exp(mu1 * (times[: n_per + 1] + h))
    psi[: n_per + 1] = history - 1.0
    dpsi[: n_per + 1] = mu1 * history

    if delayed:
        kernel = np.exp(-lam1 * (times[: n_per + 1])) * _simpson_weights(n_per, dt)
        factor = q * math.exp(-lam1 * h)
        block = max(1, min(n_per, int(round(1.0 / dt))))
    else:
        kernel = np.empty(0)
        factor = 0.0
        block = int(round(1.0 / dt))

    max_correction = 0.0
    for n in range(n_per, total - 1):
        y0, v0 = psi[n], dpsi[n]
        if delayed:
            d0 = n - n_per
            lag0, lag1 = psi[d0], psi[d0 + 1]
            lag_mid = 0.5 * (lag0 + lag1) + dt * (dpsi[d0] - dpsi[d0 + 1]) / 8.0

        k1y = v0
        k1v = c * v0 + y0 - q * (lag0 if delayed else y0)
        y2, v2 = y0 + 0.5 * dt * k1y, v0 + 0.5 * dt * k1v
        k2y = v2
        k2v = c * v2 + y2 - q * (lag_mid if delayed else y2)
        y3, v3 = y0 + 0.5 * dt * k2y, v0 + 0.5 * dt * k2v
        k3y = v3
        k3v = c * v3 + y3 - q * (lag_mid if delayed else y3)
        y4, v4 = y0 + dt * k3y, v0 + dt * k3v
        k4y = v4
        k4v = c * v4 + y4 - q * (lag1 if delayed else y4)

        psi[n + 1] = y0 + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        dpsi[n + 1] = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

        if not abs(psi[n + 1]) <= TOY_ESCAPE_BOUND:
            raise SolverError(
                f"profile escaped — speed equation root invalid (t={times[n + 1]:.3f})"
            )

        if (n + 1 - n_per) % block == 0:
            m = n + 1
            F = dpsi[m] + (lam1 - c) * psi[m]
            if delayed:
                F -= factor * float(np.dot(kernel, psi[m - n_per : m + 1]))
            dpsi[m] -= F
            max_correction = max(max_correction, abs(F))

    return times, psi, dpsi, max_correction


def forward_horizon(params: ToyParams, speed: ToySpeedResult, t_end: float) -> float:
    """max(40, 20/|lambda2|, t_end), con tope en 400 salvo que la grilla pida más."""
    horizon = TOY_T_MAX_MIN
    rate, _ = right_decay_rate(-1.0, params.q, speed.c, speed.c * speed.tau)
    if rate is not None:
        horizon = max(horizon, min(20.0 / abs(rate), TOY_T_MAX_CAP))
    return max(horizon, t_end)


def profile_positive(params: ToyParams, tau: float, t_grid: Sequence[float]) -> WaveProfile:
    """
    Perfil de la rama positiva sobre t_grid.

    Para t <= 0 es la exponencial exacta kappa e^{mu1 (t + c tau)}; para t > 0 se
    integra psi = phi - 1 con el método de pasos estabilizado y se evalúa con
    interpolación de Hermite cúbica.

    Raises:
        SolverError: si psi escapa o si un perfil clasificado monótono cae bajo kappa
    """
    speed = speed_positive(params, tau)
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ValueError("t_grid debe ser una secuencia de al menos 3 valores")

    values = np.empty_like(grid)
    left = grid <= 0
    values[left] = backward_tail(params, speed, grid[left])

    h = speed.c * tau
    t_max = forward_horizon(params, speed, float(grid.max()))
    times, psi, dpsi, correction = _integrate_forward_tail(
        params.q, speed.c, h, speed.mu1, speed.lambda1, params.kappa, t_max
    )
    forward = times >= 0
    if speed.monotone and np.min(psi[forward]) < params.kappa - 1.0 - 1e-8:
        raise SolverError(
            f"Perfil clasificado monótono cae bajo kappa en t > 0 (tau={tau}, c={speed.c})"
        )
    logger.debug(f"Cola integrada hasta t={t_max:.1f}, |psi(t_max)|={abs(psi[-1]):.3e}")

    if np.any(~left):
        spline = CubicHermiteSpline(times[forward], psi[forward], dpsi[forward])
        values[~left] = 1.0 + spline(grid[~left])

    rho_right, _ = right_decay_rate(-1.0, params.q, speed.c, h)
    return WaveProfile(
        grid=grid,
        values=values,
        c=speed.c,
        tau=tau,
        residual_inf=correction,
        model_id=params.label,
        e1=0.0,
        e3=1.0,
        rho_left=speed.mu1,
        rho_right=rho_right,
    )


#######################################################################################
# Curvas de velocidad
#######################################################################################


def _speed_worker(args: Tuple[ToyParams, float]) -> ToySpeedResult:
    params, tau = args
    return solve_speed(params, tau)


@timer
def speed_curve(
    params: ToyParams, tau_grid: Sequence[float], jobs: Optional[int] = 1
) -> ContinuationCurve:
    """
    c(tau) sobre tau_grid, en la rama que fija el signo de 1 - k*.

    Los puntos son independientes; el orden de salida es el de tau_grid.
    """
    taus = [float(t) for t in tau_grid]
    if any(t < 0 for t in taus):
        raise ValueError("Todos los tau deben ser no negativos")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau_grid debe ser estrictamente creciente")

    branch = branch_of(params)
    logger.info(f"Curva de velocidad, rama {branch}, {len(taus)} valores de tau")
    results = parallel_map(_speed_worker, [(params, t) for t in taus], jobs)

    points = [
        ContinuationPoint(
            tau=r.tau, c=r.c, monotone=r.monotone, residual=r.residual, in_domain=r.monotone
        )
        for r in results
    ]
    return ContinuationCurve(
        points=points, termination=Termination.REACHED_TAU_MAX, model_id=params.label
    )


def domain_exit_tau(params: ToyParams, curve: ContinuationCurve) -> Optional[float]:
    """
    Primer tau donde (tau, c(tau)) sale de D(-1, q), refinado entre los nodos de la curva
    resolviendo clin(tau) = c(tau).
    """
    points = curve.points
    domain = DomainParams(-1.0, params.q)
    ts = tau_sharp(domain)
    for before, after in zip(points, points[1:]):
        if before.monotone and not after.monotone:
            lower = max(before.tau, ts * (1.0 + 1e-9))

            def gap(tau: float) -> float:
                return clin(domain, tau) - _positive_speed_root(params, tau)

            if gap(lower) <= 0:
                return lower
            return float(brentq(gap, lower, after.tau, xtol=1e-10))
    return None
