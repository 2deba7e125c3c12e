# Perfiles de onda por colocación + Newton amortiguado, y continuación en el retardo tau

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from bistable_fronts.config import (
    ARMIJO_FACTOR,
    ARMIJO_MAX_BACKTRACKS,
    ARMIJO_SLOPE,
    BOUNDARY_TOL_REL,
    CONT_DOMAIN_OVERSHOOT,
    CONT_INITIAL_STEP,
    CONT_MAX_STEP,
    CONT_MIN_STEP,
    CONT_SPEED_CEILING,
    CONT_SPEED_FLOOR,
    CONT_SUCCESSES_TO_GROW,
    DEFAULT_L,
    DEFAULT_N,
    INITIAL_SPEED,
    MIN_N,
    NEWTON_MAX_STEPS,
    NEWTON_STEP_FLOOR,
    PHASE_TOL,
    RHO_MAX_PASSES,
    SOLVER_TOL,
)
from bistable_fronts.errors import DomainInconsistencyError, SolverError
from bistable_fronts.model_zoo import ModelSpec, SteadyStates, diagonal_integral, linearization
from bistable_fronts.outputs import timer
from bistable_fronts.quasipoly import left_decay_rate, right_decay_rate
from bistable_fronts.stability_domain import DomainParams, in_domain
from bistable_fronts.wave_verify import monotonicity, recompute_residual
from bistable_fronts.waves import (
    ContinuationCurve,
    ContinuationPoint,
    Termination,
    WaveProfile,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContinuationOptions:
    """Parámetros de la marcha en tau; track_domain None = automático según (a-, b-)."""

    initial_step: float = CONT_INITIAL_STEP
    min_step: float = CONT_MIN_STEP
    max_step: float = CONT_MAX_STEP
    successes_to_grow: int = CONT_SUCCESSES_TO_GROW
    domain_overshoot: float = CONT_DOMAIN_OVERSHOOT
    speed_ceiling: float = CONT_SPEED_CEILING
    speed_floor: float = CONT_SPEED_FLOOR
    tol: float = SOLVER_TOL
    track_domain: Optional[bool] = None
    keep_profiles: bool = True

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial_step <= self.max_step:
            raise ValueError(
                "Se requiere 0 < min_step <= initial_step <= max_step: "
                f"({self.min_step}, {self.initial_step}, {self.max_step})"
            )
        if self.domain_overshoot < 0:
            raise ValueError(f"domain_overshoot debe ser >= 0: {self.domain_overshoot}")


#######################################################################################
# Sistema discreto
#######################################################################################


class _FrontSystem:
    """
    Ecuaciones de colocación para x = [phi_0, ..., phi_N, c].

    Filas: Robin en -L, nodos interiores, Robin (o Dirichlet) en +L, condición de fase.
    Los exponentes rho_left/rho_right quedan fijos durante un Newton.
    """

    def __init__(
        self,
        grid: np.ndarray,
        model: ModelSpec,
        states: SteadyStates,
        tau: float,
        rho_left: float,
        rho_right: Optional[float],
    ):
        self.grid = grid
        self.model = model
        self.states = states
        self.tau = tau
        self.rho_left = rho_left
        self.rho_right = rho_right
        self.n = len(grid) - 1
        self.dt = float(grid[1] - grid[0])
        self.t0 = float(grid[0])

        k = int(np.clip(np.searchsorted(grid, 0.0, side="right") - 1, 0, self.n - 1))
        self.phase_index = k
        self.phase_weight = (0.0 - grid[k]) / self.dt

    @property
    def size(self) -> int:
        return self.n + 2

    def _delayed(self, phi: np.ndarray, c: float):
        # phi(t_i - c tau) en nodos interiores: valores, columnas/pesos de Lagrange y d/dc
        shifted = self.grid[1:-1] - c * self.tau
        s = (shifted - self.t0) / self.dt
        if np.any(s > self.n + 1e-9):
            raise SolverError("delayed argument beyond the right edge (c tau < 0)")

        j = np.clip(np.floor(s).astype(int), 1, self.n - 2)
        x = s - j
        columns = np.stack([j - 1, j, j + 1, j + 2])
        weights = np.stack(
            [
                -x * (x - 1.0) * (x - 2.0) / 6.0,
                (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0,
                -(x + 1.0) * x * (x - 2.0) / 2.0,
                (x + 1.0) * x * (x - 1.0) / 6.0,
            ]
        )
        dweights = np.stack(
            [
                -(3.0 * x**2 - 6.0 * x + 2.0) / 6.0,
                (3.0 * x**2 - 4.0 * x - 1.0) / 2.0,
                -(3.0 * x**2 - 2.0 * x - 2.0) / 2.0,
                (3.0 * x**2 - 1.0) / 6.0,
            ]
        )
        stencil = phi[columns]
        values = np.sum(stencil * weights, axis=0)
        d_dc = np.sum(stencil * dweights, axis=0) * (-self.tau / self.dt)

        left = s < 0
        extension = np.zeros_like(values)
        if np.any(left):
            e1 = self.states.e1
            extension[left] = np.exp(self.rho_left * (shifted[left] - self.t0))
            values[left] = e1 + (phi[0] - e1) * extension[left]
            d_dc[left] = (phi[0] - e1) * self.rho_left * extension[left] * (-self.tau)
            weights[:, left] = 0.0
        return values, columns, weights, d_dc, left, extension

    def residual(self, x: np.ndarray) -> np.ndarray:
        phi, c = x[:-1], x[-1]
        dt, n = self.dt, self.n
        e1, e3 = self.states.e1, self.states.e3
        out = np.empty(self.size)

        out[0] = (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * dt) - self.rho_left * (
            phi[0] - e1
        )

        delayed = self._delayed(phi, c)[0]
        second = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) / dt**2
        first = (phi[2:] - phi[:-2]) / (2.0 * dt)
        out[1:n] = second - c * first + self.model.g(phi[1:-1], delayed)

        if self.rho_right is None:
            out[n] = phi[n] - e3
        else:
            out[n] = (3.0 * phi[n] - 4.0 * phi[n - 1] + phi[n - 2]) / (
                2.0 * dt
            ) - self.rho_right * (phi[n] - e3)

        k, w = self.phase_index, self.phase_weight
        out[n + 1] = (1.0 - w) * phi[k] + w * phi[k + 1] - self.states.phase_level
        return out

    def jacobian(self, x: np.ndarray):
        phi, c = x[:-1], x[-1]
        dt, n = self.dt, self.n
        interior = np.arange(1, n)
        delayed, columns, weights, d_dc, left, extension = self._delayed(phi, c)
        g1 = self.model.g1(phi[1:-1], delayed)
        g2 = self.model.g2(phi[1:-1], delayed)

        rows = [
            interior,
            interior,
            interior,
            interior,
        ]
        cols = [
            interior - 1,
            interior,
            interior + 1,
            np.full(n - 1, n + 1),
        ]
        vals = [
            np.full(n - 1, 1.0 / dt**2 + c / (2.0 * dt)),
            -2.0 / dt**2 + g1,
            np.full(n - 1, 1.0 / dt**2 - c / (2.0 * dt)),
            -(phi[2:] - phi[:-2]) / (2.0 * dt) + g2 * d_dc,
        ]

        # acople del retardo: pesos de Lagrange o extensión asintótica en phi_0
        for k in range(4):
            rows.append(interior[~left])
            cols.append(columns[k][~left])
            vals.append(g2[~left] * weights[k][~left])
        if np.any(left):
            rows.append(interior[left])
            cols.append(np.zeros(int(np.count_nonzero(left)), dtype=int))
            vals.append(g2[left] * extension[left])

        rows.append(np.array([0, 0, 0]))
        cols.append(np.array([0, 1, 2]))
        vals.append(
            np.array([-3.0 / (2.0 * dt) - self.rho_left, 4.0 / (2.0 * dt), -1.0 / (2.0 * dt)])
        )

        if self.rho_right is None:
            rows.append(np.array([n]))
            cols.append(np.array([n]))
            vals.append(np.array([1.0]))
        else:
            rows.append(np.array([n, n, n]))
            cols.append(np.array([n, n - 1, n - 2]))
            vals.append(
                np.array([3.0 / (2.0 * dt) - self.rho_right, -4.0 / (2.0 * dt), 1.0 / (2.0 * dt)])
            )

        k, w = self.phase_index, self.phase_weight
        rows.append(np.array([n + 1, n + 1]))
        cols.append(np.array([k, k + 1]))
        vals.append(np.array([1.0 - w, w]))

        matrix = coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.size, self.size),
        )
        return matrix.tocsc()


#######################################################################################
# Newton amortiguado
#######################################################################################


def _converged(system: _FrontSystem, F: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(F[:-1])) < tol and abs(F[-1]) < PHASE_TOL)


def _trial_residual(system: _FrontSystem, x: np.ndarray) -> Optional[np.ndarray]:
    try:
        F = system.residual(x)
    except SolverError:
        return None
    return F if np.all(np.isfinite(F)) else None


def _newton(system: _FrontSystem, x0: np.ndarray, tol: float, context: str) -> np.ndarray:
    """
    Newton con búsqueda de Armijo sobre ||F||_2.

    Tras converger en norma infinito se aplica un paso más de pulido.

    Raises:
        SolverError: estancamiento, paso no finito o búsqueda lineal agotada
    """
    x = x0.copy()
    F = system.residual(x)
    for iteration in range(NEWTON_MAX_STEPS):
        norm_inf = float(np.max(np.abs(F)))
        logger.debug(f"Newton {iteration}: ||F||inf={norm_inf:.3e}, c={x[-1]:.8f}")
        if _converged(system, F, tol):
            dx = spsolve(system.jacobian(x), -F)
            polished = x + dx
            F_polished = _trial_residual(system, polished) if np.all(np.isfinite(dx)) else None
            if F_polished is not None and np.max(np.abs(F_polished)) <= norm_inf:
                return polished
            return x

        dx = spsolve(system.jacobian(x), -F)
        if not np.all(np.isfinite(dx)):
            raise SolverError(f"{context}: paso de Newton no finito (iteración {iteration})")
        if np.max(np.abs(dx)) < NEWTON_STEP_FLOOR:
            raise SolverError(
                f"{context}: Newton estancado con ||F||inf={norm_inf:.3e} > tol={tol:.1e}"
            )

        merit = 0.5 * float(F @ F)
        lam = 1.0
        for _ in range(ARMIJO_MAX_BACKTRACKS):
            F_trial = _trial_residual(system, x + lam * dx)
            if F_trial is not None and 0.5 * float(F_trial @ F_trial) <= (
                1.0 - 2.0 * ARMIJO_SLOPE * lam
            ) * merit:
                break
            lam *= ARMIJO_FACTOR
        else:
            raise SolverError(f"{context}: búsqueda lineal agotada con ||F||inf={norm_inf:.3e}")
        x = x + lam * dx
        F = F_trial

    raise SolverError(
        f"{context}: {NEWTON_MAX_STEPS} iteraciones sin converger "
        f"(||F||inf={np.max(np.abs(F)):.3e})"
    )


#######################################################################################
# Resolución de un perfil
#######################################################################################


def _edge_rates(
    model: ModelSpec, states: SteadyStates, c: float, tau: float
) -> Tuple[float, Optional[float]]:
    a1, b1 = linearization(model, states.e1)
    a3, b3 = linearization(model, states.e3)
    h = c * tau
    if tau > 0 and not c > 0:
        raise SolverError(f"c={c:.6g} <= 0 con tau={tau} > 0: retardo hacia adelante")
    try:
        rho_left = left_decay_rate(a1, b1, c, h)
    except (ValueError, SolverError) as e:
        raise SolverError(f"sin exponente de borde en e1: {e}")
    rho_right, _ = right_decay_rate(a3, b3, c, h)
    return rho_left, rho_right


def _uniform_grid(L: float, N: int) -> np.ndarray:
    if not L > 0:
        raise ValueError(f"L debe ser positivo, se recibió {L}")
    if N < MIN_N:
        raise ValueError(f"N debe ser >= {MIN_N}, se recibió {N}")
    return np.linspace(-L, L, N + 1)


def _solve(
    model: ModelSpec,
    states: SteadyStates,
    grid: np.ndarray,
    tau: float,
    x0: np.ndarray,
    tol: float,
    context: str,
) -> WaveProfile:
    # Newton con los exponentes de borde rezagados, recalculados hasta estabilizarse
    rho_left, rho_right = _edge_rates(model, states, float(x0[-1]), tau)
    x = x0
    for outer in range(RHO_MAX_PASSES):
        system = _FrontSystem(grid, model, states, tau, rho_left, rho_right)
        x = _newton(system, x, tol, context)
        new_left, new_right = _edge_rates(model, states, float(x[-1]), tau)
        same_right = (new_right is None and rho_right is None) or (
            new_right is not None
            and rho_right is not None
            and math.isclose(new_right, rho_right, rel_tol=1e-10)
        )
        if math.isclose(new_left, rho_left, rel_tol=1e-10) and same_right:
            break
        if outer == RHO_MAX_PASSES - 1:
            logger.warning(f"{context}: exponentes de borde sin estabilizar ({outer + 1} pasadas)")
            break
        rho_left, rho_right = new_left, new_right
        logger.debug(f"Pasada {outer + 1}: rho-={rho_left:.8f}, rho+={rho_right}")

    phi, c = x[:-1], float(x[-1])
    if tau > 0 and not c > 0:
        raise SolverError(f"{context}: velocidad c={c:.6g} <= 0 con tau={tau} > 0")

    boundary_tol = BOUNDARY_TOL_REL * states.span
    if abs(phi[0] - states.e1) > boundary_tol or abs(phi[-1] - states.e3) > boundary_tol:
        raise SolverError(
            f"{context}: bordes lejos de e1/e3 (phi_0={phi[0]:.3e}, phi_N={phi[-1]:.6f}); "
            "L demasiado corto"
        )

    profile = WaveProfile(
        grid=grid,
        values=phi.copy(),
        c=c,
        tau=tau,
        residual_inf=0.0,
        model_id=model.model_id,
        e1=states.e1,
        e3=states.e3,
        rho_left=rho_left,
        rho_right=rho_right,
    )
    residual = float(np.max(np.abs(recompute_residual(profile, model))))
    if residual >= tol:
        raise SolverError(f"{context}: residuo independiente {residual:.3e} >= {tol:.1e}")
    return replace(profile, residual_inf=residual)


def solve_nondelayed(
    model: ModelSpec,
    states: SteadyStates,
    L: float = DEFAULT_L,
    N: int = DEFAULT_N,
    tol: float = SOLVER_TOL,
) -> WaveProfile:
    """
    Frente sin retardo (tau = 0) desde la logística e1 + (e3 - e1)/(1 + e^{-t}).

    Args:
        model: término de reacción que cumple (B)
        states: estados estacionarios del modelo
        L: semilongitud del intervalo [-L, L]
        N: número de subintervalos (>= 200)
        tol: tolerancia en norma infinito del residuo discreto

    Returns:
        WaveProfile con tau = 0

    Raises:
        SolverError: si Newton no converge ("no front found")
    """
    grid = _uniform_grid(L, N)
    I_value, _ = diagonal_integral(model, states)
    sign = 0.0 if abs(I_value) < 1e-12 else math.copysign(1.0, I_value)

    x0 = np.empty(N + 2)
    x0[:-1] = states.e1 + states.span / (1.0 + np.exp(-grid))
    x0[-1] = INITIAL_SPEED * sign

    profile = _solve(model, states, grid, 0.0, x0, tol, "no front found")

    decay = min(profile.rho_left, abs(profile.rho_right or profile.rho_left))
    if math.exp(-decay * L) >= BOUNDARY_TOL_REL * states.span:
        logger.warning(f"L={L} corto para la tasa de decaimiento {decay:.4g}")
    if sign != 0 and profile.c * sign <= 0:
        logger.warning(
            f"speed sign contradicts condition (I): c={profile.c:.6g}, integral={I_value:.6g}"
        )
    logger.info(
        f"Frente sin retardo de {model.model_id}: c={profile.c:.8f}, "
        f"residuo={profile.residual_inf:.2e}"
    )
    return profile


def solve_delayed(
    model: ModelSpec,
    states: SteadyStates,
    seed: WaveProfile,
    tau: float,
    tol: float = SOLVER_TOL,
) -> WaveProfile:
    """Frente con retardo tau sembrado por (phi, c) de seed, sobre la misma grilla."""
    if tau < 0:
        raise ValueError(f"tau debe ser >= 0, se recibió {tau}")
    x0 = np.append(seed.values, seed.c)
    return _solve(model, states, seed.grid, tau, x0, tol, f"no front found at tau={tau:.6g}")


def discrete_residual(profile: WaveProfile, model: ModelSpec, states: SteadyStates) -> np.ndarray:
    """Residuo completo del sistema de Newton (bordes y fase incluidos) en profile."""
    system = _FrontSystem(
        profile.grid, model, states, profile.tau, profile.rho_left, profile.rho_right
    )
    return system.residual(np.append(profile.values, profile.c))


#######################################################################################
# Continuación y refinamiento
#######################################################################################


def _domain_params(model: ModelSpec, states: SteadyStates) -> Optional[DomainParams]:
    a3, b3 = linearization(model, states.e3)
    if a3 < 0 and b3 < 0:
        return DomainParams(a3, b3)
    return None


def _point(
    profile: WaveProfile, params: Optional[DomainParams], options: ContinuationOptions
) -> ContinuationPoint:
    monotone, _ = monotonicity(profile)
    inside = None
    if params is not None:
        try:
            inside = in_domain(params, profile.tau, profile.c).inside
        except DomainInconsistencyError as e:
            logger.warning(str(e))
    return ContinuationPoint(
        tau=profile.tau,
        c=profile.c,
        monotone=monotone,
        residual=profile.residual_inf,
        profile=profile if options.keep_profiles else None,
        in_domain=inside,
    )


@timer
def continue_in_tau(
    model: ModelSpec,
    states: SteadyStates,
    start: WaveProfile,
    tau_max: float,
    options: Optional[ContinuationOptions] = None,
) -> ContinuationCurve:
    """
    Sigue la rama (phi, c) desde tau = 0 hasta tau_max con pasos adaptativos.

    Las fallas de Newton acortan el paso; bajo min_step la curva termina con
    newton_failure. Con seguimiento de dominio, la primera salida de D(a-, b-) marca
    left_domain y la marcha sigue domain_overshoot más allá.
    """
    options = options or ContinuationOptions()
    if tau_max < 0:
        raise ValueError(f"tau_max debe ser >= 0, se recibió {tau_max}")
    if start.tau != 0:
        raise ValueError(f"La continuación arranca en tau = 0, no en tau={start.tau}")

    params = _domain_params(model, states)
    if options.track_domain is False:
        params = None
    elif options.track_domain and params is None:
        logger.warning("Seguimiento de dominio pedido pero g1(e3,e3) o g2(e3,e3) >= 0")

    curve = ContinuationCurve(points=[_point(start, params, options)], model_id=model.model_id)
    current = start
    tau = 0.0
    step = options.initial_step
    successes = 0
    stop_at = tau_max
    exited = False

    while tau < tau_max:
        trial = min(tau + step, tau_max)
        if tau_max - trial < 1e-12:
            trial = tau_max
        try:
            profile = solve_delayed(model, states, current, trial, tol=options.tol)
        except SolverError as e:
            step *= 0.5
            successes = 0
            logger.debug(f"Paso fallido en tau={trial:.6g}: {e}; nuevo paso {step:.3g}")
            if step < options.min_step:
                logger.warning(f"Continuación detenida en tau={tau:.6g}: Newton no converge")
                curve.termination = (
                    Termination.LEFT_DOMAIN if exited else Termination.NEWTON_FAILURE
                )
                return curve
            continue

        if profile.c > options.speed_ceiling or profile.c < options.speed_floor:
            logger.warning(f"Velocidad fuera de rango en tau={trial:.6g}: c={profile.c:.6g}")
            curve.termination = Termination.SPEED_BOUND_HIT
            return curve

        point = _point(profile, params, options)
        curve.points.append(point)
        logger.info(f"tau={trial:.5f} c={profile.c:.8f} monótono={point.monotone}")
        current = profile
        tau = trial

        successes += 1
        if successes >= options.successes_to_grow:
            step = min(2.0 * step, options.max_step)
            successes = 0

        if point.in_domain is False and not exited:
            exited = True
            stop_at = min(tau_max, tau + options.domain_overshoot)
            logger.info(f"Salida del dominio en tau={tau:.6g}; se continúa hasta {stop_at:.6g}")
        if exited and tau >= stop_at:
            break

    curve.termination = Termination.LEFT_DOMAIN if exited else Termination.REACHED_TAU_MAX
    return curve


def refine(
    profile: WaveProfile,
    model: ModelSpec,
    states: SteadyStates,
    N_new: int,
    L_new: float,
    tol: float = SOLVER_TOL,
) -> Tuple[WaveProfile, float]:
    """
    Re-resuelve en una grilla más fina o más larga sembrada por interpolación.

    Returns:
        (perfil refinado, |delta c|)

    Raises:
        ValueError: si N_new < N o L_new < L
        SolverError: "refinement diverged"
    """
    if N_new < profile.n_intervals or L_new < profile.half_length - 1e-12:
        raise ValueError(
            f"El refinamiento no puede achicar la grilla: N {profile.n_intervals}->{N_new}, "
            f"L {profile.half_length}->{L_new}"
        )
    grid = _uniform_grid(L_new, N_new)
    x0 = np.append(profile.evaluate(grid), profile.c)
    refined = _solve(model, states, grid, profile.tau, x0, tol, "refinement diverged")
    delta_c = abs(refined.c - profile.c)
    logger.info(f"Refinamiento N={N_new}, L={L_new}: c={refined.c:.10f}, |dc|={delta_c:.3e}")
    return refined, delta_c
