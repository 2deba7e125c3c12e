# Simulación directa de u_t = u_xx + g(u(t,x), u(t - tau, x)) por el método de líneas

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from bistable_fronts.config import (
    SIM_DT_SAFETY,
    SIM_FIT_FRACTION,
    SIM_KAPPA_BAND_CELLS,
    SIM_MARGIN_CELLS,
    SIM_NX,
    SIM_OSCILLATION_TOL,
    SIM_OUTPUT_INTERVAL,
    SIM_T_FINAL,
    SIM_X_MAX,
)
from bistable_fronts.errors import SimulationError
from bistable_fronts.model_zoo import ModelSpec, SteadyStates, diagonal_integral, find_steady_states
from bistable_fronts.outputs import timer
from bistable_fronts.waves import WaveProfile

logger = logging.getLogger(__name__)

INITIAL_CONDITIONS = ("step", "profile_seed", "constant")


@dataclass(frozen=True)
class SimConfig:
    """
    Configuración de una simulación en [0, x_max] con extremos Neumann.

    dt None toma SIM_DT_SAFETY * dx^2. initial: "step" (escalón e1 | e3),
    "profile_seed" (perfil trasladado) o "constant" (u = constant_value).
    """

    model: ModelSpec
    tau: float = 0.0
    x_max: float = SIM_X_MAX
    nx: int = SIM_NX
    dt: Optional[float] = None
    t_final: float = SIM_T_FINAL
    initial: str = "step"
    states: Optional[SteadyStates] = None
    seed_profile: Optional[WaveProfile] = None
    constant_value: Optional[float] = None
    front_position: Optional[float] = None
    output_interval: float = SIM_OUTPUT_INTERVAL
    snapshot_interval: Optional[float] = None

    def __post_init__(self):
        if not self.x_max > 0:
            raise ValueError(f"x_max debe ser positivo: {self.x_max}")
        if self.nx < 3:
            raise ValueError(f"nx debe ser >= 3: {self.nx}")
        if not self.t_final > 0:
            raise ValueError(f"t_final debe ser positivo: {self.t_final}")
        if self.tau < 0:
            raise ValueError(f"tau debe ser >= 0: {self.tau}")
        if self.initial not in INITIAL_CONDITIONS:
            raise ValueError(f"Condición inicial desconocida: {self.initial!r}")
        if self.initial == "profile_seed" and self.seed_profile is None:
            raise ValueError("initial='profile_seed' requiere seed_profile")
        if self.initial == "constant" and self.constant_value is None:
            raise ValueError("initial='constant' requiere constant_value")
        if not self.dt_value > 0:
            raise ValueError(f"dt debe ser positivo: {self.dt_value}")
        if self.dt_value > SIM_DT_SAFETY * self.dx**2 * (1.0 + 1e-12):
            raise ValueError(
                f"dt={self.dt_value:.3g} viola la estabilidad explícita "
                f"dt <= {SIM_DT_SAFETY} dx^2 = {SIM_DT_SAFETY * self.dx**2:.3g}"
            )

    @property
    def dx(self) -> float:
        return self.x_max / (self.nx - 1)

    @property
    def dt_value(self) -> float:
        return SIM_DT_SAFETY * self.dx**2 if self.dt is None else self.dt

    @property
    def history_depth(self) -> int:
        return math.ceil(self.tau / self.dt_value) + 1


@dataclass
class SimResult:
    measured_speed: float
    speed_r_squared: float
    front_positions: np.ndarray
    x: np.ndarray
    final_snapshot: np.ndarray
    oscillation_flag: bool
    max_overshoot: float
    tau: float
    kappa_band_cells: Optional[int] = None
    snapshots: List[Tuple[float, np.ndarray]] = field(default_factory=list)

    def fronts_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.front_positions, columns=["t", "x_front"])

    def snapshot_frame(self, u: Optional[np.ndarray] = None) -> pd.DataFrame:
        return pd.DataFrame({"x": self.x, "u": self.final_snapshot if u is None else u})

    def summary(self) -> dict:
        return {
            "tau": self.tau,
            "measured_speed": self.measured_speed,
            "oscillation_flag": self.oscillation_flag,
        }


#######################################################################################
# Piezas del esquema
#######################################################################################


def laplacian_neumann(u: np.ndarray, dx: float) -> np.ndarray:
    """Diferencias centradas con nodos fantasma reflejados en ambos extremos."""
    lap = np.empty_like(u)
    lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx**2
    lap[0] = 2.0 * (u[1] - u[0]) / dx**2
    lap[-1] = 2.0 * (u[-2] - u[-1]) / dx**2
    return lap


class HistoryBuffer:
    """
    Anillo con los últimos niveles temporales; u(t_n - tau) se interpola linealmente
    entre los dos niveles guardados que lo encierran.
    """

    def __init__(self, u0: np.ndarray, tau: float, dt: float):
        ratio = tau / dt
        self.lag = int(math.floor(ratio + 1e-12))
        self.frac = ratio - self.lag
        if self.frac < 1e-12:
            self.frac = 0.0
        self.depth = math.ceil(ratio - 1e-12) + 1 if tau > 0 else 1
        self.levels = np.tile(u0, (self.depth, 1))
        self.step = 0

    def delayed(self) -> np.ndarray:
        newer = self.levels[(self.step - self.lag) % self.depth]
        if self.frac == 0.0:
            return newer
        older = self.levels[(self.step - self.lag - 1) % self.depth]
        return (1.0 - self.frac) * newer + self.frac * older

    def push(self, u: np.ndarray) -> None:
        self.step += 1
        self.levels[self.step % self.depth] = u


def front_position(x: np.ndarray, u: np.ndarray, level: float) -> Optional[float]:
    """Primer cruce (de izquierda a derecha) del nivel, interpolado linealmente."""
    above = np.nonzero(u >= level)[0]
    if len(above) == 0 or above[0] == 0:
        return None
    i = above[0]
    return float(x[i - 1] + (level - u[i - 1]) * (x[i] - x[i - 1]) / (u[i] - u[i - 1]))


def fit_speed(
    front_positions: np.ndarray, fraction: float = SIM_FIT_FRACTION
) -> Tuple[float, float]:
    """
    Velocidad en la convención del perfil (u = phi(x + c t)): c = -dx_front/dt.

    Returns:
        (velocidad, R^2) del ajuste lineal sobre la fracción final de la corrida
    """
    if len(front_positions) < 3:
        return math.nan, math.nan
    t, xf = front_positions[:, 0], front_positions[:, 1]
    window = t >= t[-1] - fraction * (t[-1] - t[0])
    if np.count_nonzero(window) < 3:
        return math.nan, math.nan
    slope, intercept = np.polyfit(t[window], xf[window], 1)
    fitted = slope * t[window] + intercept
    ss_res = float(np.sum((xf[window] - fitted) ** 2))
    ss_tot = float(np.sum((xf[window] - xf[window].mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(-slope), r_squared


def _kappa_band(x: np.ndarray, u: np.ndarray, kappa: float, dx: float) -> int:
    # celdas a menos de 2 dx de algún cruce del nivel kappa
    crossings = np.nonzero(np.diff(np.sign(u - kappa)) != 0)[0]
    if len(crossings) == 0:
        return 0
    positions = x[crossings] + 0.5 * dx
    distance = np.min(np.abs(x[:, None] - positions[None, :]), axis=1)
    return int(np.count_nonzero(distance <= SIM_KAPPA_BAND_CELLS * dx))


def initial_condition(config: SimConfig, states: SteadyStates, x: np.ndarray) -> np.ndarray:
    """Dato inicial; el escalón arranca a 3/4 de x_max si la integral es positiva, si no a 1/4."""
    if config.initial == "constant":
        return np.full_like(x, float(config.constant_value))

    x0 = config.front_position
    if x0 is None:
        I_value, _ = diagonal_integral(config.model, states)
        x0 = (0.75 if I_value > 0 else 0.25) * config.x_max

    if config.initial == "step":
        return np.where(x < x0, states.e1, states.e3).astype(float)
    return config.seed_profile.evaluate(x - x0)


#######################################################################################
# Simulación
#######################################################################################


@timer
def simulate(config: SimConfig) -> SimResult:
    """
    Euler explícito con la historia constante en [-tau, 0] y seguimiento del frente.

    Raises:
        SimulationError: "domain too small" si el frente llega al margen, "blow-up"
            si aparecen valores no finitos
    """
    model = config.model
    states = config.states or find_steady_states(model)
    dx, dt = config.dx, config.dt_value
    x = np.linspace(0.0, config.x_max, config.nx)
    level = 0.5 * (states.e1 + states.e3)
    margin = SIM_MARGIN_CELLS * dx
    track_front = config.initial != "constant"

    u = initial_condition(config, states, x)
    history = HistoryBuffer(u, config.tau, dt)

    n_steps = int(round(config.t_final / dt))
    every = max(1, int(round(config.output_interval / dt)))
    snapshot_every = (
        None
        if config.snapshot_interval is None
        else max(1, int(round(config.snapshot_interval / dt)))
    )
    logger.info(
        f"Simulación {model.model_id}: tau={config.tau}, nx={config.nx}, dt={dt:.3g}, "
        f"{n_steps:,} pasos, historia de {history.depth} niveles"
    )

    fronts: List[Tuple[float, float]] = []
    snapshots: List[Tuple[float, np.ndarray]] = []
    for n in range(1, n_steps + 1):
        u = u + dt * (laplacian_neumann(u, dx) + model.g(u, history.delayed()))
        history.push(u)

        if n % every == 0 or n == n_steps:
            t = n * dt
            if not np.all(np.isfinite(u)):
                raise SimulationError(f"blow-up: valores no finitos en t={t:.4g}")
            if track_front:
                xf = front_position(x, u, level)
                if xf is None or xf < margin or xf > config.x_max - margin:
                    raise SimulationError(
                        f"domain too small: el frente llegó al margen en t={t:.4g} "
                        f"(x_front={xf})"
                    )
                fronts.append((t, xf))
        if snapshot_every is not None and n % snapshot_every == 0:
            snapshots.append((n * dt, u.copy()))

    positions = np.array(fronts, dtype=float).reshape(-1, 2)
    speed, r_squared = fit_speed(positions) if track_front else (math.nan, math.nan)

    max_overshoot = 0.0
    if track_front and len(positions):
        behind = x > positions[-1, 1] + margin
        if np.any(behind):
            max_overshoot = float(np.max(u[behind] - states.e3))
    oscillation = max_overshoot > SIM_OSCILLATION_TOL

    kappa_cells = None
    if model.discontinuous and model.critical_level is not None:
        kappa_cells = _kappa_band(x, u, model.critical_level, dx)
        logger.info(f"{kappa_cells} celdas cerca del nivel kappa={model.critical_level:.4g}")

    logger.info(
        f"Velocidad medida={speed:.6f} (R2={r_squared:.6f}), sobrepaso={max_overshoot:.3e}"
    )
    return SimResult(
        measured_speed=speed,
        speed_r_squared=r_squared,
        front_positions=positions,
        x=x,
        final_snapshot=u,
        oscillation_flag=oscillation,
        max_overshoot=max_overshoot,
        tau=config.tau,
        kappa_band_cells=kappa_cells,
        snapshots=snapshots,
    )
