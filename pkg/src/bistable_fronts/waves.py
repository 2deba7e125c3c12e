# Tipos compartidos: perfiles de onda y curvas de continuación

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
import pandas as pd


class Termination(str, Enum):
    REACHED_TAU_MAX = "reached_tau_max"
    NEWTON_FAILURE = "newton_failure"
    LEFT_DOMAIN = "left_domain"
    SPEED_BOUND_HIT = "speed_bound_hit"


@dataclass(frozen=True)
class WaveProfile:
    """
    Frente discretizado phi sobre una grilla uniforme, con velocidad c y retardo tau.

    rho_left es el exponente de la extensión e1 + (phi_0 - e1) e^{rho_left (t - t_0)}
    a la izquierda de la grilla; rho_right el de la cola en e3 (None si no hay raíz
    real negativa).
    """

    grid: np.ndarray
    values: np.ndarray
    c: float
    tau: float
    residual_inf: float
    model_id: str
    e1: float
    e3: float
    rho_left: float
    rho_right: Optional[float] = None

    def __post_init__(self):
        if self.grid.shape != self.values.shape:
            raise ValueError(
                f"grid y values deben tener el mismo largo: "
                f"{self.grid.shape} vs {self.values.shape}"
            )
        if len(self.grid) < 3:
            raise ValueError("Un perfil necesita al menos 3 nodos")

    @property
    def h(self) -> float:
        return self.c * self.tau

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def n_intervals(self) -> int:
        return len(self.grid) - 1

    @property
    def half_length(self) -> float:
        return float(0.5 * (self.grid[-1] - self.grid[0]))

    def evaluate(self, t) -> np.ndarray:
        """
        Interpola phi en t; fuera de la grilla usa las extensiones asintóticas.
        """
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.grid, self.values)
        left = t < self.grid[0]
        if np.any(left):
            out[left] = self.e1 + (self.values[0] - self.e1) * np.exp(
                self.rho_left * (t[left] - self.grid[0])
            )
        right = t > self.grid[-1]
        if np.any(right):
            if self.rho_right is None:
                out[right] = self.e3
            else:
                out[right] = self.e3 + (self.values[-1] - self.e3) * np.exp(
                    self.rho_right * (t[right] - self.grid[-1])
                )
        return out

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.grid, "phi": self.values})


@dataclass(frozen=True)
class ContinuationPoint:
    tau: float
    c: float
    monotone: bool
    residual: float
    profile: Optional[WaveProfile] = None
    in_domain: Optional[bool] = None


@dataclass
class ContinuationCurve:
    """Rama (tau, c(tau)) con el motivo por el que terminó."""

    points: List[ContinuationPoint] = field(default_factory=list)
    termination: Termination = Termination.REACHED_TAU_MAX
    model_id: str = ""

    @property
    def taus(self) -> np.ndarray:
        return np.array([p.tau for p in self.points])

    @property
    def speeds(self) -> np.ndarray:
        return np.array([p.c for p in self.points])

    def to_frame(
        self, include_residual: bool = True, include_abs_speed: bool = False
    ) -> pd.DataFrame:
        data = {
            "tau": [p.tau for p in self.points],
            "c": [p.c for p in self.points],
        }
        if include_abs_speed:
            data["abs_c"] = [abs(p.c) for p in self.points]
        data["monotone"] = [bool(p.monotone) for p in self.points]
        if include_residual:
            data["residual"] = [p.residual for p in self.points]
        return pd.DataFrame(data)
