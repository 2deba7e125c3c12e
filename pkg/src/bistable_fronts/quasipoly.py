# Raíces de cuasi-polinomios característicos chi(z) = z^2 - c z + a + b e^{-z h}

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from bistable_fronts.config import (
    BOUNDARY_CLEARANCE,
    BOUNDARY_RETRIES,
    BRACKET_MAX_DOUBLINGS,
    DOUBLE_ROOT_CHI_TOL,
    DOUBLE_ROOT_DCHI_TOL,
    EDGE_INITIAL_POINTS,
    EDGE_MAX_POINTS,
    NEWTON_MAX_ITER,
    PHASE_STEP_LIMIT,
    ROOT_RESIDUAL_TOL,
    WINDOW_H_FLOOR,
    WINDOW_IM_SCALE,
    WINDOW_INFLATION,
    WINDOW_RE_MAX_FLOOR,
    WINDOW_RE_MIN,
)
from bistable_fronts.errors import IllPosedWindowError, SolverError

logger = logging.getLogger(__name__)

Number = Union[float, complex, np.ndarray]

# Por encima de este exponente real se factoriza e^{-zh} antes de tomar log
_LOG_SPLIT = 300.0


@dataclass(frozen=True)
class CharParams:
    """
    Coeficientes del cuasi-polinomio chi(z) = z^2 - c z + a + b e^{-z h}.

    Los signos de a y b son libres (sirve para chi+ con b > 0 y chi- con b < 0).

    Raises:
        ValueError: si c <= 0 o h < 0
    """

    a: float
    b: float
    c: float
    h: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"La velocidad c debe ser positiva, se recibió c={self.c}")
        if not self.h >= 0:
            raise ValueError(f"h = c*tau no puede ser negativo, se recibió h={self.h}")

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "h": self.h}


@dataclass(frozen=True)
class Rect:
    """Rectángulo [re_min, re_max] x [im_min, im_max] del plano complejo."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @classmethod
    def symmetric(cls, re_min: float, re_max: float, im_max: float) -> "Rect":
        return cls(re_min, re_max, -im_max, im_max)

    def inflated(self, factor: float) -> "Rect":
        center_re = 0.5 * (self.re_min + self.re_max)
        center_im = 0.5 * (self.im_min + self.im_max)
        half_re = 0.5 * (self.re_max - self.re_min) * factor
        half_im = 0.5 * (self.im_max - self.im_min) * factor
        return Rect(
            center_re - half_re, center_re + half_re, center_im - half_im, center_im + half_im
        )

    def as_dict(self) -> dict:
        return {
            "re_min": self.re_min,
            "re_max": self.re_max,
            "im_min": self.im_min,
            "im_max": self.im_max,
        }


@dataclass(frozen=True)
class RootReport:
    """Raíces reales, pares complejos en la ventana y raíz dominante."""

    params: CharParams
    real_roots: Tuple[Tuple[float, int], ...]
    complex_pairs_in_window: int
    window: Rect
    dominant_real: Optional[float]
    total_in_window: int

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "real_roots": [[value, mult] for value, mult in self.real_roots],
            "complex_pairs_in_window": self.complex_pairs_in_window,
            "total_in_window": self.total_in_window,
            "window": self.window.as_dict(),
            "dominant_real": self.dominant_real,
        }


#######################################################################################
# Evaluación
#######################################################################################


def eval_char(params: CharParams, z: Number) -> Number:
    """
    Evalúa chi(z) = z^2 - c z + a + b e^{-z h}.

    Acepta escalares o arrays; para un escalar devuelve un complex.
    """
    zz = np.asarray(z, dtype=complex)
    value = zz * zz - params.c * zz + params.a + params.b * np.exp(-zz * params.h)
    if value.ndim == 0:
        return complex(value)
    return value


def eval_char_derivative(params: CharParams, z: Number) -> Number:
    """chi'(z) = 2z - c - b h e^{-z h}."""
    zz = np.asarray(z, dtype=complex)
    value = 2.0 * zz - params.c - params.b * params.h * np.exp(-zz * params.h)
    if value.ndim == 0:
        return complex(value)
    return value


def _delay_term(params: CharParams, x: float, order: int = 0) -> float:
    # d^k/dx^k de b e^{-x h}
    if params.b == 0.0:
        return 0.0
    with np.errstate(over="ignore"):
        return float(params.b * (-params.h) ** order * np.exp(-x * params.h))


def _chi(params: CharParams, x: float) -> float:
    return x * x - params.c * x + params.a + _delay_term(params, x)


def _dchi(params: CharParams, x: float) -> float:
    return 2.0 * x - params.c + _delay_term(params, x, 1)


def _d2chi(params: CharParams, x: float) -> float:
    return 2.0 + _delay_term(params, x, 2)


def residual_scale(params: CharParams, x: float) -> float:
    """Magnitud de los términos de chi en x, para residuos relativos."""
    return max(1.0, x * x, abs(params.c * x), abs(_delay_term(params, x)))


def is_root(params: CharParams, x: float, tol: float = ROOT_RESIDUAL_TOL) -> bool:
    return abs(_chi(params, x)) < tol * residual_scale(params, x)


def _polish(params: CharParams, x: float) -> float:
    # Newton acotado: solo acepta pasos que bajan |chi|
    fx = _chi(params, x)
    for _ in range(NEWTON_MAX_ITER):
        slope = _dchi(params, x)
        if slope == 0.0 or not math.isfinite(slope) or fx == 0.0:
            break
        x_new = x - fx / slope
        f_new = _chi(params, x_new)
        if not abs(f_new) < abs(fx):
            break
        x, fx = x_new, f_new
    return float(x)


#######################################################################################
# Raíces reales
#######################################################################################


def dominant_positive_root(params: CharParams) -> float:
    """
    Raíz real positiva (única) de chi, lambda1 o mu1 según el signo de b.

    Acota [0, R] doblando R hasta chi(R) > 0, bisecciona con brentq y pule con Newton.

    Raises:
        ValueError: si a + b >= 0 (no hay raíz positiva garantizada)
        SolverError: si el residuo final no alcanza la tolerancia
    """
    if params.a + params.b >= 0:
        raise ValueError(
            f"no guaranteed positive root: a + b = {params.a + params.b:.6g} >= 0"
        )

    upper = 1.0
    for _ in range(BRACKET_MAX_DOUBLINGS):
        if _chi(params, upper) > 0:
            break
        upper *= 2.0
    else:
        raise SolverError(f"No se pudo acotar la raíz positiva para {params}")

    root = brentq(lambda x: _chi(params, x), 0.0, upper, xtol=1e-15, maxiter=500)
    root = _polish(params, float(root))

    if not is_root(params, root):
        raise SolverError(
            f"Residuo de la raíz positiva fuera de tolerancia: |chi({root})| = "
            f"{abs(_chi(params, root)):.3e}"
        )
    return root


def real_root_bounds(params: CharParams) -> Tuple[float, float]:
    """
    Intervalo [lo, hi] que contiene todas las raíces reales de chi.

    A la derecha se exige chi, chi', chi'' > 0. A la izquierda, si chi es cóncava
    allí (b < 0, h > 0) se exige chi < 0, chi' > 0, chi'' < 0; si no, chi > 0 y chi' < 0.
    """
    upper = 1.0
    for _ in range(BRACKET_MAX_DOUBLINGS):
        if _chi(params, upper) > 0 and _dchi(params, upper) > 0 and _d2chi(params, upper) > 0:
            break
        upper *= 2.0
    else:
        raise SolverError(f"No se pudo acotar por derecha las raíces de {params}")

    concave_left = params.b < 0 and params.h > 0
    lower = -1.0
    for _ in range(BRACKET_MAX_DOUBLINGS):
        value, slope = _chi(params, lower), _dchi(params, lower)
        if concave_left:
            closed = value < 0 and slope > 0 and _d2chi(params, lower) < 0
        else:
            closed = value > 0 and slope < 0
        if closed:
            break
        lower *= 2.0
    else:
        raise SolverError(f"No se pudo acotar por izquierda las raíces de {params}")

    return lower, upper


def _inflection_point(params: CharParams) -> Optional[float]:
    # chi'' = 2 + b h^2 e^{-zh} se anula solo si b < 0 y h > 0
    if params.b < 0 and params.h > 0:
        return math.log(-params.b * params.h**2 / 2.0) / params.h
    return None


def real_roots(params: CharParams, lo: float, hi: float) -> List[Tuple[float, int]]:
    """
    Todas las raíces reales de chi en [lo, hi], con multiplicidad 1 o 2.

    chi'' cambia de signo a lo sumo una vez, así que chi' es monótona en cada lado
    del punto de inflexión y tiene a lo sumo un cero en cada uno. Entre puntos
    críticos consecutivos chi es monótona y cada tramo tiene a lo sumo una raíz.
    Un punto crítico con |chi| y |chi'| bajo umbral es una raíz doble.

    Raises:
        ValueError: si lo >= hi
    """
    if not lo < hi:
        raise ValueError(f"Intervalo vacío: lo={lo} debe ser menor que hi={hi}")
    lo, hi = float(lo), float(hi)

    breaks = [lo, hi]
    inflection = _inflection_point(params)
    if inflection is not None and lo < inflection < hi:
        breaks = [lo, inflection, hi]

    critical = []
    for left, right in zip(breaks[:-1], breaks[1:]):
        d_left, d_right = _dchi(params, left), _dchi(params, right)
        if d_left == 0.0:
            critical.append(left)
        elif d_right != 0.0 and (d_left < 0) != (d_right < 0):
            critical.append(
                float(brentq(lambda x: _dchi(params, x), left, right, xtol=1e-15, maxiter=500))
            )
    interior = sorted({x for x in critical if lo < x < hi})

    nodes = [lo, *interior, hi]
    values = [_chi(params, x) for x in nodes]
    roots: List[Tuple[float, int]] = []

    for k, x in enumerate(nodes):
        is_interior = 0 < k < len(nodes) - 1
        if (
            is_interior
            and abs(values[k]) < DOUBLE_ROOT_CHI_TOL
            and abs(_dchi(params, x)) < DOUBLE_ROOT_DCHI_TOL
        ):
            roots.append((x, 2))
            values[k] = 0.0
        elif values[k] == 0.0:
            roots.append((x, 1))

    for k in range(len(nodes) - 1):
        f_left, f_right = values[k], values[k + 1]
        if f_left == 0.0 or f_right == 0.0 or (f_left < 0) == (f_right < 0):
            continue
        root = brentq(lambda x: _chi(params, x), nodes[k], nodes[k + 1], xtol=1e-15, maxiter=500)
        roots.append((_polish(params, float(root)), 1))

    roots.sort()
    return roots


def all_real_roots(params: CharParams) -> List[Tuple[float, int]]:
    """Raíces reales en todo R."""
    lo, hi = real_root_bounds(params)
    return real_roots(params, lo, hi)


#######################################################################################
# Conteo de raíces complejas por principio del argumento
#######################################################################################


def _log_char(params: CharParams, z: np.ndarray) -> np.ndarray:
    # log(chi) sin overflow: para Re(-zh) grande se factoriza e^{-zh}
    z = np.asarray(z, dtype=complex)
    poly = z * z - params.c * z + params.a
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        if params.b == 0.0 or params.h == 0.0:
            return np.log(poly + params.b)
        shift = -z * params.h
        out = np.empty_like(z)
        big = shift.real > _LOG_SPLIT
        small = ~big
        out[small] = np.log(poly[small] + params.b * np.exp(shift[small]))
        out[big] = shift[big] + np.log(params.b + poly[big] * np.exp(-shift[big]))
    return out


def _edge_phase(params: CharParams, z0: complex, z1: complex) -> Tuple[float, float]:
    """
    Variación del argumento de chi sobre el segmento [z0, z1].

    Duplica el muestreo hasta que ningún salto de fase supere PHASE_STEP_LIMIT.

    Returns:
        (variación de fase, mínimo de log|chi| sobre las muestras)
    """
    n = EDGE_INITIAL_POINTS
    while True:
        z = z0 + (z1 - z0) * np.linspace(0.0, 1.0, n + 1)
        logs = _log_char(params, z)
        if not np.all(np.isfinite(logs)):
            return math.nan, -math.inf
        steps = np.angle(np.exp(1j * np.diff(logs.imag)))
        if np.max(np.abs(steps)) < PHASE_STEP_LIMIT:
            return float(steps.sum()), float(np.min(logs.real))
        if n >= EDGE_MAX_POINTS:
            raise IllPosedWindowError(
                f"ill-posed window: la fase no se estabiliza en [{z0}, {z1}] con {n} puntos"
            )
        n *= 2


def _count_with_window(params: CharParams, rect: Rect) -> Tuple[int, Rect]:
    if not (rect.re_min < rect.re_max and rect.im_min < rect.im_max):
        raise IllPosedWindowError(f"ill-posed window: rectángulo sin interior {rect}")

    clearance = math.log(BOUNDARY_CLEARANCE)
    current = rect
    for attempt in range(BOUNDARY_RETRIES + 1):
        corners = [
            complex(current.re_min, current.im_min),
            complex(current.re_max, current.im_min),
            complex(current.re_max, current.im_max),
            complex(current.re_min, current.im_max),
        ]
        total = 0.0
        clear = True
        for z0, z1 in zip(corners, corners[1:] + corners[:1]):
            phase, min_log = _edge_phase(params, z0, z1)
            if not min_log > clearance:
                clear = False
                break
            total += phase

        if clear:
            winding = total / (2.0 * math.pi)
            count = int(round(winding))
            if abs(winding - count) < 0.1:
                return count, current
            logger.debug(f"Número de vueltas no entero ({winding:.4f}), se agranda la ventana")

        logger.debug(f"Raíz cerca del borde en el intento {attempt}, se agranda la ventana")
        current = current.inflated(WINDOW_INFLATION)

    raise IllPosedWindowError(
        f"ill-posed window: raíces sobre el borde tras {BOUNDARY_RETRIES} reintentos ({rect})"
    )


def count_roots_in_rect(params: CharParams, rect: Rect) -> int:
    """
    Número de ceros de chi (con multiplicidad) dentro de rect.

    Es el número de vueltas de chi sobre el borde recorrido en sentido antihorario.
    Si alguna muestra del borde cae a menos de BOUNDARY_CLEARANCE de una raíz, el
    rectángulo se agranda un 1% y se reintenta, hasta BOUNDARY_RETRIES veces.

    Raises:
        IllPosedWindowError: rectángulo degenerado o colisión persistente con el borde
    """
    count, _ = _count_with_window(params, rect)
    return count


def default_window(params: CharParams, lambda1: Optional[float] = None) -> Rect:
    re_max = WINDOW_RE_MAX_FLOOR if lambda1 is None else max(WINDOW_RE_MAX_FLOOR, 2.0 * lambda1)
    im_max = WINDOW_IM_SCALE / max(params.h, WINDOW_H_FLOOR)
    return Rect.symmetric(WINDOW_RE_MIN, re_max, im_max)


def root_report(params: CharParams, window: Optional[Rect] = None) -> RootReport:
    """
    Arma un RootReport: raíces reales, pares complejos en la ventana y raíz dominante.

    La dominancia se confirma contando raíces en la franja Re z >= lambda1 - delta,
    que debe contener solo a lambda1.
    """
    lambda1 = dominant_positive_root(params) if params.a + params.b < 0 else None
    rect = window if window is not None else default_window(params, lambda1)
    total, used = _count_with_window(params, rect)

    found = [(r, m) for r, m in all_real_roots(params) if used.re_min < r < used.re_max]
    real_count = sum(m for _, m in found)
    spare = total - real_count
    if spare < 0 or spare % 2:
        logger.warning(
            f"Conteo inconsistente en {used}: total={total}, reales={real_count}"
        )
    pairs = max(spare, 0) // 2

    dominant = None
    if lambda1 is not None and lambda1 < used.re_max:
        delta = 1e-3 * max(1.0, lambda1)
        strip = Rect(lambda1 - delta, used.re_max, used.im_min, used.im_max)
        try:
            in_strip = count_roots_in_rect(params, strip)
        except IllPosedWindowError:
            in_strip = -1
        if in_strip == 1:
            dominant = lambda1
        else:
            logger.warning(f"lambda1={lambda1:.6g} no es dominante en {strip} ({in_strip} raíces)")

    return RootReport(
        params=params,
        real_roots=tuple(found),
        complex_pairs_in_window=pairs,
        window=used,
        dominant_real=dominant,
        total_in_window=total,
    )


#######################################################################################
# Exponentes de las colas
#######################################################################################


def left_decay_rate(a: float, b: float, c: float, h: float) -> float:
    """
    Exponente positivo que rige phi - e1 en -inf.

    Con h = 0 sale de la fórmula cuadrática y vale para cualquier signo de c.
    """
    if h == 0.0:
        total = a + b
        if total >= 0:
            raise ValueError(f"no guaranteed positive root: a + b = {total:.6g} >= 0")
        return 0.5 * (c + math.sqrt(c * c - 4.0 * total))
    return dominant_positive_root(CharParams(a, b, c, h))


def right_decay_rate(a: float, b: float, c: float, h: float) -> Tuple[Optional[float], int]:
    """
    Mayor raíz real negativa (y su multiplicidad) que rige phi - e3 en +inf.

    Returns:
        (None, 0) si chi no tiene raíces reales negativas
    """
    if h == 0.0:
        disc = c * c - 4.0 * (a + b)
        if disc < 0:
            return None, 0
        rate = 0.5 * (c - math.sqrt(disc))
        return (rate, 1) if rate < 0 else (None, 0)

    negatives = [(r, m) for r, m in all_real_roots(CharParams(a, b, c, h)) if r < 0]
    if not negatives:
        return None, 0
    return max(negatives)
