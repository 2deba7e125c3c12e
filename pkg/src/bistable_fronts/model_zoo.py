# Términos de reacción g(u, v), estados estacionarios y chequeo de hipótesis

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
from dotenv import dotenv_values
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import expit

from bistable_fronts.config import (
    HYPOTHESIS_GRID_POINTS,
    KAPPA_SPREAD_RTOL,
    PARTIALS_FD_STEP,
    PARTIALS_GRID_POINTS,
    PARTIALS_RTOL,
    QUADRATURE_EPSABS,
    SIGN_TOL,
    STEADY_STATE_RESIDUAL_TOL,
    STEADY_STATE_SCAN_POINTS,
    STEADY_STATE_XTOL,
)
from bistable_fronts.errors import HypothesisError

logger = logging.getLogger(__name__)

Reaction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ModelKind(str, Enum):
    MACKEY_GLASS = "mackey_glass"
    VIRUS = "virus"
    TOY_SMOOTH = "toy_smooth"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ModelSpec:
    """
    Término de reacción g(u, v) con sus derivadas parciales sobre (domain_lo, domain_hi).

    critical_level es el kappa conocido del modelo (si lo tiene); discontinuous marca
    términos no Lipschitz en ese nivel.
    """

    model_id: str
    kind: ModelKind
    g: Reaction
    g1: Reaction
    g2: Reaction
    domain_lo: float
    domain_hi: float
    params: Mapping[str, float] = field(default_factory=dict)
    critical_level: Optional[float] = None
    discontinuous: bool = False

    def __post_init__(self):
        if not self.domain_lo < self.domain_hi:
            raise ValueError(
                f"Intervalo inválido: domain_lo={self.domain_lo} >= domain_hi={self.domain_hi}"
            )

    def diagonal(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return self.g(u, u)


@dataclass(frozen=True)
class SteadyStates:
    e1: float
    e2: float
    e3: float

    def __post_init__(self):
        if not self.e1 < self.e2 < self.e3:
            raise ValueError(f"Se requiere e1 < e2 < e3: ({self.e1}, {self.e2}, {self.e3})")

    @property
    def phase_level(self) -> float:
        return 0.5 * (self.e1 + self.e2)

    @property
    def span(self) -> float:
        return self.e3 - self.e1


@dataclass
class HypothesisReport:
    """Resultado de los chequeos en grilla; "pasó en la grilla", nunca una prueba."""

    B_ok: bool
    U_ok: bool
    Ustar_ok: bool
    I_ok: bool
    strong_subtangency_ok: bool
    I_value: float
    I_error: float
    kappa_detected: Optional[float]
    failure_notes: List[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "B_ok": self.B_ok,
            "U_ok": self.U_ok,
            "Ustar_ok": self.Ustar_ok,
            "I_ok": self.I_ok,
            "strong_subtangency_ok": self.strong_subtangency_ok,
            "I_value": self.I_value,
            "I_error": self.I_error,
            "kappa_detected": self.kappa_detected,
            "failure_notes": list(self.failure_notes),
        }


#######################################################################################
# Familias de modelos
#######################################################################################


def mackey_glass_cubic(
    beta: float = 1.0, e2: float = 0.25, domain_lo: float = -0.5, domain_hi: float = 1.5
) -> ModelSpec:
    """
    g(u, v) = -u + f(v) con f(v) = v + beta v (1 - v)(v - e2).

    beta = 1, e2 = 1/4 es Nagumo; e2 = 1/2 da la cúbica simétrica.
    """

    def f_prime(v):
        return 1.0 + beta * (-3.0 * v * v + 2.0 * (1.0 + e2) * v - e2)

    return ModelSpec(
        model_id=f"mackey_glass(beta={beta:g},e2={e2:g})",
        kind=ModelKind.MACKEY_GLASS,
        g=lambda u, v: -u + v + beta * v * (1.0 - v) * (v - e2),
        g1=lambda u, v: -np.ones_like(np.asarray(u, dtype=float) + np.asarray(v, dtype=float)),
        g2=lambda u, v: f_prime(v) + 0.0 * u,
        domain_lo=domain_lo,
        domain_hi=domain_hi,
        params={"beta": beta, "e2": e2},
    )


def virus_gaussian(
    amplitude: float = 0.8,
    center: float = 0.25,
    width: float = 8.0,
    domain_lo: float = 0.0,
    domain_hi: float = 1.0,
) -> ModelSpec:
    """g(u, v) = u (1 - u - f(v)) con f(v) = amplitude e^{-width (v - center)^2}."""

    def f(v):
        return amplitude * np.exp(-width * (v - center) ** 2)

    def f_prime(v):
        return -2.0 * width * (v - center) * f(v)

    return ModelSpec(
        model_id=f"virus(amplitude={amplitude:g},center={center:g},width={width:g})",
        kind=ModelKind.VIRUS,
        g=lambda u, v: u * (1.0 - u - f(v)),
        g1=lambda u, v: 1.0 - 2.0 * u - f(v),
        g2=lambda u, v: -u * f_prime(v),
        domain_lo=domain_lo,
        domain_hi=domain_hi,
        params={"amplitude": amplitude, "center": center, "width": width},
        critical_level=center,
    )


def toy_smooth(
    kappa: float = 1.0 / 3.0,
    p: float = 0.5,
    q: float = -1.0,
    epsilon: float = 0.01,
    domain_lo: float = -0.5,
    domain_hi: float = 1.5,
) -> ModelSpec:
    """
    g(u, v) = -u + f(v), f la mezcla logística de p v y 1 + q (v - 1) con ancho epsilon.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon debe ser positivo, se recibió {epsilon}")

    def gap(v):
        return 1.0 + q * (v - 1.0) - p * v

    def f(v):
        return p * v + gap(v) * expit((v - kappa) / epsilon)

    def f_prime(v):
        s = expit((v - kappa) / epsilon)
        return p + (q - p) * s + gap(v) * s * (1.0 - s) / epsilon

    return ModelSpec(
        model_id=f"toy_smooth(kappa={kappa:g},p={p:g},q={q:g},epsilon={epsilon:g})",
        kind=ModelKind.TOY_SMOOTH,
        g=lambda u, v: -u + f(v),
        g1=lambda u, v: -np.ones_like(np.asarray(u, dtype=float) + np.asarray(v, dtype=float)),
        g2=lambda u, v: f_prime(v) + 0.0 * u,
        domain_lo=domain_lo,
        domain_hi=domain_hi,
        params={"kappa": kappa, "p": p, "q": q, "epsilon": epsilon},
        critical_level=kappa,
    )


def toy_piecewise(
    kappa: float = 1.0 / 3.0,
    p: float = 0.5,
    q: float = -1.0,
    domain_lo: float = -0.5,
    domain_hi: float = 1.5,
) -> ModelSpec:
    """f discontinua del modelo de juguete, para simulación y verificación."""

    def f(v):
        v = np.asarray(v, dtype=float)
        return np.where(v < kappa, p * v, 1.0 + q * (v - 1.0))

    return ModelSpec(
        model_id=f"toy(kappa={kappa:g},p={p:g},q={q:g})",
        kind=ModelKind.CUSTOM,
        g=lambda u, v: -u + f(v),
        g1=lambda u, v: -np.ones_like(np.asarray(u, dtype=float) + np.asarray(v, dtype=float)),
        g2=lambda u, v: np.where(np.asarray(v) < kappa, p, q) + 0.0 * np.asarray(u),
        domain_lo=domain_lo,
        domain_hi=domain_hi,
        params={"kappa": kappa, "p": p, "q": q},
        critical_level=kappa,
        discontinuous=True,
    )


def custom(
    model_id: str,
    g: Reaction,
    g1: Reaction,
    g2: Reaction,
    domain_lo: float,
    domain_hi: float,
    critical_level: Optional[float] = None,
) -> ModelSpec:
    """Modelo definido por el usuario; conviene validarlo con check_partials."""
    return ModelSpec(
        model_id=model_id,
        kind=ModelKind.CUSTOM,
        g=g,
        g1=g1,
        g2=g2,
        domain_lo=domain_lo,
        domain_hi=domain_hi,
        critical_level=critical_level,
    )


#######################################################################################
# Archivos de configuración
#######################################################################################

_KIND_KEYS = {
    ModelKind.MACKEY_GLASS: ("beta", "e2"),
    ModelKind.VIRUS: ("amplitude", "center", "width"),
    ModelKind.TOY_SMOOTH: ("kappa", "p", "q", "epsilon"),
}


def load_model_config(path: Path) -> ModelSpec:
    """
    Lee un modelo desde un archivo clave=valor.

    Claves: kind, domain_lo, domain_hi y los parámetros de cada familia
    (mackey_glass: beta, e2; virus: amplitude, center, width;
    toy_smooth: kappa, p, q, epsilon). Los que falten toman el valor por defecto.

    Raises:
        FileNotFoundError: si el archivo no existe
        ValueError: kind desconocido o valores no numéricos
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"No existe el archivo de modelo: {path}")

    raw = {k.strip().lower(): (v or "").strip() for k, v in dotenv_values(path).items()}
    kind_text = raw.pop("kind", "")
    try:
        kind = ModelKind(kind_text)
    except ValueError:
        raise ValueError(f"kind desconocido en {path}: {kind_text!r}")
    if kind not in _KIND_KEYS:
        raise ValueError(f"kind={kind.value} no se puede definir desde un archivo de texto")

    allowed = set(_KIND_KEYS[kind]) | {"domain_lo", "domain_hi"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ValueError(f"Claves desconocidas para kind={kind.value}: {unknown}")

    try:
        values: Dict[str, float] = {key: float(text) for key, text in raw.items()}
    except ValueError as e:
        raise ValueError(f"Valor no numérico en {path}: {e}")

    logger.info(f"Modelo {kind.value} leído desde {path}: {values}")
    factory = {
        ModelKind.MACKEY_GLASS: mackey_glass_cubic,
        ModelKind.VIRUS: virus_gaussian,
        ModelKind.TOY_SMOOTH: toy_smooth,
    }[kind]
    return factory(**values)


#######################################################################################
# Estados estacionarios
#######################################################################################


def _interior_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n + 2)[1:-1]


def find_steady_states(
    model: ModelSpec, scan_points: int = STEADY_STATE_SCAN_POINTS
) -> SteadyStates:
    """
    Ceros de g(u, u) en (alpha, beta) y chequeo de la hipótesis (B).

    Raises:
        HypothesisError: si no hay exactamente 3 ceros o si falla (B) en e1 o e3
    """
    u = _interior_grid(model.domain_lo, model.domain_hi, scan_points)
    values = model.diagonal(u)

    def diag(x: float) -> float:
        return float(model.diagonal(x))

    roots: List[float] = []
    for i in range(len(u)):
        if values[i] == 0.0:
            roots.append(float(u[i]))
        elif i + 1 < len(u) and values[i + 1] != 0.0 and (values[i] < 0) != (values[i + 1] < 0):
            roots.append(float(brentq(diag, u[i], u[i + 1], xtol=STEADY_STATE_XTOL)))

    if len(roots) != 3:
        raise HypothesisError(
            f"not bistable on the given interval: {len(roots)} ceros de g(u,u) en "
            f"({model.domain_lo}, {model.domain_hi}) para {model.model_id}"
        )

    states = SteadyStates(*roots)
    for name, e in zip(("e1", "e2", "e3"), roots):
        if abs(diag(e)) >= STEADY_STATE_RESIDUAL_TOL:
            raise HypothesisError(f"Residuo de {name} fuera de tolerancia: {abs(diag(e)):.3e}")

    for name in ("e1", "e3"):
        note = _b_violation(model, getattr(states, name))
        if note:
            raise HypothesisError(f"hypothesis (B) violated at {name}: {note}")

    logger.info(
        f"Estados de {model.model_id}: e1={states.e1:.6g}, e2={states.e2:.6g}, e3={states.e3:.6g}"
    )
    return states


def _b_violation(model: ModelSpec, e: float) -> Optional[str]:
    a = float(model.g1(e, e))
    b = float(model.g2(e, e))
    if not a + b < 0:
        return f"g1 + g2 = {a + b:.6g} >= 0"
    if not a < 0:
        return f"g1 = {a:.6g} >= 0"
    return None


def linearization(model: ModelSpec, e: float) -> Tuple[float, float]:
    """(g1(e, e), g2(e, e))."""
    return float(model.g1(e, e)), float(model.g2(e, e))


def reflect_states(states: SteadyStates) -> SteadyStates:
    return SteadyStates(states.e1, states.e1 + states.e3 - states.e2, states.e3)


#######################################################################################
# Chequeo de hipótesis
#######################################################################################


def diagonal_integral(model: ModelSpec, states: SteadyStates) -> Tuple[float, float]:
    """Integral de g(u, u) sobre [e1, e3] y su error estimado."""
    breaks = [states.e2]
    if model.critical_level is not None and states.e1 < model.critical_level < states.e3:
        breaks.append(model.critical_level)
    value, error = quad(
        lambda u: float(model.diagonal(u)),
        states.e1,
        states.e3,
        points=sorted(set(breaks)),
        epsabs=QUADRATURE_EPSABS,
        epsrel=1e-12,
        limit=200,
    )
    return float(value), float(error)


def _detect_kappa(model: ModelSpec, notes: List[str]) -> Optional[float]:
    # kappa: cambio de signo de g2(u, .) a u fijo, que debe ser el mismo para todo u
    n = HYPOTHESIS_GRID_POINTS
    us = _interior_grid(model.domain_lo, model.domain_hi, n)
    vs = _interior_grid(model.domain_lo, model.domain_hi, n)
    found = []
    for u in us:
        row = model.g2(np.full_like(vs, u), vs)
        signs = np.sign(row)
        nonzero = signs != 0
        changes = np.nonzero(nonzero[:-1] & nonzero[1:] & (signs[:-1] != signs[1:]))[0]
        if len(changes) == 0:
            continue
        if len(changes) > 1:
            notes.append(f"g2(u, .) cambia de signo {len(changes)} veces en u={u:.4g}")
            return None
        k = changes[0]
        found.append(
            float(brentq(lambda v: float(model.g2(u, v)), vs[k], vs[k + 1], xtol=1e-13))
        )

    if not found:
        notes.append("g2 no cambia de signo: no hay punto crítico kappa")
        return None
    spread = max(found) - min(found)
    if spread >= KAPPA_SPREAD_RTOL * (model.domain_hi - model.domain_lo):
        notes.append(f"kappa depende de u (dispersión {spread:.3e})")
        return None
    return float(np.median(found))


def _all(mask_values: np.ndarray) -> bool:
    return bool(mask_values.size == 0 or np.all(mask_values))


def _g2_sign_pattern(model: ModelSpec, kappa: float, below_sign: float) -> bool:
    # g2 con signo below_sign para v < kappa y el opuesto para v > kappa
    n = HYPOTHESIS_GRID_POINTS
    us = _interior_grid(model.domain_lo, model.domain_hi, n)
    vs = _interior_grid(model.domain_lo, model.domain_hi, n)
    band = 2.0 * (vs[1] - vs[0])
    U, V = np.meshgrid(us, vs, indexing="ij")
    values = model.g2(U, V) * below_sign
    below = V < kappa - band
    above = V > kappa + band
    return _all(values[below] > 0) and _all(values[above] < 0)


def _check_U(model: ModelSpec, states: SteadyStates, kappa: float, notes: List[str]) -> bool:
    n = HYPOTHESIS_GRID_POINTS
    ok = True

    if not states.e1 < kappa < states.e2:
        notes.append(f"(U): kappa={kappa:.6g} fuera de (e1, e2)")
        return False

    if not _g2_sign_pattern(model, kappa, below_sign=-1.0):
        notes.append("(U): g2 no es negativa bajo kappa y positiva sobre kappa")
        ok = False

    U, V = np.meshgrid(
        np.linspace(states.e1, states.e2, n, endpoint=False),
        np.linspace(states.e1, kappa, n),
        indexing="ij",
    )
    mask = U >= V
    if not _all(model.g1(U[mask], V[mask]) < 0):
        notes.append("(U): g1 >= 0 en algún u >= v de [e1, e2) x [e1, kappa]")
        ok = False

    right = _interior_grid(states.e2, model.domain_hi, n)
    left = _interior_grid(model.domain_lo, states.e1, n)
    if not _all(model.g(right, np.full_like(right, states.e1)) < 0):
        notes.append("(U): g(u, e1) >= 0 en algún u de (e2, beta)")
        ok = False
    if not _all(model.g(left, np.full_like(left, states.e1)) > 0):
        notes.append("(U): g(u, e1) <= 0 en algún u de (alpha, e1)")
        ok = False
    return ok


def _check_Ustar(model: ModelSpec, states: SteadyStates, kappa: float, notes: List[str]) -> bool:
    n = HYPOTHESIS_GRID_POINTS
    ok = True

    if not states.e2 < kappa < states.e3:
        notes.append(f"(U*): kappa={kappa:.6g} fuera de (e2, e3)")
        return False

    if not _g2_sign_pattern(model, kappa, below_sign=1.0):
        notes.append("(U*): g2 no es positiva bajo kappa y negativa sobre kappa")
        ok = False

    grid = np.linspace(kappa, states.e3, n)
    U, V = np.meshgrid(grid, grid, indexing="ij")
    mask = U >= V
    if not _all(model.g1(U[mask], V[mask]) < 0):
        notes.append("(U*): g1 >= 0 en algún u >= v de [kappa, e3]^2")
        ok = False
    return ok


def _check_strong_subtangency(model: ModelSpec, states: SteadyStates, notes: List[str]) -> bool:
    n = HYPOTHESIS_GRID_POINTS
    grid = np.linspace(states.e1, states.e3, n)
    U, V = np.meshgrid(grid, grid, indexing="ij")
    mask = U >= V
    ok = True
    for name, partial in (("g1", model.g1), ("g2", model.g2)):
        reference = float(partial(states.e3, states.e3))
        values = partial(U[mask], V[mask])
        tol = SIGN_TOL * max(1.0, abs(reference))
        if not _all(values >= reference - tol):
            notes.append(f"sub-tangencia fuerte: {name}(u, v) < {name}(e3, e3) en algún u >= v")
            ok = False
    return ok


def check_hypotheses(model: ModelSpec, states: SteadyStates) -> HypothesisReport:
    """
    Verifica en grilla (B), (U), (U*), la sub-tangencia fuerte e (I).

    Los resultados son "pasó en la grilla"; las fallas quedan en failure_notes.
    """
    notes: List[str] = []

    B_ok = True
    for name in ("e1", "e3"):
        note = _b_violation(model, getattr(states, name))
        if note:
            notes.append(f"(B) en {name}: {note}")
            B_ok = False

    kappa = _detect_kappa(model, notes)
    U_ok = kappa is not None and _check_U(model, states, kappa, notes)
    subtangency_ok = _check_strong_subtangency(model, states, notes)
    # la sub-tangencia fuerte es parte de (U*)
    Ustar_ok = (
        kappa is not None and _check_Ustar(model, states, kappa, notes) and subtangency_ok
    )

    I_value, I_error = diagonal_integral(model, states)
    if I_error >= 1e-9:
        notes.append(f"(I): error de cuadratura {I_error:.2e} >= 1e-9")
    I_ok = I_value > 0
    if not I_ok:
        notes.append(f"(I): integral = {I_value:.6g} <= 0")

    report = HypothesisReport(
        B_ok=B_ok,
        U_ok=U_ok,
        Ustar_ok=Ustar_ok,
        I_ok=I_ok,
        strong_subtangency_ok=subtangency_ok,
        I_value=I_value,
        I_error=I_error,
        kappa_detected=kappa,
        failure_notes=notes,
    )
    logger.info(
        f"Hipótesis de {model.model_id}: B={B_ok}, U={U_ok}, U*={Ustar_ok}, "
        f"I={I_ok} ({I_value:.6g})"
    )
    return report


#######################################################################################
# Reflexión y derivadas
#######################################################################################


def transform_reflect(model: ModelSpec, states: SteadyStates) -> ModelSpec:
    """
    Modelo reflejado g~(u, v) = -g(e1 + e3 - u, e1 + e3 - v).

    Si phi es un frente de g, psi(t) = e1 + e3 - phi(-t) es un frente de g~; los
    estados pasan a {e1, e1 + e3 - e2, e3} (ver reflect_states).
    """
    s = states.e1 + states.e3
    g, g1, g2 = model.g, model.g1, model.g2
    critical = None if model.critical_level is None else s - model.critical_level
    return ModelSpec(
        model_id=f"reflect({model.model_id})",
        kind=ModelKind.CUSTOM,
        g=lambda u, v: -g(s - u, s - v),
        g1=lambda u, v: g1(s - u, s - v),
        g2=lambda u, v: g2(s - u, s - v),
        domain_lo=s - model.domain_hi,
        domain_hi=s - model.domain_lo,
        params={**dict(model.params), "reflection_sum": s},
        critical_level=critical,
        discontinuous=model.discontinuous,
    )


def check_partials(
    model: ModelSpec, n: int = PARTIALS_GRID_POINTS, step: float = PARTIALS_FD_STEP
) -> float:
    """
    Máximo error relativo entre g1, g2 y diferencias centradas de g en una grilla n x n.

    El error se mide contra max(1, |diferencia finita|).
    """
    grid = _interior_grid(model.domain_lo, model.domain_hi, n)
    U, V = np.meshgrid(grid, grid, indexing="ij")
    fd_u = (model.g(U + step, V) - model.g(U - step, V)) / (2.0 * step)
    fd_v = (model.g(U, V + step) - model.g(U, V - step)) / (2.0 * step)
    worst = 0.0
    for analytic, fd in ((model.g1(U, V), fd_u), (model.g2(U, V), fd_v)):
        error = np.abs(analytic - fd) / np.maximum(1.0, np.abs(fd))
        worst = max(worst, float(np.max(error)))
    return worst


def partials_consistent(model: ModelSpec) -> bool:
    return check_partials(model) < PARTIALS_RTOL
