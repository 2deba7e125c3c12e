# Tests unitarios para la simulación directa de la ecuación con retardo

import math

import numpy as np
import pytest

from bistable_fronts.errors import SimulationError
from bistable_fronts.model_zoo import (
    SteadyStates,
    custom,
    find_steady_states,
    mackey_glass_cubic,
    toy_piecewise,
)
from bistable_fronts.pde_sim import (
    HistoryBuffer,
    SimConfig,
    fit_speed,
    front_position,
    laplacian_neumann,
    simulate,
)

NAGUMO_SPEED = 0.5 / math.sqrt(2.0)


# 1. Test para verificar el laplaciano con extremos Neumann
def test_laplacian_neumann():
    x = np.linspace(0.0, 1.0, 11)
    dx = x[1] - x[0]

    assert np.allclose(laplacian_neumann(np.full_like(x, 3.0), dx), 0.0)
    assert np.allclose(laplacian_neumann(x**2, dx)[1:-1], 2.0)


# 2. Test para verificar la interpolación del valor retardado en la historia
def test_history_buffer_interpolates_between_levels():
    history = HistoryBuffer(np.zeros(1), tau=0.25, dt=0.1)

    for value in (1.0, 2.0, 3.0, 4.0):
        history.push(np.array([value]))

    # t = 0.4 - 0.25 = 0.15, entre los niveles 1 (t = 0.1) y 2 (t = 0.2)
    assert np.allclose(history.delayed(), 1.5)


# 3. Test para verificar que sin retardo la historia devuelve el último nivel
def test_history_buffer_without_delay():
    history = HistoryBuffer(np.zeros(2), tau=0.0, dt=0.1)
    history.push(np.array([5.0, 6.0]))

    assert np.allclose(history.delayed(), [5.0, 6.0])


# 4. Test para verificar la posición del frente por interpolación lineal
def test_front_position_interpolates_crossing():
    x = np.linspace(0.0, 10.0, 11)

    assert np.isclose(front_position(x, x / 10.0, 0.55), 5.5)
    assert front_position(x, np.zeros_like(x), 0.5) is None


# 5. Test para verificar el ajuste lineal de la velocidad
def test_fit_speed_on_linear_motion():
    t = np.linspace(0.0, 10.0, 21)
    positions = np.column_stack([t, 100.0 - 0.5 * t])

    speed, r_squared = fit_speed(positions)

    assert np.isclose(speed, 0.5)
    assert np.isclose(r_squared, 1.0)
    assert all(math.isnan(v) for v in fit_speed(positions[:2]))


# 6. Test para verificar la validación de la configuración
@pytest.mark.parametrize(
    "kwargs",
    [
        {"x_max": 0.0},
        {"nx": 2},
        {"t_final": 0.0},
        {"tau": -1.0},
        {"initial": "gaussian"},
        {"initial": "profile_seed"},
        {"initial": "constant"},
        {"dt": 1.0},
    ],
)
def test_sim_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(model=mackey_glass_cubic(), **kwargs)


# 7. Test para verificar que el estado e3 constante se mantiene
def test_constant_steady_state_is_preserved():
    model = mackey_glass_cubic()
    states = find_steady_states(model)
    config = SimConfig(
        model=model,
        tau=0.5,
        x_max=10.0,
        nx=51,
        t_final=2.0,
        initial="constant",
        constant_value=states.e3,
        states=states,
    )

    result = simulate(config)

    assert np.max(np.abs(result.final_snapshot - states.e3)) < 1e-12
    assert math.isnan(result.measured_speed)


# 8. Test para verificar que una explosión se reporta como blow-up
def test_blow_up_is_reported():
    model = custom(
        "explosivo",
        g=lambda u, v: 10.0 * v**2,
        g1=lambda u, v: 0.0 * u,
        g2=lambda u, v: 20.0 * v,
        domain_lo=-1.0,
        domain_hi=3.0,
    )
    config = SimConfig(
        model=model,
        x_max=1.0,
        nx=11,
        t_final=1.0,
        initial="constant",
        constant_value=2.0,
        states=SteadyStates(0.0, 0.5, 1.0),
        output_interval=0.1,
    )

    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(SimulationError, match="blow-up"):
            simulate(config)


# 9. Test para verificar que un dominio corto se detecta
def test_domain_too_small_is_reported():
    model = mackey_glass_cubic()
    config = SimConfig(model=model, x_max=20.0, nx=201, t_final=100.0)

    with pytest.raises(SimulationError, match="domain too small"):
        simulate(config)


# 10. Test para verificar los snapshots y las tablas de salida
def test_simulation_outputs():
    model = mackey_glass_cubic()
    config = SimConfig(
        model=model, x_max=60.0, nx=301, t_final=10.0, snapshot_interval=5.0, output_interval=1.0
    )

    result = simulate(config)

    assert len(result.snapshots) == 2
    assert list(result.fronts_frame().columns) == ["t", "x_front"]
    assert list(result.snapshot_frame().columns) == ["x", "u"]
    assert set(result.summary()) == {"tau", "measured_speed", "oscillation_flag"}
    assert result.kappa_band_cells is None


# 11. Test para verificar la banda de kappa en el modelo discontinuo
def test_discontinuous_model_reports_kappa_band():
    config = SimConfig(
        model=toy_piecewise(),
        tau=0.5,
        x_max=60.0,
        nx=301,
        t_final=5.0,
        states=SteadyStates(0.0, 1.0 / 3.0, 1.0),
        front_position=30.0,
    )

    result = simulate(config)

    assert result.kappa_band_cells is not None and result.kappa_band_cells > 0


# 12. Test para verificar la velocidad medida de Nagumo sin retardo
@pytest.mark.slow
def test_nagumo_measured_speed():
    result = simulate(SimConfig(model=mackey_glass_cubic(), x_max=400.0, nx=4001, t_final=100.0))

    assert abs(result.measured_speed - NAGUMO_SPEED) < 0.02 * NAGUMO_SPEED
    assert result.speed_r_squared > 0.999
    assert not result.oscillation_flag
