# Tests unitarios para la verificación a posteriori de frentes

import math

import numpy as np
import pytest

from bistable_fronts.model_zoo import find_steady_states, mackey_glass_cubic
from bistable_fronts.wave_verify import (
    fit_exponent,
    monotonicity,
    recompute_residual,
    report_as_dict,
    tail_sign_changes,
    verify,
)
from bistable_fronts.waves import WaveProfile

NAGUMO_SPEED = 0.5 / math.sqrt(2.0)


def _profile(grid, values, c=0.0, rho_left=1.0, rho_right=None):
    return WaveProfile(
        grid=grid,
        values=values,
        c=c,
        tau=0.0,
        residual_inf=0.0,
        model_id="sintético",
        e1=0.0,
        e3=1.0,
        rho_left=rho_left,
        rho_right=rho_right,
    )


def _nagumo_exact(n_intervals=2000, half_length=40.0):
    grid = np.linspace(-half_length, half_length, n_intervals + 1)
    values = 1.0 / (1.0 + np.exp(-grid / math.sqrt(2.0)))
    return _profile(
        grid,
        values,
        c=NAGUMO_SPEED,
        rho_left=1.0 / math.sqrt(2.0),
        rho_right=-1.0 / math.sqrt(2.0),
    )


# 1. Test para verificar el ajuste de una exponencial pura
def test_fit_exponent_recovers_rate():
    t = np.linspace(0.0, 40.0, 401)

    fit, note = fit_exponent(t, np.exp(-0.5 * t), scale=1.0)

    assert note is None
    assert np.isclose(fit.rate, -0.5, atol=1e-8)
    assert fit.r_squared > 0.999999
    assert fit.decades > 8


# 2. Test para verificar el ajuste con prefactor polinomial (raíz doble)
def test_fit_exponent_with_polynomial_prefactor():
    t = np.linspace(1.0, 40.0, 400)

    fit, _ = fit_exponent(t, t * np.exp(-0.5 * t), scale=1.0, polynomial_prefactor=True)

    assert np.isclose(fit.rate, -0.5, atol=1e-8)


# 3. Test para verificar que una ventana de menos de una década no se ajusta
def test_fit_exponent_skips_short_window():
    t = np.linspace(0.0, 1.0, 50)

    fit, note = fit_exponent(t, np.exp(-0.5 * t), scale=1.0)

    assert fit is None
    assert "décadas" in note


# 4. Test para verificar que los valores bajo el piso de ruido se descartan
def test_fit_exponent_ignores_noise_floor():
    t = np.linspace(0.0, 10.0, 100)

    fit, note = fit_exponent(t, np.full_like(t, 1e-14), scale=1.0)

    assert fit is None
    assert note is not None


# 5. Test para verificar la monotonía de un perfil logístico
def test_monotonicity_of_logistic_profile():
    monotone, first_bad = monotonicity(_nagumo_exact())

    assert monotone
    assert first_bad is None


# 6. Test para verificar que una cola oscilante no es monótona y cambia de signo
def test_oscillating_tail_is_detected():
    grid = np.linspace(0.0, 40.0, 4001)
    profile = _profile(grid, 1.0 - np.exp(-0.3 * grid) * np.cos(2.0 * grid))

    monotone, first_bad = monotonicity(profile)

    assert not monotone
    assert 0.0 < first_bad < 3.0
    assert tail_sign_changes(profile) >= 4


# 7. Test para verificar que una cola monótona no cambia de signo
def test_monotone_tail_has_no_sign_changes():
    grid = np.linspace(0.0, 40.0, 4001)
    profile = _profile(grid, 1.0 - np.exp(-0.5 * grid))

    assert tail_sign_changes(profile) == 0


# 8. Test para verificar que el perfil exacto de Nagumo tiene residuo de discretización chico
def test_recompute_residual_on_exact_nagumo_profile():
    residual = recompute_residual(_nagumo_exact(), mackey_glass_cubic())

    assert np.max(np.abs(residual)) < 1e-4


# 9. Test para verificar el reporte completo sobre el perfil exacto de Nagumo
def test_verify_exact_nagumo_profile():
    model = mackey_glass_cubic()
    states = find_steady_states(model)

    report = verify(_nagumo_exact(), model, states)

    assert report.monotone
    assert report.tail_sign_changes == 0
    assert report.right_multiplicity == 1
    assert np.isclose(report.predicted_left, 1.0 / math.sqrt(2.0), rtol=1e-3)
    assert np.isclose(report.predicted_right, -1.0 / math.sqrt(2.0), rtol=1e-3)
    assert abs(report.left_exponent_fit.rate - report.predicted_left) < 0.05 * report.predicted_left
    assert abs(report.right_exponent_fit.rate - report.predicted_right) < 0.05 * abs(
        report.predicted_right
    )


# 10. Test para verificar que la versión plana del reporte tiene los campos esperados
def test_report_as_dict_flattens_fits():
    model = mackey_glass_cubic()
    report = verify(_nagumo_exact(), model, find_steady_states(model))

    payload = report_as_dict(report)

    assert payload["monotone"] is True
    assert "left_exponent_fit_rate" in payload
    assert "right_exponent_fit_r_squared" in payload
    assert isinstance(payload["notes"], str)


# 11. Test para verificar que la verificación exige una grilla uniforme
def test_verify_requires_uniform_grid():
    grid = np.concatenate([np.linspace(-10.0, 0.0, 50), np.linspace(0.5, 10.0, 30)])
    profile = _profile(grid, 1.0 / (1.0 + np.exp(-grid)))
    model = mackey_glass_cubic()

    with pytest.raises(ValueError, match="uniforme"):
        verify(profile, model, find_steady_states(model))
