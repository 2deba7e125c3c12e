# Tests unitarios para el catálogo de modelos y el chequeo de hipótesis

from pathlib import Path

import numpy as np
import pytest

from bistable_fronts.errors import HypothesisError
from bistable_fronts.model_zoo import (
    ModelKind,
    SteadyStates,
    check_hypotheses,
    check_partials,
    custom,
    diagonal_integral,
    find_steady_states,
    linearization,
    load_model_config,
    mackey_glass_cubic,
    partials_consistent,
    reflect_states,
    toy_piecewise,
    toy_smooth,
    transform_reflect,
    virus_gaussian,
)

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


# 1. Test para verificar los estados de Nagumo y su integral 1/24
def test_nagumo_steady_states_and_integral():
    model = mackey_glass_cubic()

    states = find_steady_states(model)

    assert np.allclose([states.e1, states.e2, states.e3], [0.0, 0.25, 1.0], atol=1e-10)
    value, error = diagonal_integral(model, states)
    assert np.isclose(value, 1.0 / 24.0, atol=1e-10)
    assert error < 1e-9


# 2. Test para verificar que la cúbica de Nagumo no cumple (U) ni (U*) pero sí (B) e (I)
def test_nagumo_hypotheses():
    model = mackey_glass_cubic()
    report = check_hypotheses(model, find_steady_states(model))

    assert report.B_ok
    assert report.I_ok
    assert not report.U_ok
    assert not report.Ustar_ok
    assert report.kappa_detected is None
    assert any("cambia de signo" in note for note in report.failure_notes)


# 3. Test para verificar los estados del modelo viral
def test_virus_steady_states():
    states = find_steady_states(virus_gaussian())

    assert np.allclose([states.e1, states.e2, states.e3], [0.21, 0.485, 0.99], atol=5e-3)


# 4. Test para verificar que el modelo viral cumple (U) con kappa en (e1, e2)
def test_virus_satisfies_U():
    model = virus_gaussian()
    states = find_steady_states(model)

    report = check_hypotheses(model, states)

    assert report.B_ok
    assert report.U_ok
    assert not report.Ustar_ok
    assert states.e1 < report.kappa_detected < states.e2
    assert np.isclose(report.kappa_detected, 0.25, atol=1e-8)


# 5. Test para verificar que el modelo de juguete suave cumple (U*) y la sub-tangencia
def test_toy_smooth_satisfies_Ustar():
    model = toy_smooth()
    states = find_steady_states(model)

    report = check_hypotheses(model, states)

    assert report.Ustar_ok
    assert report.strong_subtangency_ok
    assert report.I_ok
    assert states.e2 < report.kappa_detected < states.e3


# 6. Test para verificar que la cúbica simétrica tiene integral nula
def test_symmetric_cubic_has_zero_integral():
    model = mackey_glass_cubic(e2=0.5)
    value, _ = diagonal_integral(model, find_steady_states(model))

    assert abs(value) < 1e-12


# 7. Test para verificar que sin tres ceros no hay biestabilidad
def test_find_steady_states_requires_three_zeros():
    with pytest.raises(HypothesisError, match="not bistable on the given interval"):
        find_steady_states(mackey_glass_cubic(domain_lo=0.5, domain_hi=1.5))


# 8. Test para verificar que se detecta la violación de (B) en e1
def test_find_steady_states_detects_B_violation():
    # con beta = -1 los ceros siguen en 0, 1/4, 1 pero f'(0) = 1.25
    with pytest.raises(HypothesisError, match=r"hypothesis \(B\) violated at e1"):
        find_steady_states(mackey_glass_cubic(beta=-1.0))


# 9. Test para verificar el orden de los estados estacionarios
def test_steady_states_must_be_ordered():
    with pytest.raises(ValueError):
        SteadyStates(0.0, 1.0, 0.5)


# 10. Test para verificar que la reflexión es una involución
def test_reflection_is_an_involution():
    model = virus_gaussian()
    states = find_steady_states(model)

    reflected = transform_reflect(model, states)
    twice = transform_reflect(reflected, reflect_states(states))

    grid = np.linspace(0.05, 0.95, 25)
    U, V = np.meshgrid(grid, grid)
    assert np.allclose(twice.g(U, V), model.g(U, V), atol=1e-14)
    assert twice.critical_level == pytest.approx(model.critical_level)


# 11. Test para verificar estados, integral y kappa del modelo reflejado
def test_reflected_model_states_and_integral():
    model = mackey_glass_cubic()
    states = find_steady_states(model)

    reflected = transform_reflect(model, states)
    reflected_states = find_steady_states(reflected)

    assert reflected.kind == ModelKind.CUSTOM
    assert np.allclose(
        [reflected_states.e1, reflected_states.e2, reflected_states.e3],
        [0.0, 0.75, 1.0],
        atol=1e-10,
    )
    original, _ = diagonal_integral(model, states)
    mirrored, _ = diagonal_integral(reflected, reflected_states)
    assert np.isclose(mirrored, -original, atol=1e-10)


# 12. Test para verificar que las derivadas parciales de los modelos incluidos son correctas
@pytest.mark.parametrize(
    "model", [mackey_glass_cubic(), virus_gaussian(), toy_smooth()], ids=lambda m: m.kind.value
)
def test_builtin_partials_are_consistent(model):
    assert partials_consistent(model)


# 13. Test para verificar que check_partials detecta una derivada equivocada
def test_check_partials_detects_wrong_derivative():
    model = custom(
        "wrong",
        g=lambda u, v: -u + v**2,
        g1=lambda u, v: -1.0 + 0.0 * u,
        g2=lambda u, v: v + 0.0 * u,
        domain_lo=-1.0,
        domain_hi=2.0,
    )

    assert check_partials(model) > 0.1
    assert not partials_consistent(model)


# 14. Test para verificar la linealización en los estados
def test_linearization_of_nagumo():
    model = mackey_glass_cubic()

    assert linearization(model, 0.0) == pytest.approx((-1.0, 0.75))
    assert linearization(model, 1.0) == pytest.approx((-1.0, 0.25))


# 15. Test para verificar el modelo discontinuo
def test_toy_piecewise_is_discontinuous():
    model = toy_piecewise()

    assert model.discontinuous
    assert model.critical_level == pytest.approx(1.0 / 3.0)
    assert np.allclose(model.diagonal([0.2, 0.5]), [-0.1, 1.0])


# 16. Test para verificar la lectura de los modelos incluidos
@pytest.mark.parametrize(
    "filename, kind",
    [
        ("nagumo.cfg", ModelKind.MACKEY_GLASS),
        ("symmetric.cfg", ModelKind.MACKEY_GLASS),
        ("toysmooth.cfg", ModelKind.TOY_SMOOTH),
        ("virus.cfg", ModelKind.VIRUS),
    ],
)
def test_load_model_config_shipped_models(filename, kind):
    model = load_model_config(MODELS_DIR / filename)

    assert model.kind == kind
    find_steady_states(model)


# 17. Test para verificar los parámetros leídos desde un archivo
def test_load_model_config_reads_parameters(tmp_path):
    path = tmp_path / "cubic.cfg"
    path.write_text("# comentario\nkind=mackey_glass\nbeta=2\ne2=0.3\n")

    model = load_model_config(path)

    assert model.params == {"beta": 2.0, "e2": 0.3}
    assert model.domain_lo == -0.5


# 18. Test para verificar los errores de configuración
@pytest.mark.parametrize(
    "content",
    [
        "kind=lotka_volterra\n",
        "kind=custom\n",
        "kind=virus\nbeta=1\n",
        "kind=mackey_glass\nbeta=uno\n",
    ],
)
def test_load_model_config_rejects_bad_files(tmp_path, content):
    path = tmp_path / "bad.cfg"
    path.write_text(content)

    with pytest.raises(ValueError):
        load_model_config(path)


# 19. Test para verificar que un archivo inexistente se reporta como tal
def test_load_model_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model_config(tmp_path / "no_existe.cfg")


# 20. Test para verificar que romper la sub-tangencia fuerte invalida (U*)
def test_broken_subtangency_fails_Ustar():
    base = toy_smooth()
    delta = 0.5
    # -delta u^2 (1 - u)^2 no mueve los ceros 0 y 1 ni las derivadas en ellos,
    # pero baja g1 por debajo de g1(e3, e3) = -1 para u en (0, 1/2)
    model = custom(
        "toy_smooth_perturbado",
        g=lambda u, v: base.g(u, v) - delta * u**2 * (1.0 - u) ** 2,
        g1=lambda u, v: base.g1(u, v) - 2.0 * delta * u * (1.0 - u) * (1.0 - 2.0 * u),
        g2=base.g2,
        domain_lo=base.domain_lo,
        domain_hi=base.domain_hi,
        critical_level=1.0 / 3.0,
    )
    states = find_steady_states(model)

    report = check_hypotheses(model, states)
    base_report = check_hypotheses(base, find_steady_states(base))

    assert report.B_ok
    assert states.e2 < report.kappa_detected < states.e3
    assert report.strong_subtangency_ok is False
    assert report.Ustar_ok is False
    assert any("sub-tangencia" in note for note in report.failure_notes)
    assert base_report.Ustar_ok is True
