# Tests unitarios para el cuasi-polinomio característico

import math

import numpy as np
import pytest

from bistable_fronts.errors import IllPosedWindowError
from bistable_fronts.quasipoly import (
    CharParams,
    Rect,
    all_real_roots,
    count_roots_in_rect,
    dominant_positive_root,
    eval_char,
    eval_char_derivative,
    is_root,
    left_decay_rate,
    real_roots,
    right_decay_rate,
    root_report,
)


# 1. Test para verificar que sin retardo las raíces coinciden con la cuadrática z^2 - z - 2
def test_real_roots_without_delay_match_quadratic():
    params = CharParams(a=-1.0, b=-1.0, c=1.0, h=0.0)

    roots = all_real_roots(params)

    assert [m for _, m in roots] == [1, 1]
    assert np.isclose(roots[0][0], -1.0, atol=1e-12)
    assert np.isclose(roots[1][0], 2.0, atol=1e-12)


# 2. Test para verificar que la raíz positiva dominante anula chi
def test_dominant_positive_root_residual():
    params = CharParams(a=-1.0, b=-1.0, c=0.5, h=0.5)

    root = dominant_positive_root(params)

    assert root > 0
    assert abs(eval_char(params, root)) < 1e-10
    assert is_root(params, root)


# 3. Test para verificar que sin a + b < 0 no se garantiza raíz positiva
def test_dominant_positive_root_requires_negative_sum():
    with pytest.raises(ValueError, match="no guaranteed positive root"):
        dominant_positive_root(CharParams(a=1.0, b=-0.5, c=1.0, h=1.0))


# 4. Test para verificar la validación de los coeficientes
@pytest.mark.parametrize("c, h", [(0.0, 1.0), (-1.0, 0.0), (1.0, -0.1)])
def test_char_params_rejects_invalid_speed_or_delay(c, h):
    with pytest.raises(ValueError):
        CharParams(a=-1.0, b=-1.0, c=c, h=h)


# 5. Test para verificar que la derivada analítica coincide con diferencias centradas
def test_char_derivative_matches_finite_difference():
    params = CharParams(a=-1.0, b=-1.0, c=0.7, h=1.3)
    z = 0.4 + 0.9j
    step = 1e-6

    fd = (eval_char(params, z + step) - eval_char(params, z - step)) / (2 * step)

    assert abs(eval_char_derivative(params, z) - fd) < 1e-6


# 6. Test para verificar que con b > 0 chi es convexa y tiene a lo sumo dos raíces reales
def test_positive_delay_coefficient_gives_at_most_two_real_roots():
    params = CharParams(a=-1.0, b=1.0, c=1.0, h=1.0)

    roots = all_real_roots(params)

    assert sum(m for _, m in roots) == 2
    assert all(m == 1 for _, m in roots)
    for value, _ in roots:
        assert abs(eval_char(params, value)) < 1e-10


# 7. Test para verificar que real_roots rechaza intervalos vacíos
def test_real_roots_rejects_empty_interval():
    with pytest.raises(ValueError):
        real_roots(CharParams(-1.0, -1.0, 1.0, 1.0), 2.0, 1.0)


# 8. Test para verificar el conteo por principio del argumento en el caso cuadrático
def test_count_roots_in_rect_without_delay():
    params = CharParams(a=-1.0, b=-1.0, c=1.0, h=0.0)

    assert count_roots_in_rect(params, Rect(-5.0, 5.0, -5.0, 5.0)) == 2
    assert count_roots_in_rect(params, Rect(0.0 + 0.5, 5.0, -5.0, 5.0)) == 1
    assert count_roots_in_rect(params, Rect(3.0, 5.0, -5.0, 5.0)) == 0


# 9. Test para verificar que un rectángulo degenerado es una ventana mal planteada
def test_count_roots_in_degenerate_rect_raises():
    with pytest.raises(IllPosedWindowError, match="ill-posed window"):
        count_roots_in_rect(CharParams(-1.0, -1.0, 1.0, 1.0), Rect(1.0, 1.0, -1.0, 1.0))


# 10. Test para verificar el reporte completo de raíces sin retardo
def test_root_report_without_delay():
    report = root_report(CharParams(a=-1.0, b=-1.0, c=1.0, h=0.0))

    assert report.total_in_window == 2
    assert report.complex_pairs_in_window == 0
    assert np.isclose(report.dominant_real, 2.0)

    payload = report.as_dict()
    assert set(payload) == {
        "params",
        "real_roots",
        "complex_pairs_in_window",
        "total_in_window",
        "window",
        "dominant_real",
    }
    assert payload["real_roots"][0][1] == 1


# 11. Test para verificar que con retardo los pares complejos se cuentan de a dos
def test_root_report_with_delay_counts_complex_pairs_consistently():
    report = root_report(CharParams(a=-1.0, b=-1.0, c=0.5, h=2.0))

    real_count = sum(m for _, m in report.real_roots)
    assert report.total_in_window == real_count + 2 * report.complex_pairs_in_window
    assert report.dominant_real is not None and report.dominant_real > 0


# 12. Test para verificar los exponentes de borde con la fórmula cuadrática
def test_decay_rates_without_delay():
    assert np.isclose(left_decay_rate(-1.0, -1.0, 1.0, 0.0), 2.0)
    assert right_decay_rate(-1.0, -1.0, 1.0, 0.0) == pytest.approx((-1.0, 1))

    # Con h = 0 la velocidad puede ser negativa
    expected = 0.5 * (-0.5 + math.sqrt(0.25 + 8.0))
    assert np.isclose(left_decay_rate(-1.0, -1.0, -0.5, 0.0), expected)


# 13. Test para verificar que el exponente derecho con retardo es la mayor raíz negativa
def test_right_decay_rate_with_delay():
    rate, multiplicity = right_decay_rate(-1.0, -1.0, 0.5, 0.5)

    assert rate is not None and rate < 0
    assert multiplicity == 1
    assert abs(eval_char(CharParams(-1.0, -1.0, 0.5, 0.5), rate)) < 1e-10
