# Jerarquía de excepciones del paquete


class BistableFrontsError(Exception):
    """Base de todos los errores propios del paquete."""


class IllPosedWindowError(BistableFrontsError, ValueError):
    """La ventana compleja es degenerada o tiene raíces sobre el borde."""


class BranchUnavailableError(BistableFrontsError, ValueError):
    """La rama de velocidad pedida no existe para estos parámetros."""


class HypothesisError(BistableFrontsError, ValueError):
    """El modelo no es biestable o viola la hipótesis (B)."""


class DomainInconsistencyError(BistableFrontsError, RuntimeError):
    """clin y el conteo de raíces reales no coinciden."""


class SolverError(BistableFrontsError, RuntimeError):
    """Fallo numérico de un solver (Newton, bisección, integración)."""


class SimulationError(BistableFrontsError, RuntimeError):
    """Fallo de la simulación PDE (dominio chico, blow-up)."""
