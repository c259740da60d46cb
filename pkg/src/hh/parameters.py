import math
from dataclasses import dataclass, replace

from src.utils.exceptions import ContractViolation
from src.utils.logging import DEBUG

__all__ = [
    'HhParameters',
    'default_parameters',
    'precondition_bound'
]

# largest expansion target; 10 phi is the certification level of a rebuild
_PHI_CAP = 0.05


def _log(m):
    return max(math.log(max(m, 2)), 1.0)


def precondition_bound(phi, m):
    """``phi^2 / (1e5 log^2 m)``, the admissible balance and regularization."""
    return phi ** 2 / (1e5 * _log(m) ** 2)


def default_parameters(m, phi=None, beta=None, eps_ad=None):
    """Expansion, balance and regularization for a structure over ``m`` edges.

    Unset values follow ``phi = log^-3 m`` and
    ``beta = eps_ad = max(1e-4, phi^2 / (1e5 log^2 m))``.

    Returns:
        (phi, beta, eps_ad)
    """
    if phi is None:
        phi = min(_PHI_CAP, 1.0 / _log(m) ** 3)
    floor = max(1e-4, precondition_bound(phi, m))
    if beta is None:
        beta = floor
    if eps_ad is None:
        eps_ad = floor

    if not 0 < phi < 1:
        raise ContractViolation("Expansion parameter phi must lie in (0, 1), got {0}.".format(phi))
    if beta < 0 or eps_ad < 0:
        raise ContractViolation("beta and eps_ad must be nonnegative.")

    return float(phi), float(beta), float(eps_ad)


@dataclass(frozen=True)
class HhParameters:
    phi: float
    beta: float
    eps_ad: float
    reset_constant: float = 5e6
    vertex_constant: float = 6.0
    jl_constant: float = 48.0
    jl_max_rows: int = 1024
    strict_preconditions: bool = False
    debug_checks: bool = False
    weight_ratio: float = 1e6
    power_restarts: int = 3
    dense_limit: int = 600

    @classmethod
    def from_configs(cls, m, hh_configs=None, spectral_configs=None):
        hh_configs = hh_configs or {}
        spectral_configs = spectral_configs or {}

        phi, beta, eps_ad = default_parameters(m,
                                               phi=hh_configs.get("phi"),
                                               beta=hh_configs.get("beta"),
                                               eps_ad=hh_configs.get("eps_ad"))
        params = cls(phi=phi, beta=beta, eps_ad=eps_ad,
                     reset_constant=float(hh_configs.get("reset_constant", 5e6)),
                     vertex_constant=float(hh_configs.get("vertex_constant", 6.0)),
                     jl_constant=float(hh_configs.get("jl_constant", 48.0)),
                     jl_max_rows=int(hh_configs.get("jl_max_rows", 1024)),
                     strict_preconditions=bool(hh_configs.get("strict_preconditions", False)),
                     debug_checks=bool(hh_configs.get("debug_checks", False)),
                     weight_ratio=float(hh_configs.get("weight_ratio", 1e6)),
                     power_restarts=int(spectral_configs.get("power_restarts", 3)),
                     dense_limit=int(spectral_configs.get("dense_limit", 600)))

        DEBUG(lambda: "hh parameters for m={0}: phi={1:.3e}, beta={2:.3e}, eps_ad={3:.3e}"
              .format(m, phi, beta, eps_ad))
        return params

    def with_phi(self, phi):
        return replace(self, phi=phi)
