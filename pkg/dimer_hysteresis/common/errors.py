from typing import Optional, Tuple


class HysteresisError(Exception):
    """Base class for numerical failures raised by the simulation"""


class SpectrumError(HysteresisError):
    """Eigensolver did not converge"""


class IntegratorError(HysteresisError):
    """Adaptive integration failed (step-size underflow or pole trap)"""


class NormDriftError(HysteresisError):
    """Quantum state norm drifted beyond the allowed bound"""

    def __init__(self, message: str, drift: float, bound: float):
        super().__init__(message)
        self.drift = drift
        self.bound = bound


class ClassifierError(HysteresisError):
    """No clear energy gap separates the final sub-ensembles

    Args:
        message: human readable summary
        candidates: return probabilities computed with the
            best available threshold, (husimi, spectral) for quantum states
        diagnostic: gap statistics that led to the rejection
    """

    def __init__(
        self,
        message: str,
        candidates: Optional[Tuple[float, ...]] = None,
        diagnostic: str = "",
    ):
        super().__init__(message)
        self.candidates = candidates
        self.diagnostic = diagnostic


class SamplingError(HysteresisError):
    """Rejection sampling acceptance rate is pathologically low"""


class EnsembleLossError(HysteresisError):
    """Too much ensemble weight was lost to failed trajectories"""


class BinningMismatchError(ValueError):
    """Two phase space densities are not on the same binning"""


class ConfigError(ValueError):
    """Run configuration rejected before any computation"""
