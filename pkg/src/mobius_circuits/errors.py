"""Exception types raised by the library."""


class MobiusCircuitError(Exception):
    """Base class for all library errors."""


class NormalizationSingular(MobiusCircuitError, ArithmeticError):
    """A layer matrix has (numerically) zero determinant and cannot be put in SL(2, C)."""


class DegenerateMap(MobiusCircuitError, ValueError):
    """The Mobius map is the identity, so every point is fixed."""


class DivergentZ(MobiusCircuitError, ArithmeticError):
    """The z coefficient is undefined because sin(2t) vanishes."""


class DivergesAtZero(MobiusCircuitError, ValueError):
    """The critical coupling diverges (x = 0 in the two-cycle model)."""


class NotCritical(MobiusCircuitError, ValueError):
    """A closed form valid only at critical momenta was evaluated elsewhere."""


class AsymmetryViolation(MobiusCircuitError, ValueError):
    """The sampled amplitude is not odd under k -> -k."""


class CoefficientRangeTooSmall(MobiusCircuitError, ValueError):
    """Too few Toeplitz coefficients were supplied for the requested block size."""


class SpectralFailure(MobiusCircuitError, ArithmeticError):
    """The symmetric eigensolver did not converge within its budget."""


class DegenerateFit(MobiusCircuitError, ValueError):
    """A least-squares fit has no spread in its abscissa."""


class InsufficientRange(MobiusCircuitError, ValueError):
    """The distance-to-criticality samples span less than a decade."""


class NormUnderflow(MobiusCircuitError, ArithmeticError):
    """The state norm vanished during a non-unitary layer."""


class ZeroPostSelection(MobiusCircuitError, ArithmeticError):
    """The post-selected ancilla outcome has zero amplitude."""
