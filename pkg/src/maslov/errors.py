"""Exception hierarchy shared across the package.

``MaslovError`` is the base for everything we raise on purpose; the CLI maps
``ConfigError`` to exit code 2 and ``NumericalError`` subclasses to exit
code 3.
"""


class MaslovError(Exception):
    """Base class for package errors."""


class ConfigError(MaslovError):
    """Invalid configuration (unknown key, out-of-range value, bad file)."""


class NumericalError(MaslovError):
    """Base class for numerical failures that are not caller bugs."""


# --- symplectic core ---------------------------------------------------------

class NotHalfDimensional(NumericalError):
    """Candidate plane does not have dimension n in a 2n-dimensional space."""


class NotIsotropic(NumericalError):
    """Symplectic form does not vanish on the candidate basis."""


class RankDeficient(NumericalError):
    """Supplied basis columns are numerically linearly dependent."""


class SingularGraph(NumericalError):
    """Solving for the graph unitary failed; the input was not Lagrangian."""


class NotTransversal(NumericalError):
    """No graph-over-plane decomposition exists for the given pair."""


class ToleranceAmbiguous(NumericalError):
    """An eigenvalue sits in the guard band; the answer is not robust."""


# --- maslov engine -----------------------------------------------------------

class PartitionFailure(NumericalError):
    """No admissible arc width could be certified after maximum refinement."""


class DiscontinuousPath(NumericalError):
    """Gap-metric jump between adjacent samples exceeds the threshold."""


class NoCrossing(NumericalError):
    """Crossing form requested at a point with trivial intersection."""


class NotGraphRepresentable(NumericalError):
    """Neighbouring plane is not a graph over the base plane at this step."""


class DegenerateCrossing(NumericalError):
    """Crossing form has an eigenvalue inside the degeneracy band."""


class IrregularCrossing(NumericalError):
    """Crossing-form method refused: some crossing is not regular."""


class AmbiguousCrossing(NumericalError):
    """An eigenvalue track hugs the reference level; flow count not robust."""


# --- 1D Schrodinger ----------------------------------------------------------

class NotLagrangian(NumericalError):
    """Solution-space trace failed the Lagrangian validation."""


class NotHermitian(NumericalError):
    """Matrix parameter expected to be Hermitian is not."""


class EigensolverFailure(NumericalError):
    """The sparse/dense eigensolver did not converge."""


class MorseAmbiguous(NumericalError):
    """An oracle eigenvalue sits inside the tolerance band around zero."""


# --- band structure ----------------------------------------------------------

class TruncationNotConverged(NumericalError):
    """Morse index changed when the Fourier cutoff was doubled."""


class TauNotSmallEnough(NumericalError):
    """Small-scale limit not reached before the scale floor."""


class QuadratureFailure(NumericalError):
    """Fourier coefficient quadrature failed to converge."""


# --- scenarios ---------------------------------------------------------------

class SquareInconsistent(NumericalError):
    """The four side indices of the homotopy square do not sum to zero."""
