"""Exception hierarchy shared by every module.

``InputError`` covers bad files, arguments and shapes (CLI exit code 2).
``NumericalError`` covers failures of the linear algebra itself (CLI exit code 3).
"""


class IsoMergeError(Exception):
    """Root of all errors raised by this package."""


class InputError(IsoMergeError, ValueError):
    """Invalid input: unreadable files, malformed data, mismatched shapes or bad options."""


class NumericalError(IsoMergeError, ArithmeticError):
    """A numerical routine could not produce a meaningful result."""


class IoFailure(InputError):
    """Writing an output file failed."""


# Bundle files


class BundleNotFound(InputError):
    """The bundle file does not exist."""


class MagicMismatch(InputError):
    """The file does not start with the ISOT magic."""


class VersionUnsupported(InputError):
    """The container version is not supported."""


class HeaderMalformed(InputError):
    """The JSON header cannot be parsed or violates the container rules."""


class DtypeUnsupported(InputError):
    """A tensor declares a dtype other than f32."""


class PayloadTruncated(InputError):
    """A tensor payload extends past the end of the file."""


class NonFiniteValue(InputError):
    """A tensor contains NaN or Inf."""


class DuplicateName(InputError):
    """A parameter name appears more than once."""


class InvalidTensor(InputError):
    """A tensor has an unsupported rank or an empty dimension."""


# Shapes and arguments


class ShapeMismatch(InputError):
    """Two tensors that must agree in shape do not."""


class NameSetMismatch(InputError):
    """Two bundles or task sets do not hold the same parameter names."""


class DimensionMismatch(InputError):
    """Matrix dimensions are incompatible for the requested product."""


class KOutOfRange(InputError):
    """A rank or truncation index lies outside ``1..r``."""


class BasisNotOrthonormal(InputError):
    """A basis expected to have orthonormal columns does not."""


class EmptyTaskList(InputError):
    """A merge was requested without any task."""


class EmptyGrid(InputError):
    """An alpha sweep was requested with an empty grid."""


class InvalidDims(InputError):
    """Synthetic suite dimensions or knobs are out of range."""


class EmptySplit(InputError):
    """A dataset split holds no points."""


class LengthMismatch(InputError):
    """Two sequences that must be paired have different lengths."""


class TooLarge(InputError):
    """Input exceeds the size accepted by a brute-force oracle."""


class NoTwoDLayers(InputError):
    """No 2-D layer is available for a layer-wise metric."""


class InvalidConfig(InputError):
    """A job configuration value is invalid."""


class LayerSelectorUnmatched(InputError):
    """A layer selector matched no 2-D layer."""


# Numerical failures


class NonFinite(NumericalError):
    """A matrix handed to a numerical routine contains NaN or Inf."""


class NoConvergence(NumericalError):
    """The SVD did not converge."""


class ZeroMatrix(NumericalError):
    """A nonzero matrix was required."""


class RankDeficient(NumericalError):
    """A matrix expected to have full column rank does not."""


class ZeroSource(NumericalError):
    """The source matrix of an alignment ratio is zero."""


class ZeroVector(NumericalError):
    """A flattened task vector is zero."""


class ZeroVariance(NumericalError):
    """A correlation input has no variance."""


class DegenerateDenominator(NumericalError):
    """Task-specific and zero-shot accuracy coincide, so NAI is undefined."""


class EvaluatorFailure(NumericalError):
    """The accuracy callback raised or returned an unusable value."""
