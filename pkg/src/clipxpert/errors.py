"""Exception hierarchy shared by all clipxpert modules.

Every error raised by this package derives from :class:`ClipxpertError`,
so callers (notably the CLI) can distinguish input/usage problems from
genuine bugs with a single ``except``.
"""


class ClipxpertError(Exception):
    """Base class for all errors raised by this package."""


# --- data / file format ------------------------------------------------.


class MagicMismatch(ClipxpertError):
    """File does not start with the EMB1 magic and is not parseable as CSV."""


class DimMismatch(ClipxpertError):
    """Declared shape disagrees with the payload, or operand shapes differ."""


class NonFiniteValue(ClipxpertError):
    """A matrix or score vector contains NaN or infinity."""


class InvalidMatrix(ClipxpertError):
    """Matrix violates a structural invariant (empty, bad norms, ...)."""


class InvalidConfig(ClipxpertError):
    """A configuration value is out of its documented range."""


class IoFailure(ClipxpertError):
    """Underlying file write/read failed (permissions, missing dir, ...)."""


# --- scoring -----------------------------------------------------------.


class NonPositiveTemperature(ClipxpertError):
    """Softmax temperature must be strictly positive."""


class MissingLogits(ClipxpertError):
    """Energy score requested but no raw logit matrix is available."""


# --- power transform ---------------------------------------------------.


class NonPositiveInput(ClipxpertError):
    """Power transform requires strictly positive inputs."""


class InverseDomainError(ClipxpertError):
    """Inverse power transform evaluated outside its domain."""


class TooFewValues(ClipxpertError):
    """Not enough samples to fit the requested model."""


class DegenerateValues(ClipxpertError):
    """Values have zero variance under every candidate transform."""


# --- mixture fitting ---------------------------------------------------.


class DegenerateInput(ClipxpertError):
    """All input values identical; no mixture can be fitted."""


class FailedToSeparate(ClipxpertError):
    """EM converged but the two component means coincide."""


class IdenticalDistributions(ClipxpertError):
    """Both Gaussians identical; density intersection undefined."""


class InvalidStep(ClipxpertError):
    """Finite-difference step is zero, negative, or too large."""


# --- evaluation / pipeline ---------------------------------------------.


class OracleNeedsLabels(ClipxpertError):
    """Oracle threshold strategy requires a ground-truth label vector."""


class SingleClassOnly(ClipxpertError):
    """AUROC needs both known and unknown samples in the truth vector."""
