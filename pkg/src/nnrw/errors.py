"""Exception hierarchy for the nnrw package."""


class NnrwError(Exception):
    """Base class for all nnrw errors."""


# -- container format ------------------------------------------------------

class ContainerError(NnrwError):
    pass


class DuplicateTensorName(ContainerError):
    pass


class UnsupportedDtype(ContainerError):
    pass


class BadMagic(ContainerError):
    pass


class TruncatedFile(ContainerError):
    pass


class VersionUnsupported(ContainerError):
    pass


class ManifestDangling(ContainerError):
    pass


class MalformedContainer(ContainerError):
    """Byte stream is structurally not a well-formed container."""


# -- scoring ---------------------------------------------------------------

class ShapeMismatch(NnrwError):
    pass


class EmptyBin(NnrwError):
    pass


# -- digit codec -----------------------------------------------------------

class ZeroOrNonFinite(NnrwError):
    pass


class PairOutOfRange(NnrwError):
    pass


class NoUsableWeights(NnrwError):
    pass


class BadPermutation(NnrwError):
    pass


class NOutOfRange(NnrwError):
    pass


# -- histogram-shift coding ------------------------------------------------

class NoValley(NnrwError):
    pass


class CapacityExceeded(NnrwError):
    pass


class PayloadError(NnrwError):
    pass


class BadPayloadMagic(PayloadError):
    """Payload magic bytes missing: layer is unmarked or obliterated."""


class CrcMismatch(PayloadError):
    """Checksum failure: tampering or wrong extraction parameters."""


# -- metadata sidecar ------------------------------------------------------

class MalformedPlan(NnrwError):
    pass


class PlanTooLarge(NnrwError):
    pass
