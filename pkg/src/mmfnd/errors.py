"""Exception hierarchy shared across the pipeline."""


class MmfndError(Exception):
    """Base class for all errors raised by this package."""


class ManifestError(MmfndError):
    """Manifest file cannot be used (missing columns, strict-mode row errors)."""


class MissingColumn(ManifestError):
    """Manifest header lacks one of the required fields."""


class TooFewRecords(MmfndError):
    """Not enough records per class to perform a stratified split."""


class EmptyCorpus(MmfndError):
    """Vocabulary or embedding training got an empty token corpus."""


class DecodeError(MmfndError):
    """Image file exists but cannot be decoded."""


class NotAnImage(MmfndError):
    """File content is not a recognized image format."""


class ExtractorUnavailable(MmfndError):
    """Conv-base weights are missing or do not match the expected version."""


class CacheMiss(MmfndError):
    """Requested feature vector is not in the cache under the given key."""


class ShapeMismatch(MmfndError):
    """Tensor or parameter shapes disagree with the network spec."""


class CorruptBundle(MmfndError):
    """Model bundle directory is incomplete or internally inconsistent."""


class EmptySplit(MmfndError):
    """Training was asked to run on a split with no usable records."""


class NonFiniteLoss(MmfndError):
    """Training loss became NaN/inf; aborted with a batch diagnostic."""


class ImageFetchFailed(MmfndError):
    """Remote image could not be fetched for a prediction request."""


class LengthMismatch(MmfndError):
    """Paired label sequences have different lengths."""


class EmptyMatrix(MmfndError):
    """Metrics requested for a confusion matrix with zero total count."""
