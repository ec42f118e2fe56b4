"""
Lungtex Errors — Exception hierarchy
Audio · Manifest · Spectral · Texture · Classifier · Selection · Evaluation
"""


class LungtexError(Exception):
    """Base class for every pipeline failure. The CLI maps it to exit code 1."""


class ConfigError(LungtexError):
    pass


# ── Audio ───────────────────────────────────────────────────────

class AudioError(LungtexError):
    pass


class UnreadableAudioError(AudioError):
    pass


class NotMonoError(AudioError):
    pass


class UnsupportedEncodingError(AudioError):
    pass


class SilentCycleError(AudioError):
    pass


class CycleTooShortError(AudioError):
    pass


class UpsampleError(AudioError):
    pass


# ── Manifest ────────────────────────────────────────────────────

class ManifestError(LungtexError):
    pass


class EmptyManifestError(ManifestError):
    pass


class ManifestHeaderError(ManifestError):
    pass


class UnknownLabelError(ManifestError):
    pass


class DuplicateCycleError(ManifestError):
    pass


class ConflictingLabelError(ManifestError):
    pass


class MissingFileError(ManifestError):
    pass


# ── Features ────────────────────────────────────────────────────

class SpectralError(LungtexError):
    pass


class FilterbankError(SpectralError):
    pass


class TextureError(LungtexError):
    pass


class BaselineError(LungtexError):
    pass


class ExtractionError(LungtexError):
    """One or more cycles of a manifest failed feature extraction."""

    def __init__(self, failures: dict):
        first_id, first = next(iter(failures.items()))
        super().__init__(f"{len(failures)} cycle(s) failed extraction; first: cycle {first_id}: {first}")
        self.failures = failures


class FeatureTableError(LungtexError):
    pass


# ── Classifiers ─────────────────────────────────────────────────

class ClassifierError(LungtexError):
    pass


class KernelError(ClassifierError):
    pass


class NegativeInputError(KernelError):
    pass


class NonPsdKernelError(KernelError):
    pass


class ConvergenceError(ClassifierError):
    pass


class ModelFormatError(ClassifierError):
    pass


# ── Selection / Evaluation ──────────────────────────────────────

class SelectionError(LungtexError):
    pass


class PlanError(LungtexError):
    pass


class FoldError(LungtexError):
    """Failure inside one LOOCV fold; keeps the fold id for the report."""

    def __init__(self, fold_id: str, cause: Exception):
        super().__init__(f"fold {fold_id}: {cause}")
        self.fold_id = fold_id
        self.cause = cause
