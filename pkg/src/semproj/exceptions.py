"""Exception hierarchy for semproj."""


class SemprojError(Exception):
    """Base class for all errors raised by this package."""


class EmbeddingFormatError(SemprojError, ValueError):
    pass


class CacheFormatError(SemprojError, ValueError):
    pass


class NotInVocabulary(SemprojError, KeyError):
    def __init__(self, token):
        super().__init__(token)
        self.token = token

    def __str__(self):
        return f"token not in vocabulary: {self.token!r}"


class UnresolvableItem(SemprojError, KeyError):
    def __init__(self, item, missing=()):
        super().__init__(item)
        self.item = item
        self.missing = tuple(missing)

    def __str__(self):
        return f"cannot resolve item {self.item!r} (missing: {', '.join(self.missing)})"


class InvalidPoles(SemprojError, ValueError):
    pass


class MissingPoleWord(SemprojError, KeyError):
    def __init__(self, feature, words):
        super().__init__(feature)
        self.feature = feature
        self.words = tuple(words)

    def __str__(self):
        return f"feature {self.feature!r}: pole words not in vocabulary: {', '.join(self.words)}"


class ZeroDirection(SemprojError, ValueError):
    pass


class ZeroVarianceError(SemprojError, ValueError):
    pass


class InsufficientDataError(SemprojError, ValueError):
    pass


class RatingsFormatError(SemprojError, ValueError):
    pass


class DatasetError(SemprojError, ValueError):
    pass


class ConfigError(SemprojError, ValueError):
    pass


class ExperimentError(SemprojError):
    """Wraps a failure inside one category/feature experiment."""

    def __init__(self, experiment, cause):
        super().__init__(f"{experiment}: {cause}")
        self.experiment = experiment
        self.cause = cause
