"""Exception hierarchy shared across the package."""


class CheckgenError(Exception):
    """Base class for every error raised by checkgen."""


class MalformedPlaceholder(CheckgenError, ValueError):
    pass


class CardinalGap(CheckgenError, ValueError):
    pass


class MissingLexiconEntry(CheckgenError, KeyError):
    def __str__(self):
        # KeyError quotes its argument; keep the plain message.
        return str(self.args[0]) if self.args else ""


class InsufficientTerminals(CheckgenError, ValueError):
    pass


class InvalidLexicon(CheckgenError, ValueError):
    pass


class EmptyCorpus(CheckgenError, ValueError):
    pass


class EmptyCandidateSet(CheckgenError, ValueError):
    pass


class EmptyCapability(CheckgenError, ValueError):
    pass


class ConstantVector(CheckgenError, ValueError):
    pass


class TranslationError(CheckgenError):
    """Base for failures in the translation layer."""


class ProviderUnavailable(TranslationError):
    pass


class CacheMiss(TranslationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class AuthError(TranslationError):
    pass
