"""Exception types shared across the package."""


class SpectraClassError(Exception):
    """Base class for all errors raised by spectraclass."""


class ParseError(SpectraClassError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + loc)


class EmptySpectrum(SpectraClassError):
    pass


class DomainError(SpectraClassError):
    pass


class CannotNormalize(SpectraClassError):
    pass


class InvalidThresholds(SpectraClassError):
    pass


class UnknownTerm(SpectraClassError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown term: {name!r}")


class DuplicateName(SpectraClassError):
    pass


class NoClasses(SpectraClassError):
    pass


class BadIndex(SpectraClassError):
    pass


class EmptyEnsemble(SpectraClassError):
    pass


class IncompatibleDBs(SpectraClassError):
    pass
