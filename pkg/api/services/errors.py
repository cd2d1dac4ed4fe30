class MhilbError(Exception):
    """Base class for every error raised by the services"""


class DomainError(MhilbError, ValueError):
    """An argument lies outside the domain of an operation"""


class ConfigError(DomainError):
    """A run configuration (flags, config file or request options) is invalid"""


class CertificationError(MhilbError):
    """A tail bound could not be certified within the allowed cutoff"""
