"""Exception hierarchy shared by every asqlab module."""


class AsqlabError(Exception):
    """Base class for all errors raised by asqlab."""


class InputError(AsqlabError, ValueError):
    """A vector or argument violates an operation's precondition."""


class ConfigurationError(AsqlabError, ValueError):
    """Space parameters violate a construction constraint."""


class EnumerationCapExceeded(AsqlabError):
    """The brute-force oracle refused to enumerate an oversized family."""

    def __init__(self, size, cap):
        super().__init__(f"enumeration needs {size} evaluations, cap is {cap}")
        self.size = size
        self.cap = cap

    def __reduce__(self):
        return type(self), (self.size, self.cap)


class TruncationTooSmall(AsqlabError):
    """The ambient truncation is too short for a witness search to succeed.

    ``required_m`` carries the smallest truncation the search estimates
    would suffice.
    """

    def __init__(self, message, required_m):
        super().__init__(f"{message} (required m >= {required_m})")
        self.message = message
        self.required_m = required_m

    def __reduce__(self):
        return type(self), (self.message, self.required_m)


class InvariantViolation(AsqlabError, AssertionError):
    """A mathematically guaranteed property failed; signals a bug upstream."""


class RankError(AsqlabError, ValueError):
    """Point set does not span the ambient space."""


class CertificateError(AsqlabError):
    """No refutation certificate could be built for a candidate vector."""
