"""Exception hierarchy shared across the package."""


class S2MambaError(Exception):
    """Base class for all library errors."""


class FormatError(S2MambaError):
    """A binary file does not conform to the expected layout."""


class ConsistencyError(S2MambaError):
    """Two pieces of data that must agree do not (e.g. cube vs. label dims)."""


class DegenerateBandError(S2MambaError):
    """A spectral band cannot be standardized (constant values)."""


class ConfigError(S2MambaError):
    """An invalid configuration value or dimension mismatch."""


class SplitError(S2MambaError):
    """Train/test split construction failed (infeasible counts, bad center)."""


class NumericError(S2MambaError):
    """Non-finite values encountered where finite math is required."""


class ContractError(S2MambaError):
    """A tape/forward pairing contract was violated."""
