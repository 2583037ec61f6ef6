"""Exception types raised across the package."""


class BeaconlandError(Exception):
    pass


class DegeneratePose(BeaconlandError):
    """Camera optical center is not above the ground plane."""


class BadLayout(BeaconlandError, ValueError):
    pass


class NoFeasibleGain(BeaconlandError):
    """Even the lowest allowed gain produces an oversized saturated blob."""


class AllZeroWeights(BeaconlandError):
    """Every particle weight underflowed during weighting.

    ``recovered`` carries the particle set with weights reset to uniform so
    the caller can keep running and flag the frame as diverged.
    """

    def __init__(self, message, recovered=None):
        super().__init__(message)
        self.recovered = recovered


class EmptyBand(BeaconlandError):
    pass


class MalformedLog(BeaconlandError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(BeaconlandError):
    """Invalid configuration; ``key`` is the dotted key path at fault."""

    def __init__(self, key, reason):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason
