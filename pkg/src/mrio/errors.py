"""Exception hierarchy shared across the odometry pipeline."""


class MrioError(Exception):
    pass


class DataError(MrioError):
    """Bad or inconsistent input data. The CLI maps these to exit code 2."""


class ParseError(DataError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class NonMonotonicTime(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DtTooLarge(MrioError):
    pass


class MismatchedRadarId(DataError):
    pass


class UnknownRadarId(DataError):
    def __init__(self, radar_id):
        self.radar_id = radar_id
        super().__init__(f"radar_id {radar_id} has no extrinsics in the rig configuration")


class InsufficientTargets(MrioError):
    pass


class DegenerateGeometry(MrioError):
    pass


class SingularInnovationCovariance(MrioError):
    pass


class InsufficientOverlap(DataError):
    pass


class ConfigError(MrioError):
    pass
