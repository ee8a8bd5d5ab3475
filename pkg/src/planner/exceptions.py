class PlannerError(Exception):
    """Base class for every error raised by the planner app."""


class PDDLParseError(PlannerError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class UnsupportedFeatureError(PDDLParseError):
    def __init__(self, feature: str, line: int | None = None, column: int | None = None):
        self.feature = feature
        super().__init__(f"unsupported feature: {feature}", line, column)


class GroundingError(PlannerError):
    pass


class ContractError(PlannerError):
    """An operation was called with its precondition violated."""


class ConfigurationError(PlannerError):
    pass


class ScenarioError(PlannerError):
    def __init__(self, message: str, paths: list[str] | None = None):
        self.paths = paths or []
        super().__init__(message)


class SearchError(PlannerError):
    """Internal search failure (for example a broken parent chain)."""
