"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its admissible range."""


class SpecError(ValueError):
    """A configuration or mixture spec failed validation.

    ``fields`` lists every offending field name so callers can report them all
    at once instead of failing on the first one.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        self.fields = [field for field, _ in self.problems]
        msg = "; ".join(f"{field}: {why}" for field, why in self.problems)
        super().__init__(msg)


class CSVParseError(ValueError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class AssumptionError(ValueError):
    """Raised when a recovery-bound precondition does not hold on the data."""

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)
