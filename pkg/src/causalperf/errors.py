"""Exception hierarchy. The CLI maps these onto exit codes."""


class CausalPerfError(Exception):
    """Base class for all library errors."""


class InputError(CausalPerfError, ValueError):
    """Unknown node/variable names, malformed arguments, violated preconditions."""


class GraphParseError(InputError):
    """Malformed graph, metadata, background-knowledge or query document."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class InconsistencyError(InputError):
    """Background knowledge contradicts an orientation implied by the data."""


class UndefinedConditionalError(InputError):
    """Conditioning on an assignment with zero probability or no matching rows."""

    def __init__(self, message, assignment=None):
        self.assignment = dict(assignment or {})
        super().__init__(message)


class CapacityError(InputError):
    """A brute-force computation would exceed its state-space budget."""


class DegenerateInputError(CausalPerfError, ValueError):
    """Statistics cannot be computed: singular matrices, zero degrees of freedom, constant columns."""


class DegenerateSelectionError(DegenerateInputError):
    """Rejection sampling under a selection mechanism exceeded its retry budget."""
