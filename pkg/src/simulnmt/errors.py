"""Exception types shared across the package."""


class InputError(ValueError):
    """An argument violates an operation's preconditions."""


class FormatError(ValueError):
    """A checkpoint or data file is malformed.

    ``field`` names the offending part of the file (``magic``, ``version``,
    ``manifest``, ``payload``, a tensor name, ...).
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class AlignmentError(ValueError):
    """A Pharaoh alignment line is malformed or out of bounds.

    ``line`` is 1-based when known; ``column`` is the 1-based character
    position of the offending pair within the line.
    """

    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.column = column


class StreamStateError(RuntimeError):
    """A streaming session was used out of order (e.g. READ after finish)."""


class GradCheckError(ArithmeticError):
    """A gradient check could not be evaluated (non-finite loss)."""


class NoFeasibleAgentError(RuntimeError):
    """No STATIC-RW configuration satisfies the latency budget.

    The evaluated grid is kept on ``grid`` so callers can still report it.
    """

    def __init__(self, ap_max, grid):
        super().__init__(f"no (S, RW) pair reaches AP <= {ap_max}")
        self.ap_max = ap_max
        self.grid = grid
