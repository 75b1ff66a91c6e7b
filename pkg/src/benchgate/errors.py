"""Exception types raised across benchgate."""


class BenchgateError(Exception):
    """Base class for all benchgate errors."""


class InvalidArgument(BenchgateError, ValueError):
    pass


class EmptyClass(BenchgateError, ValueError):
    """A metric needs both classes (or at least one positive) and did not get them."""


class SingleClass(EmptyClass):
    pass


class AllTies(BenchgateError):
    """Every paired comparison was an exact tie, so no test can be run."""


class ShapeMismatch(BenchgateError, ValueError):
    pass


class TooFewGroups(BenchgateError, ValueError):
    pass


class DegenerateVariance(BenchgateError, ValueError):
    pass


class NoConvergence(BenchgateError, RuntimeError):
    pass


class ConvergenceWarning(UserWarning):
    pass


class ParseError(BenchgateError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class MissingMethod(BenchgateError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing method"


class NoCommonUnits(BenchgateError, ValueError):
    pass
