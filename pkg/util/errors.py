"""Exception hierarchy shared by the library and the command line.

Each error carries the exit code the CLI returns when it escapes a command.
"""


class SigdetError(Exception):
    exit_code = 1


class ConfigError(SigdetError):
    exit_code = 2


class InvalidPrior(ConfigError):
    pass


class PmfNotNormalized(ConfigError):
    pass


class GraphInconsistent(ConfigError):
    pass


class CostTableIncomplete(ConfigError):
    pass


class ParameterOutOfRange(ConfigError):
    pass


class WrongScenario(ConfigError):
    pass


class BlankAtHorizon(ConfigError):
    """A rule answered blank at t = T, where every active sensor must stop."""


class BudgetExceeded(SigdetError):
    exit_code = 3

    def __init__(self, what, size, budget):
        self.what = what
        self.size = size
        self.budget = budget
        super().__init__("{} needs {} items, budget is {}".format(what, size, budget))


class VerificationFailed(SigdetError):
    exit_code = 4


class ZeroProbabilityHistory(SigdetError):
    pass


class ZeroLikelihood(SigdetError):
    pass


class NoCompatibleHistory(SigdetError):
    pass


class CounterexampleMismatch(VerificationFailed):
    """Enumerated costs disagree with the closed forms; reported like a budget failure."""
    exit_code = 3
