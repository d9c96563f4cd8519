"""Exception types shared across modules."""


class BudgetError(RuntimeError):
    """A computation was refused because it exceeds a resource budget.

    Raised for enumerations or searches whose cost cap was hit; the CLI
    maps it to exit status 3 (validation failures use status 2).
    """
