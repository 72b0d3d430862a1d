class ResourceRefusal(RuntimeError):
    """Raised when a requested computation exceeds a configured resource budget.

    The CLI maps this to exit code 3.
    """
