"""Exception types shared across the engine."""


class ConfigurationError(ValueError):
    """Invalid grid, parameter or configuration value."""


class NumericFailure(FloatingPointError):
    """Non-finite values appeared in a field.

    ``mode`` is the index of the first offending field in the stacked state
    and ``index`` the grid index of the first offending sample.
    """

    def __init__(self, message, mode=None, index=None, step=None):
        super().__init__(message)
        self.mode = mode
        self.index = index
        self.step = step


def check_finite(stack, what="state", step=None):
    """Raise :class:`NumericFailure` if ``stack`` (fields along axis 0) is not finite."""
    import numpy as np

    bad = ~np.isfinite(stack)
    if not bad.any():
        return
    loc = tuple(int(i) for i in np.argwhere(bad)[0])
    mode, index = loc[0], loc[1:]
    where = f" at step {step}" if step is not None else ""
    raise NumericFailure(f"non-finite {what}{where}: field {mode}, grid index {index}",
                         mode=mode, index=index, step=step)
