"""Exception types shared across the package.

Error classes are part of the module contracts: callers are expected to
catch these by name (for example the trial driver resamples on
``SingularSystem`` / ``IllConditioned``, while ``UnauthorizedAccess`` is a
hard abort that signals a scheme trying to read state its feedback model
does not grant).
"""


class InvalidMatrix(ValueError):
    """A matrix argument has non-finite entries or is not a 2-D array."""


class InvalidShape(ValueError):
    """Operand dimensions are incompatible."""


class InvalidInput(ValueError):
    """A structurally invalid argument (empty block list, bad range, ...)."""


class SingularSystem(ArithmeticError):
    """A square system is numerically rank deficient at the working tolerance."""


class IllConditioned(ArithmeticError):
    """A solve exceeded the condition-number guard; the trial should be resampled."""


class ProtocolViolation(RuntimeError):
    """The simulation driver mis-sequenced the slot protocol (e.g. double advance)."""


class UnauthorizedAccess(PermissionError):
    """A node tried to read an item its feedback model never grants.

    This is the enforcement mechanism of the knowledge ledgers, not a bug
    path: schemes that structurally require more feedback than the model
    provides abort with this error.
    """


class InsufficientEquations(ArithmeticError):
    """A reconstruction step has fewer equations than unknowns (m > n)."""


class RegimeError(ValueError):
    """The antenna configuration is outside the scheme's applicable regime."""


class DegeneratePrecoders(RuntimeError):
    """Random precoder draws failed their rank targets `max_retries` times."""


class DecodeFailure(RuntimeError):
    """A receiver's linear decode left a residual above tolerance."""


class InvalidTranscript(ValueError):
    """A transcript is incomplete or inconsistent with its plan."""
