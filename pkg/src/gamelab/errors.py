"""Exception hierarchy shared across the package.

Every error raised by gamelab derives from :class:`GamelabError` so callers
can catch the whole family with one clause.  The leaf classes mark distinct
failure modes that the CLI maps onto distinct exit codes.
"""

from __future__ import annotations


class GamelabError(Exception):
    """Base class for all package-specific errors."""


class BoundsError(GamelabError, ValueError):
    """A numeric parameter lies outside its admissible interval."""


class DimensionError(GamelabError, ValueError):
    """Array shapes are inconsistent with the declared game dimensions."""


class DomainError(GamelabError, ValueError):
    """A state vector violates a domain constraint (simplex, positivity)."""


class SizeError(GamelabError, ValueError):
    """A game is too large for an exact algorithm's support bound."""


class DegeneracyError(GamelabError, RuntimeError):
    """A pivoting step or support solve hit a degenerate configuration.

    The message names the tied or singular objects so the caller can
    perturb the game and retry.
    """


class StiffnessError(GamelabError, RuntimeError):
    """The integrator failed to meet its tolerance before reaching t_end.

    Attributes
    ----------
    last_t : float
        Time reached before the failure.
    last_state : ndarray
        State at ``last_t``; useful for restarting with a stiffer method.
    """

    def __init__(self, message, last_t=None, last_state=None):
        super().__init__(message)
        self.last_t = last_t
        self.last_state = last_state


class InconclusiveError(GamelabError, RuntimeError):
    """A classifier could not make a call at the requested confidence."""
