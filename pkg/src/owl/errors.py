"""Error taxonomy shared across the package.

PreconditionError means the caller asked for something outside an
operation's contract (bad region, mismatched grids, too few replicas); the
message names the violated requirement.  FeasibilityError means the request
was well-posed but the sampler could not deliver at the given parameters
(particle extinction, degenerate rejection sampling, eigensolver failure);
the message suggests what to change.  The command line maps them to exit
codes 2 and 3.
"""


class OwlError(Exception):
    pass


class PreconditionError(OwlError):
    exit_code = 2


class FeasibilityError(OwlError):
    exit_code = 3


class DegenerateLawError(FeasibilityError):
    """Rejection sampling of a signed part exceeded the attempt budget."""


class ExtinctionError(FeasibilityError):
    """A particle population died out before the horizon."""
