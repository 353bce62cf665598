"""Exception taxonomy shared by every camlqr module.

All library-raised failures derive from :class:`CamlqrError` so callers can
distinguish numerical/contract failures from programming errors.  The CLI maps
:class:`ConfigError` to exit code 2 and every other :class:`CamlqrError` to
exit code 3.
"""

from __future__ import annotations


class CamlqrError(Exception):
    """Base class for all camlqr failures."""


class ConfigError(CamlqrError):
    """A scenario configuration failed validation."""


class NotHurwitz(CamlqrError):
    """A matrix required to be Hurwitz has spectral abscissa >= -1e-12."""


class SingularSystem(CamlqrError):
    """A linear system that must be solvable is (numerically) singular."""


class NotStabilizing(CamlqrError):
    """A gain or plant fails a stabilizability/stabilizing-gain requirement."""


class NoConvergence(CamlqrError):
    """An iteration exhausted its budget before meeting its tolerance.

    When raised by an iterative learner the partially built result object is
    attached as ``exc.result`` for post-mortem inspection.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class RankDeficient(CamlqrError):
    """A regression matrix lacks the rank needed for a unique solution."""


class EigFailure(CamlqrError):
    """The eigenvalue routine failed to converge."""


class Divergence(CamlqrError):
    """A simulated state exceeded the configured blow-up bound."""


class InsufficientData(CamlqrError):
    """A log or regressor has too few samples/rows for the requested build."""


class MissingPsi(CamlqrError):
    """A coupling-aware operation was asked of data with no coupling channel."""


class NonPositiveP(CamlqrError):
    """An extracted value-matrix iterate has an eigenvalue below -1e-8."""


class IllConditioned(CamlqrError):
    """A regressor is too ill-conditioned to determine the requested fit."""


class LogBranch(CamlqrError):
    """The principal matrix logarithm is undefined for the fitted map."""


class WindowOutOfRange(CamlqrError):
    """A requested time window is not covered by the log."""


class EmptyWindow(CamlqrError):
    """A requested time window contains no samples."""


class DegenerateCalibration(CamlqrError):
    """Detector calibration saw an identically zero residual."""


class IoFailure(CamlqrError):
    """Reading or writing an artifact file failed."""
