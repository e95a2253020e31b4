"""
Error hierarchy for the Stokes geometry toolkit.
Every numerical failure mode surfaces as a subclass of StokesError so the CLI
can map it to an exit code in one place.
"""
import logging
from typing import Optional, Sequence

logger = logging.getLogger(__name__)


class StokesError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self) -> dict:
        """Structured form used by the CLI error report"""
        payload = {'error': type(self).__name__, 'message': str(self)}
        for key, value in self.context.items():
            payload[key] = value if isinstance(value, (str, int, float, bool, type(None), list)) else str(value)
        return payload


class InvalidPotential(StokesError):
    """a coincides with one of the fixed turning points ±1"""

    exit_code = 64


class InvalidData(StokesError):
    """Inputs inconsistent with the requested operation"""


# core algebra

class PathTooCloseToTurningPoint(StokesError):
    def __init__(self, point: complex, turning_point: complex, clearance: float):
        super().__init__(
            f"path point {point:.6g} passes within {clearance:.3g} of turning point {turning_point:.6g}",
            point=point, turning_point=turning_point, clearance=clearance,
        )
        self.point = point
        self.turning_point = turning_point


class QuadratureNotConverged(StokesError):
    def __init__(self, error_estimate: float, intervals: int):
        super().__init__(
            f"adaptive quadrature stopped after {intervals} subintervals with error estimate {error_estimate:.3e}",
            error_estimate=error_estimate, intervals=intervals,
        )
        self.error_estimate = error_estimate


class SheetMismatch(StokesError):
    def __init__(self, initial: complex, final: complex):
        super().__init__(
            f"branch returned on the opposite sheet ({initial:.6g} -> {final:.6g})",
            initial=initial, final=final,
        )


# trajectory tracing

class BranchBreakdown(StokesError):
    pass


class StiffnessFailure(StokesError):
    def __init__(self, point: complex, step: float):
        super().__init__(f"step size underflow ({step:.3e}) at {point:.6g}", point=point, step=step)


class NotActuallyShort(StokesError):
    def __init__(self, pair: Sequence[int], residual: float):
        super().__init__(
            f"turning points {tuple(pair)} are not joined by a short trajectory (residual {residual:.3e})",
            pair=list(pair), residual=residual,
        )
        self.pair = tuple(pair)
        self.residual = residual


class AmbiguousNearMiss(StokesError):
    """Residual inside the gray zone between 'short' and 'not short'"""

    exit_code = 2

    def __init__(self, pair: Sequence[int], residual: float, labels: Sequence[str] = ()):
        super().__init__(
            f"near miss between turning points {tuple(pair)}: residual {residual:.3e} is in the gray zone",
            pair=list(pair), residual=residual, labels=list(labels),
        )
        self.pair = tuple(pair)
        self.residual = residual
        self.labels = tuple(labels)


class InconsistentGraph(StokesError):
    pass


# level sets

class OnExcludedCut(StokesError):
    def __init__(self, a: complex, which: str):
        super().__init__(f"a = {a:.6g} lies on the excluded cut of Sigma[{which}]", a=a, which=which)


class NewtonDiverged(StokesError):
    pass


class ContinuationStalled(StokesError):
    def __init__(self, point: complex, step: float):
        super().__init__(f"continuation stalled at {point:.6g} (step {step:.3e})", point=point, step=step)


# WKB

class NoContraction(StokesError):
    def __init__(self, ratio: float, iteration: int):
        super().__init__(
            f"Volterra iteration {iteration} is not contracting (ratio {ratio:.3f})",
            ratio=ratio, iteration=iteration,
        )
        self.ratio = ratio


class OutsideValidityDomain(StokesError):
    pass


class NotAccumulating(StokesError):
    """No eigenvalue accumulation along the requested direction"""

    exit_code = 3


# spectral oracle

class NoSignChange(StokesError):
    pass


class IntegrationOverflow(StokesError):
    pass


class ZeroOnContour(StokesError):
    def __init__(self, point: complex, distance: float):
        super().__init__(f"eigenfunction zero within {distance:.2e} of contour near {point:.6g}",
                         point=point, distance=distance)
        self.point = point


class NonIntegerWinding(StokesError):
    def __init__(self, winding: float, reason: Optional[str] = None):
        message = f"winding number {winding:.4f} is not within tolerance of an integer"
        if reason:
            message = f"{message} ({reason})"
        super().__init__(message, winding=winding)
        self.winding = winding


# applications

class NotOnTheta(StokesError):
    pass
