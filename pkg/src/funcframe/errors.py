"""Exception types shared across the package."""


class FuncFrameError(Exception):
    """Base class for all package errors."""


class DegenerateInput(FuncFrameError):
    """Input geometry is rank-deficient (too few points, collinear, ...)."""


class EmptyCloud(FuncFrameError):
    """A point cloud that must be non-empty is empty."""


class DegenerateKeypoints(FuncFrameError):
    """Keypoint triple cannot define a frame (coincident points)."""


class LengthMismatch(FuncFrameError):
    """Two paired sequences differ in length."""


class DegenerateProjection(FuncFrameError):
    """A function point projects to ~zero length on the warp plane."""


class RefinementExhausted(FuncFrameError):
    """Alignment refinement ran out of candidates.

    Carries the best candidate seen (`best`) and its verdict (`verdict`).
    """

    def __init__(self, message, best=None, verdict=None):
        super().__init__(message)
        self.best = best
        self.verdict = verdict


class InfeasibleBoundary(FuncFrameError):
    """Boundary frames cannot be connected within the velocity budget."""


class SolverDiverged(FuncFrameError):
    """Optimizer produced non-finite values. Carries the trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class GraspInfeasible(FuncFrameError):
    """No grasp candidate clears the obstacle set."""


class PlanFailed(FuncFrameError):
    """A plan in a chained sequence failed. Carries the plan index."""

    def __init__(self, message, plan_index):
        super().__init__(message)
        self.plan_index = plan_index


class ParseError(FuncFrameError):
    """A scenario/trajectory file could not be parsed."""


class SchemaError(ParseError):
    """File parsed but violates the schema or its invariants."""


class SchemaVersionMismatch(SchemaError):
    """File declares an unsupported schema version."""
