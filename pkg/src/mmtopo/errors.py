"""Exception types shared across the toolkit."""


class MmtopoError(Exception):
    """Base class for all toolkit errors."""


class NonConvexInput(MmtopoError):
    """Vertex set is not in convex position (or wrongly oriented)."""


class DegenerateGeometry(MmtopoError):
    """Coincident vertices, zero measure, or otherwise degenerate input."""


class PointOutsidePolytope(MmtopoError):
    """Barycentric evaluation requested outside the polytope; project first."""


class InvalidGeometry(MmtopoError):
    """Inconsistent mesh geometry parameters."""


class OrphanNode(MmtopoError):
    """Tree node whose parent is missing."""


class ChildCountMismatch(MmtopoError):
    """Internal node whose child count differs from its polytope's vertex count."""


class DuplicateMaterialLeaf(MmtopoError):
    """The same material appears on more than one leaf."""


class UnknownLabel(MmtopoError):
    """Label not present in the tree."""


class InvalidParameters(MmtopoError):
    """Material parameters outside their admissible range."""


class NewtonDivergence(MmtopoError):
    """Newton's method exhausted its iteration budget."""

    def __init__(self, message, iterations=None, residual_norm=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual_norm = residual_norm


class SingularSystem(MmtopoError):
    """Linear system factorization failed."""


class ZeroGradient(MmtopoError):
    """Gradient is identically zero; the optimizer cannot step."""


class SolverFailure(MmtopoError):
    """Optimization aborted because a state solve failed."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class InvalidNormalization(MmtopoError):
    """Non-positive flux normalization."""


class IoFailure(MmtopoError):
    """Export/import could not read or write a file."""
