"""Exception types raised across the inpainting pipeline.

Per-cube errors (NoDonorError, NoCandidateError, NoInterSourceError,
DescriptorError, GraphError, SingularSystemError, SolverError) are caught by
the frame pipeline, recorded in the report, and the cube is skipped; they
never abort a frame. I/O and argument errors propagate.
"""


class DpcInpaintError(Exception):
    """Base class for all library-specific errors."""


class PlyParseError(DpcInpaintError):
    """Malformed PLY header; the message names the offending line."""


class PlyDataError(DpcInpaintError):
    """Invalid PLY payload, e.g. a non-finite coordinate (names the element index)."""


class CorruptionBudgetError(DpcInpaintError):
    """Hole synthesis would remove more than half of a frame."""


class NoDonorError(DpcInpaintError):
    """The registered intra-source cube has no points in the hole region."""


class NoCandidateError(DpcInpaintError):
    """No admissible intra-source candidate cube exists for a target cube."""


class NoInterSourceError(DpcInpaintError):
    """The inter-frame search box contains no points on one temporal side."""


class DescriptorError(DpcInpaintError):
    """A cube has too few known slots to compute a shape descriptor."""


class GraphError(DpcInpaintError):
    """A spatial graph cannot be built (fewer than two slots)."""


class SingularSystemError(DpcInpaintError):
    """A slot has zero total diagonal mass; the message names the slot index."""


class SolverError(DpcInpaintError):
    """The per-cube linear solve failed its residual bound."""
