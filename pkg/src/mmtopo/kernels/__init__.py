"""Backend-dispatched hot kernels (see mmtopo.backend)."""

from ..backend import NUMBA_ENABLED

if NUMBA_ENABLED:
    from .numba_impl import (
        NUDGE_EPS,
        froelich_polarization,
        p1_element_b,
        p1_element_system,
        polygon_weights,
        polytope3_weights,
        project_polygon,
        project_polytope3,
    )
else:
    from .numpy_impl import (
        NUDGE_EPS,
        froelich_polarization,
        p1_element_b,
        p1_element_system,
        polygon_weights,
        polytope3_weights,
        project_polygon,
        project_polytope3,
    )

__all__ = [
    "NUDGE_EPS",
    "froelich_polarization",
    "p1_element_b",
    "p1_element_system",
    "polygon_weights",
    "polytope3_weights",
    "project_polygon",
    "project_polytope3",
]
