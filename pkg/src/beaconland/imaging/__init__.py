from .detect import DEFAULT_K, DEFAULT_WINDOW, Detection, detect_light_sources, local_maxima
from .distance import distance_transform, max_dist
from .exposure import auto_exposure, auto_exposure_layers, largest_saturated_component
from .pnm import PnmError, read_pbm, read_pgm, write_pbm, write_pgm
from .render import SceneRenderConfig, compose, render_frame, render_layers

__all__ = [
    "DEFAULT_K", "DEFAULT_WINDOW", "Detection", "detect_light_sources", "local_maxima",
    "distance_transform", "max_dist", "auto_exposure", "auto_exposure_layers",
    "largest_saturated_component",
    "PnmError", "read_pbm", "read_pgm", "write_pbm", "write_pgm",
    "SceneRenderConfig", "compose", "render_frame", "render_layers",
]
