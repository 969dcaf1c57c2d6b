"""Eye-gated attention capture for smart-glasses style pipelines.

A low-power eye path labels gaze movements and gates a higher-power
fusion step, which decides whether to record a video snippet. The package
replays that pipeline over synthetic traces and accounts for its energy.
"""

from .kernels import BACKEND
from .trace import AttentionTruth, GazeSample, SceneFrame, Trace, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AttentionTruth",
    "GazeSample",
    "SceneFrame",
    "Trace",
    "read_trace",
    "write_trace",
    "__version__",
]
