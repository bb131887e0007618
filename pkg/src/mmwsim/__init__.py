"""mmwsim: end-to-end FMCW millimeter-wave roadside radar simulator.

Pipeline: intersection scene -> ray-traced vehicle scattering ->
multi-channel chirp echo synthesis -> range/Doppler/CFAR/angle
processing -> RDM images, point clouds and labeled datasets.
"""

from .config import RunConfig, default_run_config, load, loads
from .dsp import CfarParams, Detection, PointCloud, Rdm, process_cube
from .run import DatasetSpec, generate_dataset, run_single, run_sweep
from .scene import LaneLayout, LookGeometry, RadarPose, Scene, TargetTrack, default_intersection
from .waveform import ArrayConfig, ChirpConfig, DataCube, FrameConfig, LinkBudget, synthesize_frame

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig", "CfarParams", "ChirpConfig", "DataCube", "DatasetSpec",
    "Detection", "FrameConfig", "LaneLayout", "LinkBudget", "LookGeometry",
    "PointCloud", "RadarPose", "Rdm", "RunConfig", "Scene", "TargetTrack",
    "default_intersection", "default_run_config", "generate_dataset", "load",
    "loads", "process_cube", "run_single", "run_sweep", "synthesize_frame",
    "__version__",
]
