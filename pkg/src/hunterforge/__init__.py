from hunterforge.tools import *
from hunterforge.geometry_core import *
from hunterforge.range_view import *
from hunterforge.lidar_sim import *
from hunterforge.ground_seg import *
from hunterforge.scene_forge import *
from hunterforge.supervision import *
from hunterforge.loss_kernels import *
from hunterforge.track_filter import *
from hunterforge.eval_metrics import *
from hunterforge.cli_io import *

try:
    from importlib import metadata
except:
    import importlib_metadata as metadata

__version__ = metadata.version("hunterforge")
