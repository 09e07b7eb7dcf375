from hunterforge.cli_io.config import PipelineConfig, PRESETS, WORKERS_ENV
from hunterforge.cli_io.io import write_json, content_hash, convert_xyz, read_ground_truth
from hunterforge.cli_io.pipeline import StageGraph
