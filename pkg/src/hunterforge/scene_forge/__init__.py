from hunterforge.scene_forge.insertion import (
    InsertionConfig,
    HumanLabel,
    InsertedInstance,
    InsertionResult,
    try_insert,
)
from hunterforge.scene_forge.synth_frame import Provenance, SynthFrame, synthesize_frame, validate_frame
from hunterforge.scene_forge.manifest import Manifest, SequenceRecord, FrameRecord
from hunterforge.scene_forge.corpus import CorpusDraw, plan_corpus, load_scene, corpus_generate
from hunterforge.scene_forge.visualization import visualize_synth_frame
