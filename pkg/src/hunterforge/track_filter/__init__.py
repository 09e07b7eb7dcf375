from hunterforge.track_filter.detection import (
    Detection,
    DetectionFrame,
    make_frames,
    read_detections,
    write_detections,
    group_sequences,
)
from hunterforge.track_filter.kalman import TrackState, predict, update, transition_matrix
from hunterforge.track_filter.tracker import (
    FilterConfig,
    Direction,
    TrackStatus,
    Tracklet,
    Association,
    associate,
    track_direction,
    keep_tracklet,
    merge_directions,
    filter_labels,
)
