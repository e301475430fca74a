from app.tracking_workflow.tracker.memory import FrameMemory, MemoryEntry
from app.tracking_workflow.tracker.online import OnlineClassifier
from app.tracking_workflow.tracker.state import (
    TRACK_CSV_FIELDS,
    FrameRecord,
    TrackState,
    TrackSummary,
)
from app.tracking_workflow.tracker.tracker import (
    LanguageTracker,
    TrackResult,
    detect_failure,
    init_tracker,
    read_track_csv,
    render_overlay,
    track_step,
    update_model,
)

__all__ = [
    "TRACK_CSV_FIELDS",
    "FrameMemory",
    "FrameRecord",
    "LanguageTracker",
    "MemoryEntry",
    "OnlineClassifier",
    "TrackResult",
    "TrackState",
    "TrackSummary",
    "detect_failure",
    "init_tracker",
    "read_track_csv",
    "render_overlay",
    "track_step",
    "update_model",
]
