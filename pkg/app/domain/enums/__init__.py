from .base import BaseEnum
from .attention_cue import AttentionCue
from .provenance import Provenance
from .task_status import TaskStatus
from .update_mode import UpdateMode

__all__ = [
    "AttentionCue",
    "BaseEnum",
    "Provenance",
    "TaskStatus",
    "UpdateMode",
]
