from app.tracking_workflow.models.state import (
    AblationAgentInputState,
    AblationAgentOutputState,
    AblationAgentState,
    AblationSetting,
    SettingResult,
    SweepKind,
)

__all__ = [
    "AblationAgentInputState",
    "AblationAgentOutputState",
    "AblationAgentState",
    "AblationSetting",
    "SettingResult",
    "SweepKind",
]
