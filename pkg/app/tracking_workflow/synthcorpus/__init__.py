from app.tracking_workflow.synthcorpus.factory import (
    evaluation_scenes,
    random_scene,
    training_scenes,
)
from app.tracking_workflow.synthcorpus.render import SequenceData, generate_sequence
from app.tracking_workflow.synthcorpus.scene import (
    EventKind,
    EventSpec,
    ObjectSpec,
    SceneKind,
    SceneSpec,
    describe_target,
    template_words,
)
from app.tracking_workflow.synthcorpus.storage import (
    TEST_SPLIT,
    TRAIN_SPLIT,
    CorpusStore,
    parse_scene,
)

__all__ = [
    "TEST_SPLIT",
    "TRAIN_SPLIT",
    "CorpusStore",
    "EventKind",
    "EventSpec",
    "ObjectSpec",
    "SceneKind",
    "SceneSpec",
    "SequenceData",
    "describe_target",
    "evaluation_scenes",
    "generate_sequence",
    "parse_scene",
    "random_scene",
    "template_words",
    "training_scenes",
]
