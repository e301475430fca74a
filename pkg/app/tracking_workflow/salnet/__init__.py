from app.tracking_workflow.salnet.losses import (
    bce_grad,
    bce_loss,
    mine_triplets,
    total_loss,
    triplet_grad,
    triplet_loss,
)
from app.tracking_workflow.salnet.model import SalnetModel
from app.tracking_workflow.salnet.trainer import (
    LossRecord,
    SalnetTrainer,
    SalnetTrainingResult,
    graph_step,
    load_salnet,
)

__all__ = [
    "LossRecord",
    "SalnetModel",
    "SalnetTrainer",
    "SalnetTrainingResult",
    "bce_grad",
    "bce_loss",
    "graph_step",
    "load_salnet",
    "mine_triplets",
    "total_loss",
    "triplet_grad",
    "triplet_loss",
]
