# 学習器 (trainer) は synthcorpus に依存するため、ここでは公開しない
from app.tracking_workflow.gpgnet.attention import (
    attention_box,
    attention_box_iou,
    mean_attention,
    prefers_described,
    prepare_frame,
    prepare_target,
    save_attention_png,
)
from app.tracking_workflow.gpgnet.masks import (
    box_pixel_span,
    from_png_values,
    mask_from_bbox,
    to_png_values,
)
from app.tracking_workflow.gpgnet.model import GpgnetModel

__all__ = [
    "GpgnetModel",
    "attention_box",
    "attention_box_iou",
    "box_pixel_span",
    "from_png_values",
    "mask_from_bbox",
    "mean_attention",
    "prefers_described",
    "prepare_frame",
    "prepare_target",
    "save_attention_png",
    "to_png_values",
]
