from app.domain.models.bbox import BBox

__all__ = [
    "BBox",
]
