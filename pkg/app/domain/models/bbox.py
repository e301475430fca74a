from pydantic import BaseModel, Field


class BBox(BaseModel):
    """左上座標 + 幅・高さ（ピクセル）で表す矩形.

    groundtruth.csv と追跡結果CSVはこの形式で書き出す。
    内部の候補サンプリングは中心形式 (cx, cy, w, h) の配列で扱う。
    """

    x: float = Field(title="左端x")
    y: float = Field(title="上端y")
    w: float = Field(title="幅")
    h: float = Field(title="高さ")

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return max(self.w, 0.0) * max(self.h, 0.0)

    def is_valid(self) -> bool:
        return self.w > 0 and self.h > 0

    def to_xywh(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    def to_center(self) -> tuple[float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h)

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BBox":
        return cls(x=cx - w / 2.0, y=cy - h / 2.0, w=w, h=h)

    def intersects(self, width: int, height: int) -> bool:
        """フレーム (width x height) と重なるか."""
        return (
            self.x < width and self.y < height
            and self.x + self.w > 0 and self.y + self.h > 0
        )
