from app.domain.enums.base import BaseEnum


class UpdateMode(BaseEnum):
    NONE = "none"
    LONG = "long"  # 定期更新（長期メモリ）
    SHORT = "short"  # 失敗検出時の更新（短期メモリ）
