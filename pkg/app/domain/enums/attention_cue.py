from app.domain.enums.base import BaseEnum


class AttentionCue(BaseEnum):
    JOINT = "joint"  # ターゲットパッチ + 言語
    TARGET_ONLY = "target_only"  # ターゲットパッチのみ
    LANGUAGE_ONLY = "language_only"  # 言語のみ
