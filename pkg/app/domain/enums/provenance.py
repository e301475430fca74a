from app.domain.enums.base import BaseEnum


class Provenance(BaseEnum):
    INITIAL = "init"  # 1フレーム目の与えられたボックス
    LOCAL = "local"  # 前フレームの状態周辺からのサンプル
    GLOBAL = "global"  # アテンション領域からのサンプル
