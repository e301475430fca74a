"""Constants for the language-guided tracking workflow."""

# 言語関連
MAX_SENTENCE_LENGTH = 16           # 文の最大トークン長
PAD_TOKEN = "<pad>"                # パディングトークン
UNK_TOKEN = "<unk>"                # 未知語トークン
PAD_ID = 0                         # パディングID（固定）
UNK_ID = 1                         # 未知語ID
NUM_SPECIAL_TOKENS = 2             # 特殊トークン数

# 参照スケール
REFERENCE_FEATURE_DIM = 512        # 第2全結合層の出力次元
REFERENCE_FC1_DIM = 4608           # 第1全結合層の出力次元
REFERENCE_PATCH_SIZE = 107         # 入力パッチの一辺
REFERENCE_FRAME_SIZE = (192, 256)  # GPGNet入力 (H, W)
ENCODER_DOWNSAMPLE = 16            # GPGNetエンコーダの縮小率

# サンプルのラベル付け
POSITIVE_IOU = 0.7                 # 正例とみなすIoUの下限
NEGATIVE_IOU = 0.5                 # 負例とみなすIoUの上限
DEFAULT_SAMPLES_PER_GRAPH = 32      # GCNなしのときの1ミニバッチのサンプル数

# 追跡
FAILURE_THRESHOLD = 0.5            # F+ がこれ未満なら失敗
SCALE_BASE = 1.05                  # スケール摂動の底
MIN_BOX_SIZE = 4.0                 # 候補ボックスの最小辺長（ピクセル）

# 数値計算
BCE_EPS = 1e-12                    # BCEの確率クランプ
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
ADAGRAD_EPS = 1e-8
GRAD_CHECK_EPS = 1e-5              # 中心差分の刻み
GRAD_CHECK_FLOOR = 1e-8            # 相対誤差の分母下限

# 評価
SUCCESS_THRESHOLDS = 101           # IoU閾値の点数 [0, 1]
PRECISION_MAX_DISTANCE = 50        # 中心誤差の最大閾値（参照ピクセル）
PRECISION_HEADLINE = 20            # 代表値の閾値（参照ピクセル）
PRECISION_REFERENCE_SIZE = (240, 320)  # 中心誤差閾値の基準フレーム (H, W)
REACQUIRE_IOU = 0.5                # 再捕捉とみなすIoU
REACQUIRE_WINDOW = 5               # 再出現後に許すフレーム数

# アブレーション
LAMBDA_SWEEP = (0.0, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0)
NODE_COUNT_SWEEP = (0, 20, 28, 32, 43, 50, 70)
GCN_DEPTH_SWEEP = (2, 3, 5, 8)

# 合成コーパス
PALETTE = {
    "red": (220, 40, 40),
    "green": (40, 180, 60),
    "blue": (40, 80, 220),
    "yellow": (230, 210, 40),
    "purple": (150, 60, 190),
    "orange": (240, 140, 30),
    "white": (245, 245, 245),
    "black": (15, 15, 15),
}
SHAPES = ("square", "circle", "triangle")
MAX_DISTRACTORS = 4
BACKGROUND_LEVEL = 120             # 背景の基準輝度
BACKGROUND_NOISE = 12              # 背景テクスチャの標準偏差
