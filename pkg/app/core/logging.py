import sys

from loguru import logger

from app.core.config import settings
from app.domain.enums import BaseEnum


class LogLevel(BaseEnum):
    TRACE = "TRACE"  # 詳細なデバッグ情報。層ごとの形状など、開発時のみ有効化。
    DEBUG = "DEBUG"  # デバッグ用情報。フレーム単位の追跡ログなど。
    INFO = "INFO"  # 学習の進捗・シーケンス単位の結果。常時有効。
    WARNING = "WARNING"  # 空シーケンスのスキップなど、処理は継続できる事象。
    ERROR = "ERROR"  # 処理失敗や例外発生。
    CRITICAL = "CRITICAL"  # 実験全体が継続不能な障害。


def set_logger(level: str | None = None) -> None:
    logger.remove()
    log_format = (
        "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
        "<level>{level: <8}</level> | "
        "<level>{message}</level>"
    )
    logger.add(sys.stderr, format=log_format, level=level or settings.LOG_LEVEL)


def log(log_level: LogLevel, subject: str, object: str, message: object) -> None:
    logger.log(log_level.value, f"[{subject}] {object} | {message}")
