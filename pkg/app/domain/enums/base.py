from collections.abc import Iterator
from enum import Enum
try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self

from app.core.exception import ConfigError


class BaseEnum(Enum):
    @classmethod
    def to_list(cls) -> list[str]:
        return [item.value for item in cls]

    @classmethod
    def __iter__(cls) -> Iterator[str]:
        return iter(cls.to_list())

    @classmethod
    def parse(cls, value: str) -> Self:
        """設定ファイル・CLIの文字列から列挙子を引く（大文字小文字と前後の空白は無視）."""
        try:
            return cls(value.strip().lower())
        except ValueError as e:
            raise ConfigError(cls.__name__, value, f"expected one of {cls.to_list()}") from e
