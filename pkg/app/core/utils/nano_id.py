import nanoid
from typing import NewType

NanoID = NewType("NanoID", str)

# ディレクトリ名に使うため記号を含まない英数字のみ
_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"


def generate_id(size: int = 5) -> NanoID:
    id_: str = nanoid.generate(alphabet=_ALPHABET, size=size)
    return NanoID(id_)
