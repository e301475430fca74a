from abc import ABC, abstractmethod
from functools import partial
from pathlib import Path

import numpy as np
from jinja2 import Template
from pydantic import BaseModel

from app.core.logging import log, LogLevel


BlobPath = str | Path


class BaseBlobManager(ABC):
    def __init__(self, log_level: LogLevel = LogLevel.DEBUG) -> None:
        self.log = partial(log, log_level=log_level, subject=self.__name__)

    @property
    def __name__(self) -> str:
        return str(self.__class__.__name__)

    @abstractmethod
    def read_blob_as_bytes(self, blob_path: BlobPath) -> bytes:
        pass

    @abstractmethod
    def read_blob_as_str(self, blob_path: BlobPath) -> str:
        pass

    @abstractmethod
    def read_blob_as_template(self, blob_path: BlobPath) -> Template:
        pass

    @abstractmethod
    def read_blob_as_json(
        self, blob_path: BlobPath, schema: type[BaseModel] | None = None
    ) -> dict | list | BaseModel:
        pass

    @abstractmethod
    def read_blob_as_jsonl(
        self, blob_path: BlobPath, schema: type[BaseModel] | None = None
    ) -> list[dict] | list[BaseModel]:
        pass

    @abstractmethod
    def read_blob_as_image(self, blob_path: BlobPath, grayscale: bool = False) -> np.ndarray:
        pass

    @abstractmethod
    def read_blob_as_csv(self, blob_path: BlobPath) -> list[dict[str, str]]:
        pass

    @abstractmethod
    def save_blob_as_bytes(self, content: bytes, blob_path: BlobPath) -> None:
        pass

    @abstractmethod
    def save_blob_as_str(self, content: str, blob_path: BlobPath) -> None:
        pass

    @abstractmethod
    def save_blob_as_json(self, content: dict | list, blob_path: BlobPath) -> None:
        pass

    @abstractmethod
    def save_blob_as_jsonl(
        self,
        content: list[dict],
        blob_path: BlobPath,
        schema: type[BaseModel] | None = None,
        append: bool = False,
    ) -> None:
        pass

    @abstractmethod
    def save_blob_as_image(self, image: np.ndarray, blob_path: BlobPath) -> None:
        pass

    @abstractmethod
    def save_blob_as_csv(
        self, rows: list[dict[str, object]], blob_path: BlobPath, fieldnames: list[str]
    ) -> None:
        pass

    @abstractmethod
    def mkdir(self, blob_dir_path: BlobPath) -> None:
        pass

    @abstractmethod
    def list_blobs(self, blob_dir_path: BlobPath) -> list[Path]:
        pass

    @abstractmethod
    def exists(self, blob_path: BlobPath) -> bool:
        pass
