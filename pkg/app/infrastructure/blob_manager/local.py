import csv
import io
import json
from pathlib import Path

import cv2
import numpy as np
from jinja2 import Template
from pydantic import BaseModel

from app.core.exception import CorpusError
from app.core.logging import LogLevel
from app.infrastructure.blob_manager.base import BaseBlobManager, BlobPath


class LocalBlobManager(BaseBlobManager):
    def __init__(self, log_level: LogLevel = LogLevel.TRACE) -> None:
        super().__init__(log_level)

    def read_blob_as_bytes(self, blob_path: BlobPath) -> bytes:
        self.log(object="read_blob_as_bytes", message=blob_path)
        with open(blob_path, "rb") as fi:
            return fi.read()

    def read_blob_as_str(self, blob_path: BlobPath) -> str:
        self.log(object="read_blob_as_str", message=blob_path)
        with open(blob_path, encoding="utf-8") as fi:
            return fi.read()

    def read_blob_as_template(self, blob_path: BlobPath) -> Template:
        self.log(object="read_blob_as_template", message=blob_path)
        return Template(source=self.read_blob_as_str(blob_path))

    def read_blob_as_json(
        self, blob_path: BlobPath, schema: type[BaseModel] | None = None
    ) -> dict | list | BaseModel:
        self.log(object="read_blob_as_json", message=blob_path)
        with open(blob_path, encoding="utf-8") as fi:
            if schema:
                return schema.model_validate_json(fi.read())
            return json.load(fi)  # type: ignore

    def read_blob_as_jsonl(
        self, blob_path: BlobPath, schema: type[BaseModel] | None = None
    ) -> list[dict] | list[BaseModel]:
        self.log(object="read_blob_as_jsonl", message=blob_path)
        with open(blob_path, encoding="utf-8") as fi:
            if schema:
                return [schema.model_validate_json(line) for line in fi if line.strip()]
            return [json.loads(line) for line in fi if line.strip()]

    def read_blob_as_image(self, blob_path: BlobPath, grayscale: bool = False) -> np.ndarray:
        """PNGを読み込む. カラーはRGB順 (H, W, 3)、グレースケールは (H, W) の uint8."""
        self.log(object="read_blob_as_image", message=blob_path)
        buffer = np.frombuffer(self.read_blob_as_bytes(blob_path), dtype=np.uint8)
        flag = cv2.IMREAD_GRAYSCALE if grayscale else cv2.IMREAD_COLOR
        image = cv2.imdecode(buffer, flag)
        if image is None:
            raise CorpusError(self.__name__, "read_blob_as_image", f"cannot decode {blob_path}")
        if grayscale:
            return image
        return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)

    def read_blob_as_csv(self, blob_path: BlobPath) -> list[dict[str, str]]:
        self.log(object="read_blob_as_csv", message=blob_path)
        with open(blob_path, encoding="utf-8", newline="") as fi:
            return list(csv.DictReader(fi))

    def save_blob_as_bytes(self, content: bytes, blob_path: BlobPath) -> None:
        self.log(object="save_blob_as_bytes", message=blob_path)
        with open(blob_path, "wb") as fo:
            fo.write(content)

    def save_blob_as_str(self, content: str, blob_path: BlobPath) -> None:
        self.log(object="save_blob_as_str", message=blob_path)
        with open(blob_path, "w", encoding="utf-8") as fo:
            fo.write(content)

    def save_blob_as_json(self, content: dict | list, blob_path: BlobPath) -> None:
        self.log(object="save_blob_as_json", message=blob_path)
        with open(blob_path, "w", encoding="utf-8") as fo:
            json.dump(content, fo, ensure_ascii=False, indent=4)

    def save_blob_as_jsonl(
        self,
        content: list[dict],
        blob_path: BlobPath,
        schema: type[BaseModel] | None = None,
        append: bool = False,
    ) -> None:
        self.log(object="save_blob_as_jsonl", message=blob_path)
        with open(blob_path, "a" if append else "w", encoding="utf-8") as fo:
            for line in content:
                if schema:
                    obj = schema.model_validate(line)
                    fo.write(obj.model_dump_json() + "\n")
                else:
                    fo.write(json.dumps(line, ensure_ascii=False) + "\n")

    def save_blob_as_image(self, image: np.ndarray, blob_path: BlobPath) -> None:
        """uint8画像をPNGで保存. 3チャネルはRGB順として受け取る."""
        self.log(object="save_blob_as_image", message=blob_path)
        if image.ndim == 3:
            image = cv2.cvtColor(image, cv2.COLOR_RGB2BGR)
        ok, encoded = cv2.imencode(".png", image)
        if not ok:
            raise CorpusError(self.__name__, "save_blob_as_image", f"cannot encode {blob_path}")
        self.save_blob_as_bytes(encoded.tobytes(), blob_path)

    def save_blob_as_csv(
        self, rows: list[dict[str, object]], blob_path: BlobPath, fieldnames: list[str]
    ) -> None:
        self.log(object="save_blob_as_csv", message=blob_path)
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        self.save_blob_as_str(buffer.getvalue(), blob_path)

    def mkdir(self, blob_dir_path: BlobPath) -> None:
        self.log(object="mkdir", message=blob_dir_path)
        Path(blob_dir_path).mkdir(parents=True, exist_ok=True)

    def list_blobs(self, blob_dir_path: BlobPath) -> list[Path]:
        self.log(object="list_blobs", message=blob_dir_path)
        return sorted(Path(blob_dir_path).iterdir())

    def exists(self, blob_path: BlobPath) -> bool:
        self.log(object="exists", message=blob_path)
        return Path(blob_path).exists()
