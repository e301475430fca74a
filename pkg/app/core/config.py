from dotenv import load_dotenv

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
    )

    LOG_LEVEL: str = Field(default="INFO")
    TIMEZONE: str = Field(default="Asia/Tokyo")
    TEMPLATE_DIR: str = Field(default="storage/templates")
    CONFIG_DIR: str = Field(default="storage/configs")

    # numerics をfloat32で動かす（勾配チェックはfloat64前提）
    SINGLE_PRECISION: bool = Field(default=False)


settings = Settings()
