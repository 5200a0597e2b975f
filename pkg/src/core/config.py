"""
factest - コア設定管理モジュール

プロセス全体の設定（環境変数 / .env）と、コマンド実行設定（TOML ファイル）を扱う。
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import toml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.utils.io import write_text_atomic

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20180517
DEFAULT_N_SIM = 2000
DEFAULT_N_PERM = 1999
DEFAULT_ENUMERATION_CAP = 100_000


class SystemConfig(BaseSettings):
    """システム基本設定"""
    name: str = "factest"
    version: str = "1.0.0"
    log_level: str = "WARNING"
    log_file: Optional[str] = None
    workers: int = 1

    model_config = SettingsConfigDict(env_prefix="FACTEST_", env_file=".env", extra="ignore")


class RunConfig(BaseModel):
    """コマンド実行設定（analyze / simulate / report 共通のフラットなキー集合）"""
    command: str = "simulate"

    # 入出力
    input: Optional[str] = None
    output: Optional[str] = None
    out_dir: Optional[str] = None

    # analyze
    layout: str = "oneway"
    method: str = "WTS"
    contrast: Optional[str] = None  # None = 計画の既定仮説（一元: overall、二元: AB）
    alpha: float = 0.05
    format: str = "text"
    compat_printed: bool = False

    # simulate
    layouts: List[str] = Field(default_factory=lambda: ["oneway"])
    settings: List[int] = Field(default_factory=lambda: [1, 2, 3])
    methods: List[str] = Field(default_factory=list)  # 空 = 適用可能な全手法
    m_values: List[int] = Field(default_factory=lambda: [0, 25])
    alphas: List[float] = Field(default_factory=lambda: [0.05])
    n_sim: int = DEFAULT_N_SIM
    n_perm: int = DEFAULT_N_PERM
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    seed: int = DEFAULT_SEED
    workers: int = 1

    # report
    mode: str = "dots"

    model_config = ConfigDict(extra="forbid")

    @field_validator("command")
    @classmethod
    def _check_command(cls, value: str) -> str:
        if value not in ("analyze", "simulate", "report"):
            raise ValueError(f"unknown command: {value}")
        return value

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        return value

    @field_validator("alphas")
    @classmethod
    def _check_alphas(cls, values: List[float]) -> List[float]:
        if not values or any(not 0.0 < a < 1.0 for a in values):
            raise ValueError("alphas must be non-empty and inside (0, 1)")
        return values

    @field_validator("m_values")
    @classmethod
    def _check_m_values(cls, values: List[int]) -> List[int]:
        if not values or any(m < 0 for m in values):
            raise ValueError("m_values must be non-empty and non-negative")
        return values

    @field_validator("n_sim", "n_perm", "workers", "enumeration_cap")
    @classmethod
    def _check_positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be >= 1")
        return value

    @field_validator("mode")
    @classmethod
    def _check_mode(cls, value: str) -> str:
        if value not in ("dots", "deviation"):
            raise ValueError(f"unknown report mode: {value}")
        return value

    @field_validator("format")
    @classmethod
    def _check_format(cls, value: str) -> str:
        if value not in ("text", "csv"):
            raise ValueError(f"unknown output format: {value}")
        return value

    @model_validator(mode="after")
    def _check_layouts(self) -> "RunConfig":
        for layout in self.layouts:
            if layout not in ("oneway", "twoway"):
                raise ValueError(f"unknown layout in grid: {layout}")
        for setting in self.settings:
            if setting not in (1, 2, 3):
                raise ValueError(f"unknown setting: {setting}")
        return self


def build_run_config(**values: Any) -> RunConfig:
    """検証付きで RunConfig を生成（None の値は既定値に任せる）"""
    cleaned = {k: v for k, v in values.items() if v is not None}
    try:
        return RunConfig(**cleaned)
    except ValidationError as e:
        raise ConfigurationError(f"invalid run configuration: {e}") from e


def load_run_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """TOML 設定ファイルを読み込み、CLI 指定値で上書き"""
    config_path = Path(path)
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = toml.load(f)
    except FileNotFoundError as e:
        raise ConfigurationError(f"config file not found: {config_path}") from e
    except toml.TomlDecodeError as e:
        raise ConfigurationError(f"config file is not valid TOML: {e}") from e

    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigurationError(f"config file must be flat key = value, found tables: {nested}")

    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    logger.info(f"Loaded run config: {config_path}")
    return build_run_config(**data)


def dump_run_config(config: RunConfig) -> str:
    """RunConfig をフラットな TOML 文字列に変換（None は省略）"""
    data = {k: v for k, v in config.model_dump().items() if v is not None}
    return toml.dumps(data)


def save_run_config(config: RunConfig, path: Union[str, Path]) -> None:
    """RunConfig を TOML ファイルに保存"""
    write_text_atomic(path, dump_run_config(config))


# グローバル設定インスタンス
system_config = SystemConfig()
