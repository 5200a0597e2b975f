"""
factest - ログ管理モジュール
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Optional

import structlog

from .config import system_config


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """ログ設定を初期化"""
    level_name = (level or system_config.log_level).upper()
    log_level = getattr(logging, level_name, logging.INFO)
    log_file = log_file or system_config.log_file

    # 標準出力は結果表示に使うため、ログは stderr へ
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            logging.handlers.RotatingFileHandler(
                log_path,
                maxBytes=10*1024*1024,  # 10MB
                backupCount=5
            )
        )

    logging.basicConfig(
        level=log_level,
        format='%(message)s',
        handlers=handlers,
        force=True,
    )

    # 構造化ログの設定
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer()
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """構造化ログロガーを取得"""
    return structlog.get_logger(name)
