"""
ファイル出力ユーティリティ（一時ファイルに書いてから置き換える）
"""
import os
import tempfile
from pathlib import Path
from typing import Union

import pandas as pd

PathLike = Union[str, Path]

# ロケール非依存・改行 LF 固定
CSV_OPTIONS = dict(index=False, lineterminator="\n", float_format="%.10g")


def write_text_atomic(path: PathLike, text: str) -> Path:
    """同じディレクトリの一時ファイルに書いて rename する"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def csv_text(table: pd.DataFrame) -> str:
    return table.to_csv(**CSV_OPTIONS)


def write_csv_atomic(table: pd.DataFrame, path: PathLike) -> Path:
    return write_text_atomic(path, csv_text(table))
