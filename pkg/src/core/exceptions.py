"""
factest - カスタム例外クラス

各例外は CLI の終了コードを ``exit_code`` として保持する。
"""


class FactestError(Exception):
    """factest 基底例外クラス"""
    exit_code = 1


class ConfigurationError(FactestError):
    """設定エラー（手法とレイアウトの不一致、不正な実行設定など）"""
    exit_code = 2


class PlanError(ConfigurationError):
    """順列計画エラー（完全列挙の上限超過など）"""
    pass


class RegistryError(ConfigurationError):
    """シナリオレジストリエラー"""
    pass


class ReportError(ConfigurationError):
    """レポート生成エラー"""
    pass


class ParseError(FactestError):
    """入力ファイルの解析エラー"""
    exit_code = 3

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(FactestError):
    """数値計算エラー"""
    exit_code = 4


class DomainError(NumericError, ValueError):
    """定義域外の引数"""
    pass


class DegenerateDataError(NumericError):
    """退化データ（分散ゼロ、全観測値同一など）"""
    pass


class InfiniteStatisticError(DegenerateDataError):
    """検定統計量が無限大になる"""
    pass


class ResolutionWarning(UserWarning):
    """順列 p 値の分解能 1/(B+1) が有意水準を上回る"""
    pass
