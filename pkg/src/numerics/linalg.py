"""
密行列カーネル

行列は 2 次元 float64 の読み取り専用 numpy 配列として扱う。公開関数はすべて新しい値を返す。
"""
from typing import Iterable, Tuple, Union

import numpy as np

from src.core.exceptions import DomainError, NumericError

Matrix = np.ndarray
ArrayLike = Union[np.ndarray, Iterable]

_EPS = np.finfo(np.float64).eps


def as_matrix(values: ArrayLike) -> Matrix:
    """有限値のみを持つ読み取り専用の 2 次元行列に変換"""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DomainError(f"matrix must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


def as_vector(values: ArrayLike) -> np.ndarray:
    """有限値のみを持つ読み取り専用の 1 次元ベクトルに変換"""
    arr = np.array(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise DomainError("vector entries must be finite")
    arr.setflags(write=False)
    return arr


def identity(d: int) -> Matrix:
    return as_matrix(np.eye(d))


def ones(d: int) -> Matrix:
    """J_d（全要素 1 の d × d 行列）"""
    return as_matrix(np.ones((d, d)))


def diag(values: ArrayLike) -> Matrix:
    return as_matrix(np.diag(np.asarray(values, dtype=np.float64).ravel()))


def diagonal(a: Matrix) -> np.ndarray:
    return as_vector(np.diagonal(a))


def trace(a: Matrix) -> float:
    return float(np.trace(a))


def kronecker(a: ArrayLike, b: ArrayLike) -> Matrix:
    """クロネッカー積 a ⊗ b"""
    return as_matrix(np.kron(as_matrix(a), as_matrix(b)))


def _default_tolerance(shape: Tuple[int, int], sigma_max: float) -> float:
    return _EPS * max(shape) * sigma_max


def moore_penrose(a: ArrayLike, tol: float = 0.0) -> Matrix:
    """
    SVD によるムーア・ペンローズ一般化逆行列

    tol = 0 のときは ε·max(rows, cols)·σ_max を閾値とし、それ未満の特異値はゼロとみなす。
    """
    if tol < 0:
        raise DomainError("tol must be non-negative")
    mat = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"SVD did not converge: {e}") from e

    sigma_max = s[0] if s.size else 0.0
    cutoff = tol if tol > 0 else _default_tolerance(mat.shape, sigma_max)
    keep = s > cutoff
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return as_matrix((vt.T * s_inv) @ u.T)


def matrix_rank(a: ArrayLike, tol: float = 0.0) -> int:
    """moore_penrose と同じ閾値での数値ランク"""
    mat = as_matrix(a)
    try:
        s = np.linalg.svd(mat, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"SVD did not converge: {e}") from e
    if s.size == 0:
        return 0
    cutoff = tol if tol > 0 else _default_tolerance(mat.shape, s[0])
    return int(np.sum(s > cutoff))


def moore_penrose_stack(stack: np.ndarray) -> np.ndarray:
    """
    (B, r, r) の行列スタックに対する一般化逆行列（順列計算のバッチ用）

    閾値は各行列ごとに ε·r·σ_max。
    """
    try:
        u, s, vt = np.linalg.svd(stack, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"SVD did not converge: {e}") from e
    cutoff = _EPS * max(stack.shape[-2:]) * s[..., :1]
    s_inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return np.einsum("bji,bj,bkj->bik", vt, s_inv, u)
