"""
Small numerical helpers shared across modules
"""
import numpy as np


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hermitian product <a, b> = sum a_i conj(b_i) over the last axis"""
    return np.sum(np.asarray(a) * np.conj(np.asarray(b)), axis=-1)


def relative_error(actual, expected, floor: float = 1e-300) -> np.ndarray:
    """Elementwise |actual - expected| / max(|expected|, floor)"""
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    return np.abs(actual - expected) / np.maximum(np.abs(expected), floor)


def random_ball_points(count: int, dimension: int, seed: int, radius: float = 1.0) -> np.ndarray:
    """Uniform points in the open complex ball of C^dimension

    Args:
        count: Number of points
        dimension: Complex dimension n
        seed: Seed for numpy's default generator
        radius: Ball radius

    Returns:
        Complex array of shape (count, dimension)
    """
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((count, 2 * dimension))
    gauss /= np.linalg.norm(gauss, axis=1, keepdims=True)
    r = rng.random(count) ** (1.0 / (2 * dimension))
    real = radius * r[:, None] * gauss
    return real[:, :dimension] + 1j * real[:, dimension:]


def canonical_root(vector: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Normalize a vector and rotate its phase so the first nonzero coordinate is real positive"""
    vector = np.asarray(vector, dtype=complex)
    vector = vector / np.linalg.norm(vector)
    for entry in vector:
        if abs(entry) > tol:
            return vector * (abs(entry) / entry)
    return vector
