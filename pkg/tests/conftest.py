import numpy as np
import pytest

from cel0loc import ForwardOperator, Image, ImageGrid, PsfModel


def dense_matrix(op: ForwardOperator) -> np.ndarray:
    """Brute-force dense matrix of S_L K by applying unit vectors."""
    n = op.hr_grid.width * op.hr_grid.height
    m = op.lr_grid.width * op.lr_grid.height
    a = np.zeros((m, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        a[:, i] = op.apply(Image(op.hr_grid, e.reshape(op.hr_grid.shape))).values.ravel()
    return a


@pytest.fixture
def small_grid():
    return ImageGrid(16, 16, 25.0)


@pytest.fixture
def small_op(small_grid):
    return ForwardOperator(small_grid, 4, PsfModel(110.0, 3))


@pytest.fixture
def identity_op():
    # sigma so small that off-center kernel samples underflow to exact zero
    grid = ImageGrid(8, 8, 25.0)
    return ForwardOperator(grid, 1, PsfModel(1e-3, 1))
