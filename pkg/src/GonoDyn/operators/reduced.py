import numpy as np

from GonoDyn.operators.base import GonosomalOperator
from GonoDyn.utils.constants import FD_STEP
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException


class ReducedSystem:
    """The normalized operator restricted to the hyperplane sum(s) = 1.

    One coordinate (`eliminate`) is recovered as 1 minus the others, which leaves a
    map of dim - 1 free variables.
    """

    def __init__(self, op: GonosomalOperator, eliminate: int | None = None) -> None:
        # first male coordinate by default ("u" for the hemophilia operator)
        eliminate = op.n if eliminate is None else eliminate
        if not 0 <= eliminate < op.dim:
            raise GonoDynException(
                f"cannot eliminate coordinate {eliminate} of {op.dim}", ExceptionType.INVALID_ARGUMENT
            )
        self.op = op
        self.eliminate = eliminate
        self.keep = [i for i in range(op.dim) if i != eliminate]

    @property
    def size(self) -> int:
        return self.op.dim - 1

    def restrict(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(s, dtype=float)[..., self.keep]

    def embed(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.insert(z, self.eliminate, 1.0 - z.sum(axis=-1), axis=-1)

    def image(self, z: np.ndarray) -> np.ndarray:
        return self.restrict(self.op.normalized_image(self.embed(z)))

    def embedding_derivative(self) -> np.ndarray:
        return np.insert(np.eye(self.size), self.eliminate, -np.ones(self.size), axis=0)

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        full = self.op.normalized_jacobian(self.embed(z))
        return full[..., self.keep, :] @ self.embedding_derivative()

    def jacobian_fd(self, z: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        cols = []
        for i in range(self.size):
            e = np.zeros(self.size)
            e[i] = h
            cols.append((self.image(z + e) - self.image(z - e)) / (2 * h))
        return np.column_stack(cols)
