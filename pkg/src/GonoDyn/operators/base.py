import numpy as np

from GonoDyn.models.operator import InheritanceTensor, PopulationState
from GonoDyn.utils.constants import ANNIHILATION_GUARD
from GonoDyn.utils.exceptions import ExceptionType, GonoDynException


class GonosomalOperator:
    """Quadratic evolution operator W of a gonosomal population and its normalized form V.

    The array methods (`raw_image`, `normalized_image`) accept a single state of
    shape (dim,) or a batch of shape (samples, dim).
    """

    def __init__(self, tensor: InheritanceTensor, name: str = "custom") -> None:
        self.tensor = tensor
        self.name = name

    @property
    def n(self) -> int:
        return self.tensor.n

    @property
    def nu(self) -> int:
        return self.tensor.nu

    @property
    def dim(self) -> int:
        return self.n + self.nu

    def check_state(self, s: PopulationState) -> np.ndarray:
        if s.n != self.n or s.nu != self.nu:
            raise GonoDynException(
                f"state has blocks ({s.n},{s.nu}), operator expects ({self.n},{self.nu})",
                ExceptionType.DIMENSION_MISMATCH,
            )
        return s.as_array()

    def check_array(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape[-1] != self.dim:
            raise GonoDynException(
                f"state has {s.shape[-1]} coordinates, operator expects {self.dim}",
                ExceptionType.DIMENSION_MISMATCH,
            )
        return s

    def to_state(self, arr: np.ndarray) -> PopulationState:
        return PopulationState.from_array(arr, self.n)

    def raw_image(self, s: np.ndarray) -> np.ndarray:
        s = self.check_array(s)
        x, y = s[..., : self.n], s[..., self.n :]
        x_out = np.einsum("...i,...k,ikj->...j", x, y, self.tensor.gamma_f)
        y_out = np.einsum("...i,...k,ikl->...l", x, y, self.tensor.gamma_m)
        return np.concatenate([x_out, y_out], axis=-1)

    def raw_jacobian(self, s: np.ndarray) -> np.ndarray:
        s = self.check_array(s)
        x, y = s[..., : self.n], s[..., self.n :]
        gf, gm = self.tensor.gamma_f, self.tensor.gamma_m
        top = np.concatenate([np.einsum("ikj,...k->...ji", gf, y), np.einsum("ikj,...i->...jk", gf, x)], axis=-1)
        bottom = np.concatenate([np.einsum("ikl,...k->...li", gm, y), np.einsum("ikl,...i->...lk", gm, x)], axis=-1)
        return np.concatenate([top, bottom], axis=-2)

    def block_sums(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return s[..., : self.n].sum(axis=-1), s[..., self.n :].sum(axis=-1)

    def has_mass(self, s: np.ndarray) -> np.ndarray:
        female, male = self.block_sums(np.asarray(s, dtype=float))
        return np.asarray((female > ANNIHILATION_GUARD) & (male > ANNIHILATION_GUARD))

    def _check_mass(self, s: np.ndarray) -> None:
        if not np.all(self.has_mass(s)):
            raise GonoDynException(
                "normalization undefined, a sex block has no mass",
                ExceptionType.ANNIHILATED_STATE,
            )

    def normalized_image(self, s: np.ndarray) -> np.ndarray:
        s = self.check_array(s)
        self._check_mass(s)
        female, male = self.block_sums(s)
        return self.raw_image(s) / np.asarray(female * male)[..., None]

    def normalized_jacobian(self, s: np.ndarray) -> np.ndarray:
        s = self.check_array(s)
        self._check_mass(s)
        female, male = (np.asarray(b)[..., None] for b in self.block_sums(s))
        z = (female * male)[..., None]
        grad_z = np.concatenate([np.repeat(male, self.n, axis=-1), np.repeat(female, self.nu, axis=-1)], axis=-1)
        return self.raw_jacobian(s) / z - self.raw_image(s)[..., :, None] * grad_z[..., None, :] / z**2

    def apply_raw(self, s: PopulationState) -> PopulationState:
        return self.to_state(self.raw_image(self.check_state(s)))

    def jacobian_raw(self, s: PopulationState) -> np.ndarray:
        return self.raw_jacobian(self.check_state(s))

    def sum_product_residual(self, s: PopulationState) -> float:
        """|sum W(s) - (sum x)(sum y)|, zero up to rounding for every valid tensor."""
        arr = self.check_state(s)
        female, male = self.block_sums(arr)
        return float(abs(self.raw_image(arr).sum() - female * male))
