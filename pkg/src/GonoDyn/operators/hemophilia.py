from fractions import Fraction
from typing import Dict, List, Tuple

import numpy as np

from GonoDyn.models.operator import InheritanceTensor, PopulationState
from GonoDyn.operators.base import GonosomalOperator

# Female types: 1 = healthy (XX), 2 = carrier (XX^h).
# Male types: 1 = healthy (XY), 2 = hemophiliac (X^hY).
# (female type, male type) -> (female offspring 1, 2, male offspring 1, 2)
HEMOPHILIA_COEFFICIENTS: Dict[Tuple[int, int], Tuple[Fraction, ...]] = {
    (1, 1): (Fraction(1, 2), Fraction(0), Fraction(1, 2), Fraction(0)),
    (1, 2): (Fraction(0), Fraction(1, 2), Fraction(1, 2), Fraction(0)),
    (2, 1): (Fraction(1, 4), Fraction(1, 4), Fraction(1, 4), Fraction(1, 4)),
    (2, 2): (Fraction(0), Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)),
}

ORIGIN = (0.0, 0.0, 0.0, 0.0)
S2 = (2.0, 0.0, 2.0, 0.0)
P_STAR = (0.5, 0.0, 0.5, 0.0)


def exact_row_sums() -> List[Fraction]:
    return [sum(row, Fraction(0)) for row in HEMOPHILIA_COEFFICIENTS.values()]


def hemophilia_tensor() -> InheritanceTensor:
    gamma_f = np.zeros((2, 2, 2))
    gamma_m = np.zeros((2, 2, 2))
    for (i, k), row in HEMOPHILIA_COEFFICIENTS.items():
        gamma_f[i - 1, k - 1, :] = [float(c) for c in row[:2]]
        gamma_m[i - 1, k - 1, :] = [float(c) for c in row[2:]]
    return InheritanceTensor(gamma_f=gamma_f, gamma_m=gamma_m)


def hemophilia_state(x: float, y: float, u: float, v: float) -> PopulationState:
    return PopulationState(female=(x, y), male=(u, v))


class HemophiliaOperator(GonosomalOperator):
    """X-linked hemophilia: W(x,y,u,v) with x' = xu/2 + yu/4, y' = xv/2 + yu/4 + yv/3, and so on."""

    def __init__(self) -> None:
        super().__init__(hemophilia_tensor(), "hemophilia")
