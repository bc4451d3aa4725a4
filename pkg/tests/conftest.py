from __future__ import annotations

from fractions import Fraction

import pytest

from hetrcm.params import ModelParams


@pytest.fixture
def reference_params() -> ModelParams:
    """d=1, nu=lambda=1, alpha=2, tau=3: the worked example used throughout."""
    return ModelParams(1, 1, 1, 2, 3)


@pytest.fixture
def exact_reference_params() -> ModelParams:
    return ModelParams(1, Fraction(1), Fraction(1), Fraction(2), Fraction(3))
