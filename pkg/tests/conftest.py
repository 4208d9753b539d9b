import pytest

from epcritical.core.model import CharData
from epcritical.core.model import ModelParams
from epcritical.core.threshold import MarginPolicy


# ============================================
#                     bg4
# ============================================
@pytest.fixture
def bg4() -> ModelParams:
    """
    k = c = 1, N = 4: the positive-background reference parameters.
    """
    return ModelParams(1.0, 1.0, 4)


# ============================================
#                  zeroBg3
# ============================================
@pytest.fixture
def zeroBg3() -> ModelParams:
    return ModelParams(1.0, 0.0, 3)


# ============================================
#               referenceLine
# ============================================
@pytest.fixture
def referenceLine(bg4: ModelParams) -> CharData:
    """
    A point on the line q0 = 0.1, s0 = -0.1, A0 = 0.15, whose kappa lies
    inside the Gamma window and which therefore has two envelopes.
    """
    return CharData.from_a0(0.1, -0.1, 0.15, bg4, eta0=1.0)


# ============================================
#                 quickPolicy
# ============================================
@pytest.fixture
def quickPolicy() -> MarginPolicy:
    return MarginPolicy(estimateBreakdownTime=False)
