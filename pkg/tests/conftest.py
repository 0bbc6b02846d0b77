import numpy as np
import pytest

import motiondeblur as md


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def margin_scene(size: int, margin: int, value: float = 120.0) -> md.Image:
    """Test scene with constant margins of the given width."""
    a = np.full((size, size), value)
    inner = md.make_test_image(size - 2 * margin, size - 2 * margin).values
    a[margin:size - margin, margin:size - margin] = inner
    return md.Image(a)
