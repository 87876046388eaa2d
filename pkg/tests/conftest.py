import numpy as np
import pytest


class StubRng:
    """Generator stand-in that returns preset values from standard_normal.

    ``fill`` may be a scalar (broadcast to any requested shape) or an
    array consumed front to back. ``random`` returns ``uniform_fill``.
    """

    def __init__(self, fill=0.0, uniform_fill=0.5):
        self.fill = fill
        self.uniform_fill = uniform_fill
        self._cursor = 0

    def standard_normal(self, shape=None):
        if np.isscalar(self.fill):
            if shape is None:
                return float(self.fill)
            return np.full(shape, float(self.fill))
        flat = np.asarray(self.fill, dtype=float).ravel()
        size = int(np.prod(shape)) if shape is not None else 1
        chunk = flat[self._cursor:self._cursor + size]
        if chunk.size < size:
            raise AssertionError("StubRng ran out of preset values")
        self._cursor += size
        return chunk.reshape(shape) if shape is not None else float(chunk[0])

    def random(self, shape=None):
        if shape is None:
            return float(self.uniform_fill)
        return np.full(shape, float(self.uniform_fill))


@pytest.fixture
def stub_rng():
    return StubRng
