import numpy as np
import pytest

from flowmap.fields import ABCField, DomainBounds, DoubleGyreField, GriddedField


@pytest.fixture(scope="session")
def double_gyre():
    return DoubleGyreField()


@pytest.fixture(scope="session")
def abc_field():
    return ABCField()


def constant_field(vel, bounds=None, nodes=4, t_end=100.0):
    """Gridded field holding a constant velocity everywhere."""
    vel = np.asarray(vel, dtype=np.float64)
    dim = vel.size
    if bounds is None:
        bounds = DomainBounds(np.full(dim, -100.0), np.full(dim, 100.0))
    shape = (2,) + (nodes,) * dim + (dim,)
    data = np.broadcast_to(vel, shape).copy()
    return GriddedField(bounds, t_end, data)


def zero_field(dim=2, bounds=None):
    return constant_field(np.zeros(dim), bounds=bounds)


def sampled_linear_field(matrix, bounds, nodes=9, t_end=100.0):
    """Gridded field sampling v = M @ x (exact under multilinear interpolation)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    dim = matrix.shape[0]
    axes = [np.linspace(bounds.min[k], bounds.max[k], nodes) for k in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1)
    vals = pts @ matrix.T
    data = np.stack([vals, vals], axis=0)
    return GriddedField(bounds, t_end, data)
