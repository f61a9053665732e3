import pytest

from hexsimp import fixtures as F
from hexsimp.mesh import with_detected_features


@pytest.fixture(scope="session")
def cube3():
    return F.cube_mesh(3)


@pytest.fixture(scope="session")
def cube3_features():
    return with_detected_features(F.cube_mesh(3))


@pytest.fixture(scope="session")
def pillow():
    return F.pillow_mesh()


@pytest.fixture(scope="session")
def crossing():
    return F.crossing_pillow_mesh()


@pytest.fixture(scope="session")
def val3():
    return F.valence3_mesh()


@pytest.fixture(scope="session")
def ball():
    return F.ball_mesh()
