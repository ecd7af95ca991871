import numpy as np
import pytest

from mvnav.codec import GopStructure, QuantLadder
from mvnav.navmodel import TransitionModel
from mvnav.scene import ViewGrid, default_scene_spec, generate_synthetic_scene
from mvnav.session import SessionConfig, prepare_store


SMALL_LADDER = QuantLadder((4, 8, 16, 32, 64))


@pytest.fixture(scope="session")
def small_seq():
    """64x64, 2 reference views, 8 frames: the cheap shared fixture."""
    spec = default_scene_spec(width=64, height=64, n_views=2, n_frames=8, seed=0)
    return generate_synthetic_scene(spec, seed=0)


@pytest.fixture(scope="session")
def small_grid():
    return ViewGrid(n_ref_views=2, n_intermediate=1)


@pytest.fixture(scope="session")
def small_cfg():
    return SessionConfig(n_t=4, n_d=0, block_size=8, gop=GopStructure(4),
                         n_refs=2, ladder=SMALL_LADDER, ref_q=4)


@pytest.fixture(scope="session")
def small_store(small_seq, small_grid, small_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("store")
    return prepare_store(small_seq, small_grid, small_cfg, out)


@pytest.fixture(scope="session")
def model():
    return TransitionModel(p1=0.6, p2=0.3, p3=0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
