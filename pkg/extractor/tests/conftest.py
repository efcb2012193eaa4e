import numpy as np
import pytest
import torch
from PIL import Image
from transformers import CLIPImageProcessor, CLIPVisionConfig, CLIPVisionModelWithProjection

from georag_extractor.encoder import ClipEncoder


@pytest.fixture(scope="session")
def tiny_encoder():
    """A real CLIP vision tower, just a very small one built from config
    with seeded weights: offline, fast, deterministic."""
    torch.manual_seed(1234)
    config = CLIPVisionConfig(
        hidden_size=32,
        intermediate_size=64,
        num_hidden_layers=2,
        num_attention_heads=2,
        image_size=32,
        patch_size=8,
        projection_dim=24,
    )
    model = CLIPVisionModelWithProjection(config)
    processor = CLIPImageProcessor(
        size={"shortest_edge": 32},
        crop_size={"height": 32, "width": 32},
        do_resize=True,
        do_center_crop=True,
        do_rescale=True,
        do_normalize=True,
    )
    return ClipEncoder(model_name="tiny-clip-test", model=model, processor=processor)


def make_image(path, seed, size=(48, 40)):
    rng = np.random.default_rng(seed)
    pixels = (rng.random((size[1], size[0], 3)) * 255).astype("uint8")
    Image.fromarray(pixels).save(path)
    return path


@pytest.fixture
def image_dir(tmp_path):
    paths = [make_image(tmp_path / f"img{i}.png", seed=i) for i in range(4)]
    return tmp_path, paths
