"""Offline embedding sidecar for console e2e tests: a tiny seeded CLIP
vision model (24-d) served on the port given as argv[1].
"""

import sys

import torch
import uvicorn
from transformers import CLIPImageProcessor, CLIPVisionConfig, CLIPVisionModelWithProjection

from georag_extractor.encoder import ClipEncoder
from georag_extractor.sidecar import create_app

torch.manual_seed(42)
config = CLIPVisionConfig(
    hidden_size=32,
    intermediate_size=64,
    num_hidden_layers=2,
    num_attention_heads=2,
    image_size=32,
    patch_size=8,
    projection_dim=24,
)
encoder = ClipEncoder(
    model_name="tiny-clip-e2e",
    model=CLIPVisionModelWithProjection(config),
    processor=CLIPImageProcessor(
        size={"shortest_edge": 32},
        crop_size={"height": 32, "width": 32},
        do_resize=True,
        do_center_crop=True,
        do_rescale=True,
        do_normalize=True,
    ),
)

uvicorn.run(create_app(encoder), host="127.0.0.1", port=int(sys.argv[1]), log_level="warning")
