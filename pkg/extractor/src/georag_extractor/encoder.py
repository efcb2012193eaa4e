"""CLIP image tower wrapper: PIL images in, unit-norm float32 rows out."""

from __future__ import annotations

import numpy as np

DEFAULT_MODEL = "openai/clip-vit-large-patch14"  # 768-d image tower


class ClipEncoder:
    """Batched CLIP image encoder.

    By default loads a pretrained checkpoint by name; tests and embedded
    uses can hand in an instantiated (model, processor) pair instead.
    """

    def __init__(self, model_name: str = DEFAULT_MODEL, device: str = "cpu", model=None, processor=None):
        import torch
        from transformers import CLIPImageProcessor, CLIPVisionModelWithProjection

        self._torch = torch
        if model is None:
            model = CLIPVisionModelWithProjection.from_pretrained(model_name)
        if processor is None:
            processor = CLIPImageProcessor.from_pretrained(model_name)
        self.model_name = model_name
        self.device = device
        self.model = model.to(device).eval()
        self.processor = processor
        self.dim = int(self.model.config.projection_dim)

    def encode(self, images) -> np.ndarray:
        """Embed a list of PIL images into unit-norm float32 rows."""
        inputs = self.processor(images=list(images), return_tensors="pt").to(self.device)
        with self._torch.no_grad():
            embeds = self.model(**inputs).image_embeds
        vecs = embeds.cpu().numpy().astype(np.float64)
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
        return (vecs / norms).astype(np.float32)
