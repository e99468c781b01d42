"""Saliency maps and overlay rendering for the convolutional backbones."""
from .gradcam import Heatmap, default_layer, grad_cam
from .overlay import (
    HEATMAP_ARCHIVE,
    MANIFEST_NAME,
    export_overlays,
    jet_colors,
    overlay_heatmap,
)

__all__ = [
    "Heatmap",
    "default_layer",
    "grad_cam",
    "overlay_heatmap",
    "jet_colors",
    "export_overlays",
    "MANIFEST_NAME",
    "HEATMAP_ARCHIVE",
]
