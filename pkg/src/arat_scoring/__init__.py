"""Automated ARAT scoring from multi-view rehabilitation video.

Subpackages:
    dataset          multi-view segment archives, preprocessing, clip sampling
    pipelines        SlowFast / I3D / space-time transformer classifiers
    fusion           early (feature) and late (probability) fusion across views and models
    hbm              hierarchical Bayesian movement-quality inference
    interpretability Grad-CAM saliency and colormap overlays
    scoring          end-to-end segment scoring, persistence, HTTP API, study analytics
    reports          batch evaluation grids and training curves
"""

__version__ = "0.1.0"
