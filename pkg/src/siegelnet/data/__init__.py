"""Experiment data pipelines: radar clutter simulation, graph embedding, serialization."""

from .graph import GraphEmbeddingConfig, condition_distances, cosine_graph, embed_graph
from .io import ClassifierDataset, load_checkpoint, load_dataset, read_container, save_checkpoint, save_dataset, write_container
from .radar import (
    ARDatasetConfig,
    RadarSample,
    build_radar_dataset,
    burg_parameterize,
    draw_class_params,
    levinson_from_reflections,
    simulate_ar,
    to_network_input,
)

__all__ = [
    "ARDatasetConfig",
    "RadarSample",
    "ClassifierDataset",
    "GraphEmbeddingConfig",
    "build_radar_dataset",
    "burg_parameterize",
    "condition_distances",
    "cosine_graph",
    "draw_class_params",
    "embed_graph",
    "levinson_from_reflections",
    "load_checkpoint",
    "load_dataset",
    "read_container",
    "save_checkpoint",
    "save_dataset",
    "simulate_ar",
    "to_network_input",
    "write_container",
]
