"""Directed artist-influence network analysis toolkit.

Builds a weighted directed influence network from artist data, scores
node influence with a composite centrality metric, measures similarity
with the triangle/sector (TS-SS) metric after PCA, and runs genre,
authenticity, and revolutionary-detection analyses.
"""

from artistnet.graph import InfluenceGraph, ArtistNode, InfluenceEdge
from artistnet.centrality import CentralityScores, node_influence
from artistnet.simvec import PcaModel, SimilarityResult, tss

__all__ = [
    "InfluenceGraph",
    "ArtistNode",
    "InfluenceEdge",
    "CentralityScores",
    "node_influence",
    "PcaModel",
    "SimilarityResult",
    "tss",
]

__version__ = "0.1.0"
