from .hnsw import HnswIndex
from .rtree import RTreeIndex, SpatioTemporalKey
