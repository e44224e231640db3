from .centroids import CentroidModel, build_centroids, classification_report, classify, macro_f1, make_clusters
from .embedding import Embedding, check_dimension, cosine
from .providers import EmbeddingProvider, HashingEmbeddingProvider, HTTPEmbeddingProvider, fnv1a_64
