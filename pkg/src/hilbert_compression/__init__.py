"""hilbert_compression - uniform embeddings and Hilbert space compression of groups."""

__version__ = "0.1.0"
