"""tailqa: build and evaluate long-tail QA datasets from knowledge-graph triplets."""

__version__ = "0.1.0"
