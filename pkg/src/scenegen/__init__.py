"""Indoor scene generation: tokenized scenes, chained property transformers, assembly."""

__version__ = "0.1.0"
