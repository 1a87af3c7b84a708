"""Job-fit knowledge distillation: python surface over the C++ core."""

from ._core import (
    Model,
    Vocab,
    divergence,
    make_dataset,
    rouge_l,
    rouge_n,
    summarize,
)

__all__ = [
    "Model",
    "Vocab",
    "divergence",
    "make_dataset",
    "rouge_l",
    "rouge_n",
    "summarize",
]
