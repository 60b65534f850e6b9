# src/utils/sampling.py
from typing import List

from src.utils.errors import InvalidInputError


def sequential_split(total: int, first: int) -> List[slice]:
    """
    Split [0, total) into two sequential windows [0, first) and [first, total).

    Time-series data are never shuffled: the validation window always follows
    the training window.

    Args:
        total: Number of samples available.
        first: Size of the leading window.

    Returns:
        [leading_slice, trailing_slice]
    """
    if first <= 0 or first >= total:
        raise InvalidInputError(
            f"Cannot split {total} samples with a leading window of {first}; "
            "both windows must be non-empty."
        )
    return [slice(0, first), slice(first, total)]


def sequential_subsets(total: int, count: int, length: int, start: int = 0) -> List[slice]:
    """
    Cut `count` back-to-back windows of `length` samples, beginning at `start`.

    Args:
        total: Number of samples available.
        count: Number of windows.
        length: Samples per window.
        start: Index of the first sample of the first window.

    Returns:
        List of slices, in time order.
    """
    if count < 1 or length < 1:
        raise InvalidInputError(f"count and length must be >= 1, got {count} and {length}")

    need = start + count * length
    if total < need:
        raise InvalidInputError(
            f"Not enough samples for {count} subsets of {length}: "
            f"have {total}, need {need}"
        )

    return [slice(start + i * length, start + (i + 1) * length) for i in range(count)]
