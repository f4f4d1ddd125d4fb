"""Compressed bitmaps and threshold (T-overlap) queries over them."""

from .bitmap import BitmapBuilder, CompressedBitmap, RunView, binary_op, bitwise_not

__all__ = ["BitmapBuilder", "CompressedBitmap", "RunView", "binary_op", "bitwise_not"]
__version__ = "0.1.0"
