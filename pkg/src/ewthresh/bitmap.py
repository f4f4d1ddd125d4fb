"""Word-aligned run-length compressed bitmaps (64-bit EWAH layout).

A bitmap is a sequence of blocks.  Each block starts with a marker word
followed by verbatim *dirty* words::

    bit 0       fill bit value
    bits 1-32   number of fill words (all 0s or all 1s) in the run
    bits 33-63  number of dirty words following the marker

Bits are numbered least-significant first: position ``p`` lives in word
``p // 64`` at bit ``p % 64``.  Bitmaps are immutable; construction is
append-only through :class:`BitmapBuilder` or the ``from_*`` constructors.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

import numpy as np

WORD_BITS = 64
ALL_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)
_ALL_ONES_INT = (1 << 64) - 1

MAX_FILL_LEN = (1 << 32) - 1
MAX_DIRTY_COUNT = (1 << 31) - 1

MAGIC = b"EWT1"
_HEADER = struct.Struct("<4sIQQ")

# segment kinds
FILL0 = 0
FILL1 = 1
DIRTY = 2

_EMPTY_WORDS = np.zeros(0, dtype=np.uint64)


class BitmapFormatError(ValueError):
    """Raised when a serialized bitmap or word sequence is malformed."""


class ConstructionError(ValueError):
    """Raised on non-increasing positions during append-only construction."""


class Segment(NamedTuple):
    start: int  # first word covered
    length: int  # words covered
    kind: int  # FILL0, FILL1 or DIRTY
    dirty: Optional[np.ndarray]  # uint64 view for DIRTY segments


@dataclass(frozen=True)
class RunView:
    """A run of words seen while iterating a compressed bitmap.

    Fill runs carry their ``bit_value``; dirty runs have ``dirty`` set to the
    verbatim words (and ``bit_value`` False by convention).
    """

    bit_value: bool
    length_words: int
    dirty: Optional[np.ndarray] = None

    @property
    def is_fill(self) -> bool:
        return self.dirty is None


def n_words_for(size_in_bits: int) -> int:
    return (size_in_bits + WORD_BITS - 1) // WORD_BITS


def _tail_mask(size_in_bits: int) -> int:
    rem = size_in_bits % WORD_BITS
    return _ALL_ONES_INT if rem == 0 else (1 << rem) - 1


class _SegmentWriter:
    """Accumulates fills and dirty words, keeping the output canonical.

    Adjacent fills of the same value merge; dirty words that turn out to be
    all 0s or all 1s become fills.
    """

    __slots__ = ("segs", "n_words")

    def __init__(self) -> None:
        # each entry: [kind, length, list of dirty arrays]
        self.segs: list = []
        self.n_words = 0

    def add_fill(self, bit: int, length: int) -> None:
        if length <= 0:
            return
        self.n_words += length
        segs = self.segs
        if segs and segs[-1][0] == bit:
            segs[-1][1] += length
        else:
            segs.append([bit, length, None])

    def _add_clean_dirty(self, arr: np.ndarray) -> None:
        n = len(arr)
        if n == 0:
            return
        self.n_words += n
        segs = self.segs
        if segs and segs[-1][0] == DIRTY:
            segs[-1][1] += n
            segs[-1][2].append(arr)
        else:
            segs.append([DIRTY, n, [arr]])

    def add_dirty(self, arr: np.ndarray) -> None:
        n = len(arr)
        if n == 0:
            return
        if n == 1:
            w = int(arr[0])
            if w == 0:
                self.add_fill(FILL0, 1)
            elif w == _ALL_ONES_INT:
                self.add_fill(FILL1, 1)
            else:
                self._add_clean_dirty(arr)
            return
        zero = arr == 0
        ones = arr == ALL_ONES
        fillish = zero | ones
        if not fillish.any():
            self._add_clean_dirty(arr)
            return
        # split at class boundaries: 0 = dirty, 1 = zero fill, 2 = ones fill
        cls = zero.astype(np.int8) + 2 * ones.astype(np.int8)
        cuts = np.flatnonzero(np.diff(cls)) + 1
        bounds = [0, *cuts.tolist(), n]
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            c = cls[lo]
            if c == 0:
                self._add_clean_dirty(arr[lo:hi])
            elif c == 1:
                self.add_fill(FILL0, hi - lo)
            else:
                self.add_fill(FILL1, hi - lo)

    def add_word(self, w: int) -> None:
        if w == 0:
            self.add_fill(FILL0, 1)
        elif w == _ALL_ONES_INT:
            self.add_fill(FILL1, 1)
        else:
            self._add_clean_dirty(np.array([w], dtype=np.uint64))

    def finish(self, size_in_bits: int) -> "CompressedBitmap":
        target = n_words_for(size_in_bits)
        if self.n_words < target:
            self.add_fill(FILL0, target - self.n_words)
        elif self.n_words > target:
            raise BitmapFormatError(
                f"{self.n_words} words exceed {size_in_bits} bits"
            )
        return CompressedBitmap._from_segments(self.segs, size_in_bits)


def _encode(segs: list) -> np.ndarray:
    """Turn writer segments into the marker/dirty word layout."""
    pieces: list = []
    i = 0
    n = len(segs)
    while i < n:
        kind, length, chunks = segs[i]
        fill_bit = 0
        fill_len = 0
        if kind != DIRTY:
            fill_bit, fill_len = kind, length
            i += 1
            while fill_len > MAX_FILL_LEN:
                pieces.append(np.array([fill_bit | (MAX_FILL_LEN << 1)], dtype=np.uint64))
                fill_len -= MAX_FILL_LEN
        dirty = None
        if i < n and segs[i][0] == DIRTY:
            chunks = segs[i][2]
            dirty = chunks[0] if len(chunks) == 1 else np.concatenate(chunks)
            i += 1
        ndirty = 0 if dirty is None else len(dirty)
        first = min(ndirty, MAX_DIRTY_COUNT)
        pieces.append(
            np.array([fill_bit | (fill_len << 1) | (first << 33)], dtype=np.uint64)
        )
        if ndirty:
            pieces.append(dirty[:first])
            off = first
            while off < ndirty:
                cnt = min(ndirty - off, MAX_DIRTY_COUNT)
                pieces.append(np.array([cnt << 33], dtype=np.uint64))
                pieces.append(dirty[off:off + cnt])
                off += cnt
    if not pieces:
        return _EMPTY_WORDS
    return np.concatenate(pieces).astype(np.uint64, copy=False)


def _parse(words: np.ndarray) -> tuple:
    """Decode marker/dirty words into raw (possibly non-canonical) segments."""
    segs = []
    pos = 0
    i = 0
    n = len(words)
    wl = words  # local
    while i < n:
        m = int(wl[i])
        bit = m & 1
        flen = (m >> 1) & MAX_FILL_LEN
        dcnt = m >> 33
        i += 1
        if flen:
            segs.append((pos, flen, FILL1 if bit else FILL0, None))
            pos += flen
        if dcnt:
            if i + dcnt > n:
                raise BitmapFormatError("marker declares more dirty words than present")
            segs.append((pos, dcnt, DIRTY, wl[i:i + dcnt]))
            pos += dcnt
            i += dcnt
    return segs, pos


class CompressedBitmap:
    """Immutable word-aligned RLE bitmap over ``size_in_bits`` logical bits."""

    __slots__ = ("_words", "_size", "_segments", "_card", "_starts")

    def __init__(self, words: np.ndarray, size_in_bits: int, _segments=None):
        self._words = words
        self._words.flags.writeable = False
        self._size = int(size_in_bits)
        self._segments = _segments
        self._card: Optional[int] = None
        self._starts: Optional[list] = None

    # ---- construction -------------------------------------------------

    @classmethod
    def _from_segments(cls, segs: list, size_in_bits: int) -> "CompressedBitmap":
        words = _encode(segs)
        out = []
        pos = 0
        for kind, length, chunks in segs:
            if kind == DIRTY:
                d = chunks[0] if len(chunks) == 1 else np.concatenate(chunks)
                d.flags.writeable = False
                out.append(Segment(pos, length, DIRTY, d))
            else:
                out.append(Segment(pos, length, kind, None))
            pos += length
        return cls(words, size_in_bits, tuple(out))

    @classmethod
    def empty(cls, size_in_bits: int = 0) -> "CompressedBitmap":
        if size_in_bits < 0:
            raise ValueError("size_in_bits must be non-negative")
        w = _SegmentWriter()
        return w.finish(size_in_bits)

    @classmethod
    def full(cls, size_in_bits: int) -> "CompressedBitmap":
        """All bits in ``[0, size_in_bits)`` set."""
        w = _SegmentWriter()
        nfull = size_in_bits // WORD_BITS
        w.add_fill(FILL1, nfull)
        if size_in_bits % WORD_BITS:
            w.add_word(_tail_mask(size_in_bits))
        return w.finish(size_in_bits)

    @classmethod
    def from_uncompressed(cls, words, size_in_bits: Optional[int] = None) -> "CompressedBitmap":
        """Compress a plain array of 64-bit words (LSB = lowest position)."""
        arr = np.ascontiguousarray(np.asarray(words, dtype=np.uint64))
        if size_in_bits is None:
            size_in_bits = len(arr) * WORD_BITS
        need = n_words_for(size_in_bits)
        if len(arr) > need:
            if np.any(arr[need:]):
                raise BitmapFormatError("bits set beyond size_in_bits")
            arr = arr[:need]
        if len(arr) and size_in_bits % WORD_BITS:
            if int(arr[-1]) & ~_tail_mask(size_in_bits):
                raise BitmapFormatError("bits set beyond size_in_bits")
        w = _SegmentWriter()
        w.add_dirty(arr.copy())
        return w.finish(size_in_bits)

    @classmethod
    def from_positions(cls, positions: Iterable[int], size_in_bits: Optional[int] = None) -> "CompressedBitmap":
        """Build from strictly increasing bit positions."""
        pos = np.asarray(
            positions if isinstance(positions, np.ndarray) else list(positions),
            dtype=np.int64,
        )
        if pos.size and (pos[0] < 0 or np.any(np.diff(pos) <= 0)):
            raise ConstructionError("positions must be non-negative and strictly increasing")
        last = int(pos[-1]) + 1 if pos.size else 0
        if size_in_bits is None:
            size_in_bits = last
        elif size_in_bits < last:
            raise ConstructionError("position beyond size_in_bits")
        w = _SegmentWriter()
        if pos.size:
            widx = pos >> 6
            bits = np.left_shift(np.uint64(1), (pos & 63).astype(np.uint64))
            starts = np.flatnonzero(np.r_[True, widx[1:] != widx[:-1]])
            uw = widx[starts]
            vals = np.bitwise_or.reduceat(bits, starts)
            # contiguous stretches of occupied words become one dirty chunk
            gaps = np.flatnonzero(np.diff(uw) != 1) + 1
            bounds = [0, *gaps.tolist(), len(uw)]
            cur = 0
            for lo, hi in zip(bounds[:-1], bounds[1:]):
                first = int(uw[lo])
                w.add_fill(FILL0, first - cur)
                w.add_dirty(vals[lo:hi])
                cur = int(uw[hi - 1]) + 1
        return w.finish(size_in_bits)

    @classmethod
    def from_string(cls, bits: str) -> "CompressedBitmap":
        """``"0011"`` sets positions 2 and 3: character ``i`` is position ``i``."""
        s = bits.replace(" ", "")
        if set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return cls.from_positions([i for i, c in enumerate(s) if c == "1"], len(s))

    @classmethod
    def from_bools(cls, flags) -> "CompressedBitmap":
        arr = np.asarray(flags, dtype=bool)
        return cls.from_positions(np.flatnonzero(arr), len(arr))

    # ---- accessors ------------------------------------------------------

    @property
    def words(self) -> np.ndarray:
        """Compressed payload (read-only)."""
        return self._words

    @property
    def size_in_bits(self) -> int:
        return self._size

    @property
    def n_words(self) -> int:
        """Number of uncompressed words covered."""
        return n_words_for(self._size)

    @property
    def segments(self) -> tuple:
        if self._segments is None:
            raw, total = _parse(self._words)
            if total != self.n_words:
                raise BitmapFormatError(
                    f"payload covers {total} words, expected {self.n_words}"
                )
            self._segments = tuple(Segment(*s) for s in raw)
        return self._segments

    def cardinality(self) -> int:
        if self._card is None:
            c = 0
            for s in self.segments:
                if s.kind == FILL1:
                    c += s.length * WORD_BITS
                elif s.kind == DIRTY:
                    c += int(np.bitwise_count(s.dirty).sum())
            self._card = c
        return self._card

    def __len__(self) -> int:
        return self.cardinality()

    def ewah_size(self) -> int:
        """Payload bytes (header excluded)."""
        return len(self._words) * 8

    def runcount(self) -> int:
        """Number of maximal runs of equal bits in ``[0, size_in_bits)``."""
        if self._size == 0:
            return 0
        reps = []
        for s in self.segments:
            if s.kind == DIRTY:
                reps.append(s.dirty)
            else:
                reps.append(np.array([_ALL_ONES_INT if s.kind == FILL1 else 0], dtype=np.uint64))
        rep = np.concatenate(reps)
        bits = np.unpackbits(rep.view(np.uint8), bitorder="little")
        rem = self._size % WORD_BITS
        if rem:
            bits = bits[: len(bits) - WORD_BITS + rem]
        return 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))

    def is_empty(self) -> bool:
        return all(s.kind == FILL0 for s in self.segments)

    def to_uncompressed(self) -> np.ndarray:
        out = np.zeros(self.n_words, dtype=np.uint64)
        for s in self.segments:
            if s.kind == FILL1:
                out[s.start:s.start + s.length] = ALL_ONES
            elif s.kind == DIRTY:
                out[s.start:s.start + s.length] = s.dirty
        return out

    def to_bools(self) -> np.ndarray:
        bits = np.unpackbits(self.to_uncompressed().view(np.uint8), bitorder="little")
        return bits[: self._size].astype(bool)

    def positions(self) -> np.ndarray:
        """Set-bit positions as a sorted int64 array."""
        parts = []
        for s in self.segments:
            base = s.start * WORD_BITS
            if s.kind == FILL1:
                parts.append(np.arange(base, base + s.length * WORD_BITS, dtype=np.int64))
            elif s.kind == DIRTY:
                bits = np.unpackbits(s.dirty.view(np.uint8), bitorder="little")
                parts.append(np.flatnonzero(bits).astype(np.int64) + base)
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(parts)

    def iter_set_bits(self) -> Iterator[int]:
        for s in self.segments:
            base = s.start * WORD_BITS
            if s.kind == FILL1:
                yield from range(base, base + s.length * WORD_BITS)
            elif s.kind == DIRTY:
                for k, w in enumerate(s.dirty.tolist()):
                    off = base + k * WORD_BITS
                    while w:
                        low = w & -w
                        yield off + low.bit_length() - 1
                        w ^= low

    def iter_runs(self) -> Iterator[RunView]:
        for s in self.segments:
            if s.kind == DIRTY:
                yield RunView(False, s.length, s.dirty)
            else:
                yield RunView(s.kind == FILL1, s.length)

    def _segment_starts(self) -> list:
        if self._starts is None:
            self._starts = [s.start for s in self.segments]
        return self._starts

    def contains(self, position: int) -> bool:
        if position < 0 or position >= self._size:
            return False
        from bisect import bisect_right

        word = position >> 6
        segs = self.segments
        s = segs[bisect_right(self._segment_starts(), word) - 1]
        if s.kind == DIRTY:
            return bool((int(s.dirty[word - s.start]) >> (position & 63)) & 1)
        return s.kind == FILL1

    __contains__ = contains

    def set(self, position: int) -> "CompressedBitmap":
        """Return a copy with ``position`` set; must exceed every set bit."""
        if position < 0:
            raise ConstructionError("negative position")
        b = BitmapBuilder.from_bitmap(self)
        b.add(position)
        return b.build(max(self._size, position + 1))

    # ---- operators ------------------------------------------------------

    def __and__(self, other: "CompressedBitmap") -> "CompressedBitmap":
        return binary_op("AND", self, other)

    def __or__(self, other: "CompressedBitmap") -> "CompressedBitmap":
        return binary_op("OR", self, other)

    def __xor__(self, other: "CompressedBitmap") -> "CompressedBitmap":
        return binary_op("XOR", self, other)

    def __sub__(self, other: "CompressedBitmap") -> "CompressedBitmap":
        return binary_op("ANDNOT", self, other)

    def __invert__(self) -> "CompressedBitmap":
        return bitwise_not(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompressedBitmap):
            return NotImplemented
        return self._size == other._size and np.array_equal(self._words, other._words)

    def __hash__(self) -> int:
        return hash((self._size, self._words.tobytes()))

    def __repr__(self) -> str:
        return (
            f"CompressedBitmap(size_in_bits={self._size}, "
            f"cardinality={self.cardinality()}, words={len(self._words)})"
        )

    # ---- serialization --------------------------------------------------

    def serialize(self) -> bytes:
        head = _HEADER.pack(MAGIC, WORD_BITS, self._size, len(self._words))
        return head + self._words.astype("<u8").tobytes()

    to_bytes = serialize

    @classmethod
    def deserialize(cls, data: bytes, offset: int = 0) -> "CompressedBitmap":
        bm, _ = cls.read_from(data, offset)
        return bm

    @classmethod
    def read_from(cls, data: bytes, offset: int = 0) -> tuple:
        """Parse one serialized bitmap at ``offset``; return (bitmap, end offset)."""
        if len(data) - offset < _HEADER.size:
            raise BitmapFormatError("truncated header")
        magic, wsize, size, count = _HEADER.unpack_from(data, offset)
        if magic != MAGIC:
            raise BitmapFormatError(f"bad magic {magic!r}")
        if wsize != WORD_BITS:
            raise BitmapFormatError(f"unsupported word size {wsize}")
        start = offset + _HEADER.size
        end = start + 8 * count
        if end > len(data):
            raise BitmapFormatError("truncated payload")
        words = np.frombuffer(data, dtype="<u8", count=count, offset=start).astype(np.uint64)
        raw, total = _parse(words)
        if total != n_words_for(size):
            raise BitmapFormatError(f"payload covers {total} words, expected {n_words_for(size)}")
        # re-canonicalize foreign input
        w = _SegmentWriter()
        for s in raw:
            if s[2] == DIRTY:
                w.add_dirty(s[3])
            else:
                w.add_fill(s[2], s[1])
        return w.finish(size), end


class BitmapBuilder:
    """Append-only construction: positions must strictly increase."""

    def __init__(self) -> None:
        self._w = _SegmentWriter()
        self._cur_word = -1
        self._cur_bits = 0
        self._last = -1

    @classmethod
    def from_bitmap(cls, bm: CompressedBitmap) -> "BitmapBuilder":
        b = cls()
        segs = bm.segments
        # hold back the last non-zero word so further bits can join it
        last_nz = len(segs) - 1
        while last_nz >= 0 and segs[last_nz].kind == FILL0:
            last_nz -= 1
        for s in segs[:last_nz]:
            if s.kind == DIRTY:
                b._w.add_dirty(s.dirty)
            else:
                b._w.add_fill(s.kind, s.length)
        if last_nz >= 0:
            s = segs[last_nz]
            if s.kind == DIRTY:
                b._w.add_dirty(s.dirty[:-1])
                lastw = int(s.dirty[-1])
            else:
                b._w.add_fill(FILL1, s.length - 1)
                lastw = _ALL_ONES_INT
            b._cur_word = s.start + s.length - 1
            b._cur_bits = lastw
            b._last = b._cur_word * WORD_BITS + lastw.bit_length() - 1
        return b

    def add(self, position: int) -> None:
        if position <= self._last:
            raise ConstructionError(
                f"position {position} not greater than previous {self._last}"
            )
        self._last = position
        word = position >> 6
        if word != self._cur_word:
            self._flush()
            self._w.add_fill(FILL0, word - self._w.n_words)
            self._cur_word = word
        self._cur_bits |= 1 << (position & 63)

    def _flush(self) -> None:
        if self._cur_word >= 0:
            self._w.add_word(self._cur_bits)
        self._cur_word = -1
        self._cur_bits = 0

    def build(self, size_in_bits: Optional[int] = None) -> CompressedBitmap:
        if size_in_bits is None:
            size_in_bits = self._last + 1
        if size_in_bits <= self._last:
            raise ConstructionError("size_in_bits smaller than largest position")
        self._flush()
        bm = self._w.finish(size_in_bits)
        self._w = None  # single use
        return bm


# ---- binary operations ----------------------------------------------------

_FILL_RESULT = {
    "AND": lambda a, b: a & b,
    "OR": lambda a, b: a | b,
    "XOR": lambda a, b: a ^ b,
    "ANDNOT": lambda a, b: a & (1 - b),
}


def _padded_segments(bm: CompressedBitmap, n_words: int) -> list:
    segs = list(bm.segments)
    if bm.n_words < n_words:
        segs.append(Segment(bm.n_words, n_words - bm.n_words, FILL0, None))
    return segs


def binary_op(kind: str, a: CompressedBitmap, b: CompressedBitmap) -> CompressedBitmap:
    """AND, OR, XOR or ANDNOT (``a & ~b``) computed on the compressed forms.

    The shorter operand is zero-extended; the result spans the longer one.
    """
    kind = kind.upper()
    if kind not in _FILL_RESULT:
        raise ValueError(f"unknown operation {kind!r}")
    size = max(a.size_in_bits, b.size_in_bits)
    nw = n_words_for(size)
    sa = _padded_segments(a, nw)
    sb = _padded_segments(b, nw)
    out = _SegmentWriter()
    fill_op = _FILL_RESULT[kind]
    ia = ib = 0
    # offsets consumed inside current segments
    oa = ob = 0
    na, nb = len(sa), len(sb)
    while ia < na and ib < nb:
        ka, la, da = sa[ia][1], sa[ia][2], sa[ia][3]
        kb, lb, db = sb[ib][1], sb[ib][2], sb[ib][3]
        ra = ka - oa
        rb = kb - ob
        step = ra if ra < rb else rb
        if la != DIRTY and lb != DIRTY:
            out.add_fill(fill_op(la, lb), step)
        elif la != DIRTY:
            dv = db[ob:ob + step]
            _fill_vs_dirty(out, kind, la, dv, fill_left=True)
        elif lb != DIRTY:
            dv = da[oa:oa + step]
            _fill_vs_dirty(out, kind, lb, dv, fill_left=False)
        else:
            x = da[oa:oa + step]
            y = db[ob:ob + step]
            if kind == "AND":
                out.add_dirty(x & y)
            elif kind == "OR":
                out.add_dirty(x | y)
            elif kind == "XOR":
                out.add_dirty(x ^ y)
            else:
                out.add_dirty(x & ~y)
        oa += step
        ob += step
        if oa == ka:
            ia += 1
            oa = 0
        if ob == kb:
            ib += 1
            ob = 0
    return out.finish(size)


def _fill_vs_dirty(out: _SegmentWriter, kind: str, fill: int, dirty: np.ndarray, fill_left: bool) -> None:
    n = len(dirty)
    if kind == "AND":
        if fill:
            out._add_clean_dirty(dirty)
        else:
            out.add_fill(FILL0, n)
    elif kind == "OR":
        if fill:
            out.add_fill(FILL1, n)
        else:
            out._add_clean_dirty(dirty)
    elif kind == "XOR":
        out._add_clean_dirty(~dirty if fill else dirty)
    else:  # ANDNOT: left & ~right
        if fill_left:
            if fill:
                out._add_clean_dirty(~dirty)
            else:
                out.add_fill(FILL0, n)
        else:
            if fill:
                out.add_fill(FILL0, n)
            else:
                out._add_clean_dirty(dirty)


def bitwise_not(bm: CompressedBitmap) -> CompressedBitmap:
    """Flip every bit in ``[0, size_in_bits)``; padding stays zero."""
    size = bm.size_in_bits
    out = _SegmentWriter()
    segs = bm.segments
    rem = size % WORD_BITS
    for i, s in enumerate(segs):
        last = i == len(segs) - 1
        if s.kind == DIRTY:
            inv = ~s.dirty
            if last and rem:
                inv = inv.copy()
                inv[-1] &= np.uint64(_tail_mask(size))
                out.add_dirty(inv)
            else:
                out._add_clean_dirty(inv)
        else:
            flipped = FILL0 if s.kind == FILL1 else FILL1
            if last and rem:
                out.add_fill(flipped, s.length - 1)
                out.add_word(_tail_mask(size) if flipped == FILL1 else 0)
            else:
                out.add_fill(flipped, s.length)
    return out.finish(size)


def wide_or(bitmaps: Sequence[CompressedBitmap], size_in_bits: Optional[int] = None) -> CompressedBitmap:
    return _wide("OR", bitmaps, size_in_bits)


def wide_and(bitmaps: Sequence[CompressedBitmap], size_in_bits: Optional[int] = None) -> CompressedBitmap:
    return _wide("AND", bitmaps, size_in_bits)


def _wide(kind: str, bitmaps: Sequence[CompressedBitmap], size_in_bits: Optional[int]) -> CompressedBitmap:
    size = max([b.size_in_bits for b in bitmaps] + [size_in_bits or 0])
    if not bitmaps:
        return CompressedBitmap.empty(size)
    # combine smallest first
    import heapq

    heap = [(b.ewah_size(), i, b) for i, b in enumerate(bitmaps)]
    heapq.heapify(heap)
    counter = len(heap)
    while len(heap) > 1:
        _, _, x = heapq.heappop(heap)
        _, _, y = heapq.heappop(heap)
        z = binary_op(kind, x, y)
        heapq.heappush(heap, (z.ewah_size(), counter, z))
        counter += 1
    res = heap[0][2]
    if res.size_in_bits < size:
        res = binary_op("OR", res, CompressedBitmap.empty(size))
    return res


# module-level conveniences mirroring the method API
empty = CompressedBitmap.empty


def cardinality(bm: CompressedBitmap) -> int:
    return bm.cardinality()


def runcount(bm: CompressedBitmap) -> int:
    return bm.runcount()


def ewah_size(bm: CompressedBitmap) -> int:
    return bm.ewah_size()


def to_bit_string(bm: CompressedBitmap) -> str:
    """Inverse of :meth:`CompressedBitmap.from_string`."""
    return "".join("1" if b else "0" for b in bm.to_bools())
