"""Counter-based random streams.

Every random word is a pure function of ``(seed, stream path, counter)``::

    key  = mix64(seed ^ mix64(path_id))
    word = mix64(key + (counter + 1) * GOLDEN)        (mod 2**64)

where ``mix64`` is the SplitMix64 finalizer and ``path_id`` is the first 8
bytes (little endian) of the BLAKE2b-64 digest of the path rendered as
``"/".join(str(p) for p in path)``.  Uniform doubles take the top 53 bits of
a word; normals use Box-Muller on consecutive uniform pairs.  Nothing depends
on scheduling or on how many values other streams consumed, so trials can be
evaluated in any order.

Test vectors (seed=7):

    >>> Stream(7, "doc").words(0, 3).tolist()
    [12802564797265411563, 11493071367866575186, 14613521577401236754]
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def path_id(path) -> int:
    text = "/".join(str(p) for p in path).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


class Stream:
    """A keyed stream of 64-bit words with a sequential cursor.

    ``words``/``uniforms`` address the stream by absolute counter and do not
    move the cursor; the ``random``/``randrange``/... helpers consume from it.
    """

    def __init__(self, seed: int, *path):
        self.seed = int(seed)
        self.path = tuple(path)
        self.key = mix64((self.seed & _MASK) ^ mix64(path_id(self.path)))
        self.cursor = 0

    def child(self, *path) -> "Stream":
        return Stream(self.seed, *self.path, *path)

    def word(self, counter: int) -> int:
        return mix64(self.key + (counter + 1) * GOLDEN)

    def words(self, start: int, count: int) -> np.ndarray:
        ctr = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.key) + ctr * np.uint64(GOLDEN)
        return _mix64_array(z)

    def uniforms(self, start: int, count: int) -> np.ndarray:
        return (self.words(start, count) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)

    # sequential interface

    def random(self) -> float:
        w = self.word(self.cursor)
        self.cursor += 1
        return (w >> 11) * (2.0 ** -53)

    def take_uniforms(self, count: int) -> np.ndarray:
        out = self.uniforms(self.cursor, count)
        self.cursor += count
        return out

    def randrange(self, n: int) -> int:
        n = int(n)
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        # rejection on the top bits keeps the draw exactly uniform
        bits = max(1, (n - 1).bit_length())
        while True:
            w = self.word(self.cursor) >> (64 - bits)
            self.cursor += 1
            if w < n:
                return w

    def choice(self, seq):
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, population, k: int) -> list:
        pool = list(population)
        if k > len(pool):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.randrange(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def weighted_index(self, cumulative: list) -> int:
        """Index drawn from integer cumulative weights (last entry = total)."""
        r = self.randrange(cumulative[-1])
        lo, hi = 0, len(cumulative) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if cumulative[mid] > r:
                hi = mid
            else:
                lo = mid + 1
        return lo


def keyed_words(keys, start: int, count: int) -> np.ndarray:
    """Words start..start+count-1 of several streams at once, shape (len(keys), count)."""
    keys = np.asarray(keys, dtype=np.uint64)
    ctr = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = keys[:, None] + ctr[None, :] * np.uint64(GOLDEN)
    return _mix64_array(z)


def normals_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Box-Muller on the last axis (must have even length)."""
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    r = np.sqrt(-2.0 * np.log1p(-u1))
    theta = 2.0 * math.pi * u2
    out = np.empty(u.shape, dtype=np.float64)
    out[..., 0::2] = r * np.cos(theta)
    out[..., 1::2] = r * np.sin(theta)
    return out


def ball_points_keys(keys, start: int, count: int, dim: int, radius: float) -> np.ndarray:
    """Uniform points in the closed ball B(0, radius) in R^dim, for several streams.

    Point ``j`` of a stream consumes the words ``j*stride ... (j+1)*stride - 1``
    with ``stride = 2*ceil(dim/2) + 1``: the normals first, then the radial draw.
    Norms are summed coordinate by coordinate so every point is computed the
    same way whatever the batch shape.  Returns shape (len(keys), count, dim).
    """
    even = dim + (dim % 2)
    stride = even + 1
    w = keyed_words(keys, start * stride, count * stride)
    u = (w >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    u = u.reshape(len(w), count, stride)
    g = normals_from_uniforms(u[:, :, :even])[:, :, :dim]
    sq = np.zeros(g.shape[:2])
    for c in range(dim):
        sq += g[:, :, c] * g[:, :, c]
    norms = np.sqrt(sq)
    norms[norms == 0.0] = 1.0
    scale = radius * u[:, :, even] ** (1.0 / dim) / norms
    return g * scale[:, :, None]


def ball_points(stream: Stream, start: int, count: int, dim: int, radius: float) -> np.ndarray:
    """Points start..start+count-1 of a stream's uniform-ball sequence (see ball_points_keys)."""
    return ball_points_keys([stream.key], start, count, dim, radius)[0]
