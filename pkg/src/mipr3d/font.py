"""5x7 uppercase bitmap font used by the letter phantoms."""

import numpy as np

_ROWS = {
    "A": ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
    "B": ["11110", "10001", "10001", "11110", "10001", "10001", "11110"],
    "C": ["01110", "10001", "10000", "10000", "10000", "10001", "01110"],
    "D": ["11110", "10001", "10001", "10001", "10001", "10001", "11110"],
    "E": ["11111", "10000", "10000", "11110", "10000", "10000", "11111"],
    "F": ["11111", "10000", "10000", "11110", "10000", "10000", "10000"],
    "G": ["01110", "10001", "10000", "10111", "10001", "10001", "01111"],
    "H": ["10001", "10001", "10001", "11111", "10001", "10001", "10001"],
    "I": ["01110", "00100", "00100", "00100", "00100", "00100", "01110"],
    "J": ["00111", "00010", "00010", "00010", "00010", "10010", "01100"],
    "K": ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
    "L": ["10000", "10000", "10000", "10000", "10000", "10000", "11111"],
    "M": ["10001", "11011", "10101", "10101", "10001", "10001", "10001"],
    "N": ["10001", "10001", "11001", "10101", "10011", "10001", "10001"],
    "O": ["01110", "10001", "10001", "10001", "10001", "10001", "01110"],
    "P": ["11110", "10001", "10001", "11110", "10000", "10000", "10000"],
    "Q": ["01110", "10001", "10001", "10001", "10101", "10010", "01101"],
    "R": ["11110", "10001", "10001", "11110", "10100", "10010", "10001"],
    "S": ["01111", "10000", "10000", "01110", "00001", "00001", "11110"],
    "T": ["11111", "00100", "00100", "00100", "00100", "00100", "00100"],
    "U": ["10001", "10001", "10001", "10001", "10001", "10001", "01110"],
    "V": ["10001", "10001", "10001", "10001", "10001", "01010", "00100"],
    "W": ["10001", "10001", "10001", "10101", "10101", "10101", "01010"],
    "X": ["10001", "10001", "01010", "00100", "01010", "10001", "10001"],
    "Y": ["10001", "10001", "01010", "00100", "00100", "00100", "00100"],
    "Z": ["11111", "00001", "00010", "00100", "01000", "10000", "11111"],
}

GLYPHS = frozenset(_ROWS)
GLYPH_SHAPE = (7, 5)


def glyph_bitmap(ch):
    """Boolean 7x5 bitmap of ``ch`` (True = ink)."""
    return np.array([[c == "1" for c in row] for row in _ROWS[ch]], dtype=bool)


def render_glyph(ch, height):
    """Nearest-neighbour upscaling of the glyph to ``height`` rows."""
    bm = glyph_bitmap(ch)
    h = int(height)
    w = max(1, int(round(h * GLYPH_SHAPE[1] / GLYPH_SHAPE[0])))
    rows = np.minimum((np.arange(h) * GLYPH_SHAPE[0]) // h, GLYPH_SHAPE[0] - 1)
    cols = np.minimum((np.arange(w) * GLYPH_SHAPE[1]) // w, GLYPH_SHAPE[1] - 1)
    return bm[np.ix_(rows, cols)]
