"""Binary PGM (P5) images, blur-kernel text files and mask images."""

import numpy as np

from .errors import FormatError


def _parse_header(buf, path):
    """Return (width, height, maxval, data_offset) of a P5 header."""
    if len(buf) < 2:
        raise FormatError(f"{path}: truncated header at offset 0")
    magic = buf[:2]
    if magic != b"P5":
        raise FormatError(f"{path}: unsupported magic {magic!r} at offset 0 (expected b'P5')")
    pos = 2
    fields = []
    while len(fields) < 3:
        # whitespace and comments between header fields
        while pos < len(buf) and (buf[pos:pos + 1].isspace() or buf[pos:pos + 1] == b"#"):
            if buf[pos:pos + 1] == b"#":
                while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < len(buf) and buf[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: expected an integer header field at offset {start}")
        fields.append(int(buf[start:pos]))
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise FormatError(f"{path}: missing whitespace after header at offset {pos}")
    return fields[0], fields[1], fields[2], pos + 1


def read_image(path):
    """Read an 8-bit binary PGM into a float array with values in [0, 255]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    width, height, maxval, offset = _parse_header(buf, path)
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval} (only 255 is supported)")
    need = width * height
    if len(buf) - offset < need:
        raise FormatError(
            f"{path}: truncated payload at offset {len(buf)}: "
            f"expected {need} bytes from offset {offset}"
        )
    data = np.frombuffer(buf, dtype=np.uint8, count=need, offset=offset)
    return data.reshape(height, width).astype(float)


def to_uint8(image):
    return np.clip(np.rint(np.asarray(image, dtype=float)), 0, 255).astype(np.uint8)


def write_image(image, path):
    """Write ``image`` (rounded and clipped to [0, 255]) as a binary PGM."""
    img = to_uint8(image)
    if img.ndim != 2:
        raise FormatError(f"only 2-D grayscale images can be written, got shape {img.shape}")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_kernel(path):
    """Text kernel: first line ``rows cols``, then row-major values."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise FormatError(f"{path}: missing 'rows cols' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
        values = np.array([float(t) for t in tokens[2:]])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if rows < 1 or cols < 1 or values.size != rows * cols:
        raise FormatError(f"{path}: expected {rows}x{cols} values, found {values.size}")
    return values.reshape(rows, cols)


def write_kernel(kernel, path):
    kernel = np.asarray(kernel, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"{kernel.shape[0]} {kernel.shape[1]}\n")
        for row in kernel:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_mask(path):
    """Boolean known-pixel grid from a PGM where 0 = missing and 255 = known."""
    img = read_image(path)
    bad = (img != 0) & (img != 255)
    if bad.any():
        raise FormatError(f"{path}: mask values must be 0 or 255")
    return img == 255
