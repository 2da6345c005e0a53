"""Handles saving/loading parameter bundles to/from ISOT container files.

Layout (little-endian): 4-byte magic ``ISOT``, u32 version, u64 header length, UTF-8 JSON
header, zero padding up to the next 64-byte boundary, then contiguous row-major f32 payloads.
Tensor offsets in the header are relative to the payload start.
"""

import json
import logging
import math
import struct
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from src.errors import (
    BundleNotFound,
    DtypeUnsupported,
    DuplicateName,
    HeaderMalformed,
    InvalidTensor,
    IoFailure,
    MagicMismatch,
    PayloadTruncated,
    VersionUnsupported,
)
from src.models.tensor_bundle import TensorBundle

logger = logging.getLogger(__name__)

MAGIC = b'ISOT'
VERSION = 1
ALIGNMENT = 64
PREAMBLE = struct.Struct('<4sIQ')
F32 = np.dtype('<f4')


class TensorEntry(BaseModel):
    """Header record of one tensor."""

    dtype: str
    shape: list[int] = Field(min_length=1, max_length=2)
    offset: int = Field(ge=0)


class BundleHeader(BaseModel):
    """JSON header of an ISOT file."""

    tensors: dict[str, TensorEntry]
    meta: dict[str, str] = {}


def _payload_start(header_len: int) -> int:
    unpadded = PREAMBLE.size + header_len
    return -(-unpadded // ALIGNMENT) * ALIGNMENT


def _reject_duplicates(pairs):
    keys = [key for key, _ in pairs]
    if len(keys) != len(set(keys)):
        raise DuplicateName(f'Duplicate keys in bundle header: {sorted({k for k in keys if keys.count(k) > 1})}')
    return dict(pairs)


def encode_bundle(bundle: TensorBundle) -> bytes:
    """Serialize a bundle to the bytes of an ISOT file."""
    tensors = {}
    offset = 0
    payloads = []
    for name, array in bundle.items():
        data = np.ascontiguousarray(array, dtype=F32).tobytes()
        tensors[name] = {'dtype': 'f32', 'shape': list(array.shape), 'offset': offset}
        payloads.append(data)
        offset += len(data)

    header = json.dumps({'tensors': tensors, 'meta': bundle.meta}, ensure_ascii=False, separators=(',', ':'))
    header_bytes = header.encode('utf-8')
    padding = _payload_start(len(header_bytes)) - PREAMBLE.size - len(header_bytes)
    return b''.join([PREAMBLE.pack(MAGIC, VERSION, len(header_bytes)), header_bytes, b'\x00' * padding, *payloads])


def decode_bundle(raw: bytes, source: str = '<bytes>') -> TensorBundle:
    """Parse the bytes of an ISOT file.

    Args:
        raw: File contents
        source: Name used in error messages

    Returns:
        TensorBundle: Bundle with every tensor materialized

    Raises:
        MagicMismatch: If the magic is not ``ISOT``
        VersionUnsupported: If the version is not 1
        HeaderMalformed: If the header is not valid JSON or violates the container rules
        DtypeUnsupported: If a tensor is not f32
        PayloadTruncated: If the header or a payload runs past the end of the file
        NonFiniteValue: If a tensor contains NaN or Inf
    """
    if raw[:4] != MAGIC:
        raise MagicMismatch(f'{source}: expected magic {MAGIC!r}, found {bytes(raw[:4])!r}')
    if len(raw) < PREAMBLE.size:
        raise PayloadTruncated(f'{source}: file ends inside the preamble')

    _, version, header_len = PREAMBLE.unpack_from(raw)
    if version != VERSION:
        raise VersionUnsupported(f'{source}: container version {version} is not supported (expected {VERSION})')
    if PREAMBLE.size + header_len > len(raw):
        raise PayloadTruncated(f'{source}: header of {header_len} bytes runs past the end of the file')

    try:
        header_text = raw[PREAMBLE.size : PREAMBLE.size + header_len].decode('utf-8')
        parsed = json.loads(header_text, object_pairs_hook=_reject_duplicates)
        header = BundleHeader.model_validate(parsed)
    except DuplicateName as err:
        raise HeaderMalformed(f'{source}: {err}') from err
    except (UnicodeDecodeError, json.JSONDecodeError, ValidationError) as err:
        raise HeaderMalformed(f'{source}: invalid header: {err}') from err

    payload = memoryview(raw)[_payload_start(header_len) :]
    entries = []
    for name, entry in header.tensors.items():
        if entry.dtype != 'f32':
            raise DtypeUnsupported(f'{source}: tensor {name!r} has dtype {entry.dtype!r}; only f32 is supported')
        if any(extent < 1 for extent in entry.shape):
            raise HeaderMalformed(f'{source}: tensor {name!r} has non-positive extent in shape {entry.shape}')
        nbytes = math.prod(entry.shape) * F32.itemsize
        if entry.offset + nbytes > len(payload):
            raise PayloadTruncated(
                f'{source}: tensor {name!r} needs bytes {entry.offset}..{entry.offset + nbytes} '
                f'but the payload holds {len(payload)}'
            )
        array = np.frombuffer(payload, dtype=F32, count=nbytes // F32.itemsize, offset=entry.offset)
        entries.append((name, array.reshape(entry.shape).astype(np.float32)))

    try:
        return TensorBundle(entries, meta=header.meta)
    except InvalidTensor as err:
        raise HeaderMalformed(f'{source}: {err}') from err


def save_bundle(bundle: TensorBundle, filepath: str | Path) -> None:
    """Save a bundle to disk as an ISOT file.

    Args:
        bundle: Bundle to save
        filepath: Path where to save the file

    Raises:
        IoFailure: If the file cannot be written
    """
    filepath = Path(filepath)
    data = encode_bundle(bundle)
    try:
        # Ensure directory exists
        filepath.parent.mkdir(parents=True, exist_ok=True)
        filepath.write_bytes(data)
    except OSError as err:
        raise IoFailure(f'Cannot write bundle to {filepath}: {err}') from err
    logger.info('Saved %d tensors to %s', len(bundle), filepath)


def load_bundle(filepath: str | Path) -> TensorBundle:
    """Load a bundle from an ISOT file.

    Args:
        filepath: Path to the ISOT file

    Returns:
        TensorBundle: The loaded bundle

    Raises:
        BundleNotFound: If the file does not exist or cannot be read
    """
    filepath = Path(filepath)
    try:
        raw = filepath.read_bytes()
    except FileNotFoundError as err:
        raise BundleNotFound(f'Bundle file not found: {filepath}') from err
    except OSError as err:
        raise BundleNotFound(f'Cannot read bundle file {filepath}: {err}') from err

    bundle = decode_bundle(raw, source=str(filepath))
    logger.info('Loaded %d tensors from %s', len(bundle), filepath)
    return bundle


def load_all_bundles(filepaths: list[str | Path]) -> list[TensorBundle]:
    """Load several bundles, tagging each with its file stem as ``task`` meta when absent."""
    bundles = []
    for filepath in filepaths:
        bundle = load_bundle(filepath)
        if 'task' not in bundle.meta:
            bundle = TensorBundle(bundle.items(), meta={**bundle.meta, 'task': Path(filepath).stem})
        bundles.append(bundle)
    return bundles
