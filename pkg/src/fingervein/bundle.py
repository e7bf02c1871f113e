"""Binary persistence for a trained verification model.

Layout (all integers and floats little-endian):

    magic   4 bytes   b"FVAB"
    version u32       currently 1
    then length-prefixed sections, each u32 byte length + payload,
    in this fixed order:

    config           UTF-8 JSON object (sorted keys)
    remap_curve      u8 present flag; if 1: u32 K, K f64 x-knots, K f64 y-knots
    whitening        u32 input_dim, u32 retained_dim, f64 epsilon,
                     input_dim f64 mean, retained_dim*input_dim f64
                     projection (row-major)
    autoencoder      u32 input_dim, u32 hidden_dim, then f64 blocks
                     W1 (row-major), b1, W2 (row-major), b2
    bank_meta        u32 patch_side, u32 pool_rows, u32 pool_cols
    user_models      u32 count; per user (sorted by id): u16 id byte
                     length + UTF-8 id, f64 shrinkage, f64 regularizer,
                     u32 dim, dim f64 mean, dim f64 variance diagonal,
                     u8 threshold flag + f64 threshold when set
    global_threshold u8 present flag + f64 when set

Floats round-trip bit-exactly. Files are written atomically (temp file
then rename).
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autoencoder import AutoencoderParams
from .classifier import OneClassGaussian
from .enhancement import RemapCurve
from .whitening import PCAWhitening

MAGIC = b"FVAB"
FORMAT_VERSION = 1
_SECTIONS = (
    "config",
    "remap_curve",
    "whitening",
    "autoencoder",
    "bank_meta",
    "user_models",
    "global_threshold",
)


class CorruptBundleError(ValueError):
    """The file is not a readable bundle (bad magic, truncation, garbage)."""


class UnsupportedVersionError(ValueError):
    """The bundle's format version is not supported by this reader."""


@dataclass
class ModelBundle:
    """Everything needed to represent and verify new images."""

    config: dict
    whitening: PCAWhitening
    autoencoder: AutoencoderParams
    patch_side: int
    pool_rows: int
    pool_cols: int
    remap_curve: RemapCurve = None
    user_models: dict = field(default_factory=dict)
    global_threshold: float = None
    format_version: int = FORMAT_VERSION


class _Writer:
    def __init__(self):
        self.parts = []

    def u8(self, v):
        self.parts.append(struct.pack("<B", v))

    def u16(self, v):
        self.parts.append(struct.pack("<H", v))

    def u32(self, v):
        self.parts.append(struct.pack("<I", v))

    def f64(self, v):
        self.parts.append(struct.pack("<d", v))

    def f64_array(self, arr):
        self.parts.append(
            np.ascontiguousarray(arr, dtype="<f8").tobytes()
        )

    def raw(self, data):
        self.parts.append(data)

    def getvalue(self):
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data, section):
        self.data = data
        self.pos = 0
        self.section = section

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CorruptBundleError(
                f"bundle truncated inside section {self.section!r}"
            )
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self):
        return struct.unpack("<B", self.take(1))[0]

    def u16(self):
        return struct.unpack("<H", self.take(2))[0]

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def f64(self):
        return struct.unpack("<d", self.take(8))[0]

    def f64_array(self, count):
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(
            np.float64
        )


def _encode_sections(bundle):
    sections = {}

    writer = _Writer()
    writer.raw(json.dumps(bundle.config, sort_keys=True).encode("utf-8"))
    sections["config"] = writer.getvalue()

    writer = _Writer()
    if bundle.remap_curve is None:
        writer.u8(0)
    else:
        writer.u8(1)
        writer.u32(bundle.remap_curve.x.size)
        writer.f64_array(bundle.remap_curve.x)
        writer.f64_array(bundle.remap_curve.y)
    sections["remap_curve"] = writer.getvalue()

    whitening = bundle.whitening
    writer = _Writer()
    writer.u32(whitening.n_features_in_)
    writer.u32(whitening.projection_.shape[0])
    writer.f64(whitening.epsilon)
    writer.f64_array(whitening.mean_)
    writer.f64_array(whitening.projection_)
    sections["whitening"] = writer.getvalue()

    params = bundle.autoencoder
    writer = _Writer()
    writer.u32(params.input_dim)
    writer.u32(params.hidden_dim)
    writer.f64_array(params.W1)
    writer.f64_array(params.b1)
    writer.f64_array(params.W2)
    writer.f64_array(params.b2)
    sections["autoencoder"] = writer.getvalue()

    writer = _Writer()
    writer.u32(bundle.patch_side)
    writer.u32(bundle.pool_rows)
    writer.u32(bundle.pool_cols)
    sections["bank_meta"] = writer.getvalue()

    writer = _Writer()
    writer.u32(len(bundle.user_models))
    for user_id in sorted(bundle.user_models):
        model = bundle.user_models[user_id]
        encoded = user_id.encode("utf-8")
        writer.u16(len(encoded))
        writer.raw(encoded)
        writer.f64(model.shrinkage)
        writer.f64(model.regularizer)
        writer.u32(model.mean_.size)
        writer.f64_array(model.mean_)
        writer.f64_array(model.variance_)
        if model.threshold_ is None:
            writer.u8(0)
        else:
            writer.u8(1)
            writer.f64(model.threshold_)
    sections["user_models"] = writer.getvalue()

    writer = _Writer()
    if bundle.global_threshold is None:
        writer.u8(0)
    else:
        writer.u8(1)
        writer.f64(bundle.global_threshold)
    sections["global_threshold"] = writer.getvalue()
    return sections


def save_bundle(bundle, path):
    """Serialize and atomically write the bundle; returns the byte count."""
    sections = _encode_sections(bundle)
    blob = MAGIC + struct.pack("<I", FORMAT_VERSION)
    for name in _SECTIONS:
        payload = sections[name]
        blob += struct.pack("<I", len(payload)) + payload
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return len(blob)


def _rebuild_gaussian(mean, variance, shrinkage, regularizer, threshold):
    model = OneClassGaussian(shrinkage=shrinkage, regularizer=regularizer)
    model.mean_ = mean
    model.variance_ = variance
    model.log_det_ = float(np.sum(np.log(variance)))
    model.threshold_ = threshold
    model.n_features_in_ = mean.size
    return model


def load_bundle(path):
    """Read a bundle written by :func:`save_bundle`.

    Raises :class:`UnsupportedVersionError` on a future format version
    and :class:`CorruptBundleError` on bad magic or truncation; the
    error message names the offending section.
    """
    data = Path(path).read_bytes()
    if len(data) < 8 or data[:4] != MAGIC:
        raise CorruptBundleError(f"{path} is not a model bundle (bad magic)")
    version = struct.unpack("<I", data[4:8])[0]
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"bundle version {version} is not supported; this reader "
            f"handles version {FORMAT_VERSION}"
        )
    payloads = {}
    pos = 8
    for name in _SECTIONS:
        if pos + 4 > len(data):
            raise CorruptBundleError(f"bundle truncated at section {name!r}")
        (length,) = struct.unpack("<I", data[pos:pos + 4])
        pos += 4
        if pos + length > len(data):
            raise CorruptBundleError(f"bundle truncated inside section {name!r}")
        payloads[name] = data[pos:pos + length]
        pos += length

    try:
        config = json.loads(payloads["config"].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptBundleError(f"bundle config section is invalid: {exc}")

    reader = _Reader(payloads["remap_curve"], "remap_curve")
    remap_curve = None
    if reader.u8():
        k = reader.u32()
        x = reader.f64_array(k)
        y = reader.f64_array(k)
        remap_curve = RemapCurve(x=x, y=y)

    reader = _Reader(payloads["whitening"], "whitening")
    input_dim = reader.u32()
    retained = reader.u32()
    epsilon = reader.f64()
    mean = reader.f64_array(input_dim)
    projection = reader.f64_array(retained * input_dim).reshape(retained, input_dim)
    whitening = PCAWhitening(n_components=retained, epsilon=epsilon)
    whitening.mean_ = mean
    whitening.projection_ = projection
    whitening.n_features_in_ = input_dim

    reader = _Reader(payloads["autoencoder"], "autoencoder")
    ae_input = reader.u32()
    ae_hidden = reader.u32()
    autoencoder = AutoencoderParams(
        W1=reader.f64_array(ae_hidden * ae_input).reshape(ae_hidden, ae_input),
        b1=reader.f64_array(ae_hidden),
        W2=reader.f64_array(ae_input * ae_hidden).reshape(ae_input, ae_hidden),
        b2=reader.f64_array(ae_input),
    )

    reader = _Reader(payloads["bank_meta"], "bank_meta")
    patch_side = reader.u32()
    pool_rows = reader.u32()
    pool_cols = reader.u32()

    reader = _Reader(payloads["user_models"], "user_models")
    user_models = {}
    for _ in range(reader.u32()):
        id_len = reader.u16()
        user_id = reader.take(id_len).decode("utf-8")
        shrinkage = reader.f64()
        regularizer = reader.f64()
        dim = reader.u32()
        model_mean = reader.f64_array(dim)
        variance = reader.f64_array(dim)
        threshold = reader.f64() if reader.u8() else None
        user_models[user_id] = _rebuild_gaussian(
            model_mean, variance, shrinkage, regularizer, threshold
        )

    reader = _Reader(payloads["global_threshold"], "global_threshold")
    global_threshold = reader.f64() if reader.u8() else None

    if whitening.projection_.shape[0] != autoencoder.input_dim:
        raise CorruptBundleError(
            f"inconsistent bundle: whitening outputs "
            f"{whitening.projection_.shape[0]} dims but the autoencoder "
            f"expects {autoencoder.input_dim}"
        )
    if whitening.n_features_in_ != patch_side * patch_side:
        raise CorruptBundleError(
            f"inconsistent bundle: whitening input dim "
            f"{whitening.n_features_in_} does not match patch_side "
            f"{patch_side}"
        )
    feature_dim = autoencoder.hidden_dim * pool_rows * pool_cols
    for user_id, model in user_models.items():
        if model.mean_.size != feature_dim:
            raise CorruptBundleError(
                f"inconsistent bundle: model for user {user_id!r} has "
                f"dim {model.mean_.size}, expected {feature_dim}"
            )

    return ModelBundle(
        config=config,
        whitening=whitening,
        autoencoder=autoencoder,
        patch_side=patch_side,
        pool_rows=pool_rows,
        pool_cols=pool_cols,
        remap_curve=remap_curve,
        user_models=user_models,
        global_threshold=global_threshold,
        format_version=version,
    )
