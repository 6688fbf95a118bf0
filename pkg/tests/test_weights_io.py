"""Weight file format: round trips, atomicity, malformed-file rejection."""
import struct

import numpy as np
import pytest

from specnav.model import NetConfig, SpectralNet, TaskHead
from specnav.weights_io import (
    FORMAT_VERSION,
    WeightFormatError,
    WeightVersionError,
    load_weights,
    save_weights,
)

TINY = NetConfig(input_size=8, stem_channels=4, growth_rate=2,
                 block1_layers=2, block2_layers=3, reduce1_channels=6,
                 reduce2_channels=4, n_bands=8, head_dims=(12, 6))


@pytest.fixture
def trained_pair(tmp_path):
    model = SpectralNet(TINY, seed=42)
    heads = {
        "terrain": TaskHead("classification", n_bands=8, head_dims=(12, 6),
                            n_classes=4, seed=1),
        "friction": TaskHead("regression", n_bands=8, head_dims=(12, 6),
                             seed=2),
    }
    path = tmp_path / "weights.bin"
    save_weights(path, model, heads)
    return model, heads, path


class TestRoundTrip:
    def test_predictions_bit_identical(self, trained_pair):
        model, heads, path = trained_pair
        loaded_model, loaded_heads = load_weights(path)
        x = np.random.default_rng(0).uniform(0, 1, (3, 8, 8))

        np.testing.assert_array_equal(model.predict(x), loaded_model.predict(x))
        from specnav.nn import Tensor
        spec = Tensor(model.predict(x))
        for name in heads:
            np.testing.assert_array_equal(
                heads[name](spec).data, loaded_heads[name](spec).data
            )

    def test_config_restored(self, trained_pair):
        _, _, path = trained_pair
        loaded, heads = load_weights(path)
        assert loaded.config == TINY
        assert heads["terrain"].kind == "classification"
        assert heads["friction"].kind == "regression"

    def test_model_without_heads(self, tmp_path):
        model = SpectralNet(TINY, seed=0)
        path = tmp_path / "bare.bin"
        save_weights(path, model)
        loaded, heads = load_weights(path)
        assert heads == {}
        x = np.random.default_rng(1).uniform(0, 1, (3, 8, 8))
        np.testing.assert_array_equal(model.predict(x), loaded.predict(x))

    def test_no_temp_file_left_behind(self, trained_pair):
        _, _, path = trained_pair
        assert not path.with_suffix(path.suffix + ".tmp").exists()

    def test_save_is_byte_deterministic(self, tmp_path):
        model = SpectralNet(TINY, seed=3)
        save_weights(tmp_path / "a.bin", model)
        save_weights(tmp_path / "b.bin", model)
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


class TestMalformedFiles:
    def test_bad_magic(self, trained_pair):
        _, _, path = trained_pair
        raw = bytearray(path.read_bytes())
        raw[:4] = b"JUNK"
        path.write_bytes(raw)
        with pytest.raises(WeightFormatError, match="magic"):
            load_weights(path)

    def test_unsupported_version(self, trained_pair):
        _, _, path = trained_pair
        raw = bytearray(path.read_bytes())
        raw[4:8] = struct.pack("<I", FORMAT_VERSION + 1)
        path.write_bytes(raw)
        with pytest.raises(WeightVersionError, match="version"):
            load_weights(path)

    def test_truncated_file(self, trained_pair):
        _, _, path = trained_pair
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(WeightFormatError, match="truncated"):
            load_weights(path)

    def test_meta_corruption_detected(self, trained_pair):
        _, _, path = trained_pair
        raw = bytearray(path.read_bytes())
        raw[20] ^= 0xFF
        path.write_bytes(raw)
        with pytest.raises(WeightFormatError, match="checksum"):
            load_weights(path)

    def test_trailing_garbage_rejected(self, trained_pair):
        _, _, path = trained_pair
        path.write_bytes(path.read_bytes() + b"\x00" * 8)
        with pytest.raises(WeightFormatError, match="trailing"):
            load_weights(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.bin"
        path.write_bytes(b"")
        with pytest.raises(WeightFormatError):
            load_weights(path)
