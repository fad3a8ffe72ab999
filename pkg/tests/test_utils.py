import logging

import numpy as np
import pytest

from src.utils.logger import PACKAGE_LOGGER, get_logger
from src.utils.random_streams import derive_rng, make_seed, stream_seed
from src.utils.serialization import (complex_to_pair, flat_from_json, matrix_from_json, matrix_to_json,
                                     pair_to_complex, to_jsonable)


class TestRandomStreams:
    def test_same_labels_same_stream(self):
        assert derive_rng(3, "jacobi", 4).random() == derive_rng(3, "jacobi", 4).random()

    def test_labels_separate_streams(self):
        assert derive_rng(3, "jacobi", 4).random() != derive_rng(3, "jacobi", 5).random()
        assert stream_seed(3, "a") != stream_seed(3, "b")

    def test_large_seed(self):
        assert 0 <= stream_seed(2 ** 64 - 1, "x") < 2 ** 64

    def test_negative_seed(self):
        with pytest.raises(ValueError):
            make_seed(-1)


class TestSerialization:
    def test_complex_pairs(self):
        assert complex_to_pair(1 - 2j) == [1.0, -2.0]
        assert pair_to_complex([1, -2]) == 1 - 2j
        assert pair_to_complex(3) == 3

    def test_bad_pair(self):
        with pytest.raises(ValueError):
            pair_to_complex([1, 2, 3])

    def test_matrix_round_trip(self):
        M = np.array([[1 + 1j, 2], [0, -1j]])
        np.testing.assert_array_equal(matrix_from_json(matrix_to_json(M)), M)

    def test_flat_size_checked(self):
        with pytest.raises(ValueError):
            flat_from_json([[1, 0]] * 3, 2)

    def test_to_jsonable(self):
        data = to_jsonable({"z": 1j, "m": np.eye(2), "b": np.bool_(True), "n": np.int64(3), 4: (np.float64(0.5),)})
        assert data == {"z": [0.0, 1.0], "m": [[1.0, 0.0], [0.0, 1.0]], "b": True, "n": 3, "4": [0.5]}


class TestLogger:
    def test_handlers_not_duplicated(self):
        get_logger(log_level="DEBUG")
        logger = get_logger(log_level="WARNING")
        assert logger.name == PACKAGE_LOGGER
        assert logger.level == logging.WARNING
        assert len(logger.handlers) == 1

    def test_file_handler(self, tmp_path):
        logger = get_logger(log_level="INFO", log_dir=str(tmp_path), log_file="run.log")
        logger.info("hello")
        for handler in logger.handlers:
            handler.flush()
        assert "hello" in (tmp_path / "run.log").read_text(encoding="utf-8")
        for handler in logger.handlers:
            handler.close()
        logger.handlers.clear()

    def test_unknown_level_falls_back_to_info(self):
        assert get_logger(log_level="LOUD").level == logging.INFO
