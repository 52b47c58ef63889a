import math
import threading

import pytest

from utils import FileUtils, FormatUtils, ParallelUtils


class TestFileUtils:
    def test_normalize(self):
        assert FileUtils.normalize_path("-") == "-"
        assert FileUtils.normalize_path("") == ""
        assert FileUtils.normalize_path(None) == ""
        assert FileUtils.normalize_path("a//b/../c") == "a/c"

    def test_write_creates_parents(self, tmp_path):
        target = tmp_path / "deep" / "dir" / "out.txt"
        assert FileUtils.write_text(target, "hello\n")
        assert target.read_text(encoding="utf-8") == "hello\n"
        assert FileUtils.validate_path(target)

    def test_write_stdout(self, capsys):
        assert FileUtils.write_text("-", "to stdout\n")
        assert capsys.readouterr().out == "to stdout\n"

    def test_write_failure_returns_false(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x", encoding="utf-8")
        assert not FileUtils.write_text(blocker / "child.txt", "y")

    def test_validate_missing(self, tmp_path):
        assert not FileUtils.validate_path(tmp_path / "missing")
        assert not FileUtils.validate_path("  ")
        assert not FileUtils.validate_path(tmp_path)


class TestFormatUtils:
    @pytest.mark.parametrize("value, text", [
        (0.1, "0.10000000000000001"),
        (math.inf, "inf"),
        (-math.inf, "-inf"),
        (math.nan, "nan"),
        (2.0, "2"),
    ])
    def test_format_float(self, value, text):
        assert FormatUtils.format_float(value) == text

    def test_format_value(self):
        assert FormatUtils.format_value(True) == "true"
        assert FormatUtils.format_value(3) == "3"
        assert FormatUtils.format_value("well") == "well"

    def test_parse_value(self):
        assert FormatUtils.parse_value("false") is False
        assert FormatUtils.parse_value("12") == 12
        assert FormatUtils.parse_value("0.10000000000000001") == 0.1
        assert math.isinf(FormatUtils.parse_value("inf"))
        assert FormatUtils.parse_value("exp") == "exp"

    def test_csv_text(self):
        rows = [{"r": 1.0, "ok": True}, {"r": 0.5, "ok": False}]
        assert FormatUtils.csv_text(rows, ["r", "ok"]) == "r,ok\n1,true\n0.5,false\n"
        assert FormatUtils.csv_text([]) == "\n"


class TestParallelUtils:
    def test_worker_count(self):
        assert ParallelUtils.worker_count(4, jobs=2) == 2
        assert ParallelUtils.worker_count(0, jobs=3) >= 1
        assert ParallelUtils.worker_count(None, jobs=1) == 1

    def test_ordered_map_keeps_order(self):
        seen = set()

        def work(k):
            seen.add(threading.current_thread().name)
            return k * k

        assert ParallelUtils.ordered_map(work, range(20), workers=4) == [k * k for k in range(20)]
        assert ParallelUtils.ordered_map(work, [3], workers=4) == [9]
