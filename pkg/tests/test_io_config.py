import pytest

from nlarch.config import load_config, model_from_config, parse_config
from nlarch.distributions import StudentT, UnitNormal
from nlarch.errors import ConfigError, DataError, InsufficientDataError
from nlarch.io import ingest_csv
from nlarch.model import BoundedShrink, Logistic, LogisticIntercept, TimeVaryingSlope


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestIngest:
    def test_length(self, tmp_path):
        rows = "".join(f"{i},{20 + (i % 7) * 0.5}\n" for i in range(2719))
        s = ingest_csv(write(tmp_path, "date,value\n" + rows))
        assert len(s) == 2719 and s.dropped == 0

    def test_missing_marker_dropped(self, tmp_path):
        text = ("DATE,VXXLECLS\n2020-01-01,.\n2020-01-02,30.1\n2020-01-03,\n"
                "2020-01-06,31.0\n2020-01-07,29.5\n2020-01-08,28.0\n2020-01-09,27.5\n"
                "2020-01-10,27.0\n")
        s = ingest_csv(write(tmp_path, text))
        assert s.dropped == 2 and len(s) == 6 and s.values[0] == 30.1

    def test_header_only(self, tmp_path):
        with pytest.raises(InsufficientDataError):
            ingest_csv(write(tmp_path, "date,value\n"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(InsufficientDataError):
            ingest_csv(write(tmp_path, ""))

    def test_bad_row_line_number(self, tmp_path):
        with pytest.raises(DataError, match="line 3"):
            ingest_csv(write(tmp_path, "d,v\n2020-01-01,1\n2020-01-02,abc\n"))

    def test_missing_column(self, tmp_path):
        with pytest.raises(DataError, match="line 2"):
            ingest_csv(write(tmp_path, "d,v\n2020-01-01\n"))

    def test_sorted_by_date(self, tmp_path):
        text = "d,v\n" + "".join(f"2020-01-{d:02d},{d}\n" for d in (5, 3, 9, 1, 7, 2))
        s = ingest_csv(write(tmp_path, text))
        assert s.values.tolist() == [1, 2, 3, 5, 7, 9]

    def test_too_few_rows(self, tmp_path):
        with pytest.raises(InsufficientDataError):
            ingest_csv(write(tmp_path, "d,v\n1,1\n2,2\n"), min_rows=6)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            ingest_csv(tmp_path / "nope.csv")


class TestConfig:
    def test_parse(self):
        cfg = parse_config("# c\nsimulate.n = 10  # inline\n\nmodel.alpha = 0.1, 0.2\n")
        assert cfg.get_int("simulate.n") == 10
        assert cfg.get_floats("model.alpha") == (0.1, 0.2)
        assert cfg.get_float("missing", 1.5) == 1.5

    @pytest.mark.parametrize("text,match", [("novalue\n", "line 1"), ("a = 1\na = 2\n", "line 2"),
                                            ("bad key = 1\n", "line 1")])
    def test_errors(self, text, match):
        with pytest.raises(ConfigError, match=match):
            parse_config(text)

    def test_typed_getters(self):
        cfg = parse_config("x = yes\ny = abc\n")
        assert cfg.get_bool("x") is True
        with pytest.raises(ConfigError):
            cfg.get_float("y")
        with pytest.raises(ConfigError):
            cfg.get_bool("y")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "none.cfg")

    def test_empirical_default(self):
        m = model_from_config(parse_config(""))
        assert isinstance(m.mean, LogisticIntercept) and m.arch.alpha == (0.406, 0.31, 0.149)

    def test_empirical_override(self):
        m = model_from_config(parse_config("model.omega = 2\nmodel.innovation.kind = normal\n"))
        assert m.arch.omega == 2.0 and m.innovation == UnitNormal()

    def test_custom(self):
        text = ("model.preset = custom\nmodel.pi = 0.3\nmodel.mean.kind = bounded_shrink\n"
                "model.mean.r = 1\nmodel.mean.rho = 1\nmodel.arch.omega = 1\n"
                "model.arch.alpha = 0.2, 0.1\nmodel.arch.gate = logistic\n"
                "model.arch.gate_gamma = 0.5\nmodel.arch.gate_a = 2\n"
                "model.innovation.kind = studentt\nmodel.innovation.df = 6\n")
        m = model_from_config(parse_config(text))
        assert m.p == 2 and m.q == 2
        assert m.mean == BoundedShrink(1.0, 1.0, 1.0)
        assert m.arch.zeta == Logistic(0.5, 2.0) and m.innovation == StudentT(6.0)

    def test_custom_time_varying(self):
        text = ("model.preset = custom\nmodel.mean.kind = time_varying_slope\n"
                "model.mean.r0 = 1\nmodel.mean.rho = 1\nmodel.arch.omega = 1\n"
                "model.arch.alpha = 0.2\n")
        assert isinstance(model_from_config(parse_config(text)).mean, TimeVaryingSlope)

    @pytest.mark.parametrize("text", ["model.preset = other\n",
                                      "model.preset = custom\nmodel.mean.kind = linear\n",
                                      "model.preset = custom\nmodel.mean.kind = x\n",
                                      "model.innovation.kind = skewt\nmodel.innovation.c = 3\n"])
    def test_invalid_models(self, text):
        with pytest.raises(ConfigError):
            model_from_config(parse_config(text))
