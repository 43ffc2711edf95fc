import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvforge import fixtures as fx
from cvforge.chartfile import (
    SCHEMA,
    InvariantViolation,
    SchemaError,
    dump_chart,
    dumps_chart,
    load_chart,
    loads_chart,
)
from cvforge.jets import Jet, MatrixJet, context, random_matrix_jet
from cvforge.unfolding import induce_f_structure


def doc_of(b):
    return json.loads(dumps_chart(b))


class TestRoundTrip:
    @pytest.mark.parametrize("name", sorted(fx.FIXTURES))
    def test_byte_identical(self, name):
        text = dumps_chart(fx.FIXTURES[name]())
        b, f = loads_chart(text)
        assert f is None
        assert dumps_chart(b) == text

    @pytest.mark.parametrize("name", ["e1", "f2", "sg-unfolded"])
    def test_tensors_preserved(self, name):
        b = fx.FIXTURES[name]()
        back, _ = loads_chart(dumps_chart(b))
        for key in ("U", "g", "h", "Q"):
            x, y = getattr(b, key), getattr(back, key)
            assert (x is None and y is None) or np.array_equal(x.c, y.c)
        assert all(np.array_equal(x.c, y.c) for x, y in zip(b.C, back.C))

    def test_f_structure_carried(self, f2):
        f = induce_f_structure(f2)
        b, g = loads_chart(dumps_chart(f2, f))
        assert np.array_equal(g.c, f.c)
        assert np.array_equal(g.E.column().c, f.E.column().c)

    def test_negative_zero_normalized(self, e1):
        b = e1.replace(U=e1.U * -0.0)
        assert "-0.0" not in dumps_chart(b)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_random_higgs_round_trip(self, seed):
        ctx = context(2, 3)
        rng = np.random.default_rng(seed)
        base = fx.example_semisimple(2, (1.0, 2.0), d=3)
        C = [M * (ctx.anti_degree == 0) for M in (random_matrix_jet(ctx, rng, 2).c for _ in range(2))]
        b = base.replace(C=[MatrixJet(ctx, c) for c in C], Q=None, h=None, kappa=None, gamma01=None)
        text = dumps_chart(b)
        assert dumps_chart(loads_chart(text, check=False)[0]) == text

    def test_file_helpers(self, sg, tmp_path):
        path = tmp_path / "sg.json"
        dump_chart(sg, path)
        b, _ = load_chart(path)
        assert dumps_chart(b) == path.read_text()


class TestSchema:
    def test_schema_tag(self, e1):
        assert doc_of(e1)["schema"] == SCHEMA

    def test_wrong_schema(self, e1):
        doc = doc_of(e1)
        doc["schema"] = "cvforge/9"
        with pytest.raises(SchemaError):
            loads_chart(json.dumps(doc))

    def test_malformed_json_position(self):
        with pytest.raises(SchemaError, match="line 1, column"):
            loads_chart('{"schema": "cvforge/1",')

    def test_missing_field_named(self, e1):
        doc = doc_of(e1)
        del doc["n"]
        with pytest.raises(SchemaError, match="'n'"):
            loads_chart(json.dumps(doc))

    def test_bad_term_path(self, e1):
        doc = doc_of(e1)
        doc["tensors"]["U"][0]["terms"][0]["t"] = [0, 0]
        with pytest.raises(SchemaError, match="U"):
            loads_chart(json.dumps(doc))


class TestInvariants:
    def test_nonhermitian_h(self, e1):
        t = Jet.coordinate(e1.ctx, 0)
        text = dumps_chart(e1.replace(h=e1.h + MatrixJet.from_entries([[t]])))
        with pytest.raises(InvariantViolation, match="h hermitian"):
            loads_chart(text)

    def test_check_can_be_skipped(self, e1):
        t = Jet.coordinate(e1.ctx, 0)
        text = dumps_chart(e1.replace(h=e1.h + MatrixJet.from_entries([[t]])))
        b, _ = loads_chart(text, check=False)
        assert "h hermitian" in b.invariant_violations()
