import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markov_io import FlowNetwork, NodeRef, load_panel, parse_flow_csv, parse_gdp_csv, write_flow_csv
from markov_io.errors import (
    DegenerateYear,
    DuplicateKey,
    InvalidFlow,
    IoError,
    MixedYears,
    PanelInconsistent,
    ParseError,
    TooSmall,
)
from markov_io.network import Kind

HEADER = "year,source_economy,source_sector,target_economy,target_sector,flow\n"

CLOSED_CSV = HEADER + (
    "2011,E1,I1,E1,I1,2\n"
    "2011,E2,I1,E2,I1,2\n"
    "2011,E1,I1,E1,GOV,3\n"
    "2011,E1,GOV,E1,I1,3\n"
    "2011,E2,I1,E2,GOV,3\n"
    "2011,E2,GOV,E2,I1,3\n"
    "2011,E1,I1,E2,I1,1\n"
    "2011,E2,I1,E1,I1,1\n"
)


def test_closed_economy_csv():
    net = parse_flow_csv(CLOSED_CSV.encode())
    assert net.year == 2011
    assert [n.label for n in net.nodes] == ["E1-I1", "E1-GOV", "E2-I1", "E2-GOV"]
    assert net.nodes[1].kind is Kind.GOVERNMENT
    w = net.weights
    assert w[0, 0] == 2 and w[1, 0] == 3 and w[0, 1] == 3 and w[2, 0] == 1
    assert np.count_nonzero(w) == 8


def test_binary_and_text_streams_agree():
    a = parse_flow_csv(io.BytesIO(CLOSED_CSV.encode()))
    b = parse_flow_csv(io.StringIO(CLOSED_CSV))
    assert np.array_equal(a.weights, b.weights)


def test_header_only_is_too_small():
    with pytest.raises(TooSmall):
        parse_flow_csv(HEADER.encode())


def test_bad_flow_reports_line():
    text = HEADER + "2011,A,I1,B,I1,1\n2011,A,I1,B,I1,abc\n"
    with pytest.raises(ParseError) as info:
        parse_flow_csv(text.encode())
    assert info.value.line == 3


def test_wrong_header():
    with pytest.raises(ParseError):
        parse_flow_csv(b"year,src,dst,flow\n2011,A,B,1\n")


def test_mixed_years():
    text = HEADER + "2011,A,I1,B,I1,1\n2010,B,I1,A,I1,1\n"
    with pytest.raises(MixedYears):
        parse_flow_csv(text.encode())


def test_negative_flow():
    with pytest.raises(InvalidFlow):
        parse_flow_csv((HEADER + "2011,A,I1,B,I1,-1\n").encode())


def test_canonical_order_independent_of_rows():
    rows = CLOSED_CSV.splitlines()[1:]
    shuffled = HEADER + "\n".join(reversed(rows)) + "\n"
    a, b = parse_flow_csv(CLOSED_CSV.encode()), parse_flow_csv(shuffled.encode())
    assert a.nodes == b.nodes
    assert np.array_equal(a.weights, b.weights)


def test_natural_sector_order():
    text = HEADER + "2011,A,I10,A,I2,1\n2011,A,I2,A,GOV,1\n2011,A,GOV,A,I10,1\n"
    net = parse_flow_csv(text.encode())
    assert [n.sector for n in net.nodes] == ["I2", "I10", "GOV"]


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 6),
    st.lists(st.floats(0, 1e12, allow_subnormal=False), min_size=36, max_size=36),
    st.lists(st.booleans(), min_size=36, max_size=36),
)
def test_round_trip_bit_identical(n, values, mask):
    w = (np.array(values) * np.array(mask)).reshape(6, 6)[:n, :n]
    nodes = tuple(NodeRef(f"E{k % 2}", "GOV" if k == 0 else f"I{k}") for k in range(n))
    from markov_io.ingest import canonical_node_key

    nodes = tuple(sorted(nodes, key=canonical_node_key))
    net = FlowNetwork(1999, nodes, w)
    buf = io.StringIO()
    write_flow_csv(net, buf)
    again = parse_flow_csv(io.StringIO(buf.getvalue()))
    assert again.nodes == net.nodes
    assert np.array_equal(again.weights, net.weights)


def test_gdp_shares():
    gdp = parse_gdp_csv(b"year,economy,gdp\n2011,A,1\n2011,B,3\n2010,A,7\n")
    assert gdp.for_year(2011) == {"A": 0.25, "B": 0.75}
    assert gdp.for_year(2010) == {"A": 1.0}
    for year in gdp.years:
        assert abs(sum(gdp.for_year(year).values()) - 1) < 1e-6


def test_gdp_duplicate():
    with pytest.raises(DuplicateKey):
        parse_gdp_csv(b"year,economy,gdp\n2011,A,1\n2011,A,2\n")


def test_gdp_all_zero_year():
    with pytest.raises(DegenerateYear):
        parse_gdp_csv(b"year,economy,gdp\n2011,A,0\n2011,B,0\n")


def write_year(path, year, extra=""):
    path.write_text(CLOSED_CSV.replace("2011,", f"{year},") + extra, encoding="utf-8")


def test_load_panel(tmp_path):
    entries = []
    for year in range(1995, 2012):
        write_year(tmp_path / f"wiot_{year}.csv", year)
        entries.append({"year": year, "flows": f"wiot_{year}.csv"})
    (tmp_path / "m.json").write_text(json.dumps({"years": entries[::-1]}))
    panel = load_panel(tmp_path / "m.json")
    assert len(panel) == 17
    assert panel.years == list(range(1995, 2012))
    assert panel.gdp is None


def test_load_panel_with_gdp(tmp_path):
    write_year(tmp_path / "a.csv", 2010)
    (tmp_path / "gdp.csv").write_text("year,economy,gdp\n2010,E1,1\n2010,E2,1\n")
    (tmp_path / "m.json").write_text(json.dumps({"years": [{"year": 2010, "flows": "a.csv"}], "gdp": "gdp.csv"}))
    panel = load_panel(tmp_path / "m.json")
    assert panel.gdp.for_year(2010) == {"E1": 0.5, "E2": 0.5}


def test_panel_node_mismatch(tmp_path):
    write_year(tmp_path / "a.csv", 2010)
    write_year(tmp_path / "b.csv", 2011, extra="2011,E3,I1,E1,I1,1\n")
    doc = {"years": [{"year": 2010, "flows": "a.csv"}, {"year": 2011, "flows": "b.csv"}]}
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(PanelInconsistent):
        load_panel(tmp_path / "m.json")


def test_panel_missing_file(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"years": [{"year": 2010, "flows": "nope.csv"}]}))
    with pytest.raises(IoError):
        load_panel(tmp_path / "m.json")


def test_missing_manifest(tmp_path):
    with pytest.raises(IoError):
        load_panel(tmp_path / "absent.json")
