"""Readers and writers for the canonical flow CSV, GDP CSV and panel manifests.

Flow CSV::

    year,source_economy,source_sector,target_economy,target_sector,flow

GDP CSV::

    year,economy,gdp

Panel manifest (JSON)::

    {"years": [{"year": 1995, "flows": "wiot_1995.csv"}, ...], "gdp": "gdp.csv"}

Relative paths in a manifest resolve against the manifest's directory.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    DegenerateYear,
    DuplicateKey,
    InvalidFlow,
    IoError,
    MixedYears,
    PanelInconsistent,
    ParseError,
    TooSmall,
)
from .network import FlowNetwork, Kind, NodeRef

FLOW_HEADER = ["year", "source_economy", "source_sector", "target_economy", "target_sector", "flow"]
GDP_HEADER = ["year", "economy", "gdp"]


def _natural_key(text):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", text)]


def canonical_node_key(node: NodeRef):
    """Sort key: economy, then industries in natural order, then GOV."""
    return (node.economy, node.kind is Kind.GOVERNMENT, _natural_key(node.sector))


def _text_stream(source):
    if isinstance(source, (str, os.PathLike)):
        try:
            return open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise IoError(f"cannot open {source}: {exc.strerror}") from exc
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"), newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _rows(source, header):
    stream = _text_stream(source)
    try:
        reader = csv.reader(stream)
        first = next(reader, None)
        if first is None:
            raise ParseError("empty file, expected header", line=1)
        if [h.strip() for h in first] != header:
            raise ParseError(f"header must be exactly {','.join(header)}", line=1)
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=reader.line_num)
            yield reader.line_num, [cell.strip() for cell in row]
    finally:
        if isinstance(source, (str, os.PathLike)):
            stream.close()


def _parse_int(text, line, what):
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not an integer", line=line) from None


def _parse_amount(text, line, what):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{what} {text!r} is not a decimal number", line=line) from None
    if not math.isfinite(value):
        raise ParseError(f"{what} {text!r} is not finite", line=line)
    return value


def parse_flow_csv(source) -> FlowNetwork:
    """Read one year of flows into a :class:`FlowNetwork`.

    ``source`` may be a path, raw bytes, or a binary/text stream.  Nodes are
    the union of all endpoints, indexed in canonical order (economy, then
    industry sectors in natural order, then ``GOV``) so that tables for
    different years share one index regardless of row order.
    """
    year = None
    flows = {}
    for line, (y, se, ss, te, ts, amount) in _rows(source, FLOW_HEADER):
        y = _parse_int(y, line, "year")
        if year is None:
            year = y
        elif y != year:
            raise MixedYears(f"line {line}: year {y} differs from {year}")
        if not (se and ss and te and ts):
            raise ParseError("empty economy or sector code", line=line)
        value = _parse_amount(amount, line, "flow")
        if value < 0:
            raise InvalidFlow(f"line {line}: negative flow {amount}")
        key = (NodeRef(se, ss), NodeRef(te, ts))
        flows[key] = flows.get(key, 0.0) + value
    nodes = sorted({node for pair in flows for node in pair}, key=canonical_node_key)
    if len(nodes) < 2:
        raise TooSmall(f"flow table defines {len(nodes)} node(s); at least 2 required")
    index = {node: k for k, node in enumerate(nodes)}
    w = np.zeros((len(nodes), len(nodes)))
    for (src, dst), value in flows.items():
        w[index[dst], index[src]] += value
    return FlowNetwork(year, tuple(nodes), w)


def write_flow_csv(network: FlowNetwork, target) -> None:
    """Write ``network`` as canonical flow CSV.

    Only positive flows are emitted, except that a node with no positive flow
    at all gets a zero self-loop row so it survives a round trip.  Values use
    the shortest repr that parses back to the same double.
    """
    w = network.weights
    active = (w > 0).any(axis=0) | (w > 0).any(axis=1)
    own = isinstance(target, (str, os.PathLike))
    stream = open(target, "w", encoding="utf-8", newline="") if own else target
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(FLOW_HEADER)
        for j, src in enumerate(network.nodes):
            if not active[j]:
                writer.writerow([network.year, src.economy, src.sector, src.economy, src.sector, "0"])
            for i in np.flatnonzero(w[:, j] > 0):
                dst = network.nodes[i]
                writer.writerow([network.year, src.economy, src.sector, dst.economy, dst.sector, repr(float(w[i, j]))])
    finally:
        if own:
            stream.close()


@dataclass(frozen=True)
class GdpSeries:
    """GDP shares keyed by ``(year, economy)``; shares sum to 1 per year."""

    shares: dict

    @property
    def years(self) -> list:
        return sorted({year for year, _ in self.shares})

    def for_year(self, year: int) -> dict:
        return {eco: share for (y, eco), share in self.shares.items() if y == year}


def parse_gdp_csv(source) -> GdpSeries:
    """Read absolute GDP values and normalise them to shares within each year."""
    raw = {}
    for line, (y, economy, amount) in _rows(source, GDP_HEADER):
        y = _parse_int(y, line, "year")
        value = _parse_amount(amount, line, "gdp")
        if value < 0:
            raise ParseError(f"negative gdp {amount}", line=line)
        if not economy:
            raise ParseError("empty economy code", line=line)
        if (y, economy) in raw:
            raise DuplicateKey(f"line {line}: duplicate gdp row for ({y}, {economy})")
        raw[(y, economy)] = value
    totals = {}
    for (y, _), value in raw.items():
        totals[y] = totals.get(y, 0.0) + value
    for y, total in totals.items():
        if total <= 0:
            raise DegenerateYear(f"all gdp values are zero in {y}")
    return GdpSeries({key: value / totals[key[0]] for key, value in raw.items()})


@dataclass(frozen=True)
class Panel:
    """Yearly networks over one node set, in increasing year order."""

    networks: tuple
    gdp: Optional[GdpSeries] = None

    def __post_init__(self):
        networks = tuple(self.networks)
        if not networks:
            raise PanelInconsistent("panel has no years")
        years = [net.year for net in networks]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise PanelInconsistent(f"years must be strictly increasing, got {years}")
        reference = networks[0].nodes
        for net in networks[1:]:
            if net.nodes != reference:
                missing = set(reference) ^ set(net.nodes)
                detail = ", ".join(sorted(node.label for node in missing)[:5]) or "same set, different order"
                raise PanelInconsistent(f"node set of {net.year} differs from {networks[0].year}: {detail}")
        object.__setattr__(self, "networks", networks)

    @property
    def years(self) -> list:
        return [net.year for net in self.networks]

    @property
    def nodes(self) -> tuple:
        return self.networks[0].nodes

    def __len__(self):
        return len(self.networks)

    def __getitem__(self, year: int) -> FlowNetwork:
        for net in self.networks:
            if net.year == year:
                return net
        raise KeyError(year)


def load_panel(manifest) -> Panel:
    """Load a panel from a manifest path or an already-decoded manifest dict."""
    if isinstance(manifest, dict):
        doc, base = manifest, Path.cwd()
    else:
        path = Path(manifest)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoError(f"cannot read manifest {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"manifest {path} is not valid JSON: {exc.msg}", line=exc.lineno) from exc
        base = path.parent
    entries = doc.get("years")
    if not isinstance(entries, list) or not entries:
        raise ParseError("manifest needs a non-empty 'years' list")
    networks = []
    for entry in sorted(entries, key=lambda e: e["year"]):
        net = parse_flow_csv(base / entry["flows"])
        if net.year != int(entry["year"]):
            raise PanelInconsistent(f"{entry['flows']} holds year {net.year}, manifest says {entry['year']}")
        networks.append(net)
    gdp = parse_gdp_csv(base / doc["gdp"]) if doc.get("gdp") else None
    return Panel(tuple(networks), gdp)
