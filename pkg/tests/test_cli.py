import csv
import io
import json
import os
import subprocess
import sys
from fractions import Fraction

import pytest

from rcmexp.cli import main, parse_template, parse_vertices
from rcmexp.graphcore import SpecError, build_template


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# rcm-report/1 command=")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_oracle_single_edge(capsys, tmp_path):
    path = tmp_path / "edge.json"
    path.write_text(json.dumps({"template": "edges", "vertices": ["x", "y"],
                                "edges": [["x", "y"]], "boundary": ["x"]}))
    code, out, _ = run(capsys, "oracle", "--graph-file", str(path), "--p", "1/2", "--q", "2",
                       "--exact")
    assert code == 0
    vals = {r["quantity"]: r["value"] for r in rows(out) if r["record"] == "value"}
    assert vals["Z"] == "3"


def test_oracle_corner_connectivity(capsys):
    code, out, _ = run(capsys, "oracle", "--template", "zd:2,2", "--p", "1/4", "--q", "2",
                       "--exact", "--X", "0,0;1,1")
    vals = {r["quantity"]: r["value"] for r in rows(out) if r["record"] == "value"}
    assert code == 0 and vals["connectivity"] == "49/1201"


def test_header_and_jsonl(capsys):
    code, out, _ = run(capsys, "graph", "--template", "zd:6,6", "--margin", "1")
    assert code == 0 and out.startswith("# rcm-report/1 command=graph\n")
    code, out, _ = run(capsys, "graph", "--template", "zd:6,6", "--margin", "1",
                       "--format", "jsonl")
    recs = [json.loads(line) for line in out.splitlines()]
    assert recs[0]["record"] == "meta"


def test_expand_limits(capsys):
    code, out, _ = run(capsys, "expand", "--template", "zd:4,4", "--p", "0", "--q", "2",
                       "--exact", "--X", "1,1,2,2")
    res = [r for r in rows(out) if r["record"] == "result"]
    assert code == 0 and res[0]["value"] == "0"
    code, out, _ = run(capsys, "expand", "--template", "zd:5,5", "--margin", "1",
                       "--regime", "sup", "--bc", "wired", "--p", "1", "--q", "2", "--exact")
    res = {r["quantity"]: r["value"] for r in rows(out) if r["record"] == "result"}
    assert code == 0 and res == {"phi_f": "0", "theta": "1"}


def test_expand_small_p(capsys):
    code, out, _ = run(capsys, "expand", "--template", "zd:4,4", "--p", "1/200", "--q", "1",
                       "--X", "1,1,1,2", "--K", "4")
    assert code == 0
    final = [r for r in rows(out) if r["record"] == "result"][-1]
    assert final["has_tail"] == "true"


def test_certify(capsys):
    code, out, _ = run(capsys, "certify", "--delta", "4", "--q", "1", "--p", "0.01",
                       "--cutset-R", "1")
    recs = rows(out)
    conn = [r for r in recs if r["kind"] == "connectivity"][0]
    assert code == 0 and float(conn["p_star"]) == pytest.approx(0.014758, abs=1e-6)
    assert conn["threshold_ok"] == "true"
    kp = [r for r in recs if r["kind"] == "kotecky-preiss"][0]
    assert float(kp["A"]) == 32


def test_exit_codes(capsys):
    assert run(capsys, "nonsense")[0] == 4
    assert run(capsys, "oracle", "--template", "zd:5,5", "--p", "1/2")[0] == 2
    assert run(capsys, "graph", "--template", "zd:4,4", "--margin", "2")[0] == 2
    assert run(capsys, "oracle", "--template", "zd:3,3", "--p", "3/2")[0] == 4
    assert run(capsys, "graph", "--template", "bogus:1")[0] == 4
    assert run(capsys, "expand", "--template", "zd:4,4", "--K", "-1")[0] == 4


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "ursell_closed_forms,wired_identity_2x3")
    recs = rows(out)
    assert code == 0
    assert [r["name"] for r in recs] == ["ursell_closed_forms", "wired_identity_2x3", "all"]
    assert all(r["status"] == "pass" for r in recs)
    assert run(capsys, "verify", "--only", "no_such_check")[0] == 4


def test_verify_output_independent_of_threads(tmp_path):
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, RCM_THREADS=threads)
        p = subprocess.run([sys.executable, "-m", "rcmexp.cli", "verify", "--only",
                            "normalization_and_sandwich,subcritical_repartition"],
                           env=env, capture_output=True, check=True)
        outs.append(p.stdout)
    assert outs[0] == outs[1]


def test_scan_sub(capsys):
    code, out, _ = run(capsys, "scan", "--template", "zd:3,4", "--p", "1/200", "--q", "2",
                       "--exact", "--K", "5", "--X", "1,1", "--max-distance", "1")
    scan = [r for r in rows(out) if r["record"] == "scan"]
    assert code == 0 and len(scan) == 1
    gap = abs(Fraction(scan[0]["exact"]) - Fraction(scan[0]["truncated"]))
    assert float(gap) <= float(scan[0]["tail_bound"])


def test_template_parsing():
    assert parse_template("zd:6,6", 1) == {"template": "zd", "dims": [6, 6], "margin": 1}
    assert parse_template("tree:3,4") == {"template": "tree", "degree": 3, "depth": 4}
    with pytest.raises(SpecError):
        parse_template("{bad")
    g = build_template(parse_template("zd:4,4"))
    assert parse_vertices(g, "1,1,2,2") == [g.vertex("1,1"), g.vertex("2,2")]
    assert parse_vertices(g, "1,1;2,2") == [g.vertex("1,1"), g.vertex("2,2")]
    with pytest.raises(SpecError):
        parse_vertices(g, "1,1,2")
