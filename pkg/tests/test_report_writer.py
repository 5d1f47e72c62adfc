import pandas as pd

from GonoDyn.integration.report_writer import ReportWriter, format_stanza, format_stanzas


def test_stanza_format():
    assert format_stanza({"a": "1", "b": "x"}) == "a=1\nb=x\n"
    assert format_stanzas([{"a": "1"}, {"a": "2"}]) == "a=1\n\na=2\n"


def test_reports_to_file(tmp_path):
    out = tmp_path / "report.txt"
    ReportWriter(out).write_reports([{"kind": "Zero"}, {"kind": "S2"}])
    assert out.read_text() == "kind=Zero\n\nkind=S2\n"


def test_table_with_suffix_and_trailer(tmp_path):
    out = tmp_path / "scan.txt"
    df = pd.DataFrame({"steps": [0, 1], "count": [3, 4]})
    target = ReportWriter(out).write_table(df, suffix="histogram", trailer={"stop_reason": "Diverged", "steps_taken": "7"})
    assert target == tmp_path / "scan_histogram.csv"
    assert target.read_text() == "steps,count\n0,3\n1,4\n# stop_reason=Diverged,steps_taken=7\n"


def test_stdout_when_no_path(capsys):
    assert ReportWriter().write_table(pd.DataFrame({"a": [1]})) is None
    ReportWriter().write_reports([{"k": "v"}])
    assert capsys.readouterr().out == "a\n1\nk=v\n"


def test_same_input_same_bytes(tmp_path):
    records = [{"x": repr(0.1 + 0.2)}]
    first, second = tmp_path / "a.txt", tmp_path / "b.txt"
    ReportWriter(first).write_reports(records)
    ReportWriter(second).write_reports(records)
    assert first.read_bytes() == second.read_bytes()
