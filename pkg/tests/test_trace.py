import pytest

from driftplan.metrics import MetricSample
from driftplan.trace import (
    DecisionRecord,
    EpisodeTrace,
    SnapshotRecord,
    StepRecord,
    TraceError,
    TraceParseError,
    TraceVersionError,
    checksum,
    decisions_csv_text,
    deserialize,
    replay,
    serialize,
    write_trace,
)


def sample_trace():
    tr = EpisodeTrace(config_hash="c" * 64, seed=7, rows=100, cols=100)
    tr.decisions.append(
        DecisionRecord(
            t=0.0,
            chosen_index=3,
            stall_s=0.0,
            candidates=((0, -60.0, 0.01, 0.9, 5.0, 4.51), (3, 0.0, 0.0123456789, 0.8, 5.0, 4.0123456789)),
        )
    )
    tr.steps.append(
        StepRecord(
            t=0.0,
            pose=(50.0, 50.0, 0.0),
            wind=(8.0, 0.1),
            targets=((0, 12.5, 33.25), (1, 90.0, 10.0)),
            detections=((12.4, 33.3, 38.1, 0),),
            metrics=MetricSample(0.0, 1.0, 0.25, 1, 1.0),
        )
    )
    tr.snapshots.append(SnapshotRecord(t=0.0, probabilities=((0.5, 0.5), (0.5, 0.9))))
    tr.steps.append(
        StepRecord(
            t=1.0,
            pose=(51.5, 50.0, 0.0),
            wind=(8.05, 0.09),
            targets=((0, 12.74, 33.25), (1, 90.24, 10.0)),
            detections=(),
            metrics=MetricSample(1.0, 0.99, 0.24, 0, 0.5),
        )
    )
    return tr


def test_roundtrip_equality_and_byte_identity():
    tr = sample_trace()
    text = serialize(tr)
    back = deserialize(text)
    assert back.config_hash == tr.config_hash
    assert back.seed == tr.seed
    assert (back.rows, back.cols) == (100, 100)
    assert back.steps == tr.steps
    assert back.decisions == tr.decisions
    assert back.snapshots == tr.snapshots
    assert serialize(back) == text
    assert checksum(back) == checksum(tr)


def test_chronological_interleaving():
    lines = serialize(sample_trace()).strip().split("\n")
    kinds = []
    for line in lines[1:]:
        for tag in ('"type":"decision"', '"type":"step"', '"type":"snapshot"'):
            if tag in line:
                kinds.append(tag.split('"')[3])
    assert kinds == ["decision", "step", "snapshot", "step"]


def test_checksum_sensitivity():
    a = sample_trace()
    b = sample_trace()
    b.steps[1] = StepRecord(
        t=1.0,
        pose=(51.5, 50.0, 1e-15),  # one ulp-level change
        wind=b.steps[1].wind,
        targets=b.steps[1].targets,
        detections=b.steps[1].detections,
        metrics=b.steps[1].metrics,
    )
    assert checksum(a) != checksum(b)


def test_file_roundtrip(tmp_path):
    tr = sample_trace()
    path = tmp_path / "trace.jsonl"
    write_trace(tr, path)
    back = replay(path)
    assert back.steps == tr.steps
    assert checksum(back) == checksum(tr)


def test_header_errors():
    with pytest.raises(TraceParseError, match="line 1"):
        deserialize("not json\n")
    with pytest.raises(TraceParseError, match="format"):
        deserialize('{"something":"else"}\n')
    with pytest.raises(TraceVersionError, match="version"):
        deserialize('{"format":"driftplan-trace","version":99,"config_hash":"x","seed":0,"rows":1,"cols":1}\n')
    with pytest.raises(TraceParseError, match="rows"):
        deserialize('{"format":"driftplan-trace","version":1,"config_hash":"x","seed":0,"cols":1}\n')
    with pytest.raises(TraceParseError, match="empty"):
        deserialize("")


def test_truncated_record_reports_line():
    text = serialize(sample_trace())
    broken = text[: len(text) - 30]  # cut inside the last record
    with pytest.raises(TraceParseError, match=r"line \d+"):
        deserialize(broken)


def test_unknown_record_type():
    tr = EpisodeTrace(config_hash="x", seed=0, rows=2, cols=2)
    head = serialize(tr).strip()
    with pytest.raises(TraceParseError, match="unknown record type"):
        deserialize(head + '\n{"type":"mystery","t":0.0}\n')


def test_step_times_must_increase():
    tr = sample_trace()
    text = serialize(tr)
    lines = text.strip().split("\n")
    step_lines = [l for l in lines if '"type":"step"' in l]
    bad = "\n".join([lines[0], step_lines[0], step_lines[0]]) + "\n"
    with pytest.raises(TraceParseError, match="not increasing"):
        deserialize(bad)


def test_trace_error_hierarchy():
    assert issubclass(TraceParseError, TraceError)
    assert issubclass(TraceVersionError, TraceError)
    assert issubclass(TraceError, ValueError)


def test_decisions_csv():
    tr = sample_trace()
    text = decisions_csv_text(tr, wall_s=[0.125])
    lines = text.strip().split("\n")
    assert lines[0].startswith("t,candidate,")
    assert len(lines) == 3  # header + 2 candidates
    row0 = lines[1].split(",")
    assert row0[1] == "0" and row0[7] == "0"  # candidate 0 not chosen
    row1 = lines[2].split(",")
    assert row1[1] == "3" and row1[7] == "1"
    assert float(row1[8]) == 0.125
    assert float(row1[3]) == 0.0123456789  # full precision retained


def test_decisions_csv_no_candidates():
    tr = EpisodeTrace(config_hash="x", seed=0, rows=2, cols=2)
    tr.decisions.append(DecisionRecord(t=0.0, chosen_index=0, stall_s=0.0, candidates=()))
    lines = decisions_csv_text(tr).strip().split("\n")
    assert len(lines) == 2
    assert lines[1].split(",")[7] == "1"
