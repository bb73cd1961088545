import pytest
import yaml

from src.algebra import PrimeField
from src.analysis import threshold_for
from src.audit import AuditSample, audit_decision
from src.coding import encode, rs_code
from src.extractor import HonestProver, extract
from src.models import audit_record, export_report_yaml, report_to_dict
from src.schemes import SchemeDescriptor


F5 = PrimeField(5)


def basic_scheme():
    return SchemeDescriptor("basic", rs_code(F5, 4, 2))


def weak_audit():
    return audit_decision(AuditSample(50, 40, "with", gamma=10, omega=9))


def test_audit_record_is_one_line():
    record = audit_record(weak_audit())
    assert "\n" not in record
    assert record.startswith("t=50 g=40 sampling=with p_value=")
    assert "decision=insufficient_evidence" in record
    assert record.split()[-1].startswith("theta_L=")

def test_audit_report_dict():
    output = report_to_dict(weak_audit())
    assert output["report"] == "audit"
    assert output["sample"] == {"t": 50, "g": 40, "sampling": "with", "gamma": 10, "omega": 9, "p0": "4/5"}
    assert output["decision"] == "insufficient_evidence"
    assert output["advice"].endswith("t=100")
    assert "failures" not in output, "Empty failure lists are left out"

def test_threshold_report_dict():
    output = report_to_dict(threshold_for(basic_scheme()))
    assert output["report"] == "threshold"
    assert output["kind"] == "basic"
    assert output["threshold"] == "5/8", "Exact fractions are written as a/b"
    assert output["threshold-float"] == pytest.approx(0.625)
    assert output["dstar"] == 3 and output["dstar-exact"] == 3

def test_extraction_report_dict():
    scheme = basic_scheme()
    M = encode(scheme.code, F5.vector([1, 1]))
    output = report_to_dict(extract(HonestProver(scheme, M), scheme))
    assert output["m-hat"] == [1, 1]
    assert output["M-hat"] == [2, 3, 4, 0]
    assert (output["distance"], output["tie"], output["unique"], output["queries"]) == (0, False, True, 4)

def test_unknown_reports_are_rejected():
    with pytest.raises(TypeError):
        report_to_dict({"report": "audit"})

def test_export_report_yaml(tmp_path):
    path = tmp_path / "audit.yaml"
    export_report_yaml(weak_audit(), str(path))
    loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
    assert loaded == report_to_dict(weak_audit()), "The YAML file holds exactly the report mapping"
    assert list(loaded)[:2] == ["report", "sample"], "Keys keep their report order"
