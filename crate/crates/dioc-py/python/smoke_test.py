"""Smoke test for the pydioc extension module.

Run after `pip install -e crates/dioc-py --no-build-isolation`.
"""

import json
import pathlib
import sys

import pydioc

ROOT = pathlib.Path(__file__).resolve().parents[3]
FIXTURES = ROOT / "fixtures"


def read(rel):
    return (FIXTURES / rel).read_text()


def main():
    buying = pydioc.Choreography.parse(read("corpus/buying.dioc"))
    assert buying.roles() == ["bank", "buyer", "seller"], buying.roles()
    assert buying.is_connected()
    assert buying.violations() == []

    bad = pydioc.Choreography.parse(read("bad/seq_violation.dioc"))
    assert not bad.is_connected()
    assert any("SEQ-CONN" in v for v in bad.violations())

    try:
        pydioc.Choreography.parse("greet : a( 1 ) -> ;")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")

    network = buying.project()
    procs = network.processes()
    assert set(procs) == {"bank", "buyer", "seller"}
    assert "o*_3 : x_3 from buyer" in procs["seller"]
    assert network.annotation_violations() == []
    assert pydioc.projection_event_gaps(buying) == 0

    host = pydioc.Host(read("host.json"), read("inputs.json"))
    host.add_update("fidelity_card", read("updates/fidelity_card.upd"))
    assert host.update_names() == ["fidelity_card"]

    trace = [json.loads(l) for l in pydioc.run(buying, host, level="dpoc", seed=3, weak=True)]
    assert trace and all("kind" in l for l in trace)

    report = json.loads(pydioc.equiv(buying, host))
    assert report["verdict"] == "equivalent", report
    freedom = json.loads(pydioc.freedom(buying, host))
    assert all(freedom[k] == "pass" for k in ("deadlock", "race", "orphan")), freedom

    lone = pydioc.Network.parse(read("bad/lone_receive.dpoc"))
    assert lone.roles() == ["a", "b"]

    print("pydioc smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
