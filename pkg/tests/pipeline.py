"""Drive the command line on the bundled demo scenario."""
import json
from pathlib import Path

from smotkit.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def synth(data_dir, out):
    out = Path(out)
    assert run("synth", data_dir / "demo_scenario.json", "-o", out, "--video-id", "demo") == 0
    return out / "frames", out / "gt"


def fixture_pipeline(data_dir, out, backend=None, record=None, selector="llm"):
    """synth -> track -> annotate -> eval; returns the paths of every output."""
    out = Path(out)
    frames, gt = synth(data_dir, out / "synth")
    backend = backend or f"fixture:{data_dir / 'demo_suite.json'}"
    tracks = out / "tracks" / "demo.jsonl"
    pred = out / "pred" / "demo.jsonl"
    report = out / "report.jsonl"
    assert run("track", frames, "-o", tracks, "--backend", f"fixture:{data_dir / 'demo_suite.json'}",
               "--video-id", "demo") == 0
    extra = ["--record", record] if record else []
    assert run("annotate", frames, tracks, "-o", pred, "--backend", backend,
               "--synsets", data_dir / "demo_synsets.tsv", "--selector", selector, *extra) == 0
    assert run("eval", gt, pred.parent, "-o", report, "-q") == 0
    return {"tracks": tracks, "pred": pred, "report": report, "gt": gt, "frames": frames}


def remote_suite(path, data_dir, url):
    """Suite file with scenario geometry and every text role served over HTTP."""
    scenario = str(data_dir / "demo_scenario.json")
    cfg = {
        "provenance": "remote:fake",
        "detector": {"kind": "scenario", "path": scenario},
        "mask_tracker": {"kind": "scenario", "path": scenario},
        "vlm": {"kind": "remote", "base_url": url, "model": "vlm", "timeout": 10},
        "llm": {"kind": "remote", "base_url": url, "model": "llm", "timeout": 10},
        "embedder": {"kind": "remote", "base_url": url, "model": "emb", "timeout": 10, "dimension": 64},
    }
    Path(path).write_text(json.dumps(cfg), encoding="utf-8")
    return Path(path)


def body_lines(path):
    """Annotation lines after the header (the header carries provenance and flags)."""
    return Path(path).read_text(encoding="utf-8").splitlines()[1:]


def records(path):
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines()]
