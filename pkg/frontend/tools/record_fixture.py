"""Record the canonical click sequence against the CLI server.

Builds the request lines the UI is expected to emit for
fixtures/clicks.json, drives `retrograde serve --stdio` with them, and
writes the full two-way tape to fixtures/fidelity.json together with
ground truth read from an in-process session: the machine's
context-switch log length and final step after the sequence.

Run from frontend/:  python3 tools/record_fixture.py
"""

import json
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent.parent
FIXTURES = HERE / "fixtures"


def canonical_requests(clicks: dict, source: str) -> list[str]:
    """Exactly the lines the UI sends: one load/state/enabled on
    connect, step/state/enabled/mem per step click, back/state/enabled/
    mem per back click, revcode per selection. Ids count up from 1."""
    reqs: list[dict] = []

    def cmd(name: str, args: dict | None = None) -> None:
        obj: dict = {"id": len(reqs) + 1, "cmd": name}
        if args is not None:
            obj["args"] = args
        reqs.append(obj)

    cmd("load", {
        "source": source,
        "constants": clicks["constants"],
        "engines": clicks["engines"],
    })
    cmd("state")
    cmd("enabled")
    for thread in clicks["steps"]:
        cmd("step", {"thread": thread})
        cmd("state")
        cmd("enabled")
        cmd("mem")
    for _ in range(clicks["backs"]):
        cmd("back", {"n": 1})
        cmd("state")
        cmd("enabled")
        cmd("mem")
    for seq in clicks["selects"]:
        cmd("revcode", {"seq": seq})
    return [json.dumps(r, separators=(",", ":")) for r in reqs]


def drive_cli(requests: list[str]) -> list[dict]:
    """Pipe the requests through the served stdio protocol, pairing
    each request with the event and response lines it produced."""
    proc = subprocess.Popen(
        ["retrograde", "serve", "--stdio", "--fixture", "bounded-buffer"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
    )
    assert proc.stdin is not None and proc.stdout is not None
    tape: list[dict] = []
    for req in requests:
        proc.stdin.write(req + "\n")
        proc.stdin.flush()
        tape.append({"dir": "send", "text": req})
        while True:
            line = proc.stdout.readline()
            if not line:
                raise RuntimeError("server closed early")
            line = line.rstrip("\n")
            tape.append({"dir": "recv", "text": line})
            if '"id"' in line and "event" not in json.loads(line):
                break
    proc.stdin.close()
    proc.wait(timeout=10)
    return tape


def ground_truth(requests: list[str], cli_recv: list[str]) -> tuple[int, int]:
    """Replay in-process and read the machine's switch log directly;
    also cross-check that the in-process lines match the CLI's."""
    from retrograde.debug import Session, handle_line

    session = Session()
    lines: list[str] = []
    for req in requests:
        lines.extend(handle_line(session, req))
    if lines != cli_recv:
        sys.exit("in-process replay diverged from the CLI recording")
    assert session.machine is not None
    return len(session.machine.log.switches), session.machine.step_count


def main() -> None:
    clicks = json.loads((FIXTURES / "clicks.json").read_text())
    source = (FIXTURES / "bounded-buffer.mcl").read_text()
    requests = canonical_requests(clicks, source)

    tape = drive_cli(requests)
    cli_recv = [t["text"] for t in tape if t["dir"] == "recv"]
    switches_len, final_step = ground_truth(requests, cli_recv)

    responses = [json.loads(t["text"]) for t in tape if t["dir"] == "recv"]
    bad = [r for r in responses if r.get("ok") is False]
    if bad:
        sys.exit(f"recorded session contains errors: {bad[:3]}")

    out = {
        "lines": tape,
        "switchesLen": switches_len,
        "finalStep": final_step,
    }
    (FIXTURES / "fidelity.json").write_text(json.dumps(out, indent=1) + "\n")
    print(f"recorded {len(tape)} lines, switches={switches_len}, step={final_step}")


if __name__ == "__main__":
    main()
