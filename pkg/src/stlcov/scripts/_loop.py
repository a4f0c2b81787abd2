"""Minimal server side of the external system protocol."""
import json
import sys


def serve(step):
    """``step(inputs, state) -> (outputs, state)``; state is None after each reset."""
    state = None
    for line in sys.stdin:
        msg = json.loads(line)
        cmd = msg.get("cmd")
        if cmd == "reset":
            state = None
        elif cmd == "step":
            outputs, state = step(msg["inputs"], state)
            sys.stdout.write(json.dumps({"outputs": outputs}) + "\n")
            sys.stdout.flush()
        elif cmd == "end":
            continue
