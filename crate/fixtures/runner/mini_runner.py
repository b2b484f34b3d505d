#!/usr/bin/env python3
"""Test double for the model runner: loads one model file and serves it over
newline-delimited JSON on stdin/stdout.

usage: mini_runner.py MODEL_FILE [SPEC_FILE]
"""

import inspect
import json
import sys
import traceback


def load(path):
    scope = {}
    with open(path) as f:
        exec(compile(f.read(), path, "exec"), scope)
    classes = [v for v in scope.values() if inspect.isclass(v) and hasattr(v, "step")]
    if not classes:
        raise RuntimeError("model file defines no class with step()")
    cls = classes[-1]
    for entry in ("reset", "step"):
        if not callable(getattr(cls, entry, None)):
            raise RuntimeError(f"model class lacks {entry}()")
    return cls()


def reply(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def main():
    try:
        model = load(sys.argv[1])
    except Exception as e:
        reply({"ok": False, "error": f"LoadError: {e}"})
        return 3
    reply({"hello": "faver-runner", "proto": 1, "wide": False})
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        event = req.get("event")
        try:
            if event == "reset":
                model.reset()
                reply({"ok": True})
            elif event == "step":
                out = model.step(**req["inputs"])
                reply({"ok": True, "outputs": {k: int(v) for k, v in out.items()}})
            elif event == "close":
                reply({"ok": True})
                return 0
            else:
                reply({"ok": False, "error": f"unknown event {event!r}"})
        except Exception:
            reply({"ok": False, "error": traceback.format_exc()})
    return 0


if __name__ == "__main__":
    sys.exit(main())
