#!/usr/bin/env python3
"""Reference implementation of the evaluator wire protocol.

The framework spawns one child process per high-fidelity evaluation and
speaks line-delimited JSON over the child's stdin/stdout:

  request  (one line on stdin):
      {"<parameter name>": <value>, ..., "workload": "<name>"}
  response (one line on stdout):
      {"cpi": <positive real>}    on success
      {"error": "<text>"}         on failure

Replace the toy formula below with calls into a real simulator flow.
"""
import json
import sys


def main() -> int:
    line = sys.stdin.readline()
    if not line:
        return 1
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        print(json.dumps({"error": f"bad request: {exc}"}))
        return 0

    total = sum(v for v in request.values() if isinstance(v, (int, float)))
    cpi = 0.5 + 5000.0 / (1.0 + total)
    print(json.dumps({"cpi": cpi}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
