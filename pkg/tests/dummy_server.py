"""Minimal wire-protocol peer used by the protocol client tests.

Modes (argv[1]): ok, short-batch, garbage, silent.
"""

import json
import sys


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "ok"
    for line in sys.stdin:
        req = json.loads(line)
        op = req["op"]
        if op == "handshake":
            if mode == "garbage":
                sys.stdout.write("not json at all\n")
            else:
                sys.stdout.write(json.dumps({
                    "num_classes": 3,
                    "class_names": ["e", "n", "c"],
                    "model_name": "dummy",
                }) + "\n")
            sys.stdout.flush()
        elif op == "predict":
            if mode == "silent":
                continue
            n = len(req["texts"])
            if mode == "short-batch" and n > 1:
                n -= 1
            rows = []
            for item in req["texts"][:n]:
                # deterministic pseudo-probs from the text length
                k = len(item["a"] or "") % 3
                row = [0.2, 0.2, 0.2]
                row[k] = 0.6
                rows.append(row)
            sys.stdout.write(json.dumps({"probs": rows}) + "\n")
            sys.stdout.flush()
        elif op == "shutdown":
            sys.stdout.write(json.dumps({"ok": True}) + "\n")
            sys.stdout.flush()
            return


if __name__ == "__main__":
    main()
