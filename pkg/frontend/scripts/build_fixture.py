#!/usr/bin/env python3
"""Build the small index store the UI tests run against."""

import json
import random
import sys
from pathlib import Path

from trendweave.cli import dispatch

TOPIC_WORDS = [
    ["banking", "account", "branch", "teller", "deposit", "loan", "credit",
     "charge", "card", "statement", "balance", "transfer"],
    ["shipping", "package", "delivery", "courier", "tracking", "warehouse",
     "parcel", "freight", "carrier", "address", "label", "customs"],
]
FLAVOR = {
    "positive": ["excellent", "great", "helpful"],
    "negative": ["terrible", "awful", "broken"],
}


def make_records(n_per_month=18, months=("2015-01", "2015-02", "2015-03")):
    rng = random.Random(4242)
    records = []
    i = 0
    for month in months:
        for _ in range(n_per_month):
            topic = rng.randrange(2)
            words = rng.choices(TOPIC_WORDS[topic], k=14)
            words += rng.choices(TOPIC_WORDS[1 - topic], k=4)
            mood = "positive" if rng.random() < 0.5 else "negative"
            words += rng.choices(FLAVOR[mood], k=2)
            rng.shuffle(words)
            mid = len(words) // 2
            body = " ".join(words[:mid]) + ". " + " ".join(words[mid:]) + "."
            records.append({
                "id": f"doc{i:04d}",
                "created_at": f"{month}-{rng.randint(1, 27):02d}T12:00:00Z",
                "title": f"Opinion {i}",
                "body": body,
                "url": f"http://forum.example/{i}",
            })
            i += 1
    return records


def main() -> int:
    workdir = Path(sys.argv[1] if len(sys.argv) > 1 else ".fixture")
    workdir = workdir.resolve()
    workdir.mkdir(parents=True, exist_ok=True)
    raw = workdir / "raw.json"
    raw.write_text(json.dumps(make_records()))
    flags = ["--workdir", str(workdir), "--seed", "5"]
    for cmd in (["ingest", "--input", str(raw)],
                ["corpus", "--granularity", "monthly"],
                ["fit-dtm", "--topics", "2", "--sigma2", "0.05",
                 "--max-iter", "3"],
                ["sentiment"], ["embed"], ["index"]):
        code = dispatch(cmd + flags)
        if code != 0:
            print(f"fixture step {cmd[0]} failed with exit {code}",
                  file=sys.stderr)
            return code
    print(f"fixture store ready at {workdir / 'index'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
