"""Run every CLI stage on a generated toy corpus and show the outputs.

    python demos/toy_pipeline.py [workdir]
"""

import sys
import tempfile
from pathlib import Path

from gazerate.cli import main
from gazerate.synthetic import write_toy_corpus


def demo(root: Path) -> None:
    cfg = write_toy_corpus(root, seed=0, n_docs=4, n_readers=3, epochs=300)
    print(f"toy inputs written under {root}\n")
    args = ["--config", str(cfg), "--property", "org,quality", "--feature-set", "text,gaze,both"]
    for cmd in ("ingest", "features", "train", "eval", "ablate", "agreement", "report"):
        print(f"$ gazerate {cmd} {' '.join(args)}")
        status = main([cmd, *args])
        print(f"(exit {status})\n")
        if status:
            raise SystemExit(status)
    out = root / "out"
    print("artifacts:")
    for p in sorted(out.rglob("*")):
        if p.is_file():
            print(" ", p.relative_to(out))


if __name__ == "__main__":
    if len(sys.argv) > 1:
        demo(Path(sys.argv[1]))
    else:
        with tempfile.TemporaryDirectory() as tmp:
            demo(Path(tmp))
