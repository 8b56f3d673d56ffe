"""Rewrite tests/golden/ from the current code. Review the diff before committing."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from goldens import GOLDEN, golden_artifacts  # noqa: E402


def main():
    GOLDEN.mkdir(exist_ok=True)
    for name, text in golden_artifacts().items():
        (GOLDEN / name).write_text(text, encoding="utf-8", newline="")
        print(f"wrote {GOLDEN / name}")


if __name__ == "__main__":
    main()
