"""Regenerate the shipped OpenAPI description from the live app."""
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from crossseg.service import create_app


def main():
    with tempfile.TemporaryDirectory() as tmp:
        spec = create_app(Path(tmp)).openapi()
    out = Path(__file__).resolve().parent.parent / "openapi.json"
    out.write_text(json.dumps(spec, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
