"""Run the acceptance suite and print one line per criterion."""

import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[1]
sys.exit(subprocess.call([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(root / "tests" / "test_acceptance.py")], cwd=root))
