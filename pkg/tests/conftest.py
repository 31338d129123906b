import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from apiminer.ir import parse_method

# Straight-line file reading method; the canonical worked example for
# extraction: three calls on the buffered reader, one on the file reader,
# and a string produced by readLine.
READER_METHOD = """\
.method com.example.App.readTextFile 3 (v2:java.lang.String)
  new-instance v0 java.io.FileReader
  invoke-direct java.io.FileReader.<init> (v0)
  new-instance v1 java.io.BufferedReader
  invoke-direct java.io.BufferedReader.<init> (v1, v0)
  invoke-virtual java.io.BufferedReader.readLine (v1)
  move-result v2 java.lang.String
  invoke-virtual java.io.BufferedReader.close (v1)
  return
.end
"""

# One while-style loop around a call: the loop body runs zero times or once.
LOOP_METHOD = """\
.method com.example.App.pump 2 (v1:java.lang.String)
  new-instance v0 java.io.Pipe
  invoke-direct java.io.Pipe.<init> (v0)
:head
  if eq v1 0 :done
  invoke-virtual java.io.Pipe.push (v0)
  goto :head
:done
  invoke-virtual java.io.Pipe.close (v0)
  return
.end
"""


def diamond_method(arms: int) -> str:
    """A chain of ``arms`` independent if-diamonds, each arm calling a
    different method on the same object; 2**arms execution paths."""
    lines = [f".method com.example.App.branches{arms} 2 (v1:java.lang.String)",
             "  new-instance v0 java.io.Sink",
             "  invoke-direct java.io.Sink.<init> (v0)"]
    for i in range(arms):
        lines += [
            f"  if eq v1 0 :else{i}",
            f"  invoke-virtual java.io.Sink.low{i} (v0)",
            f"  goto :join{i}",
            f":else{i}",
            f"  invoke-virtual java.io.Sink.high{i} (v0)",
            f":join{i}",
            f"  invoke-virtual java.io.Sink.mark{i} (v0)",
        ]
    lines += ["  invoke-virtual java.io.Sink.close (v0)", "  return", ".end"]
    return "\n".join(lines) + "\n"


@pytest.fixture
def reader_method():
    return parse_method(READER_METHOD)


@pytest.fixture
def loop_method():
    return parse_method(LOOP_METHOD)
