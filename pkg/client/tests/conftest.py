from __future__ import annotations

import subprocess
import sys
import socket
import time

import pytest

from client_testutil import free_port


@pytest.fixture(scope="session")
def live_server():
    """A real engine server process, reached only over TCP."""
    port = free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "marena.cli", "serve", "--port", str(port), "--max-sessions", "8"],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    deadline = time.time() + 10
    while time.time() < deadline:
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=0.4):
                break
        except OSError:
            time.sleep(0.1)
    else:
        proc.terminate()
        raise RuntimeError("engine server did not come up")
    yield ("127.0.0.1", port)
    proc.terminate()
    proc.wait(timeout=5)
