"""Bridge to denoisers running in a separate process.

The adapter process speaks a little-endian binary protocol over its
stdin/stdout, one session per process:

* handshake: the client sends the 4 magic bytes ``PNPD`` followed by a
  uint32 protocol version (currently 1); the adapter echoes the same 8
  bytes back.
* request: a single byte frame type (1 = denoise), three uint32 values
  (height, width, channels), then H*W*C float32 image entries followed
  by H*W*C float32 noise-map entries, row-major, channel-interleaved.
* response: a single status byte (0 = ok, anything else = adapter
  error), then on success H*W*C float32 result entries.
* the session ends when the client closes the adapter's stdin.

Noise maps are always transmitted with one entry per channel; clients
holding a shared single-channel map replicate it before sending. All
payloads are float32, which is the only place the package narrows from
float64.
"""

from __future__ import annotations

import os
import select
import shlex
import struct
import subprocess

import numpy as np

from .validation import as_image, as_noise_map

__all__ = [
    "PROTOCOL_MAGIC",
    "PROTOCOL_VERSION",
    "FRAME_DENOISE",
    "STATUS_OK",
    "AdapterError",
    "AdapterHandshakeError",
    "AdapterProtocolError",
    "AdapterStatusError",
    "AdapterTimeoutError",
    "ExternalDenoiser",
]

PROTOCOL_MAGIC = b"PNPD"
PROTOCOL_VERSION = 1
FRAME_DENOISE = 1
STATUS_OK = 0

_HANDSHAKE = struct.Struct("<4sI")
_DIMS = struct.Struct("<III")


class AdapterError(RuntimeError):
    """Base class for external-denoiser failures."""


class AdapterHandshakeError(AdapterError):
    pass


class AdapterProtocolError(AdapterError):
    pass


class AdapterStatusError(AdapterError):
    def __init__(self, status: int):
        super().__init__(f"adapter reported error status {status}")
        self.status = status


class AdapterTimeoutError(AdapterError):
    pass


class ExternalDenoiser:
    """Denoiser contract implementation backed by an adapter process.

    ``command`` is the adapter command line, given as a string (split
    with shell-like rules) or an argument list. The process is spawned
    and the handshake performed on first use; one instance serves one
    request at a time. Use as a context manager or call ``close`` to
    end the session.
    """

    def __init__(self, command, *, timeout: float = 120.0):
        if isinstance(command, str):
            command = shlex.split(command)
        if not command:
            raise ValueError("command: empty adapter command line")
        self.command = list(command)
        self.timeout = float(timeout)
        self._proc: subprocess.Popen | None = None

    def __enter__(self) -> "ExternalDenoiser":
        self._ensure_started()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if proc.stdin is not None:
                proc.stdin.close()
            proc.wait(timeout=5.0)
        except Exception:
            proc.kill()
            proc.wait()

    def _ensure_started(self) -> None:
        if self._proc is not None:
            if self._proc.poll() is not None:
                raise AdapterProtocolError(
                    f"adapter exited with code {self._proc.returncode}"
                )
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise AdapterHandshakeError(f"cannot spawn adapter: {exc}") from exc
        hello = _HANDSHAKE.pack(PROTOCOL_MAGIC, PROTOCOL_VERSION)
        self._write(hello)
        try:
            echo = self._read_exact(_HANDSHAKE.size)
        except AdapterError as exc:
            raise AdapterHandshakeError(f"no handshake echo: {exc}") from exc
        if echo != hello:
            raise AdapterHandshakeError(f"bad handshake echo {echo!r}")

    def _write(self, payload: bytes) -> None:
        proc = self._proc
        assert proc is not None and proc.stdin is not None
        try:
            proc.stdin.write(payload)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise AdapterProtocolError(f"adapter pipe closed: {exc}") from exc

    def _read_exact(self, n: int) -> bytes:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        fd = proc.stdout.fileno()
        chunks = bytearray()
        while len(chunks) < n:
            ready, _, _ = select.select([fd], [], [], self.timeout)
            if not ready:
                raise AdapterTimeoutError(
                    f"adapter read timed out after {self.timeout}s"
                )
            chunk = os.read(fd, n - len(chunks))
            if not chunk:
                raise AdapterProtocolError("adapter closed its stdout mid-frame")
            chunks.extend(chunk)
        return bytes(chunks)

    def __call__(self, u, s) -> np.ndarray:
        u = as_image(u, name="image")
        s = as_noise_map(s)
        if s.shape[2] == 1 and u.shape[2] > 1:
            s = np.repeat(s, u.shape[2], axis=2)
        if s.shape != u.shape:
            raise ValueError(f"image/noise map: shape mismatch {u.shape} vs {s.shape}")
        self._ensure_started()
        h, w, c = u.shape
        frame = bytearray()
        frame.append(FRAME_DENOISE)
        frame.extend(_DIMS.pack(h, w, c))
        frame.extend(np.ascontiguousarray(u, dtype="<f4").tobytes())
        frame.extend(np.ascontiguousarray(s, dtype="<f4").tobytes())
        self._write(bytes(frame))
        status = self._read_exact(1)[0]
        if status != STATUS_OK:
            raise AdapterStatusError(status)
        payload = self._read_exact(4 * h * w * c)
        out = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        return out.reshape(h, w, c)
