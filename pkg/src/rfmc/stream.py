"""TCP stream classifier: raw int16 I/Q frames in, 2-byte verdicts out.

Wire format, per frame: 1800 little-endian signed 16-bit integers
(interleaved I,Q) = 3600 bytes. Each complete frame is answered with two
bytes: label id, then path id (0=float, 1=quantized). Partial frames are
buffered until complete; a connection that closes mid-frame is logged
and dropped without disturbing other connections.

Quantized models interpret the integers under their own input format;
float models use the fixed Q2.13 convention (see RAW_FLOAT_FORMAT).
"""

from __future__ import annotations

import logging
import socket
import threading

import numpy as np

from . import nn, quant
from .quant import FixedPointFormat, QuantizedNetwork

logger = logging.getLogger(__name__)

FRAME_BYTES = 3600
PATH_FLOAT = 0
PATH_QUANTIZED = 1

# int16 -> float convention for models without a calibrated input format:
# Q2.13 covers +-4, about four sigma of a unit-power frame at 0 dB SNR.
RAW_FLOAT_FORMAT = FixedPointFormat(13)


def make_raw_classifier(model) -> tuple:
    """(int16-frame -> label) callable plus the reply path byte."""
    if isinstance(model, QuantizedNetwork):

        def classify_raw(frame_q: np.ndarray) -> int:
            return quant.quantized_forward(model, frame_q)[1]

        return classify_raw, PATH_QUANTIZED

    params = model

    def classify_raw(frame_q: np.ndarray) -> int:
        return nn.classify(params, quant.dequantize_array(frame_q, RAW_FLOAT_FORMAT))

    return classify_raw, PATH_FLOAT


class StreamServer:
    """Threaded TCP server; one FIFO classification loop per connection."""

    def __init__(self, model, host: str = "127.0.0.1", port: int = 0):
        self._classify, self.path_byte = make_raw_classifier(model)
        self._host = host
        self._port = port
        self._listener: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._stopping = threading.Event()
        self._conns: set[socket.socket] = set()
        self._lock = threading.Lock()

    @property
    def address(self) -> tuple[str, int]:
        assert self._listener is not None, "server not started"
        return self._listener.getsockname()[:2]

    def start(self) -> None:
        self._listener = socket.create_server((self._host, self._port))
        self._listener.settimeout(0.2)
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()
        logger.info("listening on %s:%d", *self.address)

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                conn, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            with self._lock:
                self._conns.add(conn)
            threading.Thread(target=self._serve_connection, args=(conn, addr), daemon=True).start()

    def _serve_connection(self, conn: socket.socket, addr) -> None:
        buf = bytearray()
        try:
            with conn:
                while True:
                    data = conn.recv(65536)
                    if not data:
                        if buf:
                            logger.warning(
                                "%s closed mid-frame: %d residual bytes dropped", addr, len(buf)
                            )
                        return
                    buf += data
                    while len(buf) >= FRAME_BYTES:
                        frame = np.frombuffer(bytes(buf[:FRAME_BYTES]), dtype="<i2")
                        del buf[:FRAME_BYTES]
                        label = self._classify(frame)
                        conn.sendall(bytes((label, self.path_byte)))
        except OSError as exc:
            logger.warning("%s dropped: %s", addr, exc)
        finally:
            with self._lock:
                self._conns.discard(conn)

    def stop(self) -> None:
        self._stopping.set()
        if self._listener is not None:
            self._listener.close()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)
        with self._lock:
            for conn in list(self._conns):
                try:
                    conn.close()
                except OSError:
                    pass

    def serve_forever(self) -> None:
        self.start()
        try:
            while not self._stopping.wait(0.5):
                pass
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()
