/**
 * Session loop: handshake, then answer every request frame with
 * exactly one response frame until end-of-stream. Backend failures
 * and malformed frames get a nonzero status byte and the session
 * continues; only a bad handshake is fatal.
 */

import type { Backend } from "./backends.js";
import {
  ByteReader,
  FRAME_DENOISE,
  MAGIC,
  MAX_ELEMENTS,
  STATUS_BACKEND_ERROR,
  STATUS_MALFORMED,
  STATUS_OK,
  VERSION,
  decodeDims,
  fromFloats,
  toFloats,
} from "./protocol.js";

function write(output: NodeJS.WritableStream, buf: Buffer): Promise<void> {
  return new Promise((resolvePromise, rejectPromise) => {
    output.write(buf, (err) => (err ? rejectPromise(err) : resolvePromise()));
  });
}

function allZero(values: Float32Array): boolean {
  for (let i = 0; i < values.length; i++) {
    if (values[i] !== 0) return false;
  }
  return true;
}

/** Runs the session; resolves with the process exit code. */
export async function serve(
  input: NodeJS.ReadableStream,
  output: NodeJS.WritableStream,
  backend: Backend,
): Promise<number> {
  const reader = new ByteReader(input);

  const hello = await reader.take(8);
  if (
    hello === null ||
    !hello.subarray(0, 4).equals(MAGIC) ||
    hello.readUInt32LE(4) !== VERSION
  ) {
    return 1;
  }
  await write(output, hello);

  for (;;) {
    const head = await reader.take(1);
    if (head === null) {
      return 0; // end-of-stream between frames: clean shutdown
    }
    if (head[0] !== FRAME_DENOISE) {
      await write(output, Buffer.from([STATUS_MALFORMED]));
      continue;
    }
    const dimsBuf = await reader.take(12);
    if (dimsBuf === null) {
      await write(output, Buffer.from([STATUS_MALFORMED]));
      return 0;
    }
    const dims = decodeDims(dimsBuf);
    const count = dims.height * dims.width * dims.channels;
    if (count === 0 || count > MAX_ELEMENTS) {
      await write(output, Buffer.from([STATUS_MALFORMED]));
      continue;
    }
    const imageBuf = await reader.take(4 * count);
    const mapBuf = imageBuf === null ? null : await reader.take(4 * count);
    if (imageBuf === null || mapBuf === null) {
      await write(output, Buffer.from([STATUS_MALFORMED]));
      return 0;
    }

    const map = toFloats(mapBuf);
    if (allZero(map)) {
      // contract enforced here, independent of the backend: a zero
      // noise map is the identity, echoed from the original bytes
      await write(output, Buffer.concat([Buffer.from([STATUS_OK]), imageBuf]));
      continue;
    }

    const image = toFloats(imageBuf);
    let result: Float32Array;
    try {
      result = await backend(image, map, dims);
      if (!(result instanceof Float32Array) || result.length !== count) {
        throw new Error("backend returned a wrong-sized result");
      }
    } catch {
      await write(output, Buffer.from([STATUS_BACKEND_ERROR]));
      continue;
    }
    const payload = result === image ? imageBuf : fromFloats(result);
    await write(output, Buffer.concat([Buffer.from([STATUS_OK]), payload]));
  }
}
