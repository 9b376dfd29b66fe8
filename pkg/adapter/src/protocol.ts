/**
 * Framed binary denoiser protocol, adapter side.
 *
 * Handshake: the client sends "PNPD" plus a uint32 LE version and the
 * adapter echoes the same eight bytes. Each request is one byte of
 * message type (1 = denoise), three uint32 LE dims (height, width,
 * channels), then two float32 LE blocks of height*width*channels
 * entries: the image and the noise-level map. Each response is one
 * status byte (0 = ok) followed, on ok only, by the float32 result.
 * Everything is little-endian; the session ends at end-of-stream.
 */

export const MAGIC = Buffer.from("PNPD", "ascii");
export const VERSION = 1;

export const FRAME_DENOISE = 1;

export const STATUS_OK = 0;
export const STATUS_BACKEND_ERROR = 1;
export const STATUS_MALFORMED = 2;

// refuse to allocate payloads past this many entries (~1 GiB of floats)
export const MAX_ELEMENTS = 1 << 28;

export interface Dims {
  height: number;
  width: number;
  channels: number;
}

/**
 * Pull exact byte counts out of a stream. Chunks arrive whenever the
 * pipe feels like it; take(n) resolves once n bytes are buffered, or
 * with null at end-of-stream. One read in flight at a time.
 */
export class ByteReader {
  private chunks: Buffer[] = [];
  private buffered = 0;
  private ended = false;
  private waiting: { n: number; resolve: (b: Buffer | null) => void } | null = null;

  constructor(stream: NodeJS.ReadableStream) {
    stream.on("data", (chunk: Buffer | string) => {
      const buf = Buffer.isBuffer(chunk) ? chunk : Buffer.from(chunk);
      this.chunks.push(buf);
      this.buffered += buf.length;
      this.pump();
    });
    stream.on("end", () => {
      this.ended = true;
      this.pump();
    });
    stream.on("error", () => {
      this.ended = true;
      this.pump();
    });
  }

  take(n: number): Promise<Buffer | null> {
    if (this.waiting) {
      throw new Error("ByteReader: concurrent take");
    }
    return new Promise((resolve) => {
      this.waiting = { n, resolve };
      this.pump();
    });
  }

  private pump(): void {
    if (!this.waiting) return;
    const { n, resolve } = this.waiting;
    if (this.buffered >= n) {
      const joined = this.chunks.length === 1 ? this.chunks[0]! : Buffer.concat(this.chunks);
      const rest = joined.subarray(n);
      this.chunks = rest.length > 0 ? [rest] : [];
      this.buffered = rest.length;
      this.waiting = null;
      // copy: the tail view above aliases the same pool allocation
      resolve(Buffer.from(joined.subarray(0, n)));
    } else if (this.ended) {
      this.waiting = null;
      resolve(null);
    }
  }
}

/** Decode a float32 LE payload. */
export function toFloats(buf: Buffer): Float32Array {
  const out = new Float32Array(buf.length / 4);
  for (let i = 0; i < out.length; i++) {
    out[i] = buf.readFloatLE(4 * i);
  }
  return out;
}

/** Encode a float32 LE payload. */
export function fromFloats(values: Float32Array): Buffer {
  const out = Buffer.allocUnsafe(4 * values.length);
  for (let i = 0; i < values.length; i++) {
    out.writeFloatLE(values[i]!, 4 * i);
  }
  return out;
}

export function encodeHandshake(): Buffer {
  const out = Buffer.allocUnsafe(8);
  MAGIC.copy(out, 0);
  out.writeUInt32LE(VERSION, 4);
  return out;
}

export function decodeDims(buf: Buffer): Dims {
  return {
    height: buf.readUInt32LE(0),
    width: buf.readUInt32LE(4),
    channels: buf.readUInt32LE(8),
  };
}

export function encodeRequest(dims: Dims, image: Float32Array, map: Float32Array): Buffer {
  const head = Buffer.allocUnsafe(13);
  head.writeUInt8(FRAME_DENOISE, 0);
  head.writeUInt32LE(dims.height, 1);
  head.writeUInt32LE(dims.width, 5);
  head.writeUInt32LE(dims.channels, 9);
  return Buffer.concat([head, fromFloats(image), fromFloats(map)]);
}
