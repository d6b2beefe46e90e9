// Framed control protocol codec, mirroring the device server bit for bit.
//
// Layout: 2-byte magic "MV", type byte, u32 LE payload length, payload,
// u32 LE CRC-32 (IEEE, reflected, init/final 0xFFFFFFFF) over
// type + length + payload. The same bytes travel over raw sockets and
// websocket binary messages.

export const MAGIC0 = 0x4d; // 'M'
export const MAGIC1 = 0x56; // 'V'
export const MAX_PAYLOAD = 16 * 1024 * 1024;

const HEADER_SIZE = 7;
const CRC_SIZE = 4;

// Requests.
export const SCRIPT_UPLOAD = 0x01;
export const SCRIPT_EXEC = 0x02;
export const SCRIPT_STOP = 0x03;
export const FB_REQUEST = 0x04;
export const ATTR_GET = 0x05;
export const ATTR_SET = 0x06;

// Responses and events.
export const ACK = 0x80;
export const FB_FRAME = 0x84;
export const PRINT = 0x85;
export const SCRIPT_DONE = 0x86;
export const ERROR = 0xff;

// ERROR payload codes.
export const E_BAD_REQUEST = 0x01;
export const E_SCRIPT_RUNNING = 0x02;
export const E_NO_FRAME = 0x03;
export const E_ATTR_UNKNOWN = 0x04;
export const E_SCRIPT_ERROR = 0x05;

// SCRIPT_DONE status byte.
export const DONE_OK = 0;
export const DONE_ERROR = 1;
export const DONE_STOPPED = 2;
export const DONE_STEPLIMIT = 3;

export const DONE_LABELS: Record<number, string> = {
  [DONE_OK]: "ok",
  [DONE_ERROR]: "error",
  [DONE_STOPPED]: "stopped",
  [DONE_STEPLIMIT]: "steplimit",
};

// FB_FRAME format byte.
export const FORMAT_NAMES: Record<number, string> = {
  1: "GRAYSCALE8",
  2: "RGB565",
};

export interface WireFrame {
  type: number;
  payload: Uint8Array;
}

export class NeedMoreDataError extends Error {}

export class CrcMismatchError extends Error {
  // How far to skip before rescanning for the next magic.
  consumed = 2;
}

export class OversizeError extends Error {}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? (c >>> 1) ^ 0xedb88320 : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

export function crc32(data: Uint8Array): number {
  let c = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    c = CRC_TABLE[(c ^ data[i]) & 0xff] ^ (c >>> 8);
  }
  return (c ^ 0xffffffff) >>> 0;
}

export function encodeFrame(ftype: number, payload: Uint8Array = new Uint8Array(0)): Uint8Array {
  if (payload.length > MAX_PAYLOAD) {
    throw new OversizeError(`payload of ${payload.length} bytes over the 16 MiB bound`);
  }
  const out = new Uint8Array(HEADER_SIZE + payload.length + CRC_SIZE);
  const view = new DataView(out.buffer);
  out[0] = MAGIC0;
  out[1] = MAGIC1;
  out[2] = ftype & 0xff;
  view.setUint32(3, payload.length, true);
  out.set(payload, HEADER_SIZE);
  view.setUint32(HEADER_SIZE + payload.length,
                 crc32(out.subarray(2, HEADER_SIZE + payload.length)), true);
  return out;
}

/** Decode one frame from the head of data.
 *
 * Throws NeedMoreDataError when data holds no complete frame yet,
 * CrcMismatchError when the checksum fails (its consumed field says how
 * far to skip before rescanning), OversizeError for an absurd length. */
export function decodeFrame(data: Uint8Array): { frame: WireFrame; consumed: number } {
  if (data.length < HEADER_SIZE) {
    throw new NeedMoreDataError(`need ${HEADER_SIZE} header bytes`);
  }
  if (data[0] !== MAGIC0 || data[1] !== MAGIC1) {
    throw new CrcMismatchError("bad magic");
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const ftype = data[2];
  const length = view.getUint32(3, true);
  if (length > MAX_PAYLOAD) {
    throw new OversizeError(`length field ${length} over the 16 MiB bound`);
  }
  const total = HEADER_SIZE + length + CRC_SIZE;
  if (data.length < total) {
    throw new NeedMoreDataError(`need ${total} bytes`);
  }
  const stored = view.getUint32(HEADER_SIZE + length, true);
  if (crc32(data.subarray(2, HEADER_SIZE + length)) !== stored) {
    throw new CrcMismatchError(`checksum failed on type 0x${ftype.toString(16)}`);
  }
  return {
    frame: { type: ftype, payload: data.slice(HEADER_SIZE, HEADER_SIZE + length) },
    consumed: total,
  };
}

/** Incremental decoder that resynchronizes on corrupted input. */
export class StreamDecoder {
  private buf = new Uint8Array(0);
  crcFailures = 0;

  /** Append bytes; returns every complete frame now available. */
  feed(data: Uint8Array): WireFrame[] {
    const joined = new Uint8Array(this.buf.length + data.length);
    joined.set(this.buf);
    joined.set(data, this.buf.length);
    this.buf = joined;

    const frames: WireFrame[] = [];
    for (;;) {
      const idx = findMagic(this.buf);
      if (idx < 0) {
        // Keep a trailing 'M' that might start the next magic.
        const keep = this.buf.length > 0 && this.buf[this.buf.length - 1] === MAGIC0 ? 1 : 0;
        this.buf = this.buf.slice(this.buf.length - keep);
        return frames;
      }
      if (idx > 0) {
        this.buf = this.buf.slice(idx);
      }
      try {
        const { frame, consumed } = decodeFrame(this.buf);
        frames.push(frame);
        this.buf = this.buf.slice(consumed);
      } catch (err) {
        if (err instanceof NeedMoreDataError) {
          return frames;
        }
        if (err instanceof CrcMismatchError || err instanceof OversizeError) {
          this.crcFailures++;
          this.buf = this.buf.slice(2);
          continue;
        }
        throw err;
      }
    }
  }
}

function findMagic(buf: Uint8Array): number {
  for (let i = 0; i + 1 < buf.length; i++) {
    if (buf[i] === MAGIC0 && buf[i + 1] === MAGIC1) {
      return i;
    }
  }
  return -1;
}

export function toHex(data: Uint8Array): string {
  let out = "";
  for (const b of data) {
    out += b.toString(16).padStart(2, "0");
  }
  return out;
}

export function fromHex(text: string): Uint8Array {
  const out = new Uint8Array(text.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(text.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}
