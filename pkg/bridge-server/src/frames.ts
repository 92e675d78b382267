/**
 * Binary framing: 16-byte little-endian header, then the payload.
 *
 *   bytes 0..3   magic "SMBR"
 *   bytes 4..5   u16 protocol version (1)
 *   bytes 6..7   u16 message type
 *   bytes 8..15  u64 payload length
 */

export const MAGIC = Buffer.from('SMBR', 'ascii');
export const VERSION = 1;
export const HEADER_SIZE = 16;

export const MSG_INIT = 1;
export const MSG_INIT_ACK = 2;
export const MSG_ENCODE = 3;
export const MSG_DECODE = 4;
export const MSG_PREDICT = 5;
export const MSG_RESPONSE = 6;
export const MSG_ERROR = 7;
export const MSG_SHUTDOWN = 8;

// refuse absurd allocations from corrupt headers
export const MAX_PAYLOAD = 2 ** 32;

export class FramingError extends Error {}

export interface Frame {
  msgType: number;
  payload: Buffer;
}

export function packFrame(msgType: number, payload: Buffer = Buffer.alloc(0)): Buffer {
  const header = Buffer.alloc(HEADER_SIZE);
  MAGIC.copy(header, 0);
  header.writeUInt16LE(VERSION, 4);
  header.writeUInt16LE(msgType, 6);
  header.writeBigUInt64LE(BigInt(payload.length), 8);
  return Buffer.concat([header, payload]);
}

export function parseHeader(header: Buffer): { msgType: number; length: number } {
  if (header.length < HEADER_SIZE) throw new FramingError('short header');
  if (!header.subarray(0, 4).equals(MAGIC)) {
    throw new FramingError(`bad magic ${JSON.stringify(header.subarray(0, 4).toString('latin1'))}`);
  }
  const version = header.readUInt16LE(4);
  if (version !== VERSION) throw new FramingError(`unsupported protocol version ${version}`);
  const length = header.readBigUInt64LE(8);
  if (length > BigInt(MAX_PAYLOAD)) throw new FramingError(`implausible payload length ${length}`);
  return { msgType: header.readUInt16LE(6), length: Number(length) };
}

/**
 * Incremental frame parser.  Feed it arbitrary byte chunks; it emits
 * complete frames in order.  A malformed header throws and poisons the
 * reader, since byte sync is lost for good at that point.
 */
export class FrameReader {
  private chunks: Buffer[] = [];
  private buffered = 0;
  private poisoned = false;

  push(chunk: Buffer): Frame[] {
    if (this.poisoned) throw new FramingError('reader poisoned by earlier framing error');
    this.chunks.push(chunk);
    this.buffered += chunk.length;
    const frames: Frame[] = [];
    for (;;) {
      if (this.buffered < HEADER_SIZE) break;
      const head = this.peek(HEADER_SIZE);
      let parsed;
      try {
        parsed = parseHeader(head);
      } catch (err) {
        this.poisoned = true;
        throw err;
      }
      if (this.buffered < HEADER_SIZE + parsed.length) break;
      this.consume(HEADER_SIZE);
      frames.push({ msgType: parsed.msgType, payload: this.take(parsed.length) });
    }
    return frames;
  }

  get pending(): number {
    return this.buffered;
  }

  private peek(n: number): Buffer {
    if (this.chunks.length > 1) {
      this.chunks = [Buffer.concat(this.chunks)];
    }
    return this.chunks[0].subarray(0, n);
  }

  private consume(n: number): void {
    this.take(n);
  }

  private take(n: number): Buffer {
    if (this.chunks.length > 1) {
      this.chunks = [Buffer.concat(this.chunks)];
    }
    const whole = this.chunks[0] ?? Buffer.alloc(0);
    const out = whole.subarray(0, n);
    this.chunks = [whole.subarray(n)];
    this.buffered -= n;
    return out;
  }
}
