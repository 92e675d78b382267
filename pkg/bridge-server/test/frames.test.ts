import { describe, expect, it } from 'vitest';

import {
  FrameReader,
  FramingError,
  HEADER_SIZE,
  MSG_PREDICT,
  packFrame,
  parseHeader,
  VERSION,
} from '../src/frames.js';

describe('frame header', () => {
  it('round-trips type and payload length', () => {
    const frame = packFrame(MSG_PREDICT, Buffer.from('abc'));
    expect(frame.length).toBe(HEADER_SIZE + 3);
    const head = parseHeader(frame.subarray(0, HEADER_SIZE));
    expect(head).toEqual({ msgType: MSG_PREDICT, length: 3 });
  });

  it('is byte-for-byte little endian', () => {
    const frame = packFrame(6, Buffer.alloc(0x01020304 % 256));
    expect(frame.subarray(0, 4).toString('ascii')).toBe('SMBR');
    expect(frame.readUInt16LE(4)).toBe(VERSION);
    expect(frame.readUInt16LE(6)).toBe(6);
    expect(Number(frame.readBigUInt64LE(8))).toBe(0x01020304 % 256);
  });

  it('rejects bad magic', () => {
    const frame = packFrame(1);
    frame.write('XXXX', 0, 'ascii');
    expect(() => parseHeader(frame)).toThrow(FramingError);
  });

  it('rejects unknown versions', () => {
    const frame = packFrame(1);
    frame.writeUInt16LE(99, 4);
    expect(() => parseHeader(frame)).toThrow(/version 99/);
  });

  it('rejects absurd payload lengths', () => {
    const frame = packFrame(1);
    frame.writeBigUInt64LE(1n << 40n, 8);
    expect(() => parseHeader(frame)).toThrow(/implausible/);
  });
});

describe('FrameReader', () => {
  it('reassembles frames split at arbitrary byte boundaries', () => {
    const wire = Buffer.concat([
      packFrame(1, Buffer.from([1, 2, 3])),
      packFrame(2),
      packFrame(3, Buffer.alloc(100, 7)),
    ]);
    // every cut point must yield the same three frames
    for (let cut = 1; cut < wire.length; cut++) {
      const reader = new FrameReader();
      const frames = [
        ...reader.push(wire.subarray(0, cut)),
        ...reader.push(wire.subarray(cut)),
      ];
      expect(frames.map((f) => f.msgType)).toEqual([1, 2, 3]);
      expect(frames[0].payload).toEqual(Buffer.from([1, 2, 3]));
      expect(frames[2].payload.length).toBe(100);
      expect(reader.pending).toBe(0);
    }
  });

  it('handles one-byte drip feed', () => {
    const wire = packFrame(5, Buffer.from('xyz'));
    const reader = new FrameReader();
    const got: number[] = [];
    for (const byte of wire) {
      for (const f of reader.push(Buffer.from([byte]))) got.push(f.msgType);
    }
    expect(got).toEqual([5]);
  });

  it('poisons itself after a corrupt header', () => {
    const reader = new FrameReader();
    expect(() => reader.push(Buffer.alloc(HEADER_SIZE, 0xff))).toThrow(FramingError);
    expect(() => reader.push(packFrame(1))).toThrow(/poisoned/);
  });

  it('keeps incomplete frames pending', () => {
    const wire = packFrame(4, Buffer.alloc(64));
    const reader = new FrameReader();
    expect(reader.push(wire.subarray(0, HEADER_SIZE + 10))).toEqual([]);
    expect(reader.pending).toBe(HEADER_SIZE + 10);
    expect(reader.push(wire.subarray(HEADER_SIZE + 10)).length).toBe(1);
  });
});
