/**
 * Tensor blocks: u32 ndim, u32 dims[ndim], float32 data in row-major order.
 * Dims blocks (INIT / INIT_ACK) are the same layout without the data.
 */

import { FramingError } from './frames.js';

const MAX_NDIM = 8;

export interface Tensor {
  dims: number[];
  data: Float32Array;
}

export function tensorSize(dims: number[]): number {
  return dims.reduce((a, b) => a * b, 1);
}

export function packDims(dims: number[]): Buffer {
  const out = Buffer.alloc(4 + 4 * dims.length);
  out.writeUInt32LE(dims.length, 0);
  dims.forEach((d, i) => out.writeUInt32LE(d, 4 + 4 * i));
  return out;
}

export function unpackDims(payload: Buffer, offset: number): { dims: number[]; next: number } {
  if (payload.length - offset < 4) throw new FramingError('truncated dims block');
  const ndim = payload.readUInt32LE(offset);
  offset += 4;
  if (ndim > MAX_NDIM || payload.length - offset < 4 * ndim) {
    throw new FramingError('truncated dims block');
  }
  const dims: number[] = [];
  for (let i = 0; i < ndim; i++) dims.push(payload.readUInt32LE(offset + 4 * i));
  return { dims, next: offset + 4 * ndim };
}

export function packTensor(t: Tensor): Buffer {
  const n = tensorSize(t.dims);
  if (t.data.length !== n) {
    throw new FramingError(`tensor data length ${t.data.length} does not match dims [${t.dims}]`);
  }
  const head = packDims(t.dims);
  const out = Buffer.alloc(head.length + 4 * n);
  head.copy(out, 0);
  for (let i = 0; i < n; i++) out.writeFloatLE(t.data[i], head.length + 4 * i);
  return out;
}

export function unpackTensor(payload: Buffer, offset = 0): { tensor: Tensor; next: number } {
  const { dims, next } = unpackDims(payload, offset);
  offset = next;
  const n = tensorSize(dims);
  if (payload.length - offset < 4 * n) throw new FramingError('truncated tensor data');
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) data[i] = payload.readFloatLE(offset + 4 * i);
  return { tensor: { dims, data }, next: offset + 4 * n };
}
