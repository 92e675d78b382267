import { describe, expect, it } from 'vitest';

import { blurChannels, smoothBackend, zeroBackend } from '../src/model.js';
import { linearSchedule } from '../src/schedule.js';

describe('linearSchedule', () => {
  it('matches the closed form', () => {
    const s = linearSchedule(10, 1e-4, 0.02);
    expect(s.beta[0]).toBeCloseTo(1e-4, 12);
    expect(s.beta[9]).toBeCloseTo(0.02, 12);
    expect(s.alphaBar[0]).toBe(1);
    let prod = 1;
    for (let t = 1; t <= 10; t++) {
      prod *= 1 - s.beta[t - 1];
      expect(s.alphaBar[t]).toBeCloseTo(prod, 15);
    }
  });

  it('rejects bad parameters', () => {
    expect(() => linearSchedule(0)).toThrow(RangeError);
    expect(() => linearSchedule(10, 0.5, 0.1)).toThrow(RangeError);
    expect(() => linearSchedule(10, 0, 0.1)).toThrow(RangeError);
  });
});

describe('blurChannels', () => {
  it('keeps a constant field exactly constant', () => {
    const data = new Float32Array(2 * 8 * 8).fill(3.25);
    const out = blurChannels(data, [2, 8, 8], 2.0);
    for (const v of out) expect(v).toBe(3.25);
  });

  it('conserves the mean on periodic-free content', () => {
    const h = 16, w = 16;
    const data = new Float32Array(h * w);
    for (let i = 0; i < data.length; i++) data[i] = Math.sin(i * 0.7);
    const before = data.reduce((a, b) => a + b, 0);
    const out = blurChannels(data, [1, h, w], 1.5);
    const after = out.reduce((a, b) => a + b, 0);
    // reflection padding conserves mass only approximately, but closely
    expect(Math.abs(after - before)).toBeLessThan(1e-2 * h * w);
  });

  it('attenuates high-frequency detail', () => {
    const h = 32, w = 32;
    const data = new Float32Array(h * w);
    for (let r = 0; r < h; r++)
      for (let c = 0; c < w; c++) data[r * w + c] = (r + c) % 2 ? 1 : -1;
    const out = blurChannels(data, [1, h, w], 2.0);
    const energy = out.reduce((a, b) => a + b * b, 0) / (h * w);
    expect(energy).toBeLessThan(1e-4);
  });
});

describe('backends', () => {
  const sched = linearSchedule(20);

  it('zero backend answers zeros of the input shape', () => {
    const out = zeroBackend().predict(
      { dims: [3, 4, 5], data: new Float32Array(60).fill(9) },
      7,
      { dims: [3, 4, 5], data: new Float32Array(60) },
      sched,
    );
    expect(out.dims).toEqual([3, 4, 5]);
    expect(out.data.every((v) => v === 0)).toBe(true);
  });

  it('smooth backend implies the blurred clean estimate', () => {
    // reconstruct x0 from v the way the client does:
    //   x0 = sqrt(abar) x_t - sqrt(1 - abar) v
    const t = 12;
    const abar = sched.alphaBar[t];
    const a = Math.sqrt(abar);
    const b = Math.sqrt(1 - abar);
    const dims = [1, 12, 12];
    const data = new Float32Array(144);
    const rng = (s: number) => () => (s = (s * 16807) % 2147483647) / 2147483647;
    const next = rng(42);
    for (let i = 0; i < data.length; i++) data[i] = next() * 2 - 1;
    const sigma = 2.5;
    const v = smoothBackend(sigma).predict({ dims, data }, t, { dims, data: new Float32Array(144) }, sched);
    const expected = blurChannels(data, dims, sigma);
    for (let i = 0; i < data.length; i++) {
      const x0 = a * data[i] - b * v.data[i];
      expect(x0).toBeCloseTo(expected[i] / a, 4);
    }
  });

  it('smooth backend rejects nonpositive sigma', () => {
    expect(() => smoothBackend(0)).toThrow(RangeError);
    expect(() => smoothBackend(-1)).toThrow(RangeError);
  });
});
