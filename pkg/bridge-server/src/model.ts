/**
 * Prediction backends.  Both answer in the v parameterization:
 *
 *   v = sqrt(alphaBar_t) * eps - sqrt(1 - alphaBar_t) * x0
 *
 * "zero" predicts v = 0 (handy for loopback-style pings and tests).
 * "smooth" implies a clean estimate by dividing the noise scale out of a
 * Gaussian-blurred x_t, a self-consistency prior: it has no opinion of its
 * own beyond "depth varies smoothly", which is exactly the kind of weak
 * model the steering client is designed to pull toward its observations.
 */

import { Schedule } from './schedule.js';
import { Tensor, tensorSize } from './tensor.js';

export interface Backend {
  name: string;
  predict(xT: Tensor, t: number, rgb: Tensor, sched: Schedule): Tensor;
}

export function zeroBackend(): Backend {
  return {
    name: 'zero',
    predict(xT) {
      return { dims: [...xT.dims], data: new Float32Array(tensorSize(xT.dims)) };
    },
  };
}

function gaussianKernel(sigma: number): Float64Array {
  const radius = Math.max(1, Math.ceil(3 * sigma));
  const k = new Float64Array(2 * radius + 1);
  let sum = 0;
  for (let i = -radius; i <= radius; i++) {
    const w = Math.exp(-(i * i) / (2 * sigma * sigma));
    k[i + radius] = w;
    sum += w;
  }
  for (let i = 0; i < k.length; i++) k[i] /= sum;
  return k;
}

/** Separable blur over the trailing two dims, reflecting at the borders. */
export function blurChannels(data: Float32Array, dims: number[], sigma: number): Float32Array {
  const [h, w] = dims.slice(-2);
  const channels = tensorSize(dims.slice(0, -2));
  const k = gaussianKernel(sigma);
  const radius = (k.length - 1) / 2;
  const reflect = (i: number, n: number) => {
    // reflect-101 style: ...2 1 0 1 2... keeps a flat field exactly flat
    while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
    return i;
  };
  const out = new Float32Array(data.length);
  const tmp = new Float64Array(h * w);
  for (let c = 0; c < channels; c++) {
    const base = c * h * w;
    for (let r = 0; r < h; r++) {
      for (let col = 0; col < w; col++) {
        let acc = 0;
        for (let j = -radius; j <= radius; j++) {
          acc += k[j + radius] * data[base + r * w + reflect(col + j, w)];
        }
        tmp[r * w + col] = acc;
      }
    }
    for (let col = 0; col < w; col++) {
      for (let r = 0; r < h; r++) {
        let acc = 0;
        for (let j = -radius; j <= radius; j++) {
          acc += k[j + radius] * tmp[reflect(r + j, h) * w + col];
        }
        out[base + r * w + col] = acc;
      }
    }
  }
  return out;
}

export function smoothBackend(sigma = 4.0): Backend {
  if (!(sigma > 0)) throw new RangeError(`sigma must be positive, got ${sigma}`);
  return {
    name: 'smooth',
    predict(xT, t, _rgb, sched) {
      const abar = sched.alphaBar[t];
      const a = Math.sqrt(abar);
      const b = Math.sqrt(1 - abar);
      const smoothed = blurChannels(xT.data, xT.dims, sigma);
      const v = new Float32Array(xT.data.length);
      if (b === 0) {
        // t = 0: x_t is already clean, so eps = 0 and v = -0 * x0 = 0
        return { dims: [...xT.dims], data: v };
      }
      for (let i = 0; i < v.length; i++) {
        const x0 = smoothed[i] / a;
        const eps = (xT.data[i] - a * x0) / b;
        v[i] = a * eps - b * x0;
      }
      return { dims: [...xT.dims], data: v };
    },
  };
}
