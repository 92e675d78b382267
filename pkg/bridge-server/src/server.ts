/**
 * Protocol state machine plus the two transports (TCP and stdio).
 *
 * One Session per connection.  Rules mirror the reference client exactly:
 * INIT first (answered with the schedule and the latent geometry this
 * server wants), ENCODE/DECODE are identity in pixel space, PREDICT
 * answers a v-parameterized prediction, SHUTDOWN acknowledges and hangs
 * up.  Anything malformed inside a well-framed payload gets an ERROR
 * frame back; a malformed header means byte sync is gone, so the
 * connection is dropped instead.
 */

import * as net from 'node:net';
import { Readable, Writable } from 'node:stream';

import {
  Frame,
  FrameReader,
  FramingError,
  MSG_DECODE,
  MSG_ENCODE,
  MSG_ERROR,
  MSG_INIT,
  MSG_INIT_ACK,
  MSG_PREDICT,
  MSG_RESPONSE,
  MSG_SHUTDOWN,
  packFrame,
} from './frames.js';
import { Backend } from './model.js';
import { Schedule } from './schedule.js';
import { packDims, packTensor, tensorSize, unpackDims, unpackTensor } from './tensor.js';

export interface ServerOptions {
  sched: Schedule;
  backend: Backend;
  log?: (line: string) => void;
}

export class Session {
  private imageDims: number[] | null = null;

  constructor(private readonly opts: ServerOptions) {}

  /** Handle one frame; returns the reply and whether to keep the connection. */
  handle(frame: Frame): { reply: Buffer; alive: boolean } {
    try {
      return this.reply(frame);
    } catch (err) {
      if (err instanceof FramingError || err instanceof RangeError) {
        return { reply: packFrame(MSG_ERROR, Buffer.from(String(err.message))), alive: true };
      }
      throw err;
    }
  }

  private reply(frame: Frame): { reply: Buffer; alive: boolean } {
    const { sched, backend } = this.opts;
    switch (frame.msgType) {
      case MSG_INIT: {
        const { dims } = unpackDims(frame.payload, 0);
        this.imageDims = dims;
        // identity latent space: the latent grid is the image grid
        const betas = Buffer.alloc(8 * sched.T);
        for (let i = 0; i < sched.T; i++) betas.writeDoubleLE(sched.beta[i], 8 * i);
        const head = Buffer.alloc(4);
        head.writeUInt32LE(sched.T, 0);
        const ack = Buffer.concat([head, betas, packDims(dims)]);
        this.opts.log?.(`INIT image dims [${dims}] -> T=${sched.T}, backend=${backend.name}`);
        return { reply: packFrame(MSG_INIT_ACK, ack), alive: true };
      }
      case MSG_SHUTDOWN:
        this.opts.log?.('SHUTDOWN');
        return { reply: packFrame(MSG_RESPONSE), alive: false };
    }
    if (this.imageDims === null) {
      return {
        reply: packFrame(MSG_ERROR, Buffer.from('INIT required before this request')),
        alive: true,
      };
    }
    switch (frame.msgType) {
      case MSG_ENCODE:
      case MSG_DECODE: {
        const { tensor } = unpackTensor(frame.payload);
        return { reply: packFrame(MSG_RESPONSE, packTensor(tensor)), alive: true };
      }
      case MSG_PREDICT: {
        if (frame.payload.length < 4) throw new FramingError('truncated PREDICT payload');
        const t = frame.payload.readUInt32LE(0);
        const { tensor: xT, next } = unpackTensor(frame.payload, 4);
        const { tensor: rgb } = unpackTensor(frame.payload, next);
        if (t > this.opts.sched.T) {
          throw new FramingError(`timestep ${t} outside schedule 0..${this.opts.sched.T}`);
        }
        if (tensorSize(rgb.dims) !== tensorSize(xT.dims)) {
          throw new FramingError(
            `rgb tensor [${rgb.dims}] does not match latent [${xT.dims}]`,
          );
        }
        const out = backend.predict(xT, t, rgb, this.opts.sched);
        return { reply: packFrame(MSG_RESPONSE, packTensor(out)), alive: true };
      }
      default:
        return {
          reply: packFrame(MSG_ERROR, Buffer.from(`unknown msg type ${frame.msgType}`)),
          alive: true,
        };
    }
  }
}

/**
 * Pump a byte stream pair through a Session.  Resolves when the peer
 * shuts down cleanly or the input ends; rejects only on transport errors.
 */
export function serveStream(input: Readable, output: Writable, opts: ServerOptions): Promise<void> {
  return new Promise((resolve, reject) => {
    const session = new Session(opts);
    const reader = new FrameReader();
    let done = false;
    const finish = (err?: Error) => {
      if (done) return;
      done = true;
      input.removeListener('data', onData);
      err ? reject(err) : resolve();
    };
    const onData = (chunk: Buffer) => {
      let frames: Frame[];
      try {
        frames = reader.push(chunk);
      } catch (err) {
        // header desync: drop the connection, the stream is unrecoverable
        opts.log?.(`dropping connection: ${(err as Error).message}`);
        finish();
        return;
      }
      for (const frame of frames) {
        const { reply, alive } = session.handle(frame);
        output.write(reply);
        if (!alive) {
          finish();
          return;
        }
      }
    };
    input.on('data', onData);
    input.once('end', () => finish());
    input.once('error', (err) => finish(err));
    output.once('error', (err) => finish(err));
  });
}

export function serveTcp(
  port: number,
  host: string,
  opts: ServerOptions,
): Promise<net.Server> {
  return new Promise((resolve, reject) => {
    const server = net.createServer((conn) => {
      conn.on('error', () => conn.destroy());
      serveStream(conn, conn, opts)
        .then(() => conn.end())
        .catch(() => conn.destroy());
    });
    server.once('error', reject);
    server.listen(port, host, () => resolve(server));
  });
}
