/** CLI entry point: serve the protocol on TCP or stdin/stdout. */

import { parseArgs } from 'node:util';

import { smoothBackend, zeroBackend } from './model.js';
import { linearSchedule } from './schedule.js';
import { serveStream, serveTcp } from './server.js';

function usage(): never {
  process.stderr.write(
    'usage: node main.js [--stdio | --port N] [--host H] [--steps N]\n' +
    '                    [--beta-start X] [--beta-end X]\n' +
    '                    [--backend smooth|zero] [--sigma X]\n',
  );
  process.exit(2);
}

export async function main(argv: string[]): Promise<void> {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        stdio: { type: 'boolean', default: false },
        port: { type: 'string' },
        host: { type: 'string', default: '127.0.0.1' },
        steps: { type: 'string', default: '50' },
        'beta-start': { type: 'string', default: '1e-4' },
        'beta-end': { type: 'string', default: '0.02' },
        backend: { type: 'string', default: 'smooth' },
        sigma: { type: 'string', default: '4.0' },
      },
    }).values;
  } catch {
    usage();
  }

  const sched = linearSchedule(
    Number(args.steps),
    Number(args['beta-start']),
    Number(args['beta-end']),
  );
  const backend =
    args.backend === 'zero'
      ? zeroBackend()
      : args.backend === 'smooth'
        ? smoothBackend(Number(args.sigma))
        : usage();
  // stdout carries protocol bytes in stdio mode, so logs go to stderr
  const log = (line: string) => process.stderr.write(`[bridge-server] ${line}\n`);

  if (args.stdio) {
    await serveStream(process.stdin, process.stdout, { sched, backend, log });
    return;
  }
  const port = args.port !== undefined ? Number(args.port) : 7447;
  if (!Number.isInteger(port) || port < 0 || port > 65535) usage();
  const server = await serveTcp(port, args.host, { sched, backend, log });
  const addr = server.address();
  if (addr && typeof addr === 'object') {
    log(`listening on ${addr.address}:${addr.port} (T=${sched.T}, ${backend.name})`);
  }
  await new Promise<void>((resolve) => {
    process.once('SIGINT', resolve);
    process.once('SIGTERM', resolve);
  });
  server.close();
}

const isEntry = process.argv[1] && import.meta.url.endsWith(process.argv[1].split('/').pop()!);
if (isEntry) {
  main(process.argv.slice(2)).catch((err) => {
    process.stderr.write(`bridge-server fatal: ${err?.message ?? err}\n`);
    process.exit(1);
  });
}
