"""
Talking to a model server over the wire protocol
================================================

Spins up the in-process loopback server, performs the handshake (the
server dictates schedule and latent geometry), exchanges a few tensors,
and finally plugs the remote endpoint into `complete` as a denoiser.
"""

import numpy as np

from steerkit import (
    BridgeCodec,
    BridgeDenoiser,
    LatentSample,
    LoopbackBridgeServer,
    SteeringConfig,
    build_schedule,
    complete,
    open_session,
    random_scene,
    sample_sparse,
    synth_scene,
)

sched = build_schedule(8)

with LoopbackBridgeServer(sched) as server:
    print(f"server listening at {server.spec}")
    with open_session(server.spec) as session:
        session.handshake((3, 48, 64))
        print(f"handshake: T={session.schedule.T}, "
              f"latent shape {session.latent_shape}")

        # encode/decode are identity on the loopback server
        img = np.random.default_rng(0).standard_normal((3, 48, 64)).astype(np.float32)
        print(f"encode round trip exact: "
              f"{np.array_equal(session.decode(session.encode(img)), img)}")

        pred = session.predict(LatentSample(img, timestep=4), None)
        print(f"default predict_fn answers zeros: {not pred.values.any()}")

# A server-side predictor that actually denoises: hand the loopback server
# a closure and drive a full completion through the remote endpoint.
_, gt = synth_scene(random_scene(1, height=48, width=64))
target = np.broadcast_to(gt.values, (3, 48, 64)).astype(np.float32)


def remote_predict(x_t, t, rgb):
    # v-parameterized oracle for the fixed target
    a = float(sched.sqrt_alpha_bar[t])
    b = float(sched.sqrt_one_minus_alpha_bar[t])
    eps = (x_t - a * target) / b if t > 0 else np.zeros_like(x_t)
    return a * eps - b * target


with LoopbackBridgeServer(sched, predict_fn=remote_predict) as server:
    session = open_session(server.spec)
    session.handshake((3, 48, 64))
    den = BridgeDenoiser(session)
    codec = BridgeCodec(session)
    c = sample_sparse(gt, 120, np.random.default_rng(2))
    cfg = SteeringConfig(k=0.0, steps=8, seed=3)
    d = complete(None, c, cfg, den, codec, session.schedule, dtype=np.float32)
    err = float(np.abs(d.values - gt.values).max())
    print(f"completion through the bridge: max error {err:.2e} m")
    session.close()
