"""Command-line front end.

Subcommands: params (derive and print a parameter set), offline (generate
tuple files, locally or from a dealer service), run (one PSI role over TCP),
dealer (serve correlated randomness to both parties), bench (timing and
communication report), ot-demo and mismatch-demo (protocol walkthroughs).

Exit codes: 0 success, 2 usage or bad input data, 3 protocol failure,
4 file or network I/O failure.
"""

import argparse
import sys

from .field import FieldError, PrimeModulus
from .hashing import HashingError
from .mismatch import MismatchTriples, mismatch_keyed, mismatch_plain
from .offline import generate_psi_inventories, subseed
from .offline.dealer import (
    dealer_generate,
    decode_to_alice,
    decode_to_bob,
    encode_to_alice,
    encode_to_bob,
    expand_alice,
    expand_bob,
)
from .offline.ot import DealerAssistedOt, OtError
from .online import OnlineError, PsiSession, ot_via_psi, psi_alice, psi_bob
from .params import derive_params, online_bits_per_element
from .prg import Prg, Seed
from .runner import bench_run, small_psi_engine
from .transport import (
    DEALER_A,
    DEALER_B,
    SETUP,
    Frame,
    TcpListener,
    TransportError,
    recv_frame,
    send_frame,
    tcp_connect,
)
from .tuples import (
    SIDE_ALICE,
    SIDE_BOB,
    TupleFileError,
    inventory_token,
    load_inventories,
    random_batch,
    save_inventories,
)


class UsageError(Exception):
    pass


def _hostport(text):
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise UsageError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def _seed_from(args):
    if getattr(args, "seed", None) is None:
        return None
    try:
        return Seed.from_hex(args.seed)
    except ValueError as e:
        raise UsageError(f"--seed: {e}") from None


def _params_from(args):
    return derive_params(
        args.n, args.k, sigma=args.sigma, lam=args.lam, stash_size=args.stash
    )


def read_set_file(path, sigma):
    """Newline-delimited unsigned decimals < 2^sigma; duplicates rejected."""
    values = set()
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            text = line.strip()
            if not text:
                continue
            try:
                v = int(text, 10)
            except ValueError:
                raise UsageError(
                    f"{path}:{lineno}: not an unsigned integer: {text!r}"
                ) from None
            if not 0 <= v < (1 << sigma):
                raise UsageError(
                    f"{path}:{lineno}: element {v} outside [0, 2^{sigma})"
                )
            if v in values:
                raise UsageError(f"{path}:{lineno}: duplicate element {v}")
            values.add(v)
    return values


def write_set(stream, values):
    for v in sorted(values):
        print(v, file=stream)


def cmd_params(args):
    p = _params_from(args)
    bits = online_bits_per_element(p)
    print(f"n: {p.n}")
    print(f"k: {p.k}")
    print(f"alpha: {p.alpha}  (factor {p.alpha_factor})")
    print(f"beta: {p.beta}")
    print(f"stash: {p.stash_size}")
    print(f"sigma: {p.sigma}  (sigma1 {p.sigma1}, sigma2 {p.sigma2})")
    print(f"lambda: {p.lam}")
    print(f"q: {p.modulus.q}  ({p.modulus.bit_len} bits)")
    print(f"dummy-alice: {p.dummy_alice}")
    print(f"dummy-bob: {p.dummy_bob}")
    print(f"bits-per-element: {float(bits):.2f}  (exact {bits})")
    print(f"digest: {p.digest().hex()}")
    return 0


def cmd_offline(args):
    p = _params_from(args)
    if args.connect:
        return _offline_fetch(args, p)
    if not (args.out_alice and args.out_bob):
        raise UsageError("local generation needs --out-alice and --out-bob")
    master = _seed_from(args)
    alice_secs, bob_secs = generate_psi_inventories(
        args.mode, p, master, bin_count=args.count
    )
    token = inventory_token(bob_secs)
    save_inventories(args.out_alice, alice_secs, SIDE_ALICE, token)
    save_inventories(args.out_bob, bob_secs, SIDE_BOB, token)
    total = sum(len(s) * s.slot_len for s in bob_secs)
    print(f"mode: {args.mode}")
    print(f"tuples: {total}")
    print(f"token: {token.hex()}")
    return 0


def _offline_fetch(args, p):
    """Client side of the dealer service: request, expand, save."""
    if not args.role:
        raise UsageError("--connect needs --role")
    out = args.out_alice if args.role == "alice" else args.out_bob
    if not out:
        raise UsageError(f"--connect with --role {args.role} needs --out-{args.role}")
    host, port = _hostport(args.connect)
    chan = tcp_connect(host, port)
    try:
        send_frame(chan, Frame(SETUP, args.role.encode() + p.digest()))
        frame = recv_frame(chan)
        if args.role == "alice":
            if frame.msg_type != DEALER_A:
                raise TransportError(f"wanted DEALER_A, got type {frame.msg_type}")
            seed, r_A_lists, token, modulus = decode_to_alice(frame.payload)
            if modulus.q != p.modulus.q:
                raise OnlineError(
                    f"dealer served field q={modulus.q}, parameters need {p.modulus.q}"
                )
            invs = expand_alice(seed, r_A_lists, p)
            save_inventories(out, invs, SIDE_ALICE, token)
        else:
            if frame.msg_type != DEALER_B:
                raise TransportError(f"wanted DEALER_B, got type {frame.msg_type}")
            seed = decode_to_bob(frame.payload)
            invs = expand_bob(seed, p, bin_count=args.count)
            token = inventory_token(invs)
            save_inventories(out, invs, SIDE_BOB, token)
    finally:
        chan.close()
    print(f"role: {args.role}")
    print(f"token: {token.hex()}")
    return 0


def cmd_dealer(args):
    p = _params_from(args)
    master = _seed_from(args)
    if master is None:
        master = Seed.random()
    count = args.count if args.count is not None else p.alpha
    msgs = dealer_generate(subseed(master, b"RA"), subseed(master, b"RB"), count, p)

    listener = TcpListener(*_hostport(args.listen))
    print(f"dealer listening on port {listener.port}", file=sys.stderr, flush=True)
    served = set()
    try:
        while served != {"alice", "bob"}:
            chan = listener.accept()
            try:
                frame = recv_frame(chan)
                role = frame.payload[:-16].decode("ascii", "replace")
                digest = frame.payload[-16:]
                if frame.msg_type != SETUP or role not in ("alice", "bob"):
                    raise TransportError(f"bad dealer request (role {role!r})")
                if digest != p.digest():
                    raise OnlineError(
                        "client parameter digest does not match the dealer's"
                    )
                if role in served:
                    raise OnlineError(f"second {role} connection refused")
                if role == "alice":
                    payload = encode_to_alice(msgs, p.modulus)
                    send_frame(chan, Frame(DEALER_A, payload))
                else:
                    send_frame(chan, Frame(DEALER_B, encode_to_bob(msgs)))
                served.add(role)
                print(f"served {role}", file=sys.stderr, flush=True)
            finally:
                chan.close()
    finally:
        listener.close()
    print(f"token: {msgs.token.hex()}")
    return 0


def cmd_run(args):
    p = _params_from(args)
    if bool(args.listen) == bool(args.connect):
        raise UsageError("need exactly one of --listen or --connect")
    elements = read_set_file(args.set, p.sigma)
    side = SIDE_ALICE if args.role == "alice" else SIDE_BOB
    sections, token = load_inventories(args.tuples, side)
    session = PsiSession(
        role=args.role, params=p, inventories=sections, token=token
    )

    if args.listen:
        listener = TcpListener(*_hostport(args.listen))
        print(f"listening on port {listener.port}", file=sys.stderr, flush=True)
        chan = listener.accept()
        listener.close()
    else:
        chan = tcp_connect(*_hostport(args.connect))

    try:
        if args.role == "alice":
            result = psi_alice(session, elements, chan)
            if args.out:
                with open(args.out, "w") as f:
                    write_set(f, result)
            else:
                write_set(sys.stdout, result)
        else:
            psi_bob(session, elements, chan)
        if args.stats:
            print(chan.stats.summary(), file=sys.stderr)
    finally:
        chan.close()
    return 0


def cmd_bench(args):
    p = _params_from(args)
    report = bench_run(p, backend=args.offline, master_seed=_seed_from(args))
    print(report.format())
    return 0 if report.correct else 3


def cmd_ot_demo(args):
    engine = small_psi_engine()
    print("b  y0 y1 | receiver C  sender D | output expected")
    ok = True
    for b in (0, 1):
        for y0 in (0, 1):
            for y1 in (0, 1):
                sender = {0 if y0 else 2, 1 if y1 else 3}
                got = ot_via_psi(b, y0, y1, engine)
                want = y1 if b else y0
                ok = ok and got == want
                print(
                    f"{b}  {y0}  {y1}  | {{{b}}}         {sorted(sender)}"
                    f"   | {got}      {want}"
                )
    print(f"all-rows-match: {ok}")
    return 0 if ok else 3


def cmd_mismatch_demo(args):
    q = 251
    ell = 8
    m = PrimeModulus(q)
    prg = Prg(Seed.random(), tag=b"demo")
    print(f"plain variant, q={q}, ell={ell}")
    for x, y in ((0xA5, 0xA5), (0xA5, 0xA4), (0x00, 0xFF)):
        batch = random_batch(m, ell, prg)
        ot = DealerAssistedOt(m)
        got = mismatch_plain(x, y, ell, ot, batch, prg=prg)
        print(f"  x={x:#04x} y={y:#04x} -> mismatch={got} (expected {x != y})")

    h_seed = b"\x5a" * 16
    print(f"keyed variant, q={q}, ell={ell}")
    cases = ((7, 0xA5, 7, 0xA4), (7, 0xA5, 7, 0xA5), (7, 0xA5, 9, 0xA4))
    for k_a, x, k_b, y in cases:
        triples = MismatchTriples.generate(m, ell, prg)
        ot = DealerAssistedOt(m)
        got = mismatch_keyed(k_a, x, k_b, y, triples, ot, h_seed=h_seed, prg=prg)
        want = (k_a == k_b) and (x != y)
        print(f"  k_A={k_a} k_B={k_b} x={x:#04x} y={y:#04x} -> {got} (expected {want})")
    return 0


def _add_param_flags(sp, n_default=None):
    sp.add_argument("--n", type=int, required=n_default is None, default=n_default,
                    help="set size bound (per party)")
    sp.add_argument("--k", type=int, default=3, choices=(2, 3, 4),
                    help="number of bin hash functions")
    sp.add_argument("--sigma", type=int, default=32, help="element bit width")
    sp.add_argument("--lam", type=int, default=40, help="statistical security")
    sp.add_argument("--stash", type=int, default=None, help="stash size override")


def _parser():
    ap = argparse.ArgumentParser(
        prog="olepsi",
        description="Two-party PSI from precomputed OLE tuples.",
    )
    sub = ap.add_subparsers(metavar="COMMAND")

    sp = sub.add_parser("params", help="derive and print a parameter set")
    _add_param_flags(sp)
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("offline", help="generate tuple inventories")
    _add_param_flags(sp)
    sp.add_argument("--mode", default="seed",
                    choices=("seed", "dealer", "ot", "lbe-sim"))
    sp.add_argument("--count", type=int, default=None,
                    help="bin batches to generate (default alpha)")
    sp.add_argument("--out-alice", metavar="FILE")
    sp.add_argument("--out-bob", metavar="FILE")
    sp.add_argument("--seed", metavar="HEX", help="64 hex chars; deterministic run")
    sp.add_argument("--connect", metavar="HOST:PORT",
                    help="fetch from a dealer service instead of generating")
    sp.add_argument("--role", choices=("alice", "bob"),
                    help="which half to fetch when using --connect")
    sp.set_defaults(func=cmd_offline)

    sp = sub.add_parser("dealer", help="serve tuples to both parties over TCP")
    _add_param_flags(sp)
    sp.add_argument("--listen", metavar="HOST:PORT", required=True)
    sp.add_argument("--count", type=int, default=None)
    sp.add_argument("--seed", metavar="HEX")
    sp.set_defaults(func=cmd_dealer)

    sp = sub.add_parser("run", help="run one PSI role over TCP")
    _add_param_flags(sp)
    sp.add_argument("--role", required=True, choices=("alice", "bob"))
    sp.add_argument("--set", required=True, metavar="FILE",
                    help="newline-delimited decimal elements")
    sp.add_argument("--tuples", required=True, metavar="FILE")
    sp.add_argument("--listen", metavar="HOST:PORT")
    sp.add_argument("--connect", metavar="HOST:PORT")
    sp.add_argument("--out", metavar="FILE", help="write the intersection here")
    sp.add_argument("--stats", action="store_true",
                    help="print communication accounting to stderr")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("bench", help="time one full run and report costs")
    _add_param_flags(sp, n_default=1024)
    sp.add_argument("--offline", default="seed",
                    choices=("seed", "dealer", "ot", "lbe-sim"))
    sp.add_argument("--seed", metavar="HEX")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("ot-demo", help="print the OT-from-PSI truth table")
    sp.set_defaults(func=cmd_ot_demo)

    sp = sub.add_parser("mismatch-demo", help="walk through the mismatch protocols")
    sp.set_defaults(func=cmd_mismatch_demo)

    return ap


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, TupleFileError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except (OnlineError, TransportError, HashingError, FieldError, OtError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
