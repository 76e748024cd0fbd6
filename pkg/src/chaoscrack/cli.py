"""Command-line front end: ``chaoscrack <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, attack, randomness
from .chaos import InvalidKeyError, SecretKey, divergence_demo
from .cipher import decrypt, derive_keystreams, encrypt
from .pgm import PgmError, read_pnm, write_pnm


class CommandError(Exception):
    """Raised with the name of the stage that failed."""

    def __init__(self, stage: str, message: str) -> None:
        super().__init__(message)
        self.stage = stage


def _key(values: list[str] | None, flag: str = "--key") -> SecretKey:
    if values is None:
        raise CommandError("arguments", f"{flag} X0 Y0 is required")
    try:
        return SecretKey.parse(*values)
    except InvalidKeyError as exc:
        raise CommandError("key", str(exc)) from exc


def _read(path: str, rgb: bool = False) -> tuple[np.ndarray, int]:
    try:
        img, channels = read_pnm(path)
    except OSError as exc:
        raise CommandError("read", f"{path}: {exc.strerror}") from exc
    except PgmError as exc:
        raise CommandError("read", f"{path}: {exc}") from exc
    if channels == 3 and not rgb:
        raise CommandError("read", f"{path} is an RGB file; pass --rgb to treat it as a 3M x N byte grid")
    return img, channels


def _write(path: str, data: bytes | None = None, img=None, channels: int = 1) -> None:
    try:
        if img is not None:
            write_pnm(img, path, channels)
        else:
            Path(path).write_bytes(data)
    except OSError as exc:
        raise CommandError("write", f"{path}: {exc.strerror}") from exc


def _emit(text: str, path: str | None) -> None:
    if path:
        _write(path, (text + "\n").encode())
    else:
        print(text)


def cmd_crypt(args: argparse.Namespace) -> None:
    key = _key(args.key)
    img, channels = _read(args.input, args.rgb)
    ks = derive_keystreams(key, *img.shape)
    out = encrypt(img, ks) if args.command == "encrypt" else decrypt(img, ks)
    _write(args.output, img=out, channels=channels)


def cmd_keystream(args: argparse.Namespace) -> None:
    key = _key(args.key)
    _write(args.output, derive_keystreams(key, args.width, args.height).to_bytes())


def cmd_attack(args: argparse.Namespace) -> None:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.input:
        i1, _ = _read(args.input)
    else:
        i1 = attack.synthetic_image(args.width, args.height, args.seed)
    M, N = i1.shape
    if args.key:
        hidden = _key(args.key)
    else:
        hidden = analysis.random_nonweak_keys(1, args.seed, M, N)[0]
    oracle = attack.EncryptionOracle(hidden, M, N)
    del hidden

    transcript: list = []
    try:
        rec = attack.attack_end_to_end(oracle, i1, transcript)
    except attack.AttackModelError as exc:
        raise CommandError("attack", str(exc)) from exc
    for n, (plain, cipher) in enumerate(transcript, start=1):
        _write(str(outdir / f"I{n}.pgm"), img=plain)
        _write(str(outdir / f"C{n}.pgm"), img=cipher)
    _write(str(outdir / "recovered.ccks"), rec.to_bytes())

    if args.cipher4:
        c4, _ = _read(args.cipher4)
        p4 = None
    else:
        p4 = _read(args.plain4)[0] if args.plain4 else attack.synthetic_image(M, N, args.seed + 1)
        c4 = oracle(p4)
        _write(str(outdir / "I4.pgm"), img=p4)
    if c4.shape != (M, N):
        raise CommandError("decrypt", f"fourth cipher-image is {c4.shape}, expected {(M, N)}")
    _write(str(outdir / "C4.pgm"), img=c4)
    d4 = decrypt(c4, rec)
    _write(str(outdir / "D4.pgm"), img=d4)
    summary = {"width": M, "height": N, "attack_queries": rec.queries, "outdir": str(outdir)}
    if p4 is not None:
        summary["fourth_image_recovered"] = bool(np.array_equal(d4, p4))
    print(json.dumps(summary, sort_keys=True))


def cmd_weakscan(args: argparse.Namespace) -> None:
    if args.grid:
        axis = np.linspace(-1.0, 1.0, args.grid)
        keys = [SecretKey(float(x), float(y)) for x in axis for y in axis]
    else:
        keys = [_key(args.key)]
    lines = []
    for key in keys:
        rep = analysis.detect_weak_key(key, args.width, args.height)
        if args.grid and not rep.is_weak:
            continue
        lines.append(analysis.format_record(rep.as_record()))
    _emit("\n".join(lines), args.report)


def cmd_equiv(args: argparse.Namespace) -> None:
    ka, kb = _key(args.key), _key(args.key_b, "--key-b")
    res = analysis.check_equivalent_keys(ka, kb, args.width, args.height)
    diff = "-" if res.first_diff is None else f"{res.first_diff[0]}[{res.first_diff[1]}]"
    rec = {"key": f"{ka} {kb}", "equivalent": res.equivalent, "first_diff_index": diff}
    _emit(analysis.format_record(rec), args.report)


def cmd_sensitivity(args: argparse.Namespace) -> None:
    key = _key(args.key)
    img, _ = _read(args.input)
    try:
        rep = analysis.measure_sensitivity(key, img, tuple(args.bit))
    except ValueError as exc:
        raise CommandError("sensitivity", str(exc)) from exc
    rec = {
        "key": str(key),
        "flipped": "%d,%d,%d" % rep.flipped,
        "differing": ";".join("%d,%d,%d" % d for d in rep.differing),
        "hamming": rep.hamming,
    }
    _emit(analysis.format_record(rec), args.report)


def _bit_sources(args: argparse.Namespace) -> list[np.ndarray]:
    if args.bits_file:
        try:
            data = Path(args.bits_file).read_bytes()
        except OSError as exc:
            raise CommandError("read", f"{args.bits_file}: {exc.strerror}") from exc
        return [randomness.bytes_to_bits(data, args.bitorder)]
    if args.key:
        keys = [_key(args.key)]
    elif getattr(args, "random_keys", None):
        keys = analysis.random_nonweak_keys(args.random_keys, args.seed, args.width, args.height)
    else:
        raise CommandError("arguments", "give --key, --random-keys or --bits-file")
    return [randomness.keystream_bits(k, args.width, args.height, args.bitorder) for k in keys]


def cmd_fips(args: argparse.Namespace) -> None:
    (bits,) = _bit_sources(args)
    try:
        report = randomness.fips_battery(bits)
    except randomness.LengthError as exc:
        raise CommandError("fips", str(exc)) from exc
    _emit(report.format(), args.report)


def cmd_nist(args: argparse.Namespace) -> None:
    report = randomness.nist_battery(_bit_sources(args))
    _emit(report.format(), args.report)


def cmd_diverge(args: argparse.Namespace) -> None:
    key = _key(args.key)
    res = divergence_demo(key, args.n)
    lines = [f"key={key} n={args.n} first_diff_index={'-' if res.first_diff is None else res.first_diff}"]
    for k in range(min(args.show, args.n)):
        lines.append(f"{k} compound={res.compound[k]!r} piecewise={res.piecewise[k]!r}")
    _emit("\n".join(lines), args.report)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chaoscrack", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def key_arg(sp: argparse.ArgumentParser, required: bool = True, flag: str = "--key") -> None:
        sp.add_argument(flag, nargs=2, metavar=("X0", "Y0"), required=required,
                        help="secret key as two decimals in [-1, 1], at most 14 fractional digits")

    def size_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--width", type=int, default=256, help="M (default 256)")
        sp.add_argument("--height", type=int, default=256, help="N (default 256)")

    for name in ("encrypt", "decrypt"):
        sp = sub.add_parser(name, help=f"{name} a PGM image")
        key_arg(sp)
        sp.add_argument("-i", "--input", required=True)
        sp.add_argument("-o", "--output", required=True)
        sp.add_argument("--rgb", action="store_true", help="accept a P6 file as a 3M x N byte grid")
        sp.set_defaults(func=cmd_crypt)

    sp = sub.add_parser("keystream", help="dump S1, S2, S3 in CCKS format")
    key_arg(sp)
    size_args(sp)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_keystream)

    sp = sub.add_parser("attack", help="three-chosen-plaintext attack demo against a hidden key")
    key_arg(sp, required=False)
    sp.add_argument("-i", "--input", help="first chosen plain-image (default: synthetic picture)")
    size_args(sp)
    sp.add_argument("--plain4", help="fourth plain-image to encrypt and recover")
    sp.add_argument("--cipher4", help="fourth cipher-image to decrypt with the recovered keystreams")
    sp.add_argument("--seed", type=int, default=0, help="seed for the hidden key and synthetic images")
    sp.add_argument("--outdir", required=True)
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("weakscan", help="classify one key or sweep a grid for weak keys")
    key_arg(sp, required=False)
    sp.add_argument("--grid", type=int, help="sweep a GRID x GRID lattice over [-1, 1]^2")
    size_args(sp)
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_weakscan)

    sp = sub.add_parser("equiv", help="check whether two keys give identical keystreams")
    key_arg(sp)
    key_arg(sp, flag="--key-b")
    size_args(sp)
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_equiv)

    sp = sub.add_parser("sensitivity", help="flip one plaintext bit and diff the ciphertexts")
    key_arg(sp)
    sp.add_argument("-i", "--input", required=True)
    sp.add_argument("--bit", nargs=3, type=int, metavar=("I", "J", "B"), required=True)
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_sensitivity)

    for name, func, help_ in (
        ("fips", cmd_fips, "FIPS 140-2 monobit/runs/long-run/poker on one sequence"),
        ("nist", cmd_nist, "nine-test SP 800-22 battery"),
    ):
        sp = sub.add_parser(name, help=help_)
        key_arg(sp, required=False)
        size_args(sp)
        sp.add_argument("--bits-file", help="raw byte file to test instead of a keystream")
        sp.add_argument("--bitorder", choices=("little", "big"), default="little")
        sp.add_argument("--report")
        if name == "nist":
            sp.add_argument("--random-keys", type=int, help="test COUNT random non-weak keys")
            sp.add_argument("--seed", type=int, default=0)
        sp.set_defaults(func=func)

    sp = sub.add_parser("diverge", help="compound stream vs. iterated piecewise map")
    key_arg(sp)
    sp.add_argument("-n", type=int, default=1000)
    sp.add_argument("--show", type=int, default=10, help="samples to print")
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_diverge)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CommandError as exc:
        print(f"error: {exc.stage}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
