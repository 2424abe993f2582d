"""Named, seeded session builders shared by the CLI, replay and tests.

A scenario turns a :class:`RunConfig` plus a repetition seed into one
:class:`~mixcoin.harness.Transcript`. The config is written into the
transcript header, so a transcript file alone is enough to re-run it.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, fields
from math import ceil

from .coinflip import BlumCoin, IdealCoin, coin_programs, coin_stack, enforce_against_alice, enforce_against_bob
from .commit_protocol import cheating_committer, commit_committer, commit_receiver
from .field import FieldSpec
from .harness import SessionParams, Session, Transcript, derive_seed
from .ot_sfe import DEVIATIONS, OtInputs, ot_programs, passive_and_via_ot, passive_xor, sfe_programs
from .sss import SssParams
from .zkpk import (
    GiEncoding,
    instance_from_text,
    ZkpkCoins,
    extract_simulator,
    guessing_prover,
    non_isomorphic_instance,
    parallel_repeat,
    sample_gi_instance,
    verifier,
    zk_simulator,
    zkpk_programs,
)

COIN_PROTOCOLS = ("coin-ideal", "coin-blum", "coin-random", "coin-force")
PROTOCOLS = COIN_PROTOCOLS + ("commit", "zkpk", "ot", "sfe-xor", "sfe-and")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    protocol: str = "coin-force"
    ell: int = 16
    sigma: int = 8
    Sigma: int | None = None
    kappa: int = 128
    field_bits: int = 16
    backend: str = "ideal"
    mode: str = "hybrid"
    strategy: str | None = None
    target: int | None = None
    vertices: int = 3
    inputs: tuple | None = None
    instance: str | None = None

    def __post_init__(self):
        if self.inputs is not None:
            object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; choose from {', '.join(PROTOCOLS)}")
        if self.Sigma is not None and self.Sigma != 4 * self.sigma:
            raise ConfigError(f"Sigma must be 4*sigma = {4 * self.sigma}, got {self.Sigma}")
        if self.ell < 1 or self.sigma < 1 or self.vertices < 2:
            raise ConfigError("ell, sigma must be positive and vertices at least 2")
        if self.strategy is not None and self.strategy not in ATTACKS:
            raise ConfigError(f"unknown strategy {self.strategy!r}; choose from {', '.join(ATTACKS)}")
        if self.target is not None and (self.target < 0 or self.target >> self.ell):
            raise ConfigError(f"target does not fit in {self.ell} bits")
        try:
            self.params()
        except ValueError as err:
            raise ConfigError(str(err)) from None

    def params(self) -> SessionParams:
        return SessionParams(sigma=self.sigma, field=FieldSpec.binary(self.field_bits), kappa=self.kappa,
                             backend=self.backend, mode=self.mode)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def zkpk_coins(params: SessionParams) -> ZkpkCoins:
    if not params.composed:
        return ZkpkCoins(IdealCoin(), IdealCoin())
    stack = coin_stack(params)
    return ZkpkCoins(stack["random"], stack["force"])


def sfe_coin(params: SessionParams):
    return IdealCoin() if not params.composed else coin_stack(params)["force"]


def coin_handle(cfg: RunConfig, params: SessionParams):
    if cfg.protocol == "coin-ideal":
        return IdealCoin()
    if cfg.protocol == "coin-blum":
        return BlumCoin("guess")
    return coin_stack(params)["random" if cfg.protocol == "coin-random" else "force"]


def _shared_key(ctx, binding: bool):
    """Both parties derive the same commitment key from the setup seed."""
    rng = random.Random(ctx.aux["setup"])
    if binding:
        return ctx.backend.gen_binding(rng)[0]
    return ctx.backend.gen_hiding(rng)


def _gi_instance(cfg: RunConfig, rng, need_witness: bool = True):
    if cfg.instance is None:
        return sample_gi_instance(cfg.vertices, rng)
    x, w = instance_from_text(cfg.instance)
    if need_witness and w is None:
        raise ConfigError("instance file carries no witness")
    return x, w


def _sfe_inputs(cfg: RunConfig, rng):
    proto = passive_xor(cfg.ell) if cfg.protocol == "sfe-xor" else passive_and_via_ot()
    nbits = cfg.ell if cfg.protocol == "sfe-xor" else 1
    if cfg.inputs is not None:
        if len(cfg.inputs) != 2:
            raise ConfigError("sfe takes two inputs")
        x1, x2 = (int(v) for v in cfg.inputs)
        for v in (x1, x2):
            if v < 0 or v >> nbits:
                raise ConfigError(f"sfe inputs must fit in {nbits} bits")
    else:
        x1, x2 = rng.getrandbits(nbits), rng.getrandbits(nbits)
    return proto, x1, x2


@dataclass
class Built:
    alice: object
    bob: object
    extra: dict
    info: dict


def _build_honest(cfg: RunConfig, params: SessionParams, rng: random.Random) -> Built:
    p = cfg.protocol
    if p in COIN_PROTOCOLS:
        a, b = coin_programs(coin_handle(cfg, params), cfg.ell)
        return Built(a, b, {}, {})
    if p == "commit":
        sp = SssParams(params.sigma, params.field)
        m = tuple(params.field.random(rng) for _ in range(sp.sigma))
        coin = coin_stack(params)["random"]

        def committer(ctx):
            return (yield from commit_committer(ctx, m, _shared_key(ctx, False), sp, coin))

        def receiver(ctx):
            return (yield from commit_receiver(ctx, _shared_key(ctx, False), sp, coin))

        return Built(committer, receiver, {}, {"message": list(m)})
    if p == "zkpk":
        x, w = _gi_instance(cfg, rng)
        enc = parallel_repeat(GiEncoding(x.v), cfg.sigma)
        a, b = zkpk_programs(enc, x, w, zkpk_coins(params))
        return Built(a, b, {}, {})
    if p == "ot":
        if cfg.inputs is not None:
            try:
                m0, m1, c = cfg.inputs
                inputs = OtInputs(bytes.fromhex(m0), bytes.fromhex(m1), int(c))
            except ValueError as err:
                raise ConfigError(f"bad ot inputs: {err}") from None
        else:
            n = ceil(cfg.ell / 8)
            inputs = OtInputs(rng.randbytes(n), rng.randbytes(n), rng.getrandbits(1))
        a, b = ot_programs(inputs)
        return Built(a, b, {}, {"expected": (inputs.m0, inputs.m1)[inputs.c].hex()})
    if p in ("sfe-xor", "sfe-and"):
        proto, x1, x2 = _sfe_inputs(cfg, rng)
        a, b = sfe_programs(proto, x1, x2, sfe_coin(params))
        return Built(a, b, {}, {"expected": proto.f(x1, x2)})
    raise ConfigError(f"no honest scenario for {p!r}")


# -- attacks ----------------------------------------------------------------

def _coin_target(cfg, rng):
    return cfg.target if cfg.target is not None else rng.getrandbits(cfg.ell)


def _attack_enforce_alice(cfg, params, rng):
    if cfg.protocol not in COIN_PROTOCOLS:
        raise ConfigError("enforce-alice needs a coin protocol")
    h = _coin_target(cfg, rng)
    handle = coin_handle(cfg, params)
    alice, _ = coin_programs(handle, cfg.ell)
    return Built(alice, enforce_against_alice(handle, cfg.ell, h), {"privileged": "B", "corrupt": {"A"}},
                 {"target": h, "seat": "A"})


def _attack_enforce_bob(cfg, params, rng):
    if cfg.protocol not in COIN_PROTOCOLS:
        raise ConfigError("enforce-bob needs a coin protocol")
    h = _coin_target(cfg, rng)
    handle = coin_handle(cfg, params)
    _, bob = coin_programs(handle, cfg.ell)
    return Built(enforce_against_bob(handle, cfg.ell, h), bob, {"privileged": "A", "corrupt": {"B"}},
                 {"target": h, "seat": "B"})


def _attack_rewind_blum(cfg, params, rng):
    h = _coin_target(cfg, rng)
    handle = BlumCoin("guess")
    alice, _ = coin_programs(handle, cfg.ell)
    return Built(alice, enforce_against_alice(handle, cfg.ell, h), {"privileged": "B", "corrupt": {"A"}},
                 {"target": h, "seat": "A"})


def _attack_cheat_open(cfg, params, rng):
    sp = SssParams(params.sigma, params.field)
    F = params.field
    m = tuple(F.random(rng) for _ in range(sp.sigma))
    m_prime = tuple(F.random(rng) for _ in range(sp.sigma))
    while m_prime == m:
        m_prime = tuple(F.random(rng) for _ in range(sp.sigma))
    coin = coin_stack(params)["random"]

    def cheater(ctx):
        return (yield from cheating_committer(ctx, m, m_prime, sp.sigma, _shared_key(ctx, True), sp, coin))

    def receiver(ctx):
        return (yield from commit_receiver(ctx, _shared_key(ctx, True), sp, coin))

    return Built(cheater, receiver, {"corrupt": {"A"}}, {"cells_swapped": sp.sigma})


def _attack_guess_prover(cfg, params, rng):
    x = instance_from_text(cfg.instance)[0] if cfg.instance else non_isomorphic_instance(cfg.vertices)
    enc = parallel_repeat(GiEncoding(x.v), cfg.sigma)
    coins = zkpk_coins(params)

    def alice(ctx):
        return (yield from guessing_prover(ctx, enc, x, coins))

    def bob(ctx):
        return (yield from verifier(ctx, enc, x, coins))

    return Built(alice, bob, {"corrupt": {"A"}}, {})


def _attack_zk_simulate(cfg, params, rng):
    x, _ = _gi_instance(cfg, rng, need_witness=False)
    enc = parallel_repeat(GiEncoding(x.v), cfg.sigma)
    coins = zkpk_coins(params)

    def bob(ctx):
        return (yield from verifier(ctx, enc, x, coins))

    return Built(zk_simulator(enc, x, coins), bob, {"privileged": "A", "corrupt": {"B"}}, {})


def _attack_extract(cfg, params, rng):
    x, w = _gi_instance(cfg, rng)
    enc = parallel_repeat(GiEncoding(x.v), cfg.sigma)
    coins = zkpk_coins(params)
    alice, _ = zkpk_programs(enc, x, w, coins)
    return Built(alice, extract_simulator(enc, x, coins), {"privileged": "B", "corrupt": {"A"}}, {})


def _sfe_deviation(name):
    def build(cfg, params, rng):
        if cfg.protocol not in ("sfe-xor", "sfe-and"):
            raise ConfigError(f"{name} needs an sfe protocol")
        proto, x1, x2 = _sfe_inputs(cfg, rng)
        a, b = sfe_programs(proto, x1, x2, sfe_coin(params), deviation=name)
        return Built(a, b, {"corrupt": {"A"}}, {"deviation": name})

    return build


ATTACKS = {
    "enforce-alice": _attack_enforce_alice,
    "enforce-bob": _attack_enforce_bob,
    "rewind-blum": _attack_rewind_blum,
    "cheat-open": _attack_cheat_open,
    "guess-prover": _attack_guess_prover,
    "zk-simulate": _attack_zk_simulate,
    "extract": _attack_extract,
    **{f"sfe-{d}": _sfe_deviation(d) for d in DEVIATIONS},
}


def rep_seed(master, i: int) -> int:
    return derive_seed(master, "rep", i)


def run_one(cfg: RunConfig, seed) -> Transcript:
    """One session of the configured protocol (or attack, if ``cfg.strategy`` is set)."""
    params = cfg.params()
    rng = random.Random(derive_seed(seed, "inputs"))
    built = ATTACKS[cfg.strategy](cfg, params, rng) if cfg.strategy else _build_honest(cfg, params, rng)
    setup = derive_seed(seed, "setup")
    header = {"scenario": cfg.to_dict(), "info": built.info}
    session = Session({"A": built.alice, "B": built.bob}, params, seed,
                      aux={"A": {"setup": setup}, "B": {"setup": setup}}, header=header, **built.extra)
    return session.run()


def run_many(cfg: RunConfig, n: int, master_seed):
    for i in range(n):
        yield run_one(cfg, rep_seed(master_seed, i))


def load_transcripts(text: str) -> list[Transcript]:
    """Split a file holding one or more concatenated transcripts."""
    chunks, cur = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            is_header = json.loads(line).get("type") == "header"
        except (json.JSONDecodeError, AttributeError):
            raise ValueError("transcript file holds a line that is not a JSON record") from None
        if is_header and cur:
            chunks.append(cur)
            cur = []
        cur.append(line)
    if cur:
        chunks.append(cur)
    if not chunks:
        raise ValueError("no transcript records found")
    return [Transcript.from_jsonl("\n".join(c)) for c in chunks]


def replay(t: Transcript) -> Transcript:
    """Re-run the session a transcript came from."""
    cfg = RunConfig.from_dict(t.header["scenario"])
    return run_one(cfg, t.header["seed"])


# -- summaries, computed from transcripts only ------------------------------

def _judge(t: Transcript):
    """(outcome, aborted, hit) for one transcript; hit is None when not applicable."""
    info = t.header.get("info", {})
    cfg = t.header["scenario"]
    strategy = cfg.get("strategy")
    a, b = t.output("A"), t.output("B")
    if strategy in ("enforce-alice", "rewind-blum", "enforce-bob"):
        honest = a if info["seat"] == "A" else b
        return honest, honest is None, None if honest is None else honest == info["target"]
    if strategy == "cheat-open":
        return b, b is None, b is not None
    if strategy == "guess-prover":
        return b, b is None, b == "success"
    if strategy == "zk-simulate":
        return b, b is None, b == "success"
    if strategy == "extract":
        return b, b is None, b is not None and b[0] == b[1]
    if strategy and strategy.startswith("sfe-"):
        return b, b is None, b is None  # hit = Bob caught the deviation
    out = b if b is not None else a
    aborted = t.aborted
    expected = info.get("expected")
    if expected is not None:
        got = out.hex() if isinstance(out, bytes) else out
        return out, aborted, got == expected
    return out, aborted, None


def summarize(transcripts) -> dict:
    hist: dict = {}
    n = aborts = hits = judged = 0
    for t in transcripts:
        out, aborted, hit = _judge(t)
        n += 1
        aborts += bool(aborted)
        key = "abort" if aborted else (out.hex() if isinstance(out, bytes) else repr(out))
        hist[key] = hist.get(key, 0) + 1
        if hit is not None:
            judged += 1
            hits += bool(hit)
    return {
        "sessions": n,
        "aborts": aborts,
        "abort_rate": aborts / n if n else 0.0,
        "hit_rate": hits / judged if judged else None,
        "hits": hits if judged else None,
        "distinct_outcomes": len(hist) - ("abort" in hist),
        "histogram": dict(sorted(hist.items(), key=lambda kv: -kv[1])[:16]),
    }
