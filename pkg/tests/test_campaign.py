import json
import random
import socket
from dataclasses import replace
from pathlib import Path

import pytest
import yaml

from fpdiff.campaign.cli import EXIT_CONFIG, EXIT_OK, EXIT_TOOLCHAIN, main
from fpdiff.campaign.config import (BackendConfig, CampaignConfig, config_from_dict,
                                    config_problems, load_config)
from fpdiff.campaign.report import build_report
from fpdiff.campaign.runner import run_campaign
from fpdiff.campaign.state import (AUDIT, MANIFEST, RECORDS, CampaignState, CorruptState, EmptySet,
                                   SuccessfulSet, iter_records, pick_mutation_parent,
                                   update_successful_set)
from fpdiff.compiler import ConfigError
from fpdiff.diffexec.compare import ComparisonRecord, Exclusion
from fpdiff.llm.prompts import embedded_program
from support import record


def make_cfg(root: Path, pair, **kw) -> CampaignConfig:
    return CampaignConfig(budget=kw.pop("budget", 3), compilers=tuple(pair), campaign_dir=root, **kw)


def hybrid_cfg(root, pair, **kw):
    return make_cfg(root, pair, mode="hybrid", backend=BackendConfig(seed=1, trigger_rate=0.3), **kw)


# -- config

def test_config_problems(tmp_path, gcc):
    cfg = make_cfg(tmp_path, [gcc])
    assert "at least two compilers are required for differential testing" in config_problems(cfg)
    cfg = make_cfg(tmp_path, [gcc, replace(gcc, name="gcc2")], levels=("O2", "O3"))
    assert any("O0_nofma" in p for p in config_problems(cfg))
    cfg = make_cfg(tmp_path, [gcc, replace(gcc, name="gcc2")], levels=("O2", "O9"), baseline=False)
    assert any("O9" in p for p in config_problems(cfg))
    cfg = make_cfg(tmp_path, [gcc, replace(gcc, name="gcc2")], mode="hybrid")
    assert any("backend" in p for p in config_problems(cfg))


def test_config_from_dict(tmp_path):
    cfg = config_from_dict({"budget": 4, "compilers": ["gcc", {"path": "clang", "name": "cl"}],
                            "campaign_dir": "out", "levels": ["O0_nofma", "O3"], "seed": 9},
                           base_dir=tmp_path)
    assert cfg.campaign_dir == tmp_path / "out"
    assert cfg.compiler_names == ["gcc", "cl"] and cfg.levels == ("O0_nofma", "O3")
    assert not config_problems(cfg)
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_dict({"budget": 1, "compilers": [], "campaign_dir": "x", "colour": 1})
    with pytest.raises(ConfigError, match="missing required key"):
        config_from_dict({"budget": 1, "compilers": []})


def test_digest_ignores_paths_and_workers(tmp_path, host_pair):
    a = make_cfg(tmp_path / "a", host_pair)
    b = make_cfg(tmp_path / "b", host_pair, workers=2)
    assert a.digest() == b.digest()
    assert a.digest() != make_cfg(tmp_path, host_pair, seed=1).digest()


# -- state

def test_successful_set_update():
    s = SuccessfulSet()
    update_successful_set(s, "p1", [record("p1", inconsistent=False)])
    assert len(s) == 0
    update_successful_set(s, "p1", [record("p1"), record("p1", inconsistent=False)])
    update_successful_set(s, "p1", [record("p1")])
    assert s.members() == ["p1"]
    with pytest.raises(ValueError):
        update_successful_set(s, "p2", [record("p1")])


def test_pick_parent_uniform():
    members = SuccessfulSet(["a", "b", "c", "d"])
    rng = random.Random(5)
    counts = {m: 0 for m in members}
    for _ in range(8000):
        counts[pick_mutation_parent(members, rng)] += 1
    assert all(abs(c / 8000 - 0.25) < 0.03 for c in counts.values())
    with pytest.raises(EmptySet):
        pick_mutation_parent(SuccessfulSet(), rng)


def test_fresh_state_and_rollback(tmp_path):
    st = CampaignState.fresh(tmp_path / "c", "d1")
    st.append(RECORDS, [{"type": "campaign", "precision": "FP64"}])
    st.commit()
    committed = st.path(RECORDS).read_bytes()
    st.append(RECORDS, [{"type": "program", "program": "p"}])
    with st.path(RECORDS).open("a") as fh:
        fh.write('{"type": "compar')  # torn write
    loaded = CampaignState.load(tmp_path / "c")
    loaded.rollback()
    assert loaded.path(RECORDS).read_bytes() == committed


def test_fresh_refuses_non_empty_dir(tmp_path):
    (tmp_path / "junk.txt").write_text("x")
    with pytest.raises(CorruptState):
        CampaignState.fresh(tmp_path, "d")


def test_load_detects_missing_and_truncated(tmp_path):
    st = CampaignState.fresh(tmp_path / "c", "d1")
    st.append(RECORDS, [{"type": "campaign", "precision": "FP64"}])
    st.commit()
    (tmp_path / "c" / RECORDS).write_text("")
    with pytest.raises(CorruptState, match="shorter"):
        CampaignState.load(tmp_path / "c")
    (tmp_path / "c" / RECORDS).unlink()
    with pytest.raises(CorruptState, match="missing"):
        CampaignState.load(tmp_path / "c")
    with pytest.raises(CorruptState, match="manifest"):
        CampaignState.load(tmp_path / "nothing")


# -- runs

def read_records(root):
    return list(iter_records(root / RECORDS))


def test_grammar_random_run(tmp_path, host_pair):
    cfg = make_cfg(tmp_path / "c", host_pair, budget=5, seed=3)
    report = run_campaign(cfg)
    items = read_records(cfg.campaign_dir)
    programs = [x for x in items if isinstance(x, dict) and x["type"] == "program"]
    cross = [x for x in items if isinstance(x, ComparisonRecord) and x.mode == "cross"]
    excl = [x for x in items if isinstance(x, Exclusion) and x.mode == "cross"]
    assert len(programs) == 5
    assert report.summary.nominal == 30
    assert len(cross) + len(excl) == 30
    for name in ("summary.txt", "summary.json", "kind_distribution.txt", "compiler_pairs.json",
                 "baseline.txt", "diversity.json"):
        assert (cfg.campaign_dir / "report" / name).exists()
    assert set(json.loads((cfg.campaign_dir / "timing.json").read_text())) >= {
        "generation", "compilation", "execution", "analysis", "total"}
    manifest = json.loads((cfg.campaign_dir / MANIFEST).read_text())
    assert manifest["complete"] and manifest["accepted"] == 5


def test_completed_campaign_is_not_rerun(tmp_path, host_pair):
    cfg = make_cfg(tmp_path / "c", host_pair, budget=2)
    run_campaign(cfg)
    before = (cfg.campaign_dir / RECORDS).read_bytes()
    run_campaign(cfg)
    assert (cfg.campaign_dir / RECORDS).read_bytes() == before


def test_changed_config_refuses_resume(tmp_path, host_pair):
    cfg = make_cfg(tmp_path / "c", host_pair, budget=1)
    run_campaign(cfg)
    with pytest.raises(ConfigError):
        run_campaign(replace(cfg, seed=99))


def test_records_without_manifest_are_corrupt(tmp_path, host_pair):
    root = tmp_path / "c"
    root.mkdir()
    (root / RECORDS).write_text("")
    with pytest.raises(CorruptState):
        run_campaign(make_cfg(root, host_pair, budget=1))


def test_hybrid_audit_causality(tmp_path, host_pair):
    cfg = hybrid_cfg(tmp_path / "c", host_pair, budget=8, seed=2, levels=("O0_nofma", "O3_fastmath"))
    run_campaign(cfg)
    audit = [json.loads(line) for line in (cfg.campaign_dir / AUDIT).read_text().splitlines()]
    assert audit
    mutations = [a for a in audit if a["strategy"] == "mutation"]
    for a in mutations:
        assert a["parent"] in a["successful_set"]
        prompt = (cfg.campaign_dir / "prompts" / f"{a['attempt']:05d}.prompt.txt").read_text()
        parent = (cfg.campaign_dir / "programs" / f"{a['parent']}.c").read_text()
        assert embedded_program(prompt) == parent
    # a mutation can only be issued once some program succeeded
    first_success = None
    for item in read_records(cfg.campaign_dir):
        if isinstance(item, ComparisonRecord) and item.inconsistent and item.mode == "cross":
            first_success = int(item.program_id[4:])
            break
    for a in mutations:
        assert first_success is not None and a["attempt"] > first_success


def test_reproducible_records(tmp_path, host_pair):
    a = hybrid_cfg(tmp_path / "a", host_pair, budget=4, seed=5)
    b = replace(a, campaign_dir=tmp_path / "b")
    run_campaign(a)
    run_campaign(b)
    assert (tmp_path / "a" / RECORDS).read_bytes() == (tmp_path / "b" / RECORDS).read_bytes()
    assert (tmp_path / "a" / AUDIT).read_bytes() == (tmp_path / "b" / AUDIT).read_bytes()


class Crash(Exception):
    pass


def test_resume_after_crash(tmp_path, host_pair):
    full = hybrid_cfg(tmp_path / "full", host_pair, budget=5, seed=8)
    run_campaign(full)
    part = replace(full, campaign_dir=tmp_path / "part")

    def crash_at_three(state):
        if state.attempts == 3:
            # a torn append after the last commit must be discarded on resume
            with (state.root / RECORDS).open("a") as fh:
                fh.write('{"type": "prog')
            raise Crash

    with pytest.raises(Crash):
        run_campaign(part, on_iteration=crash_at_three)
    run_campaign(part)
    for rel in (RECORDS, AUDIT, "report/summary.json", "report/compiler_pairs.txt"):
        assert (tmp_path / "part" / rel).read_bytes() == (tmp_path / "full" / rel).read_bytes(), rel


def test_mock_campaign_opens_no_sockets(tmp_path, host_pair, monkeypatch):
    def forbidden(*args, **kwargs):
        raise AssertionError("network access attempted")

    monkeypatch.setattr(socket.socket, "connect", forbidden)
    monkeypatch.setattr(socket, "create_connection", forbidden)
    cfg = hybrid_cfg(tmp_path / "c", host_pair, budget=2)
    assert run_campaign(cfg).accepted == 2


def test_backend_failures_become_rejections(tmp_path, host_pair):
    cfg = make_cfg(tmp_path / "c", host_pair, budget=1, mode="llm", llm_retries=1, attempt_factor=2,
                   backend=BackendConfig(kind="http", endpoint="http://127.0.0.1:9/v1", model="m",
                                         api_key_env=""))
    report = run_campaign(cfg, sleep=lambda s: None)
    assert report.accepted == 0 and report.rejected == 2
    assert report.rejection_reasons == {"backend": 2}


# -- report

def test_report_rederivation_is_byte_identical(tmp_path, host_pair):
    cfg = make_cfg(tmp_path / "c", host_pair, budget=3, seed=4)
    run_campaign(cfg)
    build_report(cfg.campaign_dir).write(tmp_path / "again")
    for f in (cfg.campaign_dir / "report").iterdir():
        assert (tmp_path / "again" / f.name).read_bytes() == f.read_bytes(), f.name


def test_report_missing_records(tmp_path):
    with pytest.raises(CorruptState):
        build_report(tmp_path)


# -- cli

def write_config(path: Path, **data) -> Path:
    path.write_text(yaml.safe_dump(data))
    return path


def test_cli_validate(tmp_path, capsys):
    bad = write_config(tmp_path / "bad.yaml", budget=5, compilers=["gcc"], campaign_dir="c")
    assert main(["validate-config", str(bad)]) == EXIT_CONFIG
    assert "at least two compilers" in capsys.readouterr().err
    good = write_config(tmp_path / "good.yaml", budget=5, compilers=["gcc", "clang"], campaign_dir="c")
    assert main(["validate-config", str(good)]) == EXIT_OK
    assert not (tmp_path / "c").exists()
    assert main(["validate-config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_cli_run_and_report(tmp_path, host_pair, capsys):
    cfg = write_config(tmp_path / "cfg.yaml", budget=2, compilers=["gcc", "clang"], campaign_dir="c",
                       levels=["O0_nofma", "O2", "O3_fastmath"], seed=1)
    assert main(["run", str(cfg)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "inconsistency rate" in out and "time" in out
    assert main(["report", str(tmp_path / "c"), "--out", str(tmp_path / "r")]) == EXIT_OK
    for f in (tmp_path / "c" / "report").iterdir():
        assert (tmp_path / "r" / f.name).read_bytes() == f.read_bytes()
    assert main(["report", str(tmp_path / "nope")]) == 1


def test_cli_run_overrides(tmp_path, host_pair):
    cfg = write_config(tmp_path / "cfg.yaml", budget=50, compilers=["gcc", "clang"], campaign_dir="c",
                       levels=["O0_nofma", "O3"])
    assert main(["run", str(cfg), "--budget", "1", "--dir", str(tmp_path / "d")]) == EXIT_OK
    assert load_config(cfg).budget == 50
    assert json.loads((tmp_path / "d" / MANIFEST).read_text())["accepted"] == 1


def test_cli_run_with_one_compiler_exits_2(tmp_path):
    cfg = write_config(tmp_path / "cfg.yaml", budget=1, compilers=["gcc"], campaign_dir="c")
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    assert not (tmp_path / "c").exists()


def test_cli_probe(gcc, capsys):
    assert main(["probe", "--compiler", "gcc"]) == EXIT_OK
    assert "gcc" in capsys.readouterr().out
    assert main(["probe", "--compiler", "/nonexistent/cc"]) == EXIT_TOOLCHAIN


def test_cli_missing_toolchain_exits_3(tmp_path):
    cfg = write_config(tmp_path / "cfg.yaml", budget=1, campaign_dir="c",
                       compilers=["gcc", {"path": "/nonexistent/clang", "family": "clang"}])
    assert main(["run", str(cfg)]) == EXIT_TOOLCHAIN
