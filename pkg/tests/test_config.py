import dataclasses
import math

import numpy as np
import pytest

from fuse3d import (
    ParseError,
    RunConfig,
    load_config,
    parse_config,
    render_config,
    save_config,
    subsystem_seed,
    validate_config,
)


class TestDefaults:
    def test_operating_constants(self):
        cfg = RunConfig()
        assert cfg.crop_ranges() == ((0.0, 70.4), (-40.0, 40.0), (-3.0, 1.0))
        assert cfg.num_points == 16384
        assert cfg.sa_samples == (4096, 1024, 256, 64)
        assert cfg.sampler_lambda == 1.4
        assert cfg.nms_threshold == 0.8
        assert (cfg.pre_nms_top, cfg.proposals_keep) == (8000, 64)
        assert cfg.enlarge == 0.2
        assert cfg.roi_points == 512
        assert (cfg.focal_alpha, cfg.focal_gamma) == (0.25, 2.0)
        validate_config(cfg)

    def test_bin_config_layout(self):
        bins = RunConfig().bin_config()
        assert bins.x.half_range == 3.0 and bins.x.num_bins == 12
        assert bins.z.width == 0.5
        assert bins.yaw.wrap and bins.yaw.half_range == math.pi


class TestRoundTrip:
    def test_default_config(self):
        cfg = RunConfig()
        assert parse_config(render_config(cfg)) == cfg

    def test_modified_config(self):
        cfg = dataclasses.replace(RunConfig(), sampler_lambda=1.7,
                                  sa_samples=(2048, 512), seed=99,
                                  crop_x_max=51.2)
        assert parse_config(render_config(cfg)) == cfg

    def test_file_roundtrip(self, tmp_path):
        cfg = dataclasses.replace(RunConfig(), enlarge=0.35)
        path = tmp_path / "run.cfg"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_comments_and_blanks_ignored(self):
        text = "# study setup\n\nsampler_lambda = 2.0  # roomy\nseed = 5\n"
        cfg = parse_config(text)
        assert cfg.sampler_lambda == 2.0
        assert cfg.seed == 5
        assert cfg.nms_threshold == 0.8  # untouched default

    def test_unknown_key_rejected(self):
        with pytest.raises(ParseError):
            parse_config("not_a_key = 3\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ParseError):
            parse_config("num_points = many\n")
        with pytest.raises(ParseError):
            parse_config("just a line\n")


class TestValidation:
    def test_empty_crop_rejected(self):
        cfg = dataclasses.replace(RunConfig(), crop_x_min=5.0, crop_x_max=5.0)
        with pytest.raises(ValueError):
            validate_config(cfg)

    def test_bad_lambda_rejected(self):
        with pytest.raises(ValueError):
            validate_config(dataclasses.replace(RunConfig(), sampler_lambda=0.5))

    def test_bad_threshold_rejected(self):
        with pytest.raises(ValueError):
            validate_config(dataclasses.replace(RunConfig(), nms_threshold=1.5))


class TestSubsystemSeed:
    def test_deterministic(self):
        assert subsystem_seed(42, "scene") == subsystem_seed(42, "scene")

    def test_subsystems_differ(self):
        seeds = {subsystem_seed(42, s) for s in ("scene", "roi", "params",
                                                 "proposals")}
        assert len(seeds) == 4

    def test_global_seed_matters(self):
        assert subsystem_seed(1, "roi") != subsystem_seed(2, "roi")

    def test_usable_by_numpy(self):
        rng = np.random.default_rng(subsystem_seed(0, "params"))
        assert rng.uniform() >= 0.0

    def test_unknown_subsystem_rejected(self):
        with pytest.raises(KeyError):
            subsystem_seed(0, "nope")
