"""Shared fixtures: synthetic corpus builders and platform/API factories."""

from __future__ import annotations

import time

import pytest

from datacube import Platform, PlatformConfig


def make_scene(
    duration_s=8.0,
    base_luma=110.0,
    labels=("beach", "sunset"),
    style="cinematic",
    viewpoint="aerial",
    content="waves rolling onto a beach at sunset",
    **overrides,
):
    scene = {
        "duration_s": duration_s,
        "base_luma": base_luma,
        "amplitude": 55.0,
        "x_freq": 1.0,
        "x_phase": 0.1,
        "row_phase": 0.4,
        "speed": 0.5,
        "noise": 0.0,
        "labels": list(labels),
        "style": style,
        "viewpoint": viewpoint,
        "content": content,
    }
    scene.update(overrides)
    return scene


def make_video(scenes, fps=10.0, width=64, height=36, seed=0, source_url=None, pixel_shift=0):
    video = {
        "fps": fps,
        "width": width,
        "height": height,
        "seed": seed,
        "pixel_shift": pixel_shift,
        "scenes": scenes,
    }
    if source_url:
        video["source_url"] = source_url
    return video


@pytest.fixture
def platform_factory(tmp_path):
    platforms = []

    def factory(name="main", **config_overrides) -> Platform:
        config = PlatformConfig()
        config.data_root = tmp_path / name
        config.auth.tokens = {
            "tok-alice": "alice",
            "tok-bob": "bob",
            "tok-carol": "carol",
        }
        for key, value in config_overrides.items():
            section, _, attr = key.partition("__")
            if attr:
                setattr(getattr(config, section), attr, value)
            else:
                setattr(config, section, value)
        platform = Platform(config)
        platforms.append(platform)
        return platform

    yield factory
    for platform in platforms:
        platform.close()


@pytest.fixture
def platform(platform_factory):
    return platform_factory()


@pytest.fixture
def api_client(platform):
    from fastapi.testclient import TestClient

    from datacube.api import create_app

    return TestClient(create_app(platform), raise_server_exceptions=False)


def auth(user="alice"):
    return {"Authorization": f"Bearer tok-{user}"}


def wait_repo_ready(platform: Platform, repo_id: str, timeout=60.0):
    assert platform.wait_ready(repo_id, timeout), f"repo {repo_id} did not settle"


def wait_until(predicate, timeout=30.0, interval=0.02):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(interval)
    return False
