import numpy as np
import pytest

cv2 = pytest.importorskip("cv2")
from PIL import Image


def write_video(path, duration_s: float, fps: float = 10.0, size=(64, 48)) -> None:
    """A synthetic clip of exactly duration_s seconds (duration * fps frames).

    The top half of every frame is a flat gray that brightens with the
    frame index (a temporal marker that survives lossy encoding); the
    bottom half is per-video noise so embeddings differ across clips.
    """
    n_frames = int(round(duration_s * fps))
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), fps, size
    )
    assert writer.isOpened()
    rng = np.random.default_rng(abs(hash(str(path))) % 2**32)
    h = size[1]
    for i in range(n_frames):
        frame = np.full((h, size[0], 3), min(30 + i, 250), dtype=np.uint8)
        frame[h // 2 :] = rng.integers(
            0, 255, size=(h - h // 2, size[0], 3), dtype=np.uint8
        )
        writer.write(frame)
    writer.release()


def write_image(path, seed: int, size=(40, 30)) -> None:
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 255, size=(size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(arr).save(path)


@pytest.fixture
def video_dir(tmp_path):
    root = tmp_path / "videos"
    root.mkdir()
    write_video(root / "clip_a.avi", duration_s=3.0)
    write_video(root / "clip_b.avi", duration_s=1.0)
    frames = root / "clip_c"
    frames.mkdir()
    for i in range(4):
        write_image(frames / f"frame_{i:02d}.png", seed=100 + i)
    return root
